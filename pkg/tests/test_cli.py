import json

import numpy as np
import pytest

from oodfilter import FeatureMatrix, save_features
from oodfilter.cli import main

from conftest import make_matrix


@pytest.fixture
def synth_files(tmp_path):
    assert main([
        "synth", "--out-prefix", str(tmp_path / "demo"),
        "--contamination", "0.2", "--n-unlabeled", "90", "--seed", "5",
    ]) == 0
    return {
        "labeled": tmp_path / "demo.labeled.feat",
        "unlabeled": tmp_path / "demo.unlabeled.feat",
        "truth": tmp_path / "demo.truth.json",
    }


class TestFit:
    def test_fit_writes_gsta(self, tmp_path, seeded_rng, capsys):
        feat = tmp_path / "l.feat"
        save_features(make_matrix(seeded_rng, 20, 256), feat)
        out = tmp_path / "model.gsta"
        assert main(["fit", "--labeled", str(feat), "--output", str(out)]) == 0
        assert out.exists()
        assert "lambda" in capsys.readouterr().out

    def test_missing_input(self, tmp_path, capsys):
        code = main(["fit", "--labeled", str(tmp_path / "nope.feat"),
                     "--output", str(tmp_path / "o.gsta")])
        assert code == 2
        assert "input not found" in capsys.readouterr().err

    def test_single_row_input(self, tmp_path, capsys):
        feat = tmp_path / "one.feat"
        save_features(FeatureMatrix(ids=("a",), data=np.zeros((1, 4))), feat)
        code = main(["fit", "--labeled", str(feat), "--output", str(tmp_path / "o.gsta")])
        assert code == 2
        assert "insufficient data" in capsys.readouterr().err

    def test_usage_error_exit_1(self, capsys):
        assert main(["fit", "--bogus-flag"]) == 1


class TestScoreAndThreshold:
    def test_score_then_threshold(self, tmp_path, synth_files):
        model = tmp_path / "model.gsta"
        assert main(["fit", "--labeled", str(synth_files["labeled"]),
                     "--output", str(model)]) == 0
        scores = tmp_path / "scores.csv"
        assert main(["score", "--stats", str(model),
                     "--features", str(synth_files["unlabeled"]),
                     "--output", str(scores)]) == 0
        lines = scores.read_text().strip().splitlines()
        assert lines[0] == "id,distance"
        assert len(lines) == 91

        out = tmp_path / "tau.json"
        assert main(["threshold", "--scores", str(scores),
                     "--output", str(out), "--method", "kmeans"]) == 0
        payload = json.loads(out.read_text())
        assert payload["method"] == "kmeans"
        assert len(payload["diagnostics"]["centroids"]) == 2


class TestFilter:
    def test_invert_gate_catches_ood(self, tmp_path, synth_files):
        prefix = tmp_path / "run"
        assert main(["filter", "--labeled", str(synth_files["labeled"]),
                     "--unlabeled", str(synth_files["unlabeled"]),
                     "--out-prefix", str(prefix), "--invert-gate"]) == 0
        truth = json.loads(synth_files["truth"].read_text())
        discard = (tmp_path / "run.discard.txt").read_text().split()
        ood_ids = {k for k, v in truth.items() if v}
        assert len(ood_ids & set(discard)) >= 17

    def test_kmeans_diagnostics_in_manifest(self, tmp_path, synth_files):
        prefix = tmp_path / "km"
        assert main(["filter", "--labeled", str(synth_files["labeled"]),
                     "--unlabeled", str(synth_files["unlabeled"]),
                     "--out-prefix", str(prefix), "--method", "kmeans"]) == 0
        header = json.loads((tmp_path / "km.jsonl").read_text().splitlines()[0])
        assert header["method"] == "kmeans"
        assert "centroids" in header["diagnostics"]

    def test_repeat_runs_byte_identical(self, tmp_path, synth_files):
        args = ["filter", "--labeled", str(synth_files["labeled"]),
                "--unlabeled", str(synth_files["unlabeled"]), "--invert-gate"]
        assert main(args + ["--out-prefix", str(tmp_path / "r1")]) == 0
        assert main(args + ["--out-prefix", str(tmp_path / "r2")]) == 0
        assert (tmp_path / "r1.jsonl").read_bytes() == (tmp_path / "r2.jsonl").read_bytes()

    def test_plots_written(self, tmp_path, synth_files):
        prefix = tmp_path / "fig"
        assert main(["filter", "--labeled", str(synth_files["labeled"]),
                     "--unlabeled", str(synth_files["unlabeled"]),
                     "--out-prefix", str(prefix), "--plots"]) == 0
        assert (tmp_path / "fig.hist.png").stat().st_size > 0
        assert (tmp_path / "fig.diag.png").stat().st_size > 0


class TestSynthEval:
    def test_truth_counts(self, synth_files):
        truth = json.loads(synth_files["truth"].read_text())
        assert sum(truth.values()) == 18

    def test_eval_keep_all(self, tmp_path, synth_files, capsys):
        prefix = tmp_path / "keepall"
        # literal gate on well-separated data lands on keep-all
        assert main(["filter", "--labeled", str(synth_files["labeled"]),
                     "--unlabeled", str(synth_files["unlabeled"]),
                     "--out-prefix", str(prefix)]) == 0
        capsys.readouterr()
        assert main(["eval", "--manifest", str(tmp_path / "keepall.jsonl"),
                     "--truth", str(synth_files["truth"])]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["kept_contamination"] == pytest.approx(0.2)

    def test_eval_mismatched_ids(self, tmp_path, synth_files, capsys):
        prefix = tmp_path / "run"
        assert main(["filter", "--labeled", str(synth_files["labeled"]),
                     "--unlabeled", str(synth_files["unlabeled"]),
                     "--out-prefix", str(prefix)]) == 0
        bad_truth = tmp_path / "bad.json"
        bad_truth.write_text(json.dumps({"other-0": True}))
        code = main(["eval", "--manifest", str(tmp_path / "run.jsonl"),
                     "--truth", str(bad_truth)])
        assert code == 2
