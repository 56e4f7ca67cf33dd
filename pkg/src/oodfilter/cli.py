"""Command-line pipeline: fit, score, threshold, filter, synth, eval.

Exit codes: 0 success, 1 usage error, 2 data/validation error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .errors import NumericalError, OodFilterError, ValidationError
from .features import load_features, save_features
from .gate import (
    DEFAULT_ALPHA,
    FilterConfig,
    gate_decision,
    read_report,
    run_filter,
    write_id_lists,
    write_report,
)
from .gaussian import (
    DEFAULT_SHRINKAGE,
    DistanceSet,
    fit_gaussian,
    load_stats,
    save_stats,
    score_dataset,
)
from .synth import MixtureSpec, generate, load_truth, quality_from_verdicts, save_truth
from .threshold import DEFAULT_BINS, build_histogram, kmeans_threshold, otsu_threshold


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 instead of argparse's default 2
        raise UsageError(message)


def _add_common_filter_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--method", choices=["otsu", "kmeans"], default="otsu")
    p.add_argument("--bins", type=int, default=DEFAULT_BINS)
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    p.add_argument("--shrinkage", type=float, default=DEFAULT_SHRINKAGE)
    p.add_argument("--invert-gate", action="store_true",
                   help="flip the keep-all/filter decision from the gate")
    p.add_argument("--bypass-gate", action="store_true",
                   help="always filter at the threshold, ignoring the gate")


def build_parser() -> _Parser:
    parser = _Parser(prog="oodfilter",
                     description="Score, threshold and filter out-of-distribution samples")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit the labeled Gaussian and write a GSTA file")
    p.add_argument("--labeled", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--shrinkage", type=float, default=DEFAULT_SHRINKAGE)
    p.add_argument("--format", choices=["binary", "csv"], default="binary")

    p = sub.add_parser("score", help="score features against a GSTA file; CSV output")
    p.add_argument("--stats", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--format", choices=["binary", "csv"], default="binary")

    p = sub.add_parser("threshold", help="select a threshold on a score CSV")
    p.add_argument("--scores", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--method", choices=["otsu", "kmeans"], default="otsu")
    p.add_argument("--bins", type=int, default=DEFAULT_BINS)
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)

    p = sub.add_parser("filter", help="full pipeline: manifest + keep/discard lists")
    p.add_argument("--labeled", required=True)
    p.add_argument("--unlabeled", required=True)
    p.add_argument("--out-prefix", required=True)
    p.add_argument("--format", choices=["binary", "csv"], default="binary")
    p.add_argument("--seed", type=int, default=None,
                   help="echoed into the manifest for provenance")
    p.add_argument("--plots", action="store_true",
                   help="render histogram and diagnostic figures next to the manifest")
    _add_common_filter_flags(p)

    p = sub.add_parser("synth", help="generate a synthetic mismatch dataset")
    p.add_argument("--out-prefix", required=True)
    p.add_argument("--dims", type=int, default=16)
    p.add_argument("--n-labeled", type=int, default=200)
    p.add_argument("--n-unlabeled", type=int, default=90)
    p.add_argument("--contamination", type=float, default=0.2)
    p.add_argument("--separation", type=float, default=8.0)
    p.add_argument("--iod-sd", type=float, default=1.0)
    p.add_argument("--ood-sd", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("eval", help="evaluate a manifest against a truth file")
    p.add_argument("--manifest", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--output", default=None, help="write JSON here instead of stdout")

    return parser


def _load_scores_csv(path: Path) -> DistanceSet:
    if not path.exists():
        raise FileNotFoundError(f"input not found: {path}")
    ids, values = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or len(header) < 2:
            raise ValidationError(f"malformed score CSV: {path}")
        for row in reader:
            if not row:
                continue
            ids.append(row[0])
            values.append(float(row[1]))
    return DistanceSet.from_scores(ids, np.array(values))


def _cmd_fit(args) -> int:
    labeled = load_features(args.labeled, args.format)
    stats = fit_gaussian(labeled, args.shrinkage)
    save_stats(stats, args.output)
    print(f"fitted {labeled.rows}x{labeled.dims}, shrinkage lambda = {stats.shrinkage:.6g}")
    return 0


def _cmd_score(args) -> int:
    stats = load_stats(args.stats)
    features = load_features(args.features, args.format)
    scores = score_dataset(stats, features)
    with open(args.output, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "distance"])
        for sample_id, dist in zip(scores.ids, scores.distances):
            writer.writerow([sample_id, format(float(dist), ".17g")])
    print(f"scored {len(scores)} samples -> {args.output}")
    return 0


def _cmd_threshold(args) -> int:
    scores = _load_scores_csv(Path(args.scores))
    if args.method == "otsu":
        result = otsu_threshold(build_histogram(scores, args.bins))
    else:
        result = kmeans_threshold(scores)
    gate = gate_decision(scores, result.tau, args.alpha)
    payload = {
        "tau": result.tau,
        "method": result.method,
        "diagnostics": result.diagnostics,
        "gate": asdict(gate),
    }
    with open(args.output, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    print(f"tau = {result.tau:.6g} ({result.method})")
    return 0


def _cmd_filter(args) -> int:
    labeled = load_features(args.labeled, args.format)
    unlabeled = load_features(args.unlabeled, args.format)
    config = FilterConfig(
        method=args.method,
        bins=args.bins,
        alpha=args.alpha,
        shrinkage=args.shrinkage,
        invert_gate=args.invert_gate,
        bypass_gate=args.bypass_gate,
        seed=args.seed,
    )
    report = run_filter(labeled, unlabeled, config)
    prefix = Path(args.out_prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    manifest = prefix.with_name(prefix.name + ".jsonl")
    write_report(report, manifest)
    write_id_lists(
        report,
        prefix.with_name(prefix.name + ".keep.txt"),
        prefix.with_name(prefix.name + ".discard.txt"),
    )
    if args.plots:
        from .plots import render_report_figures

        for path in render_report_figures(report, prefix):
            print(f"wrote {path}")
    print(
        f"tau = {report.threshold.tau:.6g} ({report.threshold.method}), "
        f"gate branch: {report.gate_branch}, kept {report.kept_count}, "
        f"discarded {report.discarded_count}"
    )
    return 0


def _cmd_synth(args) -> int:
    spec = MixtureSpec(
        dims=args.dims,
        n_labeled=args.n_labeled,
        n_unlabeled=args.n_unlabeled,
        contamination=args.contamination,
        separation=args.separation,
        iod_sd=args.iod_sd,
        ood_sd=args.ood_sd,
        seed=args.seed,
    )
    labeled, unlabeled, truth = generate(spec)
    prefix = Path(args.out_prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    save_features(labeled, prefix.with_name(prefix.name + ".labeled.feat"))
    save_features(unlabeled, prefix.with_name(prefix.name + ".unlabeled.feat"))
    save_truth(truth, prefix.with_name(prefix.name + ".truth.json"))
    print(
        f"wrote {labeled.rows} labeled and {unlabeled.rows} unlabeled rows "
        f"({spec.n_ood} OOD) under {prefix}"
    )
    return 0


def _cmd_eval(args) -> int:
    manifest_path = Path(args.manifest)
    if not manifest_path.exists():
        raise FileNotFoundError(f"input not found: {manifest_path}")
    _, records = read_report(manifest_path)
    truth = load_truth(args.truth)
    quality = quality_from_verdicts([(r["id"], bool(r["kept"])) for r in records], truth)
    payload = asdict(quality)
    text = json.dumps(payload, indent=2) + "\n"
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


_COMMANDS = {
    "fit": _cmd_fit,
    "score": _cmd_score,
    "threshold": _cmd_threshold,
    "filter": _cmd_filter,
    "synth": _cmd_synth,
    "eval": _cmd_eval,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args)
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except (OodFilterError, FileNotFoundError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
