import math

import numpy as np
import pytest

from oodfilter import (
    DistanceSet,
    FilterConfig,
    coefficient_of_variation,
    gate_decision,
    partition,
    run_filter,
    write_report,
)
from oodfilter.errors import ValidationError
from oodfilter.synth import MixtureSpec, evaluate, generate

from conftest import make_matrix


def ds(values):
    return DistanceSet.from_scores([f"s-{i}" for i in range(len(values))], np.asarray(values, float))


def direct_gate(values, tau, alpha):
    """Independent arithmetic evaluation of the partition/CV/inequality chain."""

    def pop_cv(xs):
        mu = sum(xs) / len(xs)
        sd = math.sqrt(sum((x - mu) ** 2 for x in xs) / len(xs))
        return sd / mu

    lower = [x for x in values if x <= tau]
    upper = [x for x in values if x > tau]
    cv_tot = pop_cv(values)
    cv_lt = pop_cv(lower)
    cv_gt = pop_cv(upper)
    lhs = alpha * cv_tot
    rhs = cv_lt + cv_gt
    return cv_tot, cv_lt, cv_gt, lhs, rhs, lhs < rhs


class TestPartition:
    def test_boundary_is_inclusive_below(self):
        lower, upper = partition(ds([1, 2, 3]), tau=2)
        assert list(lower.distances) == [1, 2]
        assert list(upper.distances) == [3]

    def test_all_equal_at_boundary(self):
        lower, upper = partition(ds([5, 5]), tau=5)
        assert len(lower) == 2 and len(upper) == 0

    def test_mass_conserved(self, seeded_rng):
        scores = seeded_rng.gamma(2.0, 3.0, size=90)
        lower, upper = partition(ds(scores), tau=float(np.median(scores)))
        assert len(lower) + len(upper) == 90
        assert set(lower.ids) | set(upper.ids) == set(f"s-{i}" for i in range(90))

    def test_ids_travel_with_values(self):
        lower, upper = partition(ds([10, 1, 20]), tau=5)
        assert lower.ids == ("s-1",)
        assert upper.ids == ("s-0", "s-2")


class TestCoefficientOfVariation:
    def test_constant_set(self):
        assert coefficient_of_variation(ds([3.0, 3.0, 3.0])) == 0.0

    def test_two_points(self):
        assert coefficient_of_variation(ds([2, 4])) == pytest.approx(1 / 3)

    def test_three_points(self):
        expected = math.sqrt(2 / 3) / 10
        assert coefficient_of_variation(ds([9, 10, 11])) == pytest.approx(expected, rel=1e-9)

    def test_zero_mean_rejected(self):
        with pytest.raises(ValidationError):
            coefficient_of_variation(ds([0.0, 0.0]))


class TestGateDecision:
    def test_two_tight_clusters_reads_monomodal(self):
        values = [10.0] * 5 + [30.0] * 5
        gate = gate_decision(ds(values), tau=20, alpha=1.12)
        assert gate.cv_tot == pytest.approx(0.5)
        assert gate.cv_lt == 0.0 and gate.cv_gt == 0.0
        assert gate.lhs == pytest.approx(0.56)
        assert gate.rhs == 0.0
        assert gate.bimodal is False

    def test_spread_cluster_reads_bimodal(self):
        values = [97, 99, 99.5, 100, 100.5, 101, 103]
        gate = gate_decision(ds(values), tau=100, alpha=1.12)
        cv_tot, cv_lt, cv_gt, lhs, rhs, verdict = direct_gate(values, 100, 1.12)
        assert gate.cv_tot == pytest.approx(cv_tot, abs=1e-6)
        assert gate.cv_lt == pytest.approx(cv_lt, abs=1e-6)
        assert gate.cv_gt == pytest.approx(cv_gt, abs=1e-6)
        assert gate.lhs == pytest.approx(lhs, abs=1e-6)
        assert gate.rhs == pytest.approx(rhs, abs=1e-6)
        assert gate.bimodal is True and verdict is True
        # frozen spot values from direct evaluation
        assert gate.cv_tot == pytest.approx(0.017113, abs=1e-5)
        assert gate.lhs == pytest.approx(0.019166, abs=1e-5)
        assert gate.rhs == pytest.approx(0.022160, abs=1e-5)

    def test_empty_upper_partition_degenerate(self):
        values = [1.0, 2.0, 3.0]
        gate = gate_decision(ds(values), tau=10, alpha=1.12)
        assert gate.degenerate == "upper partition empty"
        assert gate.bimodal is False

    def test_scaling_leaves_verdict_unchanged(self, seeded_rng):
        values = seeded_rng.gamma(2.0, 3.0, size=60)
        tau = float(np.median(values))
        g1 = gate_decision(ds(values), tau, alpha=1.12)
        g2 = gate_decision(ds(values * 7.5), tau * 7.5, alpha=1.12)
        assert g1.cv_tot == pytest.approx(g2.cv_tot, rel=1e-9)
        assert g1.cv_lt == pytest.approx(g2.cv_lt, rel=1e-9)
        assert g1.cv_gt == pytest.approx(g2.cv_gt, rel=1e-9)
        assert g1.bimodal == g2.bimodal

    def test_alpha_monotonicity(self, seeded_rng):
        values = seeded_rng.gamma(2.0, 3.0, size=60)
        tau = float(np.median(values))
        previous = None
        for alpha in [0.25, 0.5, 1.0, 1.12, 2.0, 4.0]:
            gate = gate_decision(ds(values), tau, alpha)
            if previous is False:
                # once keep-all (not bimodal), larger alpha never flips to filter
                assert gate.bimodal is False
            previous = gate.bimodal

    def test_bad_alpha(self):
        with pytest.raises(ValidationError):
            gate_decision(ds([1, 2, 3]), tau=2, alpha=0)


class TestRunFilter:
    def test_verdicts_consistent_with_gate(self, seeded_rng):
        labeled = make_matrix(seeded_rng, 60, 6, prefix="l")
        unlabeled = make_matrix(seeded_rng, 40, 6, prefix="u")
        report = run_filter(labeled, unlabeled, FilterConfig())
        kept = {v.id for v in report.verdicts if v.kept}
        if report.gate_branch == "keep-all":
            assert kept == {v.id for v in report.verdicts}
        else:
            assert kept == {v.id for v in report.verdicts if v.distance <= report.threshold.tau}
        assert report.kept_count + report.discarded_count == len(report.verdicts)

    def test_contaminated_run_with_invert(self):
        spec = MixtureSpec(contamination=0.2, seed=7)
        labeled, unlabeled, truth = generate(spec)
        report = run_filter(labeled, unlabeled, FilterConfig(invert_gate=True))
        quality = evaluate(report, truth)
        n_ood = sum(truth.values())
        assert n_ood == 18
        discarded_ood = sum(
            truth[v.id] for v in report.verdicts if not v.kept
        )
        assert discarded_ood == 18
        discarded_iod = report.discarded_count - discarded_ood
        assert discarded_iod <= 4
        assert quality.ood_recall == 1.0

    def test_determinism_byte_identical(self, tmp_path, seeded_rng):
        labeled = make_matrix(seeded_rng, 60, 6, prefix="l")
        unlabeled = make_matrix(seeded_rng, 40, 6, prefix="u")
        config = FilterConfig(method="kmeans", seed=3)
        p1, p2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        write_report(run_filter(labeled, unlabeled, config), p1)
        write_report(run_filter(labeled, unlabeled, config), p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_gate_stats_are_literal_even_with_invert(self, seeded_rng):
        labeled = make_matrix(seeded_rng, 60, 6, prefix="l")
        unlabeled = make_matrix(seeded_rng, 40, 6, prefix="u")
        plain = run_filter(labeled, unlabeled, FilterConfig())
        inverted = run_filter(labeled, unlabeled, FilterConfig(invert_gate=True))
        assert plain.gate == inverted.gate
        if plain.gate.degenerate is None:
            assert plain.gate_branch != inverted.gate_branch

    def test_bypass_always_filters(self, seeded_rng):
        labeled = make_matrix(seeded_rng, 60, 6, prefix="l")
        unlabeled = make_matrix(seeded_rng, 40, 6, prefix="u")
        report = run_filter(labeled, unlabeled, FilterConfig(bypass_gate=True))
        assert report.gate_branch == "filter"
        kept = {v.id for v in report.verdicts if v.kept}
        assert kept == {v.id for v in report.verdicts if v.distance <= report.threshold.tau}

    def test_stage_tagged_errors(self, seeded_rng):
        labeled = make_matrix(seeded_rng, 1, 4, prefix="l")
        unlabeled = make_matrix(seeded_rng, 5, 4, prefix="u")
        with pytest.raises(ValidationError, match=r"\[fit\]"):
            run_filter(labeled, unlabeled, FilterConfig())

    def test_dimension_mismatch(self, seeded_rng):
        labeled = make_matrix(seeded_rng, 10, 4, prefix="l")
        unlabeled = make_matrix(seeded_rng, 5, 3, prefix="u")
        with pytest.raises(ValidationError, match="dimension mismatch"):
            run_filter(labeled, unlabeled, FilterConfig())
