"""Bimodality gate and the end-to-end filtering pipeline.

The gate partitions scores at the threshold, compares the coefficient of
variation of the whole set against the sum over the two partitions, and
decides between keep-all and filtering. The recorded GateStats always
hold the literal inequality quantities; `invert_gate` and `bypass_gate`
only change which branch is acted on (see FilterConfig).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .errors import OodFilterError, ValidationError
from .features import FeatureMatrix
from .gaussian import DistanceSet, fit_gaussian, score_dataset
from .threshold import (
    DEFAULT_BINS,
    ThresholdResult,
    build_histogram,
    kmeans_threshold,
    otsu_threshold,
)

DEFAULT_ALPHA = 1.12


@dataclass(frozen=True)
class GateStats:
    """Literal gate quantities; cv fields are None when undefined."""

    cv_tot: float | None
    cv_lt: float | None
    cv_gt: float | None
    alpha: float
    lhs: float | None
    rhs: float | None
    bimodal: bool
    degenerate: str | None = None


@dataclass(frozen=True)
class FilterConfig:
    method: str = "otsu"
    bins: int = DEFAULT_BINS
    alpha: float = DEFAULT_ALPHA
    shrinkage: float = 1e-3
    invert_gate: bool = False
    bypass_gate: bool = False
    seed: int | None = None


@dataclass(frozen=True)
class Verdict:
    id: str
    distance: float
    kept: bool


@dataclass(frozen=True)
class FilterReport:
    threshold: ThresholdResult
    gate: GateStats
    verdicts: tuple[Verdict, ...]
    kept_count: int
    discarded_count: int
    gate_branch: str  # "keep-all" or "filter"
    parameters: dict[str, Any] = field(default_factory=dict)


def partition(d: DistanceSet, tau: float) -> tuple[DistanceSet, DistanceSet]:
    """Split scores at tau: lower gets d_i <= tau, upper gets d_i > tau."""
    if len(d) == 0:
        raise ValidationError("cannot partition an empty DistanceSet")
    mask = d.distances <= tau
    ids = np.array(d.ids, dtype=object)
    lower = DistanceSet.from_scores(list(ids[mask]), d.distances[mask])
    upper = DistanceSet.from_scores(list(ids[~mask]), d.distances[~mask])
    return lower, upper


def coefficient_of_variation(d: DistanceSet) -> float:
    """Population standard deviation divided by mean; requires mean > 0."""
    if len(d) == 0:
        raise ValidationError("coefficient of variation of an empty set is undefined")
    if d.mean <= 0:
        raise ValidationError(f"coefficient of variation needs mean > 0, got {d.mean}")
    return d.stddev / d.mean


def gate_decision(d: DistanceSet, tau: float, alpha: float, invert: bool = False) -> GateStats:
    """Evaluate the bimodality inequality at threshold tau.

    Degenerate situations (an empty partition, or a partition with zero
    mean) record a reason and report bimodal=False so the pipeline keeps
    everything. `invert` is accepted for signature parity but only affects
    the acted-on branch downstream, never the recorded quantities.
    """
    del invert  # recorded quantities are always the literal ones
    if len(d) == 0:
        raise ValidationError("gate needs a non-empty DistanceSet")
    if alpha <= 0:
        raise ValidationError(f"alpha must be > 0, got {alpha}")

    lower, upper = partition(d, tau)

    def _cv(part: DistanceSet) -> float | None:
        if len(part) == 0 or part.mean <= 0:
            return None
        return part.stddev / part.mean

    cv_tot = _cv(d)
    cv_lt = _cv(lower)
    cv_gt = _cv(upper)

    degenerate = None
    if len(lower) == 0:
        degenerate = "lower partition empty"
    elif len(upper) == 0:
        degenerate = "upper partition empty"
    elif cv_tot is None:
        degenerate = "total mean is zero"
    elif cv_lt is None:
        degenerate = "lower partition mean is zero"
    elif cv_gt is None:
        degenerate = "upper partition mean is zero"

    if degenerate is not None:
        lhs = alpha * cv_tot if cv_tot is not None else None
        rhs = cv_lt + cv_gt if cv_lt is not None and cv_gt is not None else None
        return GateStats(
            cv_tot=cv_tot, cv_lt=cv_lt, cv_gt=cv_gt, alpha=alpha,
            lhs=lhs, rhs=rhs, bimodal=False, degenerate=degenerate,
        )

    lhs = alpha * cv_tot
    rhs = cv_lt + cv_gt
    return GateStats(
        cv_tot=cv_tot, cv_lt=cv_lt, cv_gt=cv_gt, alpha=alpha,
        lhs=lhs, rhs=rhs, bimodal=(lhs < rhs), degenerate=None,
    )


def _select_threshold(d: DistanceSet, config: FilterConfig) -> ThresholdResult:
    if config.method == "otsu":
        return otsu_threshold(build_histogram(d, config.bins))
    if config.method == "kmeans":
        return kmeans_threshold(d)
    raise ValidationError(f"unknown threshold method {config.method!r}")


def _stage(name: str):
    class _Ctx:
        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            if exc is not None and isinstance(exc, OodFilterError) and not getattr(exc, "_staged", False):
                exc._staged = True
                exc.args = (f"[{name}] {exc}",)
            return False

    return _Ctx()


def run_filter(labeled: FeatureMatrix, unlabeled: FeatureMatrix, config: FilterConfig) -> FilterReport:
    """Full pipeline: fit, score, threshold, gate, per-sample verdicts.

    Deterministic for fixed inputs and config. Degenerate gates keep all
    samples regardless of `invert_gate`; `bypass_gate` forces filtering at
    the threshold without consulting the gate.
    """
    if unlabeled.dims != labeled.dims:
        raise ValidationError(
            f"dimension mismatch: labeled has {labeled.dims} dims, unlabeled has {unlabeled.dims}"
        )
    if unlabeled.rows < 2:
        raise ValidationError(f"need at least 2 unlabeled rows, got {unlabeled.rows}")

    with _stage("fit"):
        stats = fit_gaussian(labeled, config.shrinkage)
    with _stage("score"):
        scores = score_dataset(stats, unlabeled)
    with _stage("threshold"):
        threshold = _select_threshold(scores, config)
    with _stage("gate"):
        gate = gate_decision(scores, threshold.tau, config.alpha)

    if config.bypass_gate:
        filter_applied = True
    elif gate.degenerate is not None:
        filter_applied = False
    else:
        filter_applied = gate.bimodal != config.invert_gate

    if filter_applied:
        kept_mask = scores.distances <= threshold.tau
    else:
        kept_mask = np.ones(len(scores), dtype=bool)

    verdicts = tuple(
        Verdict(id=i, distance=float(dist), kept=bool(k))
        for i, dist, k in zip(scores.ids, scores.distances, kept_mask)
    )
    kept = int(kept_mask.sum())
    return FilterReport(
        threshold=threshold,
        gate=gate,
        verdicts=verdicts,
        kept_count=kept,
        discarded_count=len(verdicts) - kept,
        gate_branch="filter" if filter_applied else "keep-all",
        parameters={
            "method": config.method,
            "bins": config.bins,
            "alpha": config.alpha,
            "shrinkage": config.shrinkage,
            "invert_gate": config.invert_gate,
            "bypass_gate": config.bypass_gate,
            "seed": config.seed,
        },
    )


def _clean(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def report_header(report: FilterReport) -> dict[str, Any]:
    gate = report.gate
    return {
        "tau": _clean(report.threshold.tau),
        "method": report.threshold.method,
        "alpha": gate.alpha,
        "cv_tot": _clean(gate.cv_tot),
        "cv_lt": _clean(gate.cv_lt),
        "cv_gt": _clean(gate.cv_gt),
        "lhs": _clean(gate.lhs),
        "rhs": _clean(gate.rhs),
        "bimodal": gate.bimodal,
        "degenerate": gate.degenerate,
        "gate_branch": report.gate_branch,
        "kept_count": report.kept_count,
        "discarded_count": report.discarded_count,
        "diagnostics": report.threshold.diagnostics,
        "parameters": report.parameters,
    }


def write_report(report: FilterReport, path: str | Path) -> None:
    """JSON Lines manifest: header record, then one record per sample."""
    with open(path, "w") as fh:
        fh.write(json.dumps(report_header(report)) + "\n")
        for v in report.verdicts:
            fh.write(json.dumps({"id": v.id, "distance": v.distance, "kept": v.kept}) + "\n")


def read_report(path: str | Path):
    """Parse a manifest back into (header dict, list of verdict dicts)."""
    with open(path) as fh:
        lines = [json.loads(line) for line in fh if line.strip()]
    if not lines:
        raise ValidationError(f"empty manifest: {path}")
    return lines[0], lines[1:]


def write_id_lists(report: FilterReport, keep_path: str | Path, discard_path: str | Path) -> None:
    with open(keep_path, "w") as fh:
        for v in report.verdicts:
            if v.kept:
                fh.write(v.id + "\n")
    with open(discard_path, "w") as fh:
        for v in report.verdicts:
            if not v.kept:
                fh.write(v.id + "\n")
