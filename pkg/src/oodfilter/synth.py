"""Seeded synthetic distribution-mismatch datasets and filter-quality metrics.

The labeled cloud is an isotropic Gaussian at the origin; contamination
rows are shifted by `separation` in every dimension. Ground truth travels
in a separate id->flag map so sample ids carry no label information.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .features import FeatureMatrix
from .gate import FilterReport


@dataclass(frozen=True)
class MixtureSpec:
    dims: int = 16
    n_labeled: int = 200
    n_unlabeled: int = 90
    contamination: float = 0.2
    separation: float = 8.0
    iod_sd: float = 1.0
    ood_sd: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.contamination <= 1.0:
            raise ValidationError(f"contamination must be in [0, 1], got {self.contamination}")
        if self.dims < 1 or self.n_labeled < 1 or self.n_unlabeled < 1:
            raise ValidationError("dims and sample counts must be positive")
        if self.iod_sd <= 0 or self.ood_sd <= 0:
            raise ValidationError("standard deviations must be positive")

    @property
    def n_ood(self) -> int:
        return int(round(self.contamination * self.n_unlabeled))


@dataclass(frozen=True)
class FilterQuality:
    """Confusion-count summary; None marks an undefined (0/0) ratio."""

    ood_recall: float | None
    ood_precision: float | None
    kept_contamination: float | None
    kept_count: int


def generate(spec: MixtureSpec) -> tuple[FeatureMatrix, FeatureMatrix, dict[str, bool]]:
    """Sample (labeled, unlabeled, truth) from the mixture spec.

    OOD and IOD rows are shuffled together before ids are assigned, so row
    position reveals nothing either.
    """
    rng = np.random.default_rng(spec.seed)
    labeled_data = rng.normal(0.0, spec.iod_sd, size=(spec.n_labeled, spec.dims))
    labeled = FeatureMatrix(
        ids=tuple(f"l-{i:04d}" for i in range(spec.n_labeled)),
        data=labeled_data.astype(np.float32),
    )

    n_ood = spec.n_ood
    n_iod = spec.n_unlabeled - n_ood
    iod = rng.normal(0.0, spec.iod_sd, size=(n_iod, spec.dims))
    ood = rng.normal(spec.separation, spec.ood_sd, size=(n_ood, spec.dims))
    stacked = np.vstack([iod, ood])
    flags = np.concatenate([np.zeros(n_iod, dtype=bool), np.ones(n_ood, dtype=bool)])
    order = rng.permutation(spec.n_unlabeled)

    ids = tuple(f"u-{i:04d}" for i in range(spec.n_unlabeled))
    unlabeled = FeatureMatrix(ids=ids, data=stacked[order].astype(np.float32))
    truth = {ids[i]: bool(flags[order][i]) for i in range(spec.n_unlabeled)}
    return labeled, unlabeled, truth


def evaluate(report: FilterReport, truth: dict[str, bool]) -> FilterQuality:
    """Score discard decisions against ground-truth OOD flags."""
    missing = [v.id for v in report.verdicts if v.id not in truth]
    if missing:
        raise ValidationError(f"id {missing[0]!r} present in report but absent from truth")
    return quality_from_verdicts(
        [(v.id, v.kept) for v in report.verdicts], truth
    )


def quality_from_verdicts(verdicts: list[tuple[str, bool]], truth: dict[str, bool]) -> FilterQuality:
    for sample_id, _ in verdicts:
        if sample_id not in truth:
            raise ValidationError(f"id {sample_id!r} present in report but absent from truth")
    n_ood = sum(truth[i] for i, _ in verdicts)
    discarded = [(i, truth[i]) for i, kept in verdicts if not kept]
    kept = [(i, truth[i]) for i, kept in verdicts if kept]
    tp = sum(is_ood for _, is_ood in discarded)
    recall = tp / n_ood if n_ood else None
    precision = tp / len(discarded) if discarded else None
    kept_contamination = (
        sum(is_ood for _, is_ood in kept) / len(kept) if kept else None
    )
    return FilterQuality(
        ood_recall=recall,
        ood_precision=precision,
        kept_contamination=kept_contamination,
        kept_count=len(kept),
    )


def save_truth(truth: dict[str, bool], path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(truth, fh, indent=0, sort_keys=True)
        fh.write("\n")


def load_truth(path: str | Path) -> dict[str, bool]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"input not found: {path}")
    with open(path) as fh:
        raw = json.load(fh)
    return {str(k): bool(v) for k, v in raw.items()}
