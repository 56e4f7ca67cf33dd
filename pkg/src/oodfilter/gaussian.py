"""Gaussian model of the labeled feature set and Mahalanobis scoring.

The covariance of a small labeled set in a high-dimensional feature space
is singular (rank at most N-1), so the inverse is always taken on the
shrunken matrix covariance + lambda*I with lambda = eps * trace / D. The
lambda actually applied is recorded so scores are auditable.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError

from .errors import FeatureFormatError, InsufficientDataError, NumericalError, ValidationError
from .features import FeatureMatrix

GSTA_MAGIC = b"GSTA"
GSTA_VERSION = 1

DEFAULT_SHRINKAGE = 1e-3

# Relative floor keeping lambda strictly positive even at eps=0 or zero trace.
_LAMBDA_FLOOR = 1e-12


@dataclass(frozen=True)
class GaussianStats:
    """Sample mean, covariance and regularized inverse of the labeled set."""

    mean: np.ndarray = field(repr=False)
    covariance: np.ndarray = field(repr=False)
    inverse: np.ndarray = field(repr=False)
    shrinkage: float

    @property
    def dims(self) -> int:
        return self.mean.shape[0]


@dataclass(frozen=True)
class DistanceSet:
    """Per-sample Mahalanobis scores with population summary moments."""

    ids: tuple[str, ...]
    distances: np.ndarray = field(repr=False)
    mean: float
    stddev: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "ids", tuple(self.ids))
        d = np.asarray(self.distances, dtype=np.float64)
        d.setflags(write=False)
        object.__setattr__(self, "distances", d)

    @classmethod
    def from_scores(cls, ids, distances) -> "DistanceSet":
        d = np.asarray(distances, dtype=np.float64)
        if len(ids) != d.shape[0]:
            raise ValidationError(f"{len(ids)} ids for {d.shape[0]} distances")
        if d.size:
            mean = float(d.mean())
            stddev = float(d.std())  # population convention
        else:
            mean = float("nan")
            stddev = float("nan")
        return cls(ids=tuple(ids), distances=d, mean=mean, stddev=stddev)

    def __len__(self) -> int:
        return self.distances.shape[0]


def fit_gaussian(labeled: FeatureMatrix, shrinkage_factor: float = DEFAULT_SHRINKAGE) -> GaussianStats:
    """Fit mean/covariance on the labeled set and invert the shrunken covariance.

    Covariance uses the unbiased (N-1) convention. The applied shrinkage is
    lambda = shrinkage_factor * trace(cov)/D, floored so it is always > 0.
    """
    if shrinkage_factor < 0:
        raise ValidationError(f"shrinkage factor must be >= 0, got {shrinkage_factor}")
    if labeled.rows < 2:
        raise InsufficientDataError(
            f"insufficient data: need at least 2 labeled rows, got {labeled.rows}"
        )
    x = labeled.data.astype(np.float64)
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / (labeled.rows - 1)
    cov = (cov + cov.T) / 2.0

    avg_var = float(np.trace(cov)) / labeled.dims
    lam = max(shrinkage_factor * avg_var, _LAMBDA_FLOOR * max(1.0, avg_var))
    shrunk = cov + lam * np.eye(labeled.dims)

    try:
        factor = cho_factor(shrunk, lower=True)
    except LinAlgError as exc:
        raise NumericalError(f"shrunken covariance is not positive definite: {exc}") from exc
    inverse = cho_solve(factor, np.eye(labeled.dims))
    inverse = (inverse + inverse.T) / 2.0
    return GaussianStats(mean=mean, covariance=cov, inverse=inverse, shrinkage=lam)


def mahalanobis(stats: GaussianStats, h: np.ndarray) -> float:
    """Squared Mahalanobis distance of `h` to the labeled mean (no square root)."""
    h = np.asarray(h, dtype=np.float64)
    if h.shape != (stats.dims,):
        raise ValidationError(f"expected a vector of length {stats.dims}, got shape {h.shape}")
    if not np.isfinite(h).all():
        raise ValidationError("non-finite value in query vector")
    diff = stats.mean - h
    # Clamp tiny negative round-off; the quadratic form is PD.
    return max(float(diff @ stats.inverse @ diff), 0.0)


def score_dataset(stats: GaussianStats, unlabeled: FeatureMatrix) -> DistanceSet:
    """Score every row of `unlabeled`; output order matches input order."""
    if unlabeled.dims != stats.dims:
        raise ValidationError(
            f"dimension mismatch: stats have {stats.dims} dims, features have {unlabeled.dims}"
        )
    diffs = unlabeled.data.astype(np.float64) - stats.mean
    d = np.einsum("ij,jk,ik->i", diffs, stats.inverse, diffs)
    np.maximum(d, 0.0, out=d)
    return DistanceSet.from_scores(unlabeled.ids, d)


def save_stats(stats: GaussianStats, path: str | Path) -> None:
    """Serialize GaussianStats to the GSTA binary layout (float64 LE)."""
    d = stats.dims
    with open(path, "wb") as fh:
        fh.write(GSTA_MAGIC)
        fh.write(struct.pack("<I", GSTA_VERSION))
        fh.write(struct.pack("<Q", d))
        fh.write(np.ascontiguousarray(stats.mean, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(stats.covariance, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(stats.inverse, dtype="<f8").tobytes())
        fh.write(struct.pack("<d", stats.shrinkage))


def load_stats(path: str | Path) -> GaussianStats:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"input not found: {path}")
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != GSTA_MAGIC:
            raise FeatureFormatError(f"bad magic {magic!r}, expected {GSTA_MAGIC!r}")
        (version,) = struct.unpack("<I", fh.read(4))
        if version != GSTA_VERSION:
            raise FeatureFormatError(f"unsupported version {version}")
        (d,) = struct.unpack("<Q", fh.read(8))
        if d < 1:
            raise FeatureFormatError(f"header declares {d} dims")
        need = 8 * (d + 2 * d * d + 1)
        payload = fh.read(need)
        if len(payload) != need:
            raise FeatureFormatError("truncated GSTA payload")
    flat = np.frombuffer(payload, dtype="<f8")
    mean = flat[:d].copy()
    covariance = flat[d : d + d * d].reshape(d, d).copy()
    inverse = flat[d + d * d : d + 2 * d * d].reshape(d, d).copy()
    lam = float(flat[-1])
    return GaussianStats(mean=mean, covariance=covariance, inverse=inverse, shrinkage=lam)
