"""Automatic threshold selection on the score distribution.

Two strategies: Otsu's between-class variance maximization on a score
histogram, and two-cluster Lloyd iterations directly on the raw scores.
`oracle_best_split` is the exhaustive reference used by the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import InsufficientDataError, ValidationError
from .gaussian import DistanceSet

DEFAULT_BINS = 64
DEFAULT_KMEANS_MAX_ITERS = 100
DEFAULT_KMEANS_TOL = 1e-9


@dataclass(frozen=True)
class ScoreHistogram:
    """Equal-width histogram of scores; last bin is right-closed."""

    edges: np.ndarray = field(repr=False)
    counts: np.ndarray = field(repr=False)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def bins(self) -> int:
        return self.counts.shape[0]

    def centers(self) -> np.ndarray:
        return (self.edges[:-1] + self.edges[1:]) / 2.0


@dataclass(frozen=True)
class ThresholdResult:
    tau: float
    method: str
    diagnostics: dict[str, Any]


def build_histogram(d: DistanceSet, bins: int = DEFAULT_BINS) -> ScoreHistogram:
    """Bin scores into `bins` equal-width bins over [min, max].

    A zero-width range (all scores equal) collapses to a single bin so the
    degenerate case stays representable.
    """
    if bins < 1:
        raise ValidationError(f"bins must be >= 1, got {bins}")
    if len(d) == 0:
        raise ValidationError("cannot build a histogram of an empty DistanceSet")
    scores = d.distances
    lo = float(scores.min())
    hi = float(scores.max())
    if lo == hi:
        edges = np.array([lo, hi], dtype=np.float64)
        counts = np.array([len(d)], dtype=np.int64)
        return ScoreHistogram(edges=edges, counts=counts)
    counts, edges = np.histogram(scores, bins=bins, range=(lo, hi))
    return ScoreHistogram(edges=edges, counts=counts.astype(np.int64))


def sigma_b_curve(h: ScoreHistogram) -> np.ndarray:
    """Between-class variance for every candidate split.

    Entry k is the between-class variance when bins 0..k form the lower
    class; splits leaving either class empty contribute 0.
    """
    counts = h.counts.astype(np.float64)
    total = counts.sum()
    centers = h.centers()
    w0 = np.cumsum(counts)[:-1] / total
    w1 = 1.0 - w0
    mass = np.cumsum(counts * centers)[:-1]
    total_mass = float((counts * centers).sum())
    curve = np.zeros(h.bins - 1, dtype=np.float64)
    ok = (w0 > 0) & (w1 > 0)
    mu0 = np.divide(mass, w0 * total, out=np.zeros_like(curve), where=ok)
    mu1 = np.divide(total_mass - mass, w1 * total, out=np.zeros_like(curve), where=ok)
    curve[ok] = (w0 * w1 * (mu0 - mu1) ** 2)[ok]
    return curve


def _exact_argmax_split(counts: np.ndarray) -> int:
    """Earliest argmax of the between-class variance, in exact arithmetic.

    The argmax is invariant to affine transforms of the bin centers, so for
    equal-width bins it can be taken over integer index centers. Comparing
    (m0*n1 - m1*n0)^2 / (n0*n1) across splits with integer cross
    multiplication makes mathematical ties exact float-free ties, which the
    smallest-split rule then resolves deterministically.
    """
    c = [int(v) for v in counts]
    u = [2 * i + 1 for i in range(len(c))]  # twice the index-space centers
    n_tot = sum(c)
    m_tot = sum(ci * ui for ci, ui in zip(c, u))
    best_k, best_num, best_den = 0, -1, 1
    n0 = m0 = 0
    for k in range(len(c) - 1):
        n0 += c[k]
        m0 += c[k] * u[k]
        n1 = n_tot - n0
        if n0 == 0 or n1 == 0:
            continue
        num = (m0 * n1 - (m_tot - m0) * n0) ** 2
        den = n0 * n1
        if num * best_den > best_num * den:  # strict: ties keep the earlier k
            best_k, best_num, best_den = k, num, den
    return best_k


def otsu_threshold(h: ScoreHistogram) -> ThresholdResult:
    """Split the histogram at the between-class-variance maximum.

    tau is the upper edge of the last lower-class bin; exact ties go to the
    smallest split. A histogram with a single non-empty bin is degenerate
    and returns the top edge (everything lands in the lower class). The
    split search assumes the equal-width bins build_histogram produces; the
    float sigma_b curve in the diagnostics is informational.
    """
    if h.total < 2:
        raise InsufficientDataError(f"need at least 2 scores, got {h.total}")
    nonempty = int((h.counts > 0).sum())
    if h.bins < 2 or nonempty < 2:
        return ThresholdResult(
            tau=float(h.edges[-1]),
            method="otsu",
            diagnostics={"sigma_b": [], "split_index": None, "degenerate": True},
        )
    curve = sigma_b_curve(h)
    k = _exact_argmax_split(h.counts)
    return ThresholdResult(
        tau=float(h.edges[k + 1]),
        method="otsu",
        diagnostics={
            "sigma_b": [float(v) for v in curve],
            "split_index": k,
            "degenerate": False,
        },
    )


def kmeans_threshold(
    d: DistanceSet,
    max_iters: int = DEFAULT_KMEANS_MAX_ITERS,
    tol: float = DEFAULT_KMEANS_TOL,
) -> ThresholdResult:
    """Two-cluster Lloyd iterations in 1-D; tau is the centroid midpoint.

    Centroids start at the score minimum and maximum, which makes the run
    deterministic. Convergence: unchanged assignments, centroid movement
    below `tol`, or `max_iters`.
    """
    if len(d) == 0:
        raise ValidationError("cannot threshold an empty DistanceSet")
    scores = d.distances
    lo = float(scores.min())
    hi = float(scores.max())
    if lo == hi:
        return ThresholdResult(
            tau=lo,
            method="kmeans",
            diagnostics={"centroids": [lo, lo], "iterations": 0, "degenerate": True},
        )
    c0, c1 = lo, hi
    assign = None
    iterations = 0
    for iterations in range(1, max_iters + 1):
        new_assign = np.abs(scores - c0) <= np.abs(scores - c1)  # ties to lower
        n0 = c0 if not new_assign.any() else float(scores[new_assign].mean())
        n1 = c1 if new_assign.all() else float(scores[~new_assign].mean())
        moved = max(abs(n0 - c0), abs(n1 - c1))
        unchanged = assign is not None and bool((new_assign == assign).all())
        assign = new_assign
        c0, c1 = n0, n1
        if unchanged or moved < tol:
            break
    if c0 > c1:
        c0, c1 = c1, c0
    return ThresholdResult(
        tau=(c0 + c1) / 2.0,
        method="kmeans",
        diagnostics={"centroids": [c0, c1], "iterations": iterations, "degenerate": False},
    )


def oracle_best_split(d: DistanceSet) -> tuple[int, float]:
    """Exhaustive optimum of the 2-cluster objective over sorted scores.

    Evaluates the within-cluster sum of squared deviations at every
    contiguous split and returns (split_index, tau) with tau the midpoint
    of the boundary pair. Test oracle; O(N) per split is fine at test sizes.
    """
    if len(d) < 2:
        raise InsufficientDataError(f"need at least 2 scores, got {len(d)}")
    xs = np.sort(d.distances)
    n = xs.shape[0]
    best_i, best_obj = 1, float("inf")
    for i in range(1, n):
        lower, upper = xs[:i], xs[i:]
        obj = float(((lower - lower.mean()) ** 2).sum() + ((upper - upper.mean()) ** 2).sum())
        if obj < best_obj:
            best_i, best_obj = i, obj
    tau = float((xs[best_i - 1] + xs[best_i]) / 2.0)
    return best_i, tau
