"""Out-of-distribution filtering for unlabeled datasets.

Scores feature vectors with the Mahalanobis distance to a labeled set,
selects a threshold automatically (Otsu or 1-D k-means), applies a
coefficient-of-variation bimodality gate, and emits keep/discard verdicts.
"""

from .errors import (
    FeatureFormatError,
    InsufficientDataError,
    NumericalError,
    OodFilterError,
    ValidationError,
)
from .features import FeatureMatrix, load_features, save_features
from .gaussian import (
    DistanceSet,
    GaussianStats,
    fit_gaussian,
    load_stats,
    mahalanobis,
    save_stats,
    score_dataset,
)
from .gate import (
    FilterConfig,
    FilterReport,
    GateStats,
    Verdict,
    coefficient_of_variation,
    gate_decision,
    partition,
    read_report,
    run_filter,
    write_id_lists,
    write_report,
)
from .synth import FilterQuality, MixtureSpec, evaluate, generate, load_truth, save_truth
from .threshold import (
    ScoreHistogram,
    ThresholdResult,
    build_histogram,
    kmeans_threshold,
    oracle_best_split,
    otsu_threshold,
)

__version__ = "0.1.0"

__all__ = [
    "FeatureFormatError",
    "InsufficientDataError",
    "NumericalError",
    "OodFilterError",
    "ValidationError",
    "FeatureMatrix",
    "load_features",
    "save_features",
    "DistanceSet",
    "GaussianStats",
    "fit_gaussian",
    "load_stats",
    "mahalanobis",
    "save_stats",
    "score_dataset",
    "FilterConfig",
    "FilterReport",
    "GateStats",
    "Verdict",
    "coefficient_of_variation",
    "gate_decision",
    "partition",
    "read_report",
    "run_filter",
    "write_id_lists",
    "write_report",
    "FilterQuality",
    "MixtureSpec",
    "evaluate",
    "generate",
    "load_truth",
    "save_truth",
    "ScoreHistogram",
    "ThresholdResult",
    "build_histogram",
    "kmeans_threshold",
    "oracle_best_split",
    "otsu_threshold",
]
