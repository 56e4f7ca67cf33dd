"""Diagnostic figures rendered next to the manifest in the report path."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .gate import FilterReport
from .threshold import DEFAULT_BINS


def render_report_figures(report: FilterReport, out_prefix: str | Path) -> list[Path]:
    """Write score-histogram and method-diagnostic PNGs; returns the paths."""
    out_prefix = Path(out_prefix)
    written = []

    distances = np.array([v.distance for v in report.verdicts])
    tau = report.threshold.tau
    bins = int(report.parameters.get("bins", DEFAULT_BINS))

    fig, ax = plt.subplots(figsize=(7, 4))
    ax.hist(distances, bins=bins, color="steelblue", edgecolor="white")
    ax.axvline(tau, color="crimson", linestyle="--", label=f"threshold = {tau:.4g}")
    ax.set_xlabel("Mahalanobis score")
    ax.set_ylabel("count")
    branch = report.gate_branch
    ax.set_title(f"Score distribution ({report.threshold.method}, gate: {branch})")
    ax.legend()
    hist_path = out_prefix.with_name(out_prefix.name + ".hist.png")
    fig.tight_layout()
    fig.savefig(hist_path, dpi=120)
    plt.close(fig)
    written.append(hist_path)

    diag = report.threshold.diagnostics
    fig, ax = plt.subplots(figsize=(7, 4))
    if report.threshold.method == "otsu" and diag.get("sigma_b"):
        ax.plot(diag["sigma_b"], marker=".", color="steelblue")
        if diag.get("split_index") is not None:
            ax.axvline(diag["split_index"], color="crimson", linestyle="--",
                       label=f"split index = {diag['split_index']}")
            ax.legend()
        ax.set_xlabel("candidate split index")
        ax.set_ylabel("between-class variance")
        ax.set_title("Otsu objective over candidate splits")
    else:
        ax.hist(distances, bins=bins, color="lightgray", edgecolor="white")
        for c in diag.get("centroids", []):
            ax.axvline(c, color="seagreen", linestyle=":", label=f"centroid {c:.4g}")
        ax.axvline(tau, color="crimson", linestyle="--", label=f"threshold = {tau:.4g}")
        ax.set_xlabel("Mahalanobis score")
        ax.set_ylabel("count")
        ax.set_title(f"k-means centroids ({diag.get('iterations', '?')} iterations)")
        ax.legend()
    diag_path = out_prefix.with_name(out_prefix.name + ".diag.png")
    fig.tight_layout()
    fig.savefig(diag_path, dpi=120)
    plt.close(fig)
    written.append(diag_path)
    return written
