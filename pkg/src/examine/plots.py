"""Matplotlib rendering of distribution summaries and accuracy curves.

All figures go straight to files (Agg backend); the data they draw is
exactly what the CSV/JSON writers emit, so a figure is always backed by
a machine-readable twin.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .experiments import CurveSeries, DistributionSummary


def save_distribution_figure(summary: DistributionSummary, path: str | Path, title: str | None = None) -> None:
    """Overlaid per-level score histograms with group means marked."""
    fig, ax = plt.subplots(figsize=(7, 4))
    edges = np.asarray(summary.bin_edges)
    centers = 0.5 * (edges[:-1] + edges[1:])
    width = edges[1] - edges[0]
    cmap = plt.get_cmap("viridis")
    n_groups = max(len(summary.groups), 1)
    for pos, group in enumerate(summary.groups):
        color = cmap(pos / max(n_groups - 1, 1))
        ax.bar(
            centers,
            group.histogram,
            width=width * 0.9,
            alpha=0.45,
            color=color,
            label=f"level {group.level:g} (mean {group.mean:.3f})",
        )
        ax.axvline(group.mean, color=color, linestyle="--", linewidth=1)
    ax.set_xlabel("score")
    ax.set_ylabel("items")
    ax.set_title(title or "score distribution by corruption level")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_curve_figure(series_list: Sequence[CurveSeries], path: str | Path, title: str | None = None) -> None:
    """Accuracy curves with one standard deviation shaded per series."""
    fig, ax = plt.subplots(figsize=(7, 4))
    for series in series_list:
        counts = np.array([p.n_selected for p in series.points])
        means = np.array([p.mean_accuracy for p in series.points])
        stds = np.array([p.std_accuracy for p in series.points])
        label = f"{series.method}/{series.order}"
        (line,) = ax.plot(counts, means, marker="o", markersize=3, label=label)
        ax.fill_between(counts, means - stds, means + stds, alpha=0.15, color=line.get_color())
    if series_list and series_list[0].mode == "remove":
        ax.invert_xaxis()
    ax.set_xlabel("assessed items in training set")
    ax.set_ylabel("validation accuracy")
    ax.set_title(title or f"{series_list[0].mode} curve" if series_list else "curve")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
