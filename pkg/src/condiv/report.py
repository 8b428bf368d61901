"""Figure rendering for the command-line pipelines.

Each helper draws one figure and writes it to the given path, so a run
directory stays self-contained: the plots sit next to the CSV/JSON they
illustrate. Files appear atomically (rendered to a sibling temp name, then
renamed). The Agg backend is forced before pyplot loads; these run headless.
"""

from __future__ import annotations

import os
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _save(fig, path):
    path = Path(path)
    tmp = path.with_name(path.stem + ".part" + path.suffix)
    fig.tight_layout()
    fig.savefig(tmp, dpi=150)
    plt.close(fig)
    os.replace(tmp, path)
    return path

__all__ = [
    "save_heatmap",
    "save_occupancy",
    "save_affinity",
    "save_series",
    "save_scaling",
]


def save_heatmap(values, path, labels=None, title=None, vmin=0.0, vmax=1.0):
    """Annotated square heatmap; used for power matrices."""
    values = np.asarray(values, dtype=float)
    fig, ax = plt.subplots(figsize=(5, 4.2))
    im = ax.imshow(values, cmap="viridis", vmin=vmin, vmax=vmax)
    if labels is not None:
        ax.set_xticks(range(len(labels)), labels)
        ax.set_yticks(range(len(labels)), labels)
    for i in range(values.shape[0]):
        for j in range(values.shape[1]):
            ax.text(
                j,
                i,
                f"{values[i, j]:.2f}",
                ha="center",
                va="center",
                color="white" if values[i, j] < 0.6 * (vmax or 1.0) else "black",
                fontsize=8,
            )
    if title:
        ax.set_title(title)
    fig.colorbar(im, ax=ax)
    return _save(fig, path)


def save_occupancy(log_probs, path, title=None):
    """State-visitation map from log-occupancies (first axis drawn as x)."""
    grid = np.asarray(log_probs, dtype=float)
    fig, ax = plt.subplots(figsize=(4.6, 4))
    im = ax.imshow(grid.T, origin="lower", cmap="magma")
    ax.set_xlabel("state dim 1")
    ax.set_ylabel("state dim 2")
    if title:
        ax.set_title(title)
    fig.colorbar(im, ax=ax, label="log occupancy")
    return _save(fig, path)


def save_affinity(A, labels, path, title=None):
    """Affinity matrix with rows grouped by cluster label."""
    A = np.asarray(A, dtype=float)
    order = np.argsort(np.asarray(labels))
    fig, ax = plt.subplots(figsize=(4.6, 4))
    im = ax.imshow(A[np.ix_(order, order)], cmap="viridis")
    ax.set_xlabel("series (grouped by cluster)")
    ax.set_ylabel("series (grouped by cluster)")
    if title:
        ax.set_title(title)
    fig.colorbar(im, ax=ax)
    return _save(fig, path)


def save_series(columns, path, names=None, title=None):
    """Stacked line plots of the given 1-D series."""
    fig, axes = plt.subplots(
        len(columns), 1, figsize=(6, 1.6 * len(columns)), sharex=True, squeeze=False
    )
    for k, series in enumerate(columns):
        ax = axes[k, 0]
        ax.plot(np.asarray(series, dtype=float), linewidth=0.8)
        if names is not None:
            ax.set_ylabel(names[k])
    if title:
        axes[0, 0].set_title(title)
    axes[-1, 0].set_xlabel("t")
    return _save(fig, path)


def save_scaling(sizes, seconds_by_name, path, title=None):
    """Log-log wall-time curves, one per estimator, with slope labels."""
    fig, ax = plt.subplots(figsize=(5, 4))
    for name, secs in seconds_by_name.items():
        secs = np.asarray(secs, dtype=float)
        slope = np.polyfit(np.log(np.asarray(sizes, float)), np.log(secs), 1)[0]
        ax.loglog(sizes, secs, marker="o", label=f"{name} (slope {slope:.2f})")
    ax.set_xlabel("sample size N")
    ax.set_ylabel("wall time [s]")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    if title:
        ax.set_title(title)
    return _save(fig, path)
