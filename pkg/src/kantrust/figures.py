"""Figure rendering for analysis bundles.

Renders the curve and table data that the CSV reports carry into PNG
files: influence bars, dependence curves, the edge-importance heatmap,
hidden-unit importance, per-edge spline shapes, and training history.
Rendering is deterministic (fixed sizes, fixed dpi, Agg backend) so
repeated runs produce byte-identical files.
"""

from __future__ import annotations

import io
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .interpret import InfluenceTable, NodeStats, PdpCurve
from .kan import KanModel, TrainHistory
from .report import atomic_write_bytes, spline_curve_points

DPI = 120
BAR_COLOR = "#4878a8"
CURVE_COLOR = "#2f4b7c"


def save_figure(fig, path) -> None:
    """Render to memory first so the file appears atomically."""
    buf = io.BytesIO()
    fig.savefig(buf, format="png", dpi=DPI)
    plt.close(fig)
    atomic_write_bytes(path, buf.getvalue())


def fig_influence(it: InfluenceTable):
    fig, ax = plt.subplots(figsize=(7, 4))
    pos = np.arange(len(it.feature_names))
    ax.bar(pos, it.influence, color=BAR_COLOR)
    ax.set_xticks(pos)
    ax.set_xticklabels(it.feature_names)
    ax.set_ylabel("influence")
    ax.set_title("Feature influence")
    ax.set_ylim(0.0, 1.0)
    fig.tight_layout()
    return fig


def fig_pdp(m: KanModel, curves: list[PdpCurve]):
    fig, axes = plt.subplots(2, 4, figsize=(13, 6))
    flat = axes.ravel()
    for k, curve in enumerate(curves):
        ax = flat[k]
        ax.plot(curve.grid, curve.values, color=CURVE_COLOR)
        ax.set_title(m.feature_names[curve.feature_index])
        ax.set_xlabel("feature value")
        ax.set_ylabel("mean prediction")
    for ax in flat[len(curves):]:
        ax.set_axis_off()
    fig.suptitle("Partial dependence")
    fig.tight_layout()
    return fig


def fig_edge_heatmap(em: np.ndarray, feature_names) -> "plt.Figure":
    fig, ax = plt.subplots(figsize=(6, 8))
    image = ax.imshow(em, aspect="auto", cmap="viridis")
    ax.set_xticks(np.arange(len(feature_names)))
    ax.set_xticklabels(feature_names)
    ax.set_yticks(np.arange(em.shape[0]))
    ax.set_ylabel("hidden unit")
    ax.set_title("Edge importance (coefficient norm)")
    fig.colorbar(image, ax=ax)
    fig.tight_layout()
    return fig


def fig_node_importance(ns: NodeStats):
    fig, ax = plt.subplots(figsize=(8, 4))
    pos = np.arange(len(ns.importance))
    ax.bar(pos, ns.importance, color=BAR_COLOR)
    ax.set_xticks(pos)
    labels = [f"n{j}\n{ns.top_feature[j]}" for j in pos]
    ax.set_xticklabels(labels, fontsize=7)
    ax.set_ylabel("importance")
    ax.set_title("Hidden unit importance and best-aligned feature")
    fig.tight_layout()
    return fig


def fig_training_history(history: TrainHistory):
    fig, ax = plt.subplots(figsize=(7, 4))
    epochs = np.arange(1, len(history.train_mse) + 1)
    ax.plot(epochs, history.train_mse, label="train", color=CURVE_COLOR)
    ax.plot(epochs, history.val_mse, label="validation", color="#d45087")
    ax.set_xlabel("epoch")
    ax.set_ylabel("MSE")
    ax.set_yscale("log")
    ax.set_title("Training history")
    ax.legend()
    fig.tight_layout()
    return fig


def fig_splines_feature(m: KanModel, k: int, grid_size: int = 64):
    """All hidden-unit spline shapes for one input feature."""
    rows = (m.hidden + 3) // 4
    fig, axes = plt.subplots(rows, 4, figsize=(12, 2.2 * rows))
    flat = np.atleast_1d(axes).ravel()
    for j in range(m.hidden):
        _, t, values = spline_curve_points(m, j, k, grid_size)
        ax = flat[j]
        ax.plot(t, values, color=CURVE_COLOR)
        ax.set_title(f"unit {j}", fontsize=8)
        ax.tick_params(labelsize=6)
    for ax in flat[m.hidden:]:
        ax.set_axis_off()
    fig.suptitle(f"Spline shapes into each unit: {m.feature_names[k]}")
    fig.tight_layout()
    return fig


def render_report_figures(
    m: KanModel,
    curves: list[PdpCurve],
    it: InfluenceTable,
    em: np.ndarray,
    ns: NodeStats,
    outdir,
    history: TrainHistory | None = None,
    spline_grid: int = 64,
) -> list[str]:
    """Render the full figure set into ``outdir``; returns written paths."""
    os.makedirs(outdir, exist_ok=True)
    jobs = [
        ("influence.png", fig_influence(it)),
        ("pdp.png", fig_pdp(m, curves)),
        ("edge_importance.png", fig_edge_heatmap(em, m.feature_names)),
        ("node_importance.png", fig_node_importance(ns)),
    ]
    if history is not None:
        jobs.append(("training_history.png", fig_training_history(history)))
    for k, name in enumerate(m.feature_names):
        jobs.append((f"splines_{name}.png", fig_splines_feature(m, k, spline_grid)))
    paths = []
    for filename, fig in jobs:
        path = os.path.join(outdir, filename)
        save_figure(fig, path)
        paths.append(path)
    return paths
