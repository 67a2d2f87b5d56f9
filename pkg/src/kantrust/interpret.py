"""Interpretability analyses over a trained surrogate.

Everything here is a pure function of (model, evaluation data): partial
dependence sweeps, mean-absolute spline activation, gradient saliency,
coefficient-norm edge importance, hidden-unit roles, the unified
influence score, fidelity metrics in per-feature quantile bins, and
monotonicity classification of the dependence curves.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from .kan import KanModel, predict_batch
from .spline import basis_derivative_matrix, basis_matrix

DIRECTION_POSITIVE = "Positive"
DIRECTION_NEGATIVE = "Negative"
DIRECTION_FLAT = "Flat/Weak"

STRENGTH_WEAK = "Weak"
STRENGTH_MODERATE = "Moderate"
STRENGTH_STRONG = "Strong"

# |score| boundaries for Flat/Weak direction, then Weak/Moderate/Strong
FLAT_THRESHOLD = 0.05
MODERATE_THRESHOLD = 0.30
STRONG_THRESHOLD = 0.70


@dataclass
class PdpCurve:
    """Mean prediction as one feature sweeps a grid, others held at data values."""

    feature_index: int
    grid: np.ndarray       # raw feature units, strictly increasing
    values: np.ndarray     # mean prediction per grid point
    delta: float           # values[-1] - values[0]


@dataclass
class FeatureStats:
    """Per-feature activation, saliency, and dependence-delta table."""

    feature_names: tuple[str, ...]
    spline_activation: np.ndarray
    saliency: np.ndarray
    pdp_delta: np.ndarray


@dataclass
class NodeStats:
    """Per-hidden-unit activity, output leverage, and best-aligned feature."""

    activation: np.ndarray           # mean |h_j|
    importance: np.ndarray           # |w_j| * std(h_j)
    top_feature: list[str]
    correlation: np.ndarray          # signed Pearson r with the top feature
    correlation_defined: np.ndarray  # False where variance vanished


@dataclass
class InfluenceTable:
    """Raw metric columns plus the unified [0, 1] influence score."""

    feature_names: tuple[str, ...]
    spline_activation: np.ndarray
    saliency: np.ndarray
    pdp_delta: np.ndarray
    edge_importance: np.ndarray
    influence: np.ndarray


@dataclass
class FidelityBin:
    feature: str
    bin_index: int
    bin_lo: float
    bin_hi: float
    n: int
    r2: Optional[float]
    mae: float
    rmse: float


@dataclass
class FidelityReport:
    n: int
    r2: Optional[float]
    mae: float
    rmse: float
    bins: list[FidelityBin]


@dataclass
class MonotonicityResult:
    score: float
    direction: str
    strength: str


def partial_dependence(m: KanModel, data: np.ndarray, k: int, grid_size: int = 64) -> PdpCurve:
    """Sweep feature ``k`` over its observed range, averaging predictions.

    A degenerate (constant) feature collapses to a single-point curve
    with delta 0.
    """
    data = np.asarray(data, dtype=np.float64)
    if data.shape[0] == 0:
        raise ValueError("need non-empty data for partial dependence")
    if grid_size < 2:
        raise ValueError("grid_size must be >= 2")
    col = data[:, k]
    lo, hi = float(col.min()), float(col.max())
    if lo == hi:
        value = float(predict_batch(m, data).mean())
        return PdpCurve(feature_index=k, grid=np.array([lo]),
                        values=np.array([value]), delta=0.0)
    grid = np.linspace(lo, hi, grid_size)
    values = np.empty(grid_size)
    swept = data.copy()
    for g, point in enumerate(grid):
        swept[:, k] = point
        values[g] = predict_batch(m, swept).mean()
    return PdpCurve(feature_index=k, grid=grid, values=values,
                    delta=float(values[-1] - values[0]))


def _edge_outputs(m: KanModel, data: np.ndarray) -> np.ndarray:
    """Spline outputs s_jk(x~_k) for every sample: shape (N, hidden, d)."""
    xn = m.normalizer.transform(np.asarray(data, dtype=np.float64))
    phi = basis_matrix(m.knots, xn)
    return np.einsum("nkb,jkb->njk", phi, m.coeffs)


def spline_activation_stats(m: KanModel, data: np.ndarray) -> np.ndarray:
    """Mean absolute spline output per input feature (over samples and units)."""
    return np.abs(_edge_outputs(m, data)).mean(axis=(0, 1))


def saliency(m: KanModel, data: np.ndarray) -> np.ndarray:
    """Mean absolute prediction gradient w.r.t. each raw feature.

    Exact spline derivatives, chained through the normalizer's affine
    map; degenerate features get 0 (they cannot move the prediction).
    """
    data = np.asarray(data, dtype=np.float64)
    xn = m.normalizer.transform(data)
    dphi = basis_derivative_matrix(m.knots, xn)
    grad_norm = np.einsum("nkb,jkb,j->nk", dphi, m.coeffs, m.out_weights)
    chain = np.where(m.normalizer.degenerate, 0.0,
                     1.0 / np.where(m.normalizer.degenerate, 1.0, m.normalizer.spans))
    return np.abs(grad_norm * chain).mean(axis=0)


def edge_importance(m: KanModel) -> np.ndarray:
    """L2 norm of each edge's coefficient vector: shape (hidden, d)."""
    return np.linalg.norm(m.coeffs, axis=2)


def feature_edge_totals(em: np.ndarray) -> np.ndarray:
    """Per-feature edge importance: column sums over hidden units."""
    return np.asarray(em).sum(axis=0)


def node_stats(m: KanModel, data: np.ndarray) -> NodeStats:
    """Activity, output leverage, and feature alignment of each hidden unit."""
    from .kan import forward_batch

    data = np.asarray(data, dtype=np.float64)
    _, hidden = forward_batch(m, data)
    activation = np.abs(hidden).mean(axis=0)
    importance = np.abs(m.out_weights) * hidden.std(axis=0)

    n, d = data.shape
    h_std = hidden.std(axis=0)
    x_std = data.std(axis=0)
    corr = np.zeros((m.hidden, d))
    defined = np.zeros(m.hidden, dtype=bool)
    if n >= 3:
        h_c = hidden - hidden.mean(axis=0)
        x_c = data - data.mean(axis=0)
        for j in range(m.hidden):
            if h_std[j] == 0.0:
                continue
            defined[j] = True
            for k in range(d):
                if x_std[k] == 0.0:
                    continue
                corr[j, k] = float(
                    (h_c[:, j] @ x_c[:, k]) / (n * h_std[j] * x_std[k]))
    top_idx = np.argmax(np.abs(corr), axis=1)
    return NodeStats(
        activation=activation,
        importance=importance,
        top_feature=[m.feature_names[k] for k in top_idx],
        correlation=corr[np.arange(m.hidden), top_idx],
        correlation_defined=defined,
    )


def _minmax_column(col: np.ndarray) -> np.ndarray:
    lo, hi = col.min(), col.max()
    if hi == lo:
        return np.full_like(col, 0.5)
    return (col - lo) / (hi - lo)


def influence_scores(
    spline_activation: Sequence[float],
    saliency_values: Sequence[float],
    pdp_delta: Sequence[float],
    edge_importance_totals: Sequence[float],
) -> np.ndarray:
    """Unified influence: mean of the four min-max-normalized metric columns.

    The dependence delta enters signed. A degenerate column (all equal)
    contributes 0.5 to every feature. Invariant to positive affine
    rescaling of any column.
    """
    cols = [np.asarray(c, dtype=np.float64) for c in
            (spline_activation, saliency_values, pdp_delta, edge_importance_totals)]
    return np.mean([_minmax_column(c) for c in cols], axis=0)


def influence_table(fs: FeatureStats, em: np.ndarray) -> InfluenceTable:
    """Assemble the unified influence table from feature stats + edge matrix."""
    totals = feature_edge_totals(em)
    influence = influence_scores(fs.spline_activation, fs.saliency,
                                 fs.pdp_delta, totals)
    return InfluenceTable(
        feature_names=fs.feature_names,
        spline_activation=fs.spline_activation,
        saliency=fs.saliency,
        pdp_delta=fs.pdp_delta,
        edge_importance=totals,
        influence=influence,
    )


def feature_stats(m: KanModel, data: np.ndarray,
                  pdp_grid: int = 64) -> tuple[FeatureStats, list[PdpCurve]]:
    """Per-feature statistics plus the dependence curves they came from."""
    curves = [partial_dependence(m, data, k, pdp_grid)
              for k in range(m.input_dim)]
    fs = FeatureStats(
        feature_names=m.feature_names,
        spline_activation=spline_activation_stats(m, data),
        saliency=saliency(m, data),
        pdp_delta=np.array([c.delta for c in curves]),
    )
    return fs, curves


def regression_metrics(targets: np.ndarray,
                       preds: np.ndarray) -> tuple[Optional[float], float, float]:
    """(R^2, MAE, RMSE); R^2 is None when the target has no variance."""
    targets = np.asarray(targets, dtype=np.float64)
    preds = np.asarray(preds, dtype=np.float64)
    err = preds - targets
    mae = float(np.abs(err).mean())
    rmse = float(np.sqrt(np.mean(err**2)))
    ss_tot = float(np.sum((targets - targets.mean()) ** 2))
    if len(targets) < 2 or ss_tot == 0.0:
        return None, mae, rmse
    r2 = 1.0 - float(np.sum(err**2)) / ss_tot
    return r2, mae, rmse


def quantile_bin_edges(values: np.ndarray, n_bins: int) -> tuple[np.ndarray, list[int]]:
    """Quantile bin edges with duplicates merged.

    Returns (unique_edges, bin_indices) where bin_indices[i] is the
    original quantile slot of the i-th surviving bin. Merging keeps the
    last slot touching each duplicated edge, so low-cardinality features
    lose their empty leading bins but keep recognizable indexing.
    """
    qs = np.linspace(0.0, 1.0, n_bins + 1)
    edges = np.quantile(np.asarray(values, dtype=np.float64), qs)
    unique = [float(edges[0])]
    for e in edges[1:]:
        if e != unique[-1]:
            unique.append(float(e))
    if len(unique) < 2:
        return np.array(unique), []
    indices = []
    for j in range(len(unique) - 1):
        indices.append(max(i for i, e in enumerate(edges) if e == unique[j]))
    return np.array(unique), indices


def fidelity_bins(m: KanModel, data: np.ndarray, targets: np.ndarray,
                  n_bins: int = 5) -> FidelityReport:
    """Fidelity overall and within per-feature quantile bins.

    Bin membership is value-based: a sample lands in the lowest bin
    whose closed range contains its feature value, so per-feature bin
    counts always sum to the overall N.
    """
    data = np.asarray(data, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if data.shape[0] != targets.shape[0]:
        raise ValueError("data and targets must have equal length")
    if data.shape[0] < n_bins:
        raise ValueError(f"need at least {n_bins} samples")
    preds = predict_batch(m, data)
    r2, mae, rmse = regression_metrics(targets, preds)

    bins: list[FidelityBin] = []
    for k, name in enumerate(m.feature_names):
        col = data[:, k]
        edges, slots = quantile_bin_edges(col, n_bins)
        if len(slots) == 0:
            # constant feature: a single bin holding everything
            br2, bmae, brmse = regression_metrics(targets, preds)
            bins.append(FidelityBin(name, 0, float(col[0]), float(col[0]),
                                    len(col), br2, bmae, brmse))
            continue
        member = np.searchsorted(edges[1:-1], col, side="left")
        for j, slot in enumerate(slots):
            mask = member == j
            count = int(mask.sum())
            if count == 0:
                bins.append(FidelityBin(name, slot, float(edges[j]),
                                        float(edges[j + 1]), 0, None, 0.0, 0.0))
                continue
            br2, bmae, brmse = regression_metrics(targets[mask], preds[mask])
            bins.append(FidelityBin(name, slot, float(edges[j]),
                                    float(edges[j + 1]), count, br2, bmae, brmse))
    return FidelityReport(n=len(targets), r2=r2, mae=mae, rmse=rmse, bins=bins)


def classify_monotonicity(score: float) -> MonotonicityResult:
    """Deterministic direction/strength labels from a monotonicity score."""
    mag = abs(score)
    if mag < FLAT_THRESHOLD:
        return MonotonicityResult(score, DIRECTION_FLAT, STRENGTH_WEAK)
    direction = DIRECTION_POSITIVE if score > 0 else DIRECTION_NEGATIVE
    if mag < MODERATE_THRESHOLD:
        strength = STRENGTH_WEAK
    elif mag < STRONG_THRESHOLD:
        strength = STRENGTH_MODERATE
    else:
        strength = STRENGTH_STRONG
    return MonotonicityResult(score, direction, strength)


def monotonicity(p: PdpCurve) -> MonotonicityResult:
    """Spearman rank correlation of a dependence curve, with labels."""
    if len(p.grid) < 3 or np.all(p.values == p.values[0]):
        return classify_monotonicity(0.0)
    rho = stats.spearmanr(p.grid, p.values).statistic
    if not np.isfinite(rho):
        rho = 0.0
    return classify_monotonicity(float(rho))
