"""Report serialization and per-detection trust verdicts.

All tables are written as CSV with exact float round-tripping (repr),
plus a single JSON bundle carrying the same values. File writes are
atomic: content lands in a temp file that is renamed into place.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .interchange import DetectionRecord, features_matrix
from .kan import KanModel, TrainHistory, predict_batch
from .interpret import (
    FeatureStats,
    FidelityReport,
    InfluenceTable,
    MonotonicityResult,
    NodeStats,
    PdpCurve,
)
from .spline import basis_matrix

DEFAULT_TAU_TRUST = 0.05
DEFAULT_R_MIN = 0.5
TAU_RMSE_MULTIPLIER = 3.0

REASON_RESIDUAL = "residual_above_tau"
REASON_LOW_FIDELITY_BIN = "low_fidelity_conf_bin"

CURVE_HEADER = ("t_raw", "t_normalized", "value")


def atomic_write_bytes(path, data: bytes) -> None:
    """Write bytes so readers never observe a partial file."""
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def format_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_cell(v) for v in row])
    atomic_write_text(path, buf.getvalue())


def _json_default(o):
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o)!r}")


def write_json(path, payload) -> None:
    text = json.dumps(payload, indent=1, sort_keys=True, default=_json_default)
    atomic_write_text(path, text + "\n")


# ---------------------------------------------------------------------------
# table construction


def feature_stats_table(fs: FeatureStats):
    header = ("feature", "spline_activation", "saliency", "pdp_delta")
    rows = [(name, fs.spline_activation[k], fs.saliency[k], fs.pdp_delta[k])
            for k, name in enumerate(fs.feature_names)]
    return header, rows


def node_stats_table(ns: NodeStats):
    header = ("node", "activation", "importance", "top_feature",
              "correlation", "correlation_defined")
    rows = [(j, ns.activation[j], ns.importance[j], ns.top_feature[j],
             ns.correlation[j], bool(ns.correlation_defined[j]))
            for j in range(len(ns.activation))]
    return header, rows


def edge_importance_table(em: np.ndarray, feature_names: Sequence[str]):
    header = ("node",) + tuple(feature_names)
    rows = [(j,) + tuple(em[j]) for j in range(em.shape[0])]
    rows.append(("total",) + tuple(em.sum(axis=0)))
    return header, rows


def influence_table_rows(it: InfluenceTable):
    header = ("feature", "spline_activation", "saliency", "pdp_delta",
              "edge_importance", "influence")
    rows = [(name, it.spline_activation[k], it.saliency[k], it.pdp_delta[k],
             it.edge_importance[k], it.influence[k])
            for k, name in enumerate(it.feature_names)]
    return header, rows


def fidelity_table(fr: FidelityReport):
    header = ("scope", "feature", "bin_index", "bin_lo", "bin_hi",
              "n", "r2", "mae", "rmse")
    rows = [("overall", "", None, None, None, fr.n, fr.r2, fr.mae, fr.rmse)]
    for b in fr.bins:
        rows.append(("feature", b.feature, b.bin_index, b.bin_lo, b.bin_hi,
                     b.n, b.r2, b.mae, b.rmse))
    return header, rows


def monotonicity_table(feature_names: Sequence[str],
                       results: Sequence[MonotonicityResult]):
    header = ("feature", "score", "direction", "strength")
    rows = [(name, r.score, r.direction, r.strength)
            for name, r in zip(feature_names, results)]
    return header, rows


def history_table(history: TrainHistory):
    header = ("epoch", "train_mse", "val_mse")
    rows = [(e + 1, history.train_mse[e], history.val_mse[e])
            for e in range(len(history.train_mse))]
    return header, rows


def pdp_curve_table(m: KanModel, curve: PdpCurve):
    k = curve.feature_index
    t_norm = m.normalizer.transform_column(k, curve.grid)
    rows = [(curve.grid[g], t_norm[g], curve.values[g])
            for g in range(len(curve.grid))]
    return CURVE_HEADER, rows


def spline_curve_points(m: KanModel, unit: int, k: int,
                        grid_size: int = 64) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Sample edge (unit, k)'s spline over normalized [0, 1]."""
    t = np.linspace(0.0, 1.0, grid_size)
    phi = basis_matrix(m.knots, t)
    values = phi @ m.coeffs[unit, k]
    t_raw = m.normalizer.inverse(k, t)
    return t_raw, t, values


def spline_curve_table(m: KanModel, unit: int, k: int, grid_size: int = 64):
    t_raw, t, values = spline_curve_points(m, unit, k, grid_size)
    rows = [(t_raw[g], t[g], values[g]) for g in range(len(t))]
    return CURVE_HEADER, rows


# ---------------------------------------------------------------------------
# trust verdicts


@dataclass
class TrustVerdict:
    """Per-detection reliability call from the surrogate's point of view."""

    image_id: str
    index: int
    pred: float
    conf: float
    residual: float
    low_trust: bool
    reason: str


def default_tau(m: KanModel) -> float:
    """Residual threshold: a multiple of held-out RMSE when the model has one."""
    val_rmse = m.metadata.get("val_rmse")
    if isinstance(val_rmse, (int, float)) and val_rmse > 0:
        return TAU_RMSE_MULTIPLIER * float(val_rmse)
    return DEFAULT_TAU_TRUST


def _low_fidelity_lookup(m: KanModel, r_min: float):
    """Membership test for low-fidelity confidence bins stored in the model."""
    bins = m.metadata.get("conf_bins")
    if not bins:
        return lambda conf: False
    edges = [float(b["lo"]) for b in bins] + [float(bins[-1]["hi"])]
    interior = np.asarray(edges[1:-1])
    low = [b["r2"] is None or float(b["r2"]) < r_min for b in bins]

    def membership(conf: float) -> bool:
        idx = int(np.searchsorted(interior, conf, side="left"))
        return low[idx]

    return membership


def score_detections(
    m: KanModel,
    records: Sequence[DetectionRecord],
    tau: Optional[float] = None,
    r_min: float = DEFAULT_R_MIN,
) -> list[TrustVerdict]:
    """Flag detections the surrogate cannot account for.

    A detection is low-trust when its surrogate residual exceeds ``tau``
    or its confidence falls in a training-time quantile bin whose
    fidelity R^2 was below ``r_min``.
    """
    if tau is None:
        tau = default_tau(m)
    if tau < 0:
        raise ValueError("tau must be >= 0")
    in_low_bin = _low_fidelity_lookup(m, r_min)

    feats = features_matrix(records)
    preds = predict_batch(m, feats)
    verdicts = []
    for i, rec in enumerate(records):
        residual = abs(float(preds[i]) - rec.conf)
        reasons = []
        if residual > tau:
            reasons.append(REASON_RESIDUAL)
        if in_low_bin(rec.conf):
            reasons.append(REASON_LOW_FIDELITY_BIN)
        verdicts.append(TrustVerdict(
            image_id=rec.image_id,
            index=i,
            pred=float(preds[i]),
            conf=rec.conf,
            residual=residual,
            low_trust=bool(reasons),
            reason="+".join(reasons),
        ))
    return verdicts


def verdicts_table(verdicts: Sequence[TrustVerdict]):
    header = ("image_id", "index", "pred", "conf", "residual",
              "low_trust", "reason")
    rows = [(v.image_id, v.index, v.pred, v.conf, v.residual,
             v.low_trust, v.reason) for v in verdicts]
    return header, rows
