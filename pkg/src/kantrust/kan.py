"""The confidence surrogate: a spline-edge layer plus a linear readout.

The model maps seven detection features to a scalar confidence estimate

    c_hat(x) = bias + sum_j w_j * sum_k s_jk(x~_k)

where each s_jk is a B-spline edge over the normalized feature x~_k.
The prediction is linear in every trainable parameter group, so the
mean-squared-error gradients below are exact (no autodiff involved) and
training with a fixed seed is bit-reproducible.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .interchange import FEATURE_NAMES, Normalizer
from .spline import KnotVector, SplineEdge, basis_matrix, make_knots

MODEL_MAGIC = "KANTRUST"
MODEL_FORMAT_VERSION = 1

_ADAM_BETA1 = 0.9
_ADAM_BETA2 = 0.999
_ADAM_EPS = 1e-8


class ModelFormatError(ValueError):
    """Raised when model bytes are truncated, corrupt, or incompatible."""


class TrainingDiverged(RuntimeError):
    """Raised when the loss becomes non-finite during training."""

    def __init__(self, epoch: int):
        self.epoch = epoch
        super().__init__(f"training diverged (non-finite loss) at epoch {epoch}")


@dataclass
class KanModel:
    """Trained surrogate: spline-edge coefficients, readout, normalizer.

    ``coeffs`` has shape (hidden, input_dim, n_basis); entry (j, k, :)
    parameterizes the edge from feature k to hidden unit j.
    """

    knots: KnotVector
    coeffs: np.ndarray
    out_weights: np.ndarray
    out_bias: float
    normalizer: Normalizer
    feature_names: tuple[str, ...] = FEATURE_NAMES
    seed: int = 0
    metadata: dict = field(default_factory=dict)

    @property
    def hidden(self) -> int:
        return self.coeffs.shape[0]

    @property
    def input_dim(self) -> int:
        return self.coeffs.shape[1]

    def edge(self, j: int, k: int) -> SplineEdge:
        """The spline on the (feature k -> hidden unit j) connection."""
        return SplineEdge(knots=self.knots, coeffs=self.coeffs[j, k])


@dataclass
class TrainConfig:
    epochs: int = 200
    batch_size: int = 256
    learning_rate: float = 1e-2
    val_fraction: float = 0.2
    seed: int = 0
    l2_penalty: float = 0.0

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if not 0.0 < self.val_fraction < 1.0:
            raise ValueError("val_fraction must be in (0, 1)")
        if self.l2_penalty < 0:
            raise ValueError("l2_penalty must be >= 0")


@dataclass
class TrainHistory:
    train_mse: list[float]
    val_mse: list[float]


def _check_inputs(m: KanModel, features: np.ndarray) -> np.ndarray:
    features = np.asarray(features, dtype=np.float64)
    if not np.all(np.isfinite(features)):
        raise ValueError("non-finite value in model input")
    if features.shape[-1] != m.input_dim:
        raise ValueError(
            f"expected {m.input_dim} features, got {features.shape[-1]}")
    return features


def forward_batch(m: KanModel, features: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Predictions and hidden activations for an (N, d) raw feature matrix."""
    features = _check_inputs(m, features)
    xn = m.normalizer.transform(features)
    phi = basis_matrix(m.knots, xn)                       # (N, d, B)
    hidden = np.einsum("ndb,jdb->nj", phi, m.coeffs)      # (N, hidden)
    pred = hidden @ m.out_weights + m.out_bias
    return pred, hidden


def forward(m: KanModel, fv: np.ndarray) -> tuple[float, np.ndarray]:
    """Prediction and hidden activations for a single feature vector."""
    pred, hidden = forward_batch(m, np.asarray(fv, dtype=np.float64)[None, :])
    return float(pred[0]), hidden[0]


def predict_batch(m: KanModel, features: np.ndarray) -> np.ndarray:
    return forward_batch(m, features)[0]


def predict(m: KanModel, fv: np.ndarray) -> float:
    return forward(m, fv)[0]


@dataclass
class Gradients:
    coeffs: np.ndarray
    out_weights: np.ndarray
    out_bias: float


def gradients(m: KanModel, features: np.ndarray, targets: np.ndarray) -> Gradients:
    """Exact mean-squared-error gradients over a batch.

    d c_hat / d coeffs[j,k,i] = w_j * B_i(x~_k) and
    d c_hat / d w_j = hidden_j, so the chain rule closes in two einsums.
    """
    features = _check_inputs(m, features)
    targets = np.asarray(targets, dtype=np.float64)
    if features.shape[0] == 0:
        raise ValueError("empty batch")
    xn = m.normalizer.transform(features)
    phi = basis_matrix(m.knots, xn)
    hidden = np.einsum("ndb,jdb->nj", phi, m.coeffs)
    pred = hidden @ m.out_weights + m.out_bias
    scale = 2.0 * (pred - targets) / features.shape[0]    # dMSE/dpred
    g_bias = float(scale.sum())
    g_w = scale @ hidden
    g_c = np.einsum("n,ndb->db", scale, phi)[None, :, :] * m.out_weights[:, None, None]
    return Gradients(coeffs=g_c, out_weights=g_w, out_bias=g_bias)


def _mse(m: KanModel, features: np.ndarray, targets: np.ndarray) -> float:
    pred = predict_batch(m, features)
    return float(np.mean((pred - targets) ** 2))


def init_model(
    normalizer: Normalizer,
    rng: np.random.Generator,
    hidden: int = 16,
    grid: int = 5,
    degree: int = 3,
    feature_names: tuple[str, ...] = FEATURE_NAMES,
    seed: int = 0,
    bias: float = 0.0,
) -> KanModel:
    """Fresh model with small random splines and a near-linear start."""
    d = len(feature_names)
    knots = make_knots(grid, degree)
    coeffs = rng.uniform(-0.1, 0.1, size=(hidden, d, knots.n_basis))
    out_weights = rng.uniform(-1.0, 1.0, size=hidden) / np.sqrt(hidden)
    return KanModel(
        knots=knots,
        coeffs=coeffs,
        out_weights=out_weights,
        out_bias=float(bias),
        normalizer=normalizer,
        feature_names=tuple(feature_names),
        seed=seed,
    )


def train(
    features: np.ndarray,
    targets: np.ndarray,
    cfg: TrainConfig,
    hidden: int = 16,
    grid: int = 5,
    degree: int = 3,
    feature_names: tuple[str, ...] = FEATURE_NAMES,
) -> tuple[KanModel, TrainHistory]:
    """Fit the surrogate with Adam; deterministic for a fixed config.

    The data is split once into train/validation by a seeded shuffle and
    the normalizer is fitted on the training split only. Raises
    :class:`TrainingDiverged` naming the epoch if the loss leaves the
    finite range.
    """
    features = np.asarray(features, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    n = features.shape[0]
    if n < 10:
        raise ValueError(f"need at least 10 samples to train, got {n}")
    if features.ndim != 2 or targets.shape != (n,):
        raise ValueError("features must be (N, d) and targets (N,)")
    if not np.all(np.isfinite(features)) or not np.all(np.isfinite(targets)):
        raise ValueError("non-finite value in training data")

    rng = np.random.default_rng(cfg.seed)
    order = rng.permutation(n)
    n_val = min(max(int(round(n * cfg.val_fraction)), 1), n - 1)
    val_idx, train_idx = order[:n_val], order[n_val:]
    x_tr, y_tr = features[train_idx], targets[train_idx]
    x_val, y_val = features[val_idx], targets[val_idx]

    normalizer = Normalizer(mins=x_tr.min(axis=0), maxs=x_tr.max(axis=0))
    model = init_model(
        normalizer, rng, hidden=hidden, grid=grid, degree=degree,
        feature_names=feature_names, seed=cfg.seed, bias=float(y_tr.mean()),
    )

    m_c = np.zeros_like(model.coeffs)
    v_c = np.zeros_like(model.coeffs)
    m_w = np.zeros_like(model.out_weights)
    v_w = np.zeros_like(model.out_weights)
    m_b = v_b = 0.0
    step = 0

    train_hist: list[float] = []
    val_hist: list[float] = []
    n_tr = len(train_idx)
    for epoch in range(cfg.epochs):
        perm = rng.permutation(n_tr)
        for start in range(0, n_tr, cfg.batch_size):
            batch = perm[start : start + cfg.batch_size]
            g = gradients(model, x_tr[batch], y_tr[batch])
            if cfg.l2_penalty > 0.0:
                g.coeffs += 2.0 * cfg.l2_penalty * model.coeffs
                g.out_weights += 2.0 * cfg.l2_penalty * model.out_weights
            step += 1
            corr1 = 1.0 - _ADAM_BETA1 ** step
            corr2 = 1.0 - _ADAM_BETA2 ** step
            lr_t = cfg.learning_rate * np.sqrt(corr2) / corr1

            m_c = _ADAM_BETA1 * m_c + (1 - _ADAM_BETA1) * g.coeffs
            v_c = _ADAM_BETA2 * v_c + (1 - _ADAM_BETA2) * g.coeffs**2
            model.coeffs = model.coeffs - lr_t * m_c / (np.sqrt(v_c) + _ADAM_EPS)

            m_w = _ADAM_BETA1 * m_w + (1 - _ADAM_BETA1) * g.out_weights
            v_w = _ADAM_BETA2 * v_w + (1 - _ADAM_BETA2) * g.out_weights**2
            model.out_weights = model.out_weights - lr_t * m_w / (np.sqrt(v_w) + _ADAM_EPS)

            m_b = _ADAM_BETA1 * m_b + (1 - _ADAM_BETA1) * g.out_bias
            v_b = _ADAM_BETA2 * v_b + (1 - _ADAM_BETA2) * g.out_bias**2
            model.out_bias = model.out_bias - lr_t * m_b / (np.sqrt(v_b) + _ADAM_EPS)

        tr_mse = _mse(model, x_tr, y_tr)
        va_mse = _mse(model, x_val, y_val)
        if not (np.isfinite(tr_mse) and np.isfinite(va_mse)):
            raise TrainingDiverged(epoch + 1)
        train_hist.append(tr_mse)
        val_hist.append(va_mse)

    model.metadata = {
        "train_config": asdict(cfg),
        "n_train": int(n_tr),
        "n_val": int(n_val),
        "val_rmse": float(np.sqrt(val_hist[-1])),
    }
    return model, TrainHistory(train_mse=train_hist, val_mse=val_hist)


def _payload(m: KanModel) -> dict:
    return {
        "magic": MODEL_MAGIC,
        "format_version": MODEL_FORMAT_VERSION,
        "architecture": {
            "input_dim": m.input_dim,
            "hidden": m.hidden,
            "output_dim": 1,
            "grid": m.knots.grid,
            "degree": m.knots.degree,
        },
        "feature_names": list(m.feature_names),
        "seed": m.seed,
        "normalizer": m.normalizer.to_dict(),
        "out_bias": m.out_bias,
        "out_weights": m.out_weights.tolist(),
        "coeffs": m.coeffs.tolist(),
        "metadata": m.metadata,
    }


def _checksum(payload: dict) -> str:
    body = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(body.encode("utf-8")).hexdigest()


def save_model(m: KanModel) -> bytes:
    """Serialize to a self-checking JSON container (exact round trip)."""
    payload = _payload(m)
    envelope = dict(payload)
    envelope["checksum"] = _checksum(payload)
    return (json.dumps(envelope, sort_keys=True, indent=1) + "\n").encode("utf-8")


def load_model(data: bytes) -> KanModel:
    """Parse model bytes; raises :class:`ModelFormatError` on any damage."""
    try:
        obj = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"not a readable model file: {exc}") from None
    if not isinstance(obj, dict) or obj.get("magic") != MODEL_MAGIC:
        raise ModelFormatError("bad magic: not a KANTRUST model file")
    if obj.get("format_version") != MODEL_FORMAT_VERSION:
        raise ModelFormatError(
            f"unsupported format version {obj.get('format_version')!r}")
    stored = obj.pop("checksum", None)
    if stored is None or _checksum(obj) != stored:
        raise ModelFormatError("checksum mismatch: model file is corrupt")
    arch = obj["architecture"]
    knots = make_knots(arch["grid"], arch["degree"])
    coeffs = np.asarray(obj["coeffs"], dtype=np.float64)
    expected = (arch["hidden"], arch["input_dim"], knots.n_basis)
    if coeffs.shape != expected:
        raise ModelFormatError(
            f"coefficient block {coeffs.shape} does not match architecture {expected}")
    return KanModel(
        knots=knots,
        coeffs=coeffs,
        out_weights=np.asarray(obj["out_weights"], dtype=np.float64),
        out_bias=float(obj["out_bias"]),
        normalizer=Normalizer.from_dict(obj["normalizer"]),
        feature_names=tuple(obj["feature_names"]),
        seed=int(obj["seed"]),
        metadata=obj.get("metadata", {}),
    )


def save_model_file(m: KanModel, path) -> None:
    from .report import atomic_write_bytes

    atomic_write_bytes(path, save_model(m))


def load_model_file(path) -> KanModel:
    with open(path, "rb") as fh:
        return load_model(fh.read())
