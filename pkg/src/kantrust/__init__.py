"""Spline-network surrogate of detector confidence, with interpretability.

The library fits a small Kolmogorov-Arnold style network (per-edge
B-splines into a linear readout) to predict a detector's confidence from
seven per-detection features, then explains the fit: dependence curves,
activation and saliency statistics, edge importance, fidelity bins,
monotonicity labels, and per-detection trust verdicts.
"""

from .interchange import (
    CSV_HEADER,
    FEATURE_NAMES,
    DetectionRecord,
    Normalizer,
    ValidationError,
    detect_format,
    extract_features,
    features_matrix,
    fit_normalizer,
    parse_detections,
    serialize_detections,
)
from .kan import (
    KanModel,
    ModelFormatError,
    TrainConfig,
    TrainHistory,
    TrainingDiverged,
    forward,
    forward_batch,
    init_model,
    load_model,
    load_model_file,
    predict,
    predict_batch,
    save_model,
    save_model_file,
    train,
)
from .interpret import (
    FeatureStats,
    FidelityBin,
    FidelityReport,
    InfluenceTable,
    MonotonicityResult,
    NodeStats,
    PdpCurve,
    classify_monotonicity,
    edge_importance,
    feature_stats,
    fidelity_bins,
    influence_scores,
    influence_table,
    monotonicity,
    node_stats,
    partial_dependence,
    regression_metrics,
    saliency,
    spline_activation_stats,
)
from .report import TrustVerdict, default_tau, score_detections
from .spline import (
    KnotVector,
    SplineEdge,
    basis,
    basis_derivative,
    basis_derivative_matrix,
    basis_matrix,
    eval_edge,
    eval_edge_derivative,
    make_knots,
)
from .synthetic import CLASS_NAMES, generate_detections

__version__ = "0.1.0"

__all__ = [
    "CSV_HEADER",
    "CLASS_NAMES",
    "DetectionRecord",
    "FEATURE_NAMES",
    "FeatureStats",
    "FidelityBin",
    "FidelityReport",
    "InfluenceTable",
    "KanModel",
    "KnotVector",
    "ModelFormatError",
    "MonotonicityResult",
    "NodeStats",
    "Normalizer",
    "PdpCurve",
    "SplineEdge",
    "TrainConfig",
    "TrainHistory",
    "TrainingDiverged",
    "TrustVerdict",
    "ValidationError",
    "basis",
    "basis_derivative",
    "basis_derivative_matrix",
    "basis_matrix",
    "classify_monotonicity",
    "default_tau",
    "detect_format",
    "edge_importance",
    "eval_edge",
    "eval_edge_derivative",
    "extract_features",
    "feature_stats",
    "features_matrix",
    "fidelity_bins",
    "fit_normalizer",
    "forward",
    "forward_batch",
    "generate_detections",
    "influence_scores",
    "influence_table",
    "init_model",
    "load_model",
    "load_model_file",
    "make_knots",
    "monotonicity",
    "node_stats",
    "parse_detections",
    "partial_dependence",
    "predict",
    "predict_batch",
    "regression_metrics",
    "saliency",
    "save_model",
    "save_model_file",
    "score_detections",
    "serialize_detections",
    "spline_activation_stats",
    "train",
]
