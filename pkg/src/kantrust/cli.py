"""Command-line interface: ingest, train, analyze, score, pdp, splines, report.

Exit codes are a stable contract: 0 success, 1 usage error, 2 validation
error (bad data or model files), 3 numerical failure (divergence).
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys

import numpy as np

from . import figures, interpret, kan, report
from .interchange import (
    FEATURE_NAMES,
    DetectionRecord,
    ValidationError,
    detect_format,
    features_matrix,
    parse_detections,
    serialize_detections,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3

DEFAULT_PDP_GRID = 64
DEFAULT_SPLINE_GRID = 64
DEFAULT_BINS = 5


class _Parser(argparse.ArgumentParser):
    """argparse maps its own errors to exit 2; this contract wants 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _read_records(path: str, fmt: str) -> list[DetectionRecord]:
    if fmt == "auto":
        fmt = detect_format(path)
    with open(path, "r", encoding="utf-8") as fh:
        return parse_detections(fh, format=fmt)


def _targets(records: list[DetectionRecord], column: str) -> np.ndarray:
    """Training target per record: detector confidence or a named extra."""
    if column == "conf":
        return np.array([r.conf for r in records], dtype=np.float64)
    values = []
    for i, rec in enumerate(records):
        if column not in rec.extras:
            raise ValidationError(
                f"record {i} ({rec.image_id}): missing target column {column!r}")
        try:
            values.append(float(rec.extras[column]))
        except (TypeError, ValueError):
            raise ValidationError(
                f"record {i} ({rec.image_id}): target column {column!r} "
                f"is not numeric: {rec.extras[column]!r}") from None
    return np.array(values, dtype=np.float64)


def _load_model(path: str) -> kan.KanModel:
    m = kan.load_model_file(path)
    if tuple(m.feature_names) != FEATURE_NAMES:
        raise ValidationError(
            f"model feature order {m.feature_names!r} does not match "
            f"this tool's order {FEATURE_NAMES!r}")
    return m


# ---------------------------------------------------------------------------
# commands


def cmd_ingest(args) -> int:
    records = _read_records(args.input, args.format)
    feats = features_matrix(records)
    captions = sum(1 for r in records if r.caption is not None)
    print(f"records: {len(records)}")
    print(f"captions: {captions}")
    if len(records):
        mins, maxs = feats.min(axis=0), feats.max(axis=0)
        for k, name in enumerate(FEATURE_NAMES):
            print(f"{name}: min={float(mins[k])!r} max={float(maxs[k])!r}")
    if args.output:
        out_fmt = args.output_format
        if out_fmt == "auto":
            out_fmt = detect_format(args.output)
        report.atomic_write_text(args.output,
                                 serialize_detections(records, format=out_fmt))
        print(f"wrote {args.output} ({out_fmt})")
    return EXIT_OK


def _train_model(records, args):
    feats = features_matrix(records)
    targets = _targets(records, args.target_column)
    cfg = kan.TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.lr,
        val_fraction=args.val_fraction,
        seed=args.seed,
        l2_penalty=args.l2,
    )
    model, history = kan.train(
        feats, targets, cfg,
        hidden=args.hidden, grid=args.grid, degree=args.degree,
    )
    model.metadata["target_column"] = args.target_column
    # fidelity of the fresh fit in confidence bins, kept for scoring
    fr = interpret.fidelity_bins(model, feats, targets, n_bins=DEFAULT_BINS)
    model.metadata["conf_bins"] = [
        {"lo": b.bin_lo, "hi": b.bin_hi, "n": b.n, "r2": b.r2}
        for b in fr.bins if b.feature == "conf"
    ]
    return model, history


def cmd_train(args) -> int:
    records = _read_records(args.data, args.format)
    model, history = _train_model(records, args)
    kan.save_model_file(model, args.model)
    history_path = args.history or os.path.join(
        os.path.dirname(args.model) or ".", "history.csv")
    header, rows = report.history_table(history)
    report.write_csv(history_path, header, rows)
    print(f"model: {args.model}")
    print(f"history: {history_path}")
    print(f"train_mse: first={history.train_mse[0]!r} last={history.train_mse[-1]!r}")
    print(f"val_mse: first={history.val_mse[0]!r} last={history.val_mse[-1]!r}")
    return EXIT_OK


def _analysis_bundle(m, records, pdp_grid, bins, target_column=None):
    feats = features_matrix(records)
    column = target_column or m.metadata.get("target_column", "conf")
    targets = _targets(records, column)
    fs, curves = interpret.feature_stats(m, feats, pdp_grid)
    em = interpret.edge_importance(m)
    ns = interpret.node_stats(m, feats)
    it = interpret.influence_table(fs, em)
    fr = interpret.fidelity_bins(m, feats, targets, n_bins=bins)
    mono = [interpret.monotonicity(c) for c in curves]
    return feats, fs, curves, em, ns, it, fr, mono


def _write_analysis(m, records, outdir, pdp_grid, spline_grid, bins,
                    render_figures, history=None):
    os.makedirs(outdir, exist_ok=True)
    feats, fs, curves, em, ns, it, fr, mono = _analysis_bundle(
        m, records, pdp_grid, bins)

    tables = {
        "feature_stats.csv": report.feature_stats_table(fs),
        "node_stats.csv": report.node_stats_table(ns),
        "edge_importance.csv": report.edge_importance_table(em, m.feature_names),
        "influence.csv": report.influence_table_rows(it),
        "fidelity_bins.csv": report.fidelity_table(fr),
        "monotonicity.csv": report.monotonicity_table(m.feature_names, mono),
    }
    for filename, (header, rows) in tables.items():
        report.write_csv(os.path.join(outdir, filename), header, rows)

    pdp_json = {}
    for curve in curves:
        name = m.feature_names[curve.feature_index]
        header, rows = report.pdp_curve_table(m, curve)
        report.write_csv(os.path.join(outdir, f"pdp_{name}.csv"), header, rows)
        cols = list(zip(*rows))
        pdp_json[name] = {
            "t_raw": list(cols[0]), "t_normalized": list(cols[1]),
            "value": list(cols[2]), "delta": curve.delta,
        }

    splines_json = {}
    for j in range(m.hidden):
        unit = {}
        for k, name in enumerate(m.feature_names):
            header, rows = report.spline_curve_table(m, j, k, spline_grid)
            report.write_csv(
                os.path.join(outdir, f"splines_unit{j}_{name}.csv"),
                header, rows)
            cols = list(zip(*rows))
            unit[name] = {"t_raw": list(cols[0]),
                          "t_normalized": list(cols[1]),
                          "value": list(cols[2])}
        splines_json[f"unit{j}"] = unit

    bundle = {
        "n_records": len(records),
        "feature_names": list(m.feature_names),
        "feature_stats": [
            {"feature": name,
             "spline_activation": float(fs.spline_activation[k]),
             "saliency": float(fs.saliency[k]),
             "pdp_delta": float(fs.pdp_delta[k])}
            for k, name in enumerate(fs.feature_names)],
        "node_stats": [
            {"node": j,
             "activation": float(ns.activation[j]),
             "importance": float(ns.importance[j]),
             "top_feature": ns.top_feature[j],
             "correlation": float(ns.correlation[j]),
             "correlation_defined": bool(ns.correlation_defined[j])}
            for j in range(len(ns.activation))],
        "edge_importance": {
            "matrix": em.tolist(),
            "totals": interpret.feature_edge_totals(em).tolist(),
        },
        "influence": [
            {"feature": name,
             "spline_activation": float(it.spline_activation[k]),
             "saliency": float(it.saliency[k]),
             "pdp_delta": float(it.pdp_delta[k]),
             "edge_importance": float(it.edge_importance[k]),
             "influence": float(it.influence[k])}
            for k, name in enumerate(it.feature_names)],
        "fidelity": {
            "overall": {"n": fr.n, "r2": fr.r2, "mae": fr.mae, "rmse": fr.rmse},
            "bins": [
                {"feature": b.feature, "bin_index": b.bin_index,
                 "bin_lo": b.bin_lo, "bin_hi": b.bin_hi, "n": b.n,
                 "r2": b.r2, "mae": b.mae, "rmse": b.rmse}
                for b in fr.bins],
        },
        "monotonicity": [
            {"feature": name, "score": r.score,
             "direction": r.direction, "strength": r.strength}
            for name, r in zip(m.feature_names, mono)],
        "pdp": pdp_json,
        "splines": splines_json,
    }
    report.write_json(os.path.join(outdir, "report.json"), bundle)

    if render_figures:
        figures.render_report_figures(
            m, curves, it, em, ns, os.path.join(outdir, "figures"),
            history=history, spline_grid=spline_grid)
    return fr


def cmd_analyze(args) -> int:
    m = _load_model(args.model)
    records = _read_records(args.data, args.format)
    fr = _write_analysis(m, records, args.outdir, args.pdp_grid,
                         args.spline_grid, args.bins,
                         render_figures=not args.no_figures)
    print(f"report bundle: {args.outdir}")
    print(f"n: {fr.n} r2: {fr.r2!r} mae: {fr.mae!r} rmse: {fr.rmse!r}")
    return EXIT_OK


def cmd_score(args) -> int:
    m = _load_model(args.model)
    records = _read_records(args.data, args.format)
    target_column = m.metadata.get("target_column", "conf")
    if target_column != "conf":
        print(f"warning: model was trained against {target_column!r}, not "
              "detector confidence; residuals compare unlike quantities",
              file=sys.stderr)
    verdicts = report.score_detections(m, records, tau=args.tau,
                                       r_min=args.r_min)
    header, rows = report.verdicts_table(verdicts)
    if args.output:
        report.write_csv(args.output, header, rows)
        flagged = sum(1 for v in verdicts if v.low_trust)
        print(f"verdicts: {args.output}")
        print(f"low_trust: {flagged}/{len(verdicts)}")
    else:
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([report.format_cell(v) for v in row])
    return EXIT_OK


def _selected_features(raw: str) -> list[int]:
    if raw == "all":
        return list(range(len(FEATURE_NAMES)))
    return [FEATURE_NAMES.index(raw)]


def cmd_pdp(args) -> int:
    m = _load_model(args.model)
    records = _read_records(args.data, args.format)
    feats = features_matrix(records)
    os.makedirs(args.outdir, exist_ok=True)
    for k in _selected_features(args.feature):
        curve = interpret.partial_dependence(m, feats, k, args.grid)
        header, rows = report.pdp_curve_table(m, curve)
        path = os.path.join(args.outdir, f"pdp_{FEATURE_NAMES[k]}.csv")
        report.write_csv(path, header, rows)
        print(path)
    return EXIT_OK


def cmd_splines(args) -> int:
    m = _load_model(args.model)
    if args.unit == "all":
        units = list(range(m.hidden))
    else:
        try:
            unit = int(args.unit)
        except ValueError:
            raise ValidationError(
                f"unit must be an integer in [0, {m.hidden - 1}] or 'all', "
                f"got {args.unit!r}") from None
        if not 0 <= unit < m.hidden:
            raise ValidationError(
                f"unit {unit} out of range [0, {m.hidden - 1}]")
        units = [unit]
    os.makedirs(args.outdir, exist_ok=True)
    for j in units:
        for k in _selected_features(args.feature):
            header, rows = report.spline_curve_table(m, j, k, args.grid)
            path = os.path.join(
                args.outdir, f"splines_unit{j}_{FEATURE_NAMES[k]}.csv")
            report.write_csv(path, header, rows)
            print(path)
    return EXIT_OK


def cmd_report(args) -> int:
    records = _read_records(args.data, args.format)
    model, history = _train_model(records, args)
    os.makedirs(args.outdir, exist_ok=True)
    model_path = os.path.join(args.outdir, "model.json")
    kan.save_model_file(model, model_path)
    header, rows = report.history_table(history)
    report.write_csv(os.path.join(args.outdir, "history.csv"), header, rows)

    fr = _write_analysis(model, records, args.outdir, args.pdp_grid,
                         args.spline_grid, args.bins,
                         render_figures=not args.no_figures, history=history)

    verdicts = report.score_detections(model, records, tau=args.tau,
                                       r_min=args.r_min)
    header, rows = report.verdicts_table(verdicts)
    report.write_csv(os.path.join(args.outdir, "verdicts.csv"), header, rows)
    flagged = sum(1 for v in verdicts if v.low_trust)
    print(f"report bundle: {args.outdir}")
    print(f"n: {fr.n} r2: {fr.r2!r} mae: {fr.mae!r} rmse: {fr.rmse!r}")
    print(f"low_trust: {flagged}/{len(verdicts)}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser assembly


def _add_format_flag(p) -> None:
    p.add_argument("--format", choices=("auto", "csv", "jsonl"),
                   default="auto", help="input format (default: by extension)")


def _add_train_flags(p) -> None:
    p.add_argument("--epochs", type=int, default=kan.TrainConfig.epochs)
    p.add_argument("--batch-size", type=int, default=kan.TrainConfig.batch_size)
    p.add_argument("--lr", type=float, default=kan.TrainConfig.learning_rate)
    p.add_argument("--val-fraction", type=float,
                   default=kan.TrainConfig.val_fraction)
    p.add_argument("--l2", type=float, default=kan.TrainConfig.l2_penalty)
    p.add_argument("--seed", type=int, default=kan.TrainConfig.seed)
    p.add_argument("--hidden", type=int, default=16)
    p.add_argument("--grid", type=int, default=5)
    p.add_argument("--degree", type=int, default=3)
    p.add_argument("--target-column", default="conf",
                   help="column to fit (default: detector confidence)")


def _add_analysis_flags(p) -> None:
    p.add_argument("--pdp-grid", type=int, default=DEFAULT_PDP_GRID)
    p.add_argument("--spline-grid", type=int, default=DEFAULT_SPLINE_GRID)
    p.add_argument("--bins", type=int, default=DEFAULT_BINS)
    p.add_argument("--no-figures", action="store_true",
                   help="skip PNG rendering, write CSV/JSON only")


def _add_score_flags(p) -> None:
    p.add_argument("--tau", type=float, default=None,
                   help="residual threshold (default: 3x validation RMSE)")
    p.add_argument("--r-min", type=float, default=report.DEFAULT_R_MIN,
                   help="minimum acceptable bin fidelity R^2")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="kantrust",
                     description="Spline-network surrogate of detector "
                                 "confidence with interpretability reports.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate a detections file")
    p.add_argument("input")
    _add_format_flag(p)
    p.add_argument("--output", default=None,
                   help="re-serialize validated records here")
    p.add_argument("--output-format", choices=("auto", "csv", "jsonl"),
                   default="auto")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("train", help="fit the surrogate")
    p.add_argument("data")
    _add_format_flag(p)
    p.add_argument("--model", default="model.json")
    p.add_argument("--history", default=None,
                   help="training history CSV (default: next to the model)")
    _add_train_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("analyze", help="write the full report bundle")
    p.add_argument("model")
    p.add_argument("data")
    _add_format_flag(p)
    p.add_argument("--outdir", default="report")
    _add_analysis_flags(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("score", help="flag low-trust detections")
    p.add_argument("model")
    p.add_argument("data")
    _add_format_flag(p)
    p.add_argument("--output", default=None,
                   help="verdicts CSV (default: stdout)")
    _add_score_flags(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("pdp", help="export dependence curves")
    p.add_argument("model")
    p.add_argument("data")
    _add_format_flag(p)
    p.add_argument("--feature", choices=FEATURE_NAMES + ("all",),
                   default="all")
    p.add_argument("--grid", type=int, default=DEFAULT_PDP_GRID)
    p.add_argument("--outdir", default=".")
    p.set_defaults(func=cmd_pdp)

    p = sub.add_parser("splines", help="export edge spline curves")
    p.add_argument("model")
    p.add_argument("--unit", default="all",
                   help="hidden unit index or 'all'")
    p.add_argument("--feature", choices=FEATURE_NAMES + ("all",),
                   default="all")
    p.add_argument("--grid", type=int, default=DEFAULT_SPLINE_GRID)
    p.add_argument("--outdir", default=".")
    p.set_defaults(func=cmd_splines)

    p = sub.add_parser("report",
                       help="end to end: train, analyze, and score")
    p.add_argument("data")
    _add_format_flag(p)
    p.add_argument("--outdir", default="report")
    _add_train_flags(p)
    _add_analysis_flags(p)
    _add_score_flags(p)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except kan.ModelFormatError as exc:
        print(f"error: invalid model file: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except kan.TrainingDiverged as exc:
        print(f"error: training diverged at epoch {exc.epoch}",
              file=sys.stderr)
        return EXIT_NUMERICAL
    except FloatingPointError as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except FileNotFoundError as exc:
        print(f"error: {exc.strerror}: {exc.filename}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
