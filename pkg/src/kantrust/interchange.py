"""Detection-record interchange: parsing, serialization, feature extraction.

One record per detector output. Files travel as CSV (flat) or JSONL
(extensible) with an identical schema; both sides round-trip numeric
fields to full precision and captions byte-exact. The seven surrogate
features are derived here and min-max conditioned into [0, 1] by a
:class:`Normalizer` so every spline edge sees its fixed domain.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

import numpy as np

FEATURE_NAMES: tuple[str, ...] = ("x", "y", "w", "h", "conf", "cls", "scale")
FEATURE_COUNT = len(FEATURE_NAMES)

CSV_HEADER: tuple[str, ...] = (
    "image_id", "x", "y", "w", "h", "conf", "cls", "img_w", "img_h", "caption",
)

_UNIT_FIELDS = ("x", "y", "w", "h", "conf")
_POSITIVE_FIELDS = ("w", "h")


class ValidationError(ValueError):
    """A record or file failed schema validation.

    Carries the 1-based source line and offending field when known so
    the CLI can point at the exact location.
    """

    def __init__(self, message: str, line: Optional[int] = None,
                 fieldname: Optional[str] = None):
        self.line = line
        self.fieldname = fieldname
        prefix = ""
        if line is not None:
            prefix += f"line {line}: "
        if fieldname is not None:
            prefix += f"field '{fieldname}': "
        super().__init__(prefix + message)


@dataclass
class DetectionRecord:
    """One detector output: box geometry, confidence, class, image dims.

    Geometry is center-fraction form: (x, y) is the box center and
    (w, h) the box size, all as fractions of the image dimensions.
    ``caption`` is optional passthrough metadata and never interpreted.
    ``extras`` holds unrecognized columns (e.g. an external trust label)
    keyed by column name.
    """

    image_id: str
    x: float
    y: float
    w: float
    h: float
    conf: float
    cls: int
    img_w: int
    img_h: int
    caption: Optional[str] = None
    extras: dict[str, str] = field(default_factory=dict)


def validate_record(rec: DetectionRecord, line: Optional[int] = None) -> None:
    """Raise :class:`ValidationError` if the record violates the schema."""
    for name in _UNIT_FIELDS:
        v = getattr(rec, name)
        if not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ValidationError(f"not a finite number: {v!r}", line, name)
        if not 0.0 <= v <= 1.0:
            raise ValidationError(f"value {v!r} outside [0, 1]", line, name)
    for name in _POSITIVE_FIELDS:
        if getattr(rec, name) <= 0.0:
            raise ValidationError("box size must be > 0", line, name)
    if not isinstance(rec.cls, int) or isinstance(rec.cls, bool) or rec.cls < 0:
        raise ValidationError(f"class index must be an integer >= 0, got {rec.cls!r}",
                              line, "cls")
    for name in ("img_w", "img_h"):
        v = getattr(rec, name)
        if not isinstance(v, int) or isinstance(v, bool) or v < 1:
            raise ValidationError(f"image dimension must be an integer >= 1, got {v!r}",
                                  line, name)
    if not rec.image_id:
        raise ValidationError("image_id must be non-empty", line, "image_id")


def _parse_float(raw, name: str, line: int) -> float:
    if isinstance(raw, bool):
        raise ValidationError(f"expected a number, got {raw!r}", line, name)
    try:
        v = float(raw)
    except (TypeError, ValueError):
        raise ValidationError(f"cannot parse {raw!r} as a number", line, name) from None
    if not math.isfinite(v):
        raise ValidationError(f"non-finite value {raw!r}", line, name)
    return v


def _parse_int(raw, name: str, line: int) -> int:
    v = _parse_float(raw, name, line)
    if v != int(v):
        raise ValidationError(f"expected an integer, got {raw!r}", line, name)
    return int(v)


def _as_text(stream: Union[str, bytes, io.IOBase, Iterable[str]]) -> str:
    if isinstance(stream, bytes):
        return stream.decode("utf-8")
    if isinstance(stream, str):
        return stream
    data = stream.read()
    if isinstance(data, bytes):
        return data.decode("utf-8")
    return data


def parse_detections(stream, format: str = "csv") -> list[DetectionRecord]:
    """Parse an interchange file into validated records, in file order.

    ``stream`` may be text, bytes, or an open file. ``format`` selects
    ``csv`` or ``jsonl``. Malformed rows raise :class:`ValidationError`
    naming the line and field.
    """
    text = _as_text(stream)
    if format == "csv":
        return _parse_csv(text)
    if format == "jsonl":
        return _parse_jsonl(text)
    raise ValueError(f"unknown format {format!r} (expected 'csv' or 'jsonl')")


def _record_from_fields(fields: dict, line: int,
                        extras: dict[str, str]) -> DetectionRecord:
    caption = fields.get("caption")
    if caption == "" or caption is None:
        caption = None
    elif not isinstance(caption, str):
        raise ValidationError(f"caption must be a string, got {caption!r}",
                              line, "caption")
    rec = DetectionRecord(
        image_id=str(fields["image_id"]),
        x=_parse_float(fields["x"], "x", line),
        y=_parse_float(fields["y"], "y", line),
        w=_parse_float(fields["w"], "w", line),
        h=_parse_float(fields["h"], "h", line),
        conf=_parse_float(fields["conf"], "conf", line),
        cls=_parse_int(fields["cls"], "cls", line),
        img_w=_parse_int(fields["img_w"], "img_w", line),
        img_h=_parse_int(fields["img_h"], "img_h", line),
        caption=caption,
        extras=extras,
    )
    validate_record(rec, line)
    return rec


def _parse_csv(text: str) -> list[DetectionRecord]:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ValidationError("empty file: missing CSV header", line=1) from None
    if tuple(header[: len(CSV_HEADER)]) != CSV_HEADER:
        raise ValidationError(
            f"header must start with {','.join(CSV_HEADER)!r}, got {','.join(header)!r}",
            line=1,
        )
    extra_cols = header[len(CSV_HEADER):]
    records = []
    for row in reader:
        line = reader.line_num
        if not row:
            continue
        if len(row) != len(header):
            raise ValidationError(
                f"expected {len(header)} fields, got {len(row)}", line)
        named = dict(zip(CSV_HEADER, row))
        extras = {k: v for k, v in zip(extra_cols, row[len(CSV_HEADER):])}
        records.append(_record_from_fields(named, line, extras))
    return records


def _parse_jsonl(text: str) -> list[DetectionRecord]:
    records = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"invalid JSON: {exc.msg}", line_no) from None
        if not isinstance(obj, dict):
            raise ValidationError("each line must be a JSON object", line_no)
        missing = [k for k in CSV_HEADER if k != "caption" and k not in obj]
        if missing:
            raise ValidationError(f"missing keys: {', '.join(missing)}",
                                  line_no, missing[0])
        extras = {k: v for k, v in obj.items() if k not in CSV_HEADER}
        records.append(_record_from_fields(obj, line_no, extras))
    return records


def _fmt(v) -> str:
    # repr round-trips doubles exactly, which covers the >= 9 significant
    # digit serialization requirement without padding noise
    if isinstance(v, float):
        return repr(v)
    return str(v)


def serialize_detections(records: Iterable[DetectionRecord],
                         format: str = "csv") -> str:
    """Serialize records to interchange text (inverse of parse)."""
    records = list(records)
    if format == "csv":
        extra_cols = sorted({k for r in records for k in r.extras})
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(list(CSV_HEADER) + extra_cols)
        for r in records:
            row = [r.image_id, _fmt(r.x), _fmt(r.y), _fmt(r.w), _fmt(r.h),
                   _fmt(r.conf), str(r.cls), str(r.img_w), str(r.img_h),
                   r.caption if r.caption is not None else ""]
            row.extend(_fmt(r.extras.get(k, "")) for k in extra_cols)
            writer.writerow(row)
        return out.getvalue()
    if format == "jsonl":
        lines = []
        for r in records:
            obj = {"image_id": r.image_id, "x": r.x, "y": r.y, "w": r.w,
                   "h": r.h, "conf": r.conf, "cls": r.cls,
                   "img_w": r.img_w, "img_h": r.img_h}
            if r.caption is not None:
                obj["caption"] = r.caption
            obj.update(r.extras)
            lines.append(json.dumps(obj, ensure_ascii=False))
        return "\n".join(lines) + ("\n" if lines else "")
    raise ValueError(f"unknown format {format!r} (expected 'csv' or 'jsonl')")


def detect_format(path: str) -> str:
    """Guess the interchange format from a filename."""
    return "jsonl" if str(path).endswith((".jsonl", ".ndjson", ".json")) else "csv"


def extract_features(rec: DetectionRecord) -> np.ndarray:
    """The 7-feature tuple (x, y, w, h, conf, cls, scale) as float64.

    ``scale`` is the box area as a fraction of the canonical 640x640
    frame, which reduces to w*h for fractional box sizes. ``cls`` enters
    as a real-valued copy of the integer index.
    """
    return np.array(
        [rec.x, rec.y, rec.w, rec.h, rec.conf, float(rec.cls), rec.w * rec.h],
        dtype=np.float64,
    )


def features_matrix(records: Iterable[DetectionRecord]) -> np.ndarray:
    """Stack per-record feature tuples into an (N, 7) matrix."""
    rows = [extract_features(r) for r in records]
    if not rows:
        return np.empty((0, FEATURE_COUNT), dtype=np.float64)
    return np.stack(rows)


@dataclass
class Normalizer:
    """Per-feature affine min-max map onto [0, 1], clamped outside.

    Degenerate (constant) features map to 0.5 so downstream splines see
    a well-defined point in their domain.
    """

    mins: np.ndarray
    maxs: np.ndarray

    def __post_init__(self) -> None:
        self.mins = np.asarray(self.mins, dtype=np.float64)
        self.maxs = np.asarray(self.maxs, dtype=np.float64)
        if self.mins.shape != self.maxs.shape:
            raise ValueError("mins and maxs must have the same shape")
        if np.any(self.maxs < self.mins):
            raise ValueError("max < min in normalizer")

    @property
    def spans(self) -> np.ndarray:
        return self.maxs - self.mins

    @property
    def degenerate(self) -> np.ndarray:
        """Boolean mask of features that were constant in the fitting data."""
        return self.spans == 0.0

    def transform(self, features: np.ndarray) -> np.ndarray:
        """Map raw features (..., d) into [0, 1]^d."""
        features = np.asarray(features, dtype=np.float64)
        span = np.where(self.degenerate, 1.0, self.spans)
        out = (features - self.mins) / span
        out = np.where(self.degenerate, 0.5, out)
        return np.clip(out, 0.0, 1.0)

    def transform_column(self, k: int, values: np.ndarray) -> np.ndarray:
        """Map raw values of feature ``k`` alone into [0, 1]."""
        values = np.asarray(values, dtype=np.float64)
        if self.degenerate[k]:
            return np.full(values.shape, 0.5)
        return np.clip((values - self.mins[k]) / self.spans[k], 0.0, 1.0)

    def inverse(self, k: int, t: np.ndarray) -> np.ndarray:
        """Map normalized values of feature ``k`` back to raw units."""
        return self.mins[k] + np.asarray(t, dtype=np.float64) * self.spans[k]

    def to_dict(self) -> dict:
        return {"min": self.mins.tolist(), "max": self.maxs.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Normalizer":
        return cls(mins=np.array(d["min"]), maxs=np.array(d["max"]))


def fit_normalizer(data: np.ndarray) -> Normalizer:
    """Fit per-feature min/max over a (N, d) feature matrix."""
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2 or data.shape[0] == 0:
        raise ValueError("need a non-empty (N, d) feature matrix")
    return Normalizer(mins=data.min(axis=0), maxs=data.max(axis=0))


def normalize(fv: np.ndarray, n: Normalizer) -> np.ndarray:
    """Normalize one feature vector (or matrix) into [0, 1]."""
    return n.transform(fv)
