"""Detection interchange: parsing, validation, serialization, normalization."""

import io
import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

from kantrust.interchange import (
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
    validate_record,
)

VALID_CSV = (
    "image_id,x,y,w,h,conf,cls,img_w,img_h,caption\n"
    "img_a,0.5,0.25,0.1,0.2,0.9,3,640,480,a dog on grass\n"
    "img_a,0.1,0.75,0.05,0.4,0.65,0,640,480,\n"
    "img_b,0.98,0.02,1.0,1.0,0.31,79,1024,768,full frame box\n"
)


def _records():
    return parse_detections(VALID_CSV, format="csv")


class TestCsvParsing:
    def test_parses_valid_rows(self):
        records = _records()
        assert len(records) == 3
        assert records[0].image_id == "img_a"
        assert records[0].cls == 3
        assert records[0].caption == "a dog on grass"
        assert records[1].caption is None
        assert records[2].img_w == 1024

    def test_accepts_file_handle_and_bytes(self):
        assert parse_detections(io.StringIO(VALID_CSV)) == _records()
        assert parse_detections(VALID_CSV.encode()) == _records()

    def test_float_round_trip_is_exact(self):
        value = 0.12345678901234567
        rec = DetectionRecord("i", value, 0.5, 0.5, 0.5, 0.5, 1, 10, 10)
        out = serialize_detections([rec], format="csv")
        assert parse_detections(out)[0].x == value

    def test_header_must_lead_with_canonical_columns(self):
        bad = VALID_CSV.replace("image_id,x", "image,x")
        with pytest.raises(ValidationError, match="header"):
            parse_detections(bad)

    def test_extra_columns_become_extras(self):
        text = (
            "image_id,x,y,w,h,conf,cls,img_w,img_h,caption,trust_label\n"
            "a,0.5,0.5,0.1,0.1,0.9,2,64,64,,0.8\n"
        )
        rec = parse_detections(text)[0]
        assert rec.extras == {"trust_label": "0.8"}

    def test_wrong_field_count_names_line(self):
        bad = VALID_CSV + "img_c,0.5,0.5\n"
        with pytest.raises(ValidationError, match="line 5"):
            parse_detections(bad)

    @pytest.mark.parametrize("column,value,message", [
        ("x", "1.5", "x"),
        ("y", "-0.1", "y"),
        ("w", "0", "w"),
        ("h", "-0.5", "h"),
        ("conf", "1.01", "conf"),
        ("cls", "-1", "cls"),
        ("cls", "2.5", "cls"),
        ("img_w", "0", "img_w"),
        ("img_h", "-3", "img_h"),
        ("x", "not_a_number", "x"),
    ])
    def test_field_validation_names_line_and_field(self, column, value, message):
        fields = dict(zip(CSV_HEADER,
                          ["img", "0.5", "0.5", "0.1", "0.2", "0.9", "3",
                           "640", "480", ""]))
        fields[column] = value
        row = ",".join(fields[c] for c in CSV_HEADER)
        text = ",".join(CSV_HEADER) + "\n" + row + "\n"
        with pytest.raises(ValidationError) as err:
            parse_detections(text)
        assert "line 2" in str(err.value)
        assert f"'{message}'" in str(err.value)

    def test_empty_image_id_rejected(self):
        bad = VALID_CSV.replace("img_b,", ",")
        with pytest.raises(ValidationError, match="image_id"):
            parse_detections(bad)

    def test_empty_input_gives_empty_list(self):
        header_only = ",".join(CSV_HEADER) + "\n"
        assert parse_detections(header_only) == []


class TestJsonlParsing:
    def test_round_trip(self):
        records = _records()
        text = serialize_detections(records, format="jsonl")
        assert parse_detections(text, format="jsonl") == records

    def test_caption_key_omitted_when_absent(self):
        records = _records()
        lines = serialize_detections(records, format="jsonl").splitlines()
        assert "caption" in json.loads(lines[0])
        assert "caption" not in json.loads(lines[1])

    def test_missing_key_names_line_and_field(self):
        line = json.dumps({"image_id": "a", "x": 0.5, "y": 0.5, "w": 0.1,
                           "h": 0.1, "conf": 0.9, "cls": 2, "img_w": 64})
        with pytest.raises(ValidationError) as err:
            parse_detections(line, format="jsonl")
        assert "line 1" in str(err.value)
        assert "img_h" in str(err.value)

    def test_extras_survive_round_trip(self):
        rec = DetectionRecord("a", 0.5, 0.5, 0.1, 0.1, 0.9, 2, 64, 64,
                              extras={"trust_label": "0.7"})
        text = serialize_detections([rec], format="jsonl")
        assert parse_detections(text, format="jsonl")[0].extras == \
            {"trust_label": "0.7"}

    def test_malformed_json_names_line(self):
        with pytest.raises(ValidationError, match="line 1"):
            parse_detections("{not json", format="jsonl")

    def test_boolean_cls_rejected(self):
        line = json.dumps({"image_id": "a", "x": 0.5, "y": 0.5, "w": 0.1,
                           "h": 0.1, "conf": 0.9, "cls": True,
                           "img_w": 64, "img_h": 64})
        with pytest.raises(ValidationError, match="cls"):
            parse_detections(line, format="jsonl")


class TestSerialization:
    def test_csv_round_trip(self):
        records = _records()
        text = serialize_detections(records, format="csv")
        assert parse_detections(text) == records

    def test_csv_extra_columns_sorted_after_canonical(self):
        rec = DetectionRecord("a", 0.5, 0.5, 0.1, 0.1, 0.9, 2, 64, 64,
                              extras={"zeta": "1", "alpha": "2"})
        header = serialize_detections([rec], format="csv").splitlines()[0]
        assert header == ",".join(CSV_HEADER) + ",alpha,zeta"

    def test_unknown_format_rejected(self):
        with pytest.raises(ValueError):
            serialize_detections(_records(), format="xml")
        with pytest.raises(ValueError):
            parse_detections(VALID_CSV, format="xml")

    def test_detect_format(self):
        assert detect_format("runs/out.jsonl") == "jsonl"
        assert detect_format("out.ndjson") == "jsonl"
        assert detect_format("out.csv") == "csv"
        assert detect_format("mystery.txt") == "csv"


class TestValidateRecord:
    def test_boundary_values_accepted(self):
        validate_record(DetectionRecord("a", 0.0, 1.0, 1.0, 1e-9, 0.0, 0, 1, 1))

    def test_bool_cls_rejected(self):
        with pytest.raises(ValidationError):
            validate_record(DetectionRecord("a", 0.5, 0.5, 0.1, 0.1, 0.9,
                                            True, 64, 64))

    def test_non_finite_rejected(self):
        with pytest.raises(ValidationError):
            validate_record(DetectionRecord("a", float("nan"), 0.5, 0.1, 0.1,
                                            0.9, 2, 64, 64))


class TestFeatures:
    def test_feature_tuple_order_and_scale(self):
        rec = DetectionRecord("a", 0.5, 0.25, 0.2, 0.4, 0.9, 17, 640, 480)
        fv = extract_features(rec)
        assert fv.shape == (len(FEATURE_NAMES),)
        assert_allclose(fv, [0.5, 0.25, 0.2, 0.4, 0.9, 17.0, 0.2 * 0.4])

    def test_matrix_stacking(self):
        records = _records()
        mat = features_matrix(records)
        assert mat.shape == (3, 7)
        assert_allclose(mat[2], extract_features(records[2]))

    def test_empty_matrix_shape(self):
        assert features_matrix([]).shape == (0, 7)


class TestNormalizer:
    def test_transform_and_inverse(self):
        data = np.array([[0.0, 10.0], [5.0, 20.0], [10.0, 30.0]])
        n = fit_normalizer(data)
        out = n.transform(data)
        assert_allclose(out[:, 0], [0.0, 0.5, 1.0])
        assert_allclose(n.inverse(1, out[:, 1]), data[:, 1])

    def test_out_of_range_clamped(self):
        n = Normalizer(mins=np.array([0.0]), maxs=np.array([1.0]))
        assert_allclose(n.transform(np.array([[-2.0], [3.0]])),
                        [[0.0], [1.0]])

    def test_degenerate_feature_maps_to_half(self):
        data = np.array([[1.0, 3.0], [1.0, 4.0]])
        n = fit_normalizer(data)
        assert n.degenerate[0] and not n.degenerate[1]
        assert_allclose(n.transform(data)[:, 0], 0.5)
        assert_allclose(n.transform_column(0, np.array([1.0, 99.0])), 0.5)

    def test_transform_column_matches_matrix_path(self):
        rng = np.random.default_rng(3)
        data = rng.normal(size=(50, 7))
        n = fit_normalizer(data)
        full = n.transform(data)
        for k in range(7):
            assert_allclose(n.transform_column(k, data[:, k]), full[:, k])

    def test_dict_round_trip(self):
        n = fit_normalizer(np.random.default_rng(0).normal(size=(20, 7)))
        again = Normalizer.from_dict(n.to_dict())
        assert_allclose(again.mins, n.mins)
        assert_allclose(again.maxs, n.maxs)
