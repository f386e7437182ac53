import json

import jsonschema
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from instances import split_cluster
from powerplane.fitness import make_partition
from powerplane.io import (
    ProblemFormatError,
    decode_labels,
    dumps_problem,
    dumps_result,
    encode_labels,
    load_problem,
    load_result,
    loads_problem,
    mask_timings,
    partition_doc,
    problem_from_dict,
    result_document,
    save_problem,
    save_result,
    validate_result,
)
from powerplane.model import normalize_problem

coord = st.floats(0, 50, allow_nan=False, allow_infinity=False)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.lists(st.tuples(coord, coord), min_size=1, max_size=5), min_size=1, max_size=4))
def test_problem_round_trip_is_exact(nets):
    seen = set()
    for net in nets:
        for p in net:
            seen.add(p)
    if sum(len(n) for n in nets) != len(seen):
        return  # duplicate pins across nets are rejected by design
    p = normalize_problem(nets, (50.0, 50.0))
    assert loads_problem(dumps_problem(p)) == p


def test_round_trip_through_file(tmp_path):
    p = split_cluster()
    save_problem(p, tmp_path / "p.json")
    assert load_problem(tmp_path / "p.json") == p


def test_bad_json_reports_line_and_column():
    text = '{\n  "board": {"width": 1, "height": 1},\n  "nets": [\n}'
    with pytest.raises(ProblemFormatError) as exc:
        loads_problem(text, "bad.json")
    assert exc.value.where.startswith("line 4")
    assert "bad.json" in str(exc.value)


@pytest.mark.parametrize("doc, where", [
    ({"nets": []}, "board"),
    ({"board": {"width": 1, "height": 1}, "nets": []}, "nets"),
    ({"board": {"width": 1, "height": 1}, "nets": [{"pins": [[0.1]]}]}, "nets[0].pins[0]"),
    ({"board": {"width": 1, "height": 1}, "nets": [{"pins": [[0.1, "a"]]}]}, "nets[0].pins[0][1]"),
    ({"board": {"width": 1, "height": 1}, "nets": [{"pins": [[0.1, 0.2]], "label": 3}]}, "nets[0].label"),
    ({"board": {"width": 1, "height": 1}, "grid_resolution": 8, "nets": [{"pins": [[0.1, 0.2]]}]}, "nets"),
    ({"board": {"width": 1, "height": 1}, "nets": [{"pins": [[2, 0.2]]}]}, "nets"),
])
def test_field_errors_name_the_field(doc, where):
    with pytest.raises(ProblemFormatError) as exc:
        problem_from_dict(doc)
    assert exc.value.where == where


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 20), st.integers(1, 4), st.integers(0, 2**31 - 1))
def test_label_encoding_round_trip(res, m, seed):
    labels = np.random.default_rng(seed).integers(1, m + 1, size=(res, res))
    np.testing.assert_array_equal(decode_labels(encode_labels(labels)), labels)


def _doc():
    p = split_cluster()
    part = make_partition(np.ones((100, 100), dtype=int), p.m)
    return result_document(
        "gomlp", p, {"seed": 1}, {"ei": 1, "f": float("inf")}, {"wall_time": 0.25},
        partition=partition_doc(part, None, False), handles=np.zeros((2, 2)),
    )


def test_result_document_validates_and_is_plain_json(tmp_path):
    doc = _doc()
    assert doc["metrics"]["f"] is None
    assert doc["handles"] == [[0.0, 0.0], [0.0, 0.0]]
    save_result(doc, tmp_path / "r.json")
    assert load_result(tmp_path / "r.json") == json.loads(dumps_result(doc))


def test_schema_rejects_bad_documents():
    doc = _doc()
    for broken in (
        {**doc, "schema_version": "0.1"},
        {**doc, "kind": "other"},
        {k: v for k, v in doc.items() if k != "timings"},
        {**doc, "timings": {"wall_time": "slow"}},
    ):
        with pytest.raises(jsonschema.ValidationError):
            validate_result(broken)


def test_masking_removes_nested_timings_only():
    doc = {"a": 1, "timings": {"t": 2.0}, "rows": [{"timings": {"x": 1.0}, "ei": 0}]}
    assert mask_timings(doc) == {"a": 1, "timings": {}, "rows": [{"timings": {}, "ei": 0}]}
    assert doc["timings"] == {"t": 2.0}
