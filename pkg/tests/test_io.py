import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_framework
from flexsaddle.fixtures import heptagon_1
from flexsaddle.io import (
    SchemaError,
    dumps,
    framework_from_dict,
    framework_to_dict,
    history_csv,
    load_framework,
    loads_document,
    read_jsonl,
)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_round_trip(seed):
    fw = random_framework(np.random.default_rng(seed), pinned=True)
    doc = json.loads(dumps(framework_to_dict(fw)))
    assert framework_from_dict(doc) == fw


def test_load_framework_file(tmp_path):
    path = tmp_path / "h.json"
    path.write_text(dumps(framework_to_dict(heptagon_1(), list("ABCDEFG"))))
    fw, labels = load_framework(path)
    assert fw == heptagon_1() and labels == list("ABCDEFG")


def _doc(**overrides):
    d = {"dim": 2, "vertices": [[0, 0], [1, 0], [1, 1], [0, 1]], "edges": [[2, 3], [0, 1], [1, 2], [3, 0]],
         "pins": [{"vertex": 0, "axis": 0}, {"vertex": 0, "axis": 1}, {"vertex": 1, "axis": 1}]}
    d.update(overrides)
    return {k: v for k, v in d.items() if v is not None}


def test_pin_value_defaults_to_coordinate():
    fw = framework_from_dict(_doc())
    assert [p.value for p in fw.pins] == [0.0, 0.0, 0.0]
    assert fw.topology.free_edge == 0
    np.testing.assert_allclose(fw.rest_lengths, 1.0)


@pytest.mark.parametrize(
    "overrides, where",
    [
        ({"dim": None}, "missing required field 'dim'"),
        ({"vertices": [[0, 0], [1, "x"], [1, 1], [0, 1]]}, r"vertices\[1\]\[1\]"),
        ({"vertices": [[0, 0], [1], [1, 1], [0, 1]]}, r"vertices\[1\]"),
        ({"edges": [[0, 9]]}, r"edges\[0\]\[1\]"),
        ({"free_edge": 4}, "free_edge"),
        ({"rest_lengths": [1, 1, -1, 1]}, r"rest_lengths\[2\]"),
        ({"pins": [{"vertex": 0, "axis": 2}]}, r"pins\[0\]\.axis"),
        ({"color": "red"}, "unknown fields"),
        ({"edges": [[0, 0]]}, "loop"),
        ({"vertices": [[0, 0], [1, float("nan")], [1, 1], [0, 1]]}, "finite"),
    ],
)
def test_schema_errors(overrides, where):
    with pytest.raises(SchemaError, match=where):
        framework_from_dict(_doc(**overrides))


def test_malformed_json_reports_position():
    with pytest.raises(SchemaError, match="line 2, column"):
        loads_document('{"dim": 2,\n  oops}')


def test_dumps_is_deterministic_and_exact():
    x = [0.1 + 0.2, 1e-17, np.float64(2.0) / 3]
    a = dumps({"b": x, "a": np.arange(3)})
    assert a == dumps({"a": np.arange(3), "b": x})
    assert json.loads(a)["b"] == [0.1 + 0.2, 1e-17, 2.0 / 3]


def test_history_csv_and_jsonl(tmp_path):
    text = history_csv([(1, 0.5, 1e-3, 1e-13, 0.25)])
    assert text.splitlines() == ["iter,energy,move_norm,constraint_inf,kkt_residual", "1,0.5,0.001,1e-13,0.25"]
    p = tmp_path / "p.jsonl"
    p.write_text('{"t": 0}\n\n{"t": 1}\n')
    assert read_jsonl(p) == [{"t": 0}, {"t": 1}]
    p.write_text('{"t": 0}\n{bad\n')
    with pytest.raises(SchemaError, match=":2:"):
        read_jsonl(p)
