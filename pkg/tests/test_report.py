import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cartwright import report as R

finite = st.floats(allow_nan=False, allow_infinity=False)
leaf = st.one_of(finite, st.integers(-10 ** 12, 10 ** 12), st.booleans(), st.none(),
                 st.text(max_size=8), st.just(math.inf), st.just(-math.inf), st.just(math.nan))
tree = st.recursive(leaf, lambda ch: st.one_of(st.lists(ch, max_size=4),
                                               st.dictionaries(st.text(max_size=5), ch, max_size=4)),
                    max_leaves=20)


@given(tree)
def test_round_trip_is_byte_identical(obj):
    text = R.dumps({"results": obj})
    assert R.dumps(json.loads(text)) == text


def test_floats_keep_17_digits():
    text = R.dumps({"x": 0.1, "y": 1 / 3})
    assert "0.10000000000000001" in text and "0.33333333333333331" in text
    assert json.loads(text)["y"] == 1 / 3


def test_markers_for_non_finite_values():
    doc = json.loads(R.dumps({"a": math.inf, "b": -np.inf, "c": np.nan}))
    assert doc == {"a": "unbounded", "b": "-unbounded", "c": "undefined"}


def test_empty_document():
    doc = R.make_document({"command": "verify", "n": 1}, [])
    assert list(doc) == ["scenario", "results", "summary", "version"]
    back = json.loads(R.dumps(doc))
    assert back["results"] == [] and back["summary"]["pass"] is True


def test_config_hash_tracks_the_scenario():
    a = R.make_document({"n": 1}, [])["version"]["config_hash"]
    b = R.make_document({"n": 2}, [])["version"]["config_hash"]
    assert a != b and a == R.make_document({"n": 1}, [])["version"]["config_hash"]


def test_numpy_and_dataclass_values():
    from dataclasses import dataclass

    @dataclass
    class Rec:
        x: float
        ok: bool

    out = R.clean([Rec(np.float64(2.5), np.bool_(True)), np.arange(3), np.int64(7)])
    assert out == [{"x": 2.5, "ok": True}, [0, 1, 2], 7]
    with pytest.raises(TypeError):
        R.clean(object())


def test_csv_and_plotdata(tmp_path):
    R.write_csv(tmp_path / "a.csv", ["x", "y"], [[0.1, math.inf], [1, "s"]])
    lines = (tmp_path / "a.csv").read_text().splitlines()
    assert lines == ["x,y", "0.10000000000000001,unbounded", "1,s"]
    R.write_plotdata(tmp_path / "p.dat", ["x", "y"], [[1, 2], [3, 4]])
    assert (tmp_path / "p.dat").read_text().splitlines() == ["# x y", "1 3", "2 4"]
