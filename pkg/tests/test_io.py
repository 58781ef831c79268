import json
import math
import os

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spde_ldp.errors import ConfigError
from spde_ldp.io import (
    Artifact,
    csv_bytes,
    format_number,
    json_bytes,
    path_csv,
    read_path_csv,
    write_artifacts,
    write_atomic,
)
from spde_ldp.paths import SpectralPath

META = {"config_hash": "abc", "seed": 7, "version": "0.1.0"}


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_numbers_round_trip(x):
    assert float(format_number(x)) == x


def test_special_values():
    assert format_number(math.inf) == "+inf"
    assert format_number(-math.inf) == "-inf"
    assert format_number(math.nan) == "nan"
    assert format_number(True) == "true"
    assert format_number(np.int64(3)) == "3"
    assert format_number(None) == ""


def test_csv_header_comment():
    text = csv_bytes(["a", "b"], [[1, 0.1]], META).decode()
    assert text == "# config_hash=abc seed=7 version=0.1.0\na,b\n1,0.1\n"


def test_json_meta_and_non_finite():
    doc = json.loads(json_bytes({"x": np.array([1.0, np.inf]), "k": np.int32(2)}, META))
    assert doc["meta"] == META
    assert doc["x"] == [1.0, "+inf"] and doc["k"] == 2


def test_path_round_trip(tmp_path):
    nodes = np.random.default_rng(0).standard_normal((6, 3))
    path = SpectralPath(0.1, nodes)
    f = tmp_path / "p.csv"
    f.write_bytes(path_csv(path, META))
    back = read_path_csv(str(f))
    np.testing.assert_array_equal(back.nodes, nodes)
    assert back.h == pytest.approx(0.1)


@pytest.mark.parametrize("body, match", [
    ("t,x\n0,1\n1,2\n", "header"),
    ("t,mode_1\n0,1\n", "at least two"),
    ("t,mode_1\n0.1,1\n0.2,2\n", "start at 0"),
    ("t,mode_1\n0,1\n0.1,2\n0.5,3\n", "uniform"),
    ("t,mode_1\n0,1\n0.1,oops\n", "oops"),
])
def test_read_path_rejects_bad_files(tmp_path, body, match):
    f = tmp_path / "bad.csv"
    f.write_text(body)
    with pytest.raises(ConfigError, match=match):
        read_path_csv(str(f))


def test_atomic_write_replaces_and_cleans_up(tmp_path):
    target = tmp_path / "out.txt"
    target.write_text("old")
    write_atomic(str(target), b"new")
    assert target.read_bytes() == b"new"
    assert [p.name for p in tmp_path.iterdir()] == ["out.txt"]


def test_write_artifacts_creates_directory(tmp_path):
    out = tmp_path / "nested" / "dir"
    written = write_artifacts(str(out), [Artifact("a.txt", "hi"), Artifact("b.bin", b"\x00")])
    assert [os.path.basename(w) for w in written] == ["a.txt", "b.bin"]
    assert (out / "a.txt").read_text() == "hi"
