import numpy as np
import pytest

from opfield.gns import random_two_point, wick_moments
from opfield.grid import build_grid
from opfield.operators import FieldOperator
from opfield.textio import (
    dump_moments,
    dump_operator,
    format_operator,
    load_moments,
    load_operator,
    parse_moments,
    parse_operator,
    write_csv,
)


def test_operator_round_trip_exact(rng, tmp_path):
    op = FieldOperator.random(build_grid(2, 3), rng, vac_vac=True)
    path = tmp_path / "a.op"
    dump_operator(op, path, m=1.25)
    back, meta = load_operator(path)
    assert meta == {"d": 2, "n": 3, "m": 1.25}
    for name in ("vac_row", "vac_col", "kernel"):
        np.testing.assert_array_equal(getattr(back, name), getattr(op, name))
    assert back.vac_vac == op.vac_vac


def test_operator_layout():
    grid = build_grid(1, 2)
    op = FieldOperator.from_blocks(grid, vac_row=[1, 2], vac_col=[3j, 0], kernel=[[1, 2], [3, 4]], vac_vac=0.5)
    lines = format_operator(op).splitlines()
    assert lines[:5] == ["opfield-operator 1", "d 1 n 2 m none", "vacvac", "0.5 0.0", "vacrow 2"]
    assert lines[7:9] == ["vaccol 2", "0.0 3.0"]
    assert lines[10] == "kernel 2 2"
    assert lines[11:] == ["1.0 0.0", "2.0 0.0", "3.0 0.0", "4.0 0.0"]
    assert parse_operator("\n".join(lines))[1]["m"] is None


@pytest.mark.parametrize(
    "text",
    ["", "opfield-operator 2\n", "opfield-operator 1\nd 1 n 2 m none\nvacvac\n0 0\nvacrow 2\n1 0\n"],
)
def test_operator_bad_input(text):
    with pytest.raises((ValueError, IndexError)):
        parse_operator(text)


def test_moments_round_trip(rng, tmp_path):
    table = wick_moments(random_two_point(2, rng), 4, points=rng.standard_normal((2, 3)), max_word=2)
    path = tmp_path / "m.txt"
    dump_moments(table, path)
    back = load_moments(path)
    assert back.max_word == 2
    np.testing.assert_array_equal(back.points, table.points)
    assert back.values == table.values


def test_moments_layout():
    text = "opfield-moments 1\nL 1\npoints 1 2\n0.0 1.5\n1.0 0.0\n0 0.0 0.0\n0 0 2.0 0.0\n"
    table = parse_moments(text)
    assert table.values == {(): 1.0, (0,): 0.0, (0, 0): 2.0}
    np.testing.assert_array_equal(table.points, [[0.0, 1.5]])


@pytest.mark.parametrize(
    "text",
    [
        "opfield-moments 1\nL 1\npoints 1 1\n0.0\n3 1.0 0.0\n",
        "opfield-moments 1\nL 1\npoints 1 1\n0.0\n0 1.0 0.0\n0 1.0 0.0\n",
        "bad\n",
    ],
)
def test_moments_bad_input(text):
    with pytest.raises(ValueError):
        parse_moments(text)


def test_csv_deterministic(tmp_path):
    rows = [[1, 0.1 + 0.2, np.float64(1 / 3), "x"]]
    write_csv(tmp_path / "a.csv", ["i", "a", "b", "c"], rows)
    assert (tmp_path / "a.csv").read_text() == "i,a,b,c\n1,0.30000000000000004,0.3333333333333333,x\n"
