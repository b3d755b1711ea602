import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from opfield.grid import (
    Signature,
    build_grid,
    kl_momentum,
    pair_factors,
    reflect_index,
    shell_gap,
    translation_generator,
)
from oracles import cot


def test_single_point_grid():
    g = build_grid(1, 1)
    assert g.size == 1
    assert g.coords[0, 0] == pytest.approx(math.pi / 2, abs=1e-15)
    assert g.momenta[0, 0] == 0.0


def test_two_point_grid():
    g = build_grid(1, 2)
    np.testing.assert_allclose(g.coords[:, 0], [math.pi / 4, 3 * math.pi / 4], atol=1e-15)
    np.testing.assert_allclose(g.momenta[:, 0], [-1.0, 1.0], atol=1e-15)


def test_weights_d2_n2():
    g = build_grid(2, 2)
    assert g.size == 4
    np.testing.assert_allclose(g.weights, (math.pi / 2) ** 2, rtol=1e-15)


@pytest.mark.parametrize("d,n", [(0, 1), (1, 0), (-1, 3), (2, -2)])
def test_invalid_dimensions(d, n):
    with pytest.raises(ValueError):
        build_grid(d, n)


def test_non_integer_dimensions():
    with pytest.raises(TypeError):
        build_grid(1.5, 2)


@given(st.integers(1, 3), st.integers(1, 7))
def test_grid_invariants(d, n):
    g = build_grid(d, n)
    assert g.coords.shape == (n**d, d) and g.momenta.shape == (n**d, d)
    assert np.all(g.coords > 0) and np.all(g.coords < math.pi)
    axis = math.pi * (np.arange(n) + 0.5) / n
    assert set(np.round(g.coords.ravel(), 14)) <= set(np.round(axis, 14))
    np.testing.assert_allclose(g.momenta, np.tan(g.coords - math.pi / 2), rtol=1e-14, atol=1e-15)
    assert np.all(np.isfinite(g.momenta))
    assert g.integrate(np.ones(g.size)) == pytest.approx(math.pi**d, rel=1e-12)


@given(st.integers(1, 3), st.integers(1, 7))
def test_reflection_negates_momenta_exactly(d, n):
    g = build_grid(d, n)
    for axis in range(d):
        perm = reflect_index(g, axis)
        np.testing.assert_array_equal(g.momenta[perm, axis], -g.momenta[:, axis])
        others = [a for a in range(d) if a != axis]
        np.testing.assert_array_equal(g.momenta[perm][:, others], g.momenta[:, others])


def test_generator_two_point():
    np.testing.assert_allclose(translation_generator(build_grid(1, 2), 0), [0.0, -1.0, 1.0], atol=1e-15)


def test_generator_single_point():
    np.testing.assert_array_equal(translation_generator(build_grid(1, 1), 0), [0.0, 0.0])


def test_generator_second_axis_depends_on_second_coordinate():
    g = build_grid(2, 2)
    lam = translation_generator(g, 1)
    assert lam[0] == 0.0
    expected = [math.tan(c[1] - math.pi / 2) for c in g.coords]
    np.testing.assert_allclose(lam[1:], expected, atol=1e-14)
    by_coord = {}
    for c, v in zip(g.coords[:, 1], lam[1:]):
        by_coord.setdefault(round(c, 12), set()).add(v)
    assert all(len(vals) == 1 for vals in by_coord.values())


def test_generator_axis_out_of_range():
    with pytest.raises(IndexError):
        translation_generator(build_grid(2, 2), 2)


def test_kl_momentum_quarter():
    got = kl_momentum([1.25, 0.0, 0.0])
    np.testing.assert_allclose(got, [cot(0.25) / math.pi, 0.0, 0.0], rtol=1e-14)


def test_kl_momentum_half():
    got = kl_momentum([2.5])
    np.testing.assert_allclose(got, [cot(0.5) / math.pi], rtol=1e-14)


@given(st.lists(st.floats(-5, 5), min_size=1, max_size=4))
def test_kl_momentum_parallel(p):
    p = np.array(p)
    r = np.linalg.norm(p)
    frac = r - math.floor(r)
    if r < 1e-6 or frac < 1e-6:
        return
    v = kl_momentum(p)
    scale = cot(frac) / (math.pi * r)
    np.testing.assert_allclose(v, scale * p, rtol=1e-12, atol=1e-300)


@pytest.mark.parametrize("p", [[0.0, 0.0], [1.0], [0.0, 2.0]])
def test_kl_momentum_singular(p):
    with pytest.raises(ValueError):
        kl_momentum(p)


def test_signatures():
    np.testing.assert_array_equal(Signature.euclidean(3).metric, np.eye(3))
    np.testing.assert_array_equal(Signature.minkowski(4).metric, np.diag([1.0, -1, -1, -1]))
    assert Signature.from_name("minkowski", 2).diag == (1.0, -1.0)
    with pytest.raises(ValueError):
        Signature.from_name("lorentzian", 2)


def test_shell_gap_computable():
    g = build_grid(2, 3)
    assert shell_gap(g, 1.0, Signature.euclidean(2)) == pytest.approx(1.0)
    mink = shell_gap(g, 1.0, Signature.minkowski(2))
    brute = min(
        abs(1.0 + (a[0] - b[0]) ** 2 - (a[1] - b[1]) ** 2)
        for a in g.spectrum()
        for b in g.spectrum()
    )
    assert mink == pytest.approx(brute, abs=1e-12)


def test_pair_factors_signature_mismatch():
    with pytest.raises(ValueError):
        pair_factors(build_grid(2, 2), 1.0, Signature.euclidean(3))
