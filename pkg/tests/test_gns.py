import itertools

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given
from hypothesis import strategies as st

from opfield.errors import IncompleteTableError, NotPositiveFunctionalError, TruncationWarning
from opfield.gns import (
    MomentTable,
    build_gram,
    covered_words,
    quotient_null_space,
    random_two_point,
    reconstruct,
    represent_field,
    round_trip_error,
    wick_moments,
    words,
)
from oracles import wick_pairings, wick_value


def test_gram_L0():
    table = MomentTable(points=[[0.0]], values={(): 1.0}, max_word=0)
    np.testing.assert_array_equal(build_gram(table), [[1.0]])


def test_gram_L1_single_point():
    c = 2.5
    table = MomentTable(points=[[0.0]], values={(): 1.0, (0,): 0.0, (0, 0): c}, max_word=1)
    np.testing.assert_array_equal(build_gram(table), [[1, 0], [0, c]])


def test_gram_missing_entry():
    table = MomentTable(points=[[0.0]], values={(): 1.0, (0,): 0.0}, max_word=1)
    with pytest.raises(IncompleteTableError):
        build_gram(table)


@given(st.integers(0, 2**32 - 1), st.integers(1, 3))
def test_wick_gram_psd(seed, P):
    W = random_two_point(P, np.random.default_rng(seed))
    G = build_gram(wick_moments(W, 4, max_word=2))
    np.testing.assert_allclose(G, G.conj().T, atol=1e-12)
    assert np.linalg.eigvalsh(G).min() >= -1e-10 * np.abs(G).max()


def test_quotient_examples():
    assert quotient_null_space(np.diag([1.0, 0.0])).rank == 1
    q = quotient_null_space(np.eye(5))
    assert q.rank == 5
    assert q.condition == pytest.approx(1.0)


def test_quotient_rejects_negative():
    with pytest.raises(NotPositiveFunctionalError):
        quotient_null_space(np.diag([1.0, -0.5]))


def test_quotient_rejects_non_hermitian():
    with pytest.raises(ValueError):
        quotient_null_space(np.array([[1.0, 1.0], [0.0, 1.0]]))


def test_quotient_basis_orthonormal_in_gram_metric(rng):
    W = random_two_point(2, rng)
    G = build_gram(wick_moments(W, 4, max_word=2))
    q = quotient_null_space(G)
    np.testing.assert_allclose(q.basis.conj().T @ G @ q.basis, np.eye(q.rank), atol=1e-9)


def test_repeated_point_rank_matches_svd_rank(rng):
    base = random_two_point(2, rng)
    # third sample point duplicates the first
    idx = [0, 1, 0]
    W = base[np.ix_(idx, idx)]
    G = build_gram(wick_moments(W, 4, max_word=2))
    q = quotient_null_space(G)
    sv = scipy.linalg.svdvals(G)
    assert q.rank == int(np.sum(sv > 1e-8 * sv.max()))
    assert q.rank < G.shape[0]


def test_wick_two_point_reproduced(rng):
    W = random_two_point(3, rng)
    table = wick_moments(W, 2)
    for i, j in itertools.product(range(3), repeat=2):
        assert table.value((i, j)) == W[i, j]
    assert table.value((1,)) == 0
    assert table.value(()) == 1


def test_wick_four_point_three_pairings(rng):
    W = random_two_point(4, rng)
    table = wick_moments(W, 4)
    got = table.value((0, 1, 2, 3))
    assert abs(got - (W[0, 1] * W[2, 3] + W[0, 2] * W[1, 3] + W[0, 3] * W[1, 2])) < 1e-14


def test_wick_six_point_enumeration(rng):
    W = random_two_point(3, rng)
    table = wick_moments(W, 6)
    for t in itertools.product(range(3), repeat=6):
        assert abs(table.value(t) - wick_value(W, t)) < 1e-13
    assert sum(1 for _ in wick_pairings(list(range(6)))) == 15


def test_wick_input_validation(rng):
    with pytest.raises(ValueError):
        wick_moments(np.array([[1.0, 2.0], [0.0, 1.0]]), 2)
    with pytest.warns(RuntimeWarning):
        wick_moments(np.array([[1.0, 2.0], [2.0, 1.0]]), 2)


def test_wick_table_hermitian(rng):
    table = wick_moments(random_two_point(3, rng), 5)
    assert table.hermiticity_defect() < 1e-12
    assert table.order == 5


def test_represent_low_moments(rng):
    W = random_two_point(3, rng)
    table = wick_moments(W, 4, max_word=1)
    rep, _ = reconstruct(table)
    assert abs(np.linalg.norm(rep.vacuum) - 1) < 1e-10
    for i in range(3):
        assert abs(rep.moment((i,)) - table.value((i,))) < 1e-10
    for i, j in itertools.product(range(3), repeat=2):
        assert abs(rep.moment((i, j)) - W[i, j]) < 1e-10


def test_round_trip_L2(rng):
    W = random_two_point(3, rng)
    table = wick_moments(W, 6, max_word=2)
    rep, q = reconstruct(table)
    assert round_trip_error(rep, table) <= 1e-8
    four = [t for t in covered_words(table) if len(t) == 4]
    assert len(four) == 81
    assert q.eigenvalues.min() >= -1e-10


def test_truncation_flagged_without_boundary_order(rng):
    table = wick_moments(random_two_point(2, rng), 5, max_word=2)
    with pytest.warns(TruncationWarning):
        rep, _ = reconstruct(table)
    assert rep.truncated and rep.boundary_leakage is None and rep.notes
    assert round_trip_error(rep, table) <= 1e-8


def test_boundary_leakage_measured(rng):
    table = wick_moments(random_two_point(2, rng), 6, max_word=2)
    rep, _ = reconstruct(table)
    assert rep.boundary_leakage is not None and len(rep.boundary_leakage) == 2


def test_cyclicity(rng):
    table = wick_moments(random_two_point(3, rng), 6, max_word=2)
    rep, q = reconstruct(table)
    vecs = []
    for u in words(3, 2):
        v = rep.vacuum
        for i in reversed(u):
            v = rep.field_ops[i] @ v
        vecs.append(v)
    assert np.linalg.matrix_rank(np.array(vecs).T, tol=1e-6) == rep.dim


def test_basis_stability(rng):
    table = wick_moments(random_two_point(3, rng), 6, max_word=2)
    rep, _ = reconstruct(table)
    Z = rng.standard_normal((rep.dim, rep.dim)) + 1j * rng.standard_normal((rep.dim, rep.dim))
    U, _ = np.linalg.qr(Z)
    rotated = rep.change_basis(U)
    for t in covered_words(table):
        assert abs(rotated.moment(t) - rep.moment(t)) < 1e-10


def test_represent_field_requires_order(rng):
    table = wick_moments(random_two_point(2, rng), 4, max_word=2)
    G = build_gram(table)
    with pytest.raises(IncompleteTableError):
        represent_field(table, quotient_null_space(G), G)
