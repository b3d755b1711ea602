"""Finite GNS reconstruction from tabulated n-point functions.

Words are tuples of sample-point indices; the word ``u`` stands for the vector
phi(x_{u_1}) ... phi(x_{u_k}) |0>.  For a Hermitian scalar field the inner
product of two words is w(reverse(u) + v).  Null directions of the Gram matrix
are quotiented out numerically and the field is represented by its compression
onto the span of words of length <= L.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import IncompleteTableError, NotPositiveFunctionalError, TruncationWarning


@dataclass
class MomentTable:
    points: np.ndarray
    values: dict[tuple[int, ...], complex]
    max_word: int

    def __post_init__(self) -> None:
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        if self.max_word < 0:
            raise ValueError("max_word must be non-negative")

    @property
    def num_points(self) -> int:
        return len(self.points)

    @property
    def order(self) -> int:
        """Largest k such that every tuple of length <= k is present."""
        k = 0
        while all(t in self.values for t in itertools.product(range(self.num_points), repeat=k + 1)):
            k += 1
            if k > 64:
                break
        return k if () in self.values else -1

    def value(self, t) -> complex:
        try:
            return self.values[tuple(t)]
        except KeyError:
            raise IncompleteTableError(f"moment {tuple(t)} missing from table") from None

    def hermiticity_defect(self) -> float:
        """max |w(t)* - w(reverse t)| over the table."""
        worst = 0.0
        for t, v in self.values.items():
            r = self.values.get(tuple(reversed(t)))
            if r is not None:
                worst = max(worst, abs(np.conj(v) - r))
        return worst


def words(num_points: int, max_len: int) -> list[tuple[int, ...]]:
    out: list[tuple[int, ...]] = []
    for k in range(max_len + 1):
        out.extend(itertools.product(range(num_points), repeat=k))
    return out


def build_gram(table: MomentTable) -> np.ndarray:
    """G[u, v] = w(reverse(u) + v) over all words of length <= L."""
    ws = words(table.num_points, table.max_word)
    G = np.empty((len(ws), len(ws)), dtype=complex)
    for a, u in enumerate(ws):
        ru = tuple(reversed(u))
        for b, v in enumerate(ws):
            G[a, b] = table.value(ru + v)
    return G


@dataclass
class Quotient:
    basis: np.ndarray  # words x rank; columns are orthonormal quotient vectors
    eigenvalues: np.ndarray
    rank: int
    rank_tolerance: float

    @property
    def condition(self) -> float:
        kept = self.eigenvalues[self.eigenvalues > self.rank_tolerance]
        return float(kept.max() / kept.min()) if kept.size else float("inf")


def quotient_null_space(G: np.ndarray, rel_tol: float = 1e-8) -> Quotient:
    """Orthonormal basis of G's range above ``rel_tol * max eigenvalue``.

    Raises NotPositiveFunctionalError if an eigenvalue is below ``-rel_tol * max``.
    """
    G = np.asarray(G, dtype=complex)
    if np.max(np.abs(G - G.conj().T), initial=0.0) > 1e-10 * max(1.0, np.max(np.abs(G))):
        raise ValueError("Gram matrix is not Hermitian")
    evals, evecs = np.linalg.eigh(0.5 * (G + G.conj().T))
    top = max(float(evals.max()), 0.0)
    tol = rel_tol * top
    if evals.min() < -tol:
        raise NotPositiveFunctionalError(f"Gram eigenvalue {evals.min():.3e} below -{tol:.3e}")
    keep = evals > tol
    basis = evecs[:, keep] / np.sqrt(evals[keep])[None, :]
    return Quotient(basis=basis, eigenvalues=evals, rank=int(keep.sum()), rank_tolerance=tol)


@dataclass
class CyclicRepresentation:
    dim: int
    vacuum: np.ndarray
    field_ops: list[np.ndarray]
    gram: np.ndarray
    rank_tolerance: float
    truncated: bool
    boundary_leakage: list[float] | None = None
    notes: list[str] = field(default_factory=list)

    def moment(self, word) -> complex:
        """<Phi, M_{i1} ... M_{ik} Phi>."""
        v = self.vacuum
        for i in reversed(tuple(word)):
            v = self.field_ops[i] @ v
        return complex(np.vdot(self.vacuum, v))

    def change_basis(self, unitary: np.ndarray) -> "CyclicRepresentation":
        U = np.asarray(unitary)
        return CyclicRepresentation(
            dim=self.dim,
            vacuum=U.conj().T @ self.vacuum,
            field_ops=[U.conj().T @ M @ U for M in self.field_ops],
            gram=self.gram,
            rank_tolerance=self.rank_tolerance,
            truncated=self.truncated,
            boundary_leakage=self.boundary_leakage,
            notes=list(self.notes),
        )


def represent_field(table: MomentTable, q: Quotient, gram: np.ndarray | None = None) -> CyclicRepresentation:
    """Compress each phi(x_i) onto the quotient of words of length <= L.

    Needs moments to order 2L+1.  With order 2L+2 the norm of the part of
    phi(x_i) pushed out of the truncation is measured; otherwise the boundary
    action is flagged as truncated.
    """
    L, P = table.max_word, table.num_points
    ws = words(P, L)
    B = q.basis
    if gram is None:
        gram = build_gram(table)
    reversed_words = [tuple(reversed(u)) for u in ws]
    ops = []
    for i in range(P):
        H = np.array([[table.value(ru + (i,) + v) for v in ws] for ru in reversed_words], dtype=complex)
        ops.append(B.conj().T @ H @ B)
    vacuum = B.conj().T @ gram[:, 0]

    notes: list[str] = []
    leakage = None
    has_boundary = all(
        t in table.values for t in itertools.product(range(P), repeat=2 * L + 2)
    )
    if has_boundary:
        leakage = []
        for i in range(P):
            K = np.array([[table.value(ru + (i, i) + v) for v in ws] for ru in reversed_words], dtype=complex)
            out = B.conj().T @ K @ B - ops[i].conj().T @ ops[i]
            lam = np.linalg.eigvalsh(0.5 * (out + out.conj().T))
            leakage.append(float(np.sqrt(max(lam.max(initial=0.0), 0.0))))
        truncated = max(leakage, default=0.0) > 1e-8
        if truncated:
            notes.append("boundary words leave the truncated span; compression is exact only for interior words")
    else:
        truncated = True
        msg = f"moment table lacks order {2 * L + 2}; boundary action of length-{L} words is truncated"
        notes.append(msg)
        warnings.warn(msg, TruncationWarning, stacklevel=2)
    return CyclicRepresentation(
        dim=q.rank,
        vacuum=vacuum,
        field_ops=ops,
        gram=gram,
        rank_tolerance=q.rank_tolerance,
        truncated=truncated,
        boundary_leakage=leakage,
        notes=notes,
    )


def reconstruct(table: MomentTable, rel_tol: float = 1e-8) -> tuple[CyclicRepresentation, Quotient]:
    G = build_gram(table)
    q = quotient_null_space(G, rel_tol)
    return represent_field(table, q, G), q


def covered_words(table: MomentTable) -> list[tuple[int, ...]]:
    """Tuples of length <= 2L+1 present in the table; these are exact in the compression."""
    limit = 2 * table.max_word + 1
    return sorted((t for t in table.values if len(t) <= limit), key=lambda t: (len(t), t))


def round_trip_error(rep: CyclicRepresentation, table: MomentTable) -> float:
    """max |<Phi, M..M Phi> - w(t)| over :func:`covered_words`."""
    return max((abs(rep.moment(t) - table.values[t]) for t in covered_words(table)), default=0.0)


# -- Gaussian (Wick) moments ---------------------------------------------------------


def wick_moments(two_point: np.ndarray, order: int, points=None, max_word: int | None = None) -> MomentTable:
    """Moment table of the quasi-free state with the given two-point matrix."""
    W = np.asarray(two_point, dtype=complex)
    P = W.shape[0]
    if W.shape != (P, P):
        raise ValueError("two-point table must be square")
    if np.max(np.abs(W - W.conj().T)) > 1e-10:
        raise ValueError("two-point table must be Hermitian")
    if np.linalg.eigvalsh(W).min() < -1e-10:
        warnings.warn("two-point matrix is not PSD; Gram positivity may fail", RuntimeWarning, stacklevel=2)
    cache: dict[tuple[int, ...], complex] = {(): 1.0 + 0j}

    def val(s):
        if s in cache:
            return cache[s]
        if len(s) % 2:
            cache[s] = 0j
            return 0j
        total = 0j
        first, rest = s[0], s[1:]
        for j in range(len(rest)):
            total += W[first, rest[j]] * val(rest[:j] + rest[j + 1 :])
        cache[s] = total
        return total

    values = {}
    for k in range(order + 1):
        for t in itertools.product(range(P), repeat=k):
            values[t] = val(t)
    if points is None:
        points = np.arange(P, dtype=float)[:, None]
    if max_word is None:
        max_word = order // 2
    return MomentTable(points=np.asarray(points, dtype=float), values=values, max_word=max_word)


def random_two_point(num_points: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random Hermitian PSD two-point table A A^H, normalized to unit largest eigenvalue."""
    r = num_points if rank is None else rank
    A = rng.standard_normal((num_points, r)) + 1j * rng.standard_normal((num_points, r))
    W = A @ A.conj().T
    return W / np.linalg.eigvalsh(W).max()
