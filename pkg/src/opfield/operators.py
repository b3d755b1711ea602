"""Truncated field operators on span{vacuum} + grid and their algebra.

A :class:`FieldOperator` acts on states ``(f0, f)`` by

    f0' = sum_q w phi1*(q) f(q) + vac_vac f0
    f'  = f0 phi2(p) + sum_q w K(p, q) f(q)

so its matrix on the coefficient vector ``(f0, f)`` is the block matrix
``[[vac_vac, w phi1*], [phi2, w K]]``.  Quadrature weights enter once per
integration; the identity operator therefore has kernel ``I / w``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from .errors import GridMismatchError, SingularShellError
from .grid import MomentumGrid, Signature, pair_factors


def _check_grid(a: MomentumGrid, b: MomentumGrid) -> None:
    if not a.same_as(b):
        raise GridMismatchError(f"grid (d={a.d}, n={a.n}) vs (d={b.d}, n={b.n})")


@dataclass(frozen=True, eq=False)
class StateVector:
    """Vector ``(f0, f)``; the vacuum is orthonormal to every excited component."""

    grid: MomentumGrid
    f0: complex
    f: np.ndarray

    @classmethod
    def vacuum(cls, grid: MomentumGrid) -> "StateVector":
        return cls(grid, 1.0 + 0j, np.zeros(grid.size, dtype=complex))

    @property
    def coeffs(self) -> np.ndarray:
        return np.concatenate([[self.f0], self.f]).astype(complex)

    def norm(self) -> float:
        return math.sqrt(abs(self.f0) ** 2 + float(np.sum(self.grid.weights * np.abs(self.f) ** 2)))


@dataclass(frozen=True, eq=False)
class FieldOperator:
    grid: MomentumGrid
    vac_vac: complex
    vac_row: np.ndarray  # phi1*(q)
    vac_col: np.ndarray  # phi2(p)
    kernel: np.ndarray  # phi(p, q)

    def __post_init__(self) -> None:
        N = self.grid.size
        if np.shape(self.vac_row) != (N,) or np.shape(self.vac_col) != (N,):
            raise ValueError(f"vacuum row/column must have length {N}")
        if np.shape(self.kernel) != (N, N):
            raise ValueError(f"kernel must be {N}x{N}")

    # -- constructors -------------------------------------------------------

    @classmethod
    def from_blocks(cls, grid, vac_row=None, vac_col=None, kernel=None, vac_vac=0.0) -> "FieldOperator":
        N = grid.size
        row = np.zeros(N, complex) if vac_row is None else np.asarray(vac_row, complex).copy()
        col = np.zeros(N, complex) if vac_col is None else np.asarray(vac_col, complex).copy()
        ker = np.zeros((N, N), complex) if kernel is None else np.asarray(kernel, complex).copy()
        return cls(grid, complex(vac_vac), row, col, ker)

    @classmethod
    def zeros(cls, grid: MomentumGrid) -> "FieldOperator":
        return cls.from_blocks(grid)

    @classmethod
    def identity(cls, grid: MomentumGrid) -> "FieldOperator":
        return cls.from_blocks(grid, kernel=np.eye(grid.size) / grid.weight, vac_vac=1.0)

    @classmethod
    def from_matrix(cls, grid: MomentumGrid, matrix: np.ndarray) -> "FieldOperator":
        matrix = np.asarray(matrix, dtype=complex)
        N = grid.size
        if matrix.shape != (N + 1, N + 1):
            raise ValueError(f"expected {(N + 1, N + 1)} block matrix, got {matrix.shape}")
        w = grid.weight
        return cls(grid, complex(matrix[0, 0]), matrix[0, 1:] / w, matrix[1:, 0].copy(), matrix[1:, 1:] / w)

    @classmethod
    def from_weighted(cls, grid: MomentumGrid, weighted: np.ndarray) -> "FieldOperator":
        """Inverse of :attr:`weighted`: build from the sqrt(w)-symmetrized matrix."""
        s = _sqrt_weights(grid)
        return cls.from_matrix(grid, np.asarray(weighted) * (1.0 / s)[:, None] * s[None, :])

    @classmethod
    def random(
        cls,
        grid: MomentumGrid,
        rng: np.random.Generator,
        *,
        scale: float = 1.0,
        hermitian: bool = False,
        vac_vac: bool = False,
    ) -> "FieldOperator":
        """Random operator with unit-ish operator norm times ``scale``.

        Entries are drawn in the weighted (orthonormal) picture so that norms are
        comparable across grid sizes.  ``vac_vac=False`` keeps <0|op|0> = 0.
        """
        n1 = grid.size + 1
        a = rng.standard_normal((n1, n1)) + 1j * rng.standard_normal((n1, n1))
        if hermitian:
            a = 0.5 * (a + a.conj().T)
        if not vac_vac:
            a[0, 0] = 0.0
        a *= scale / (2.0 * math.sqrt(n1))
        return cls.from_weighted(grid, a)

    # -- views ---------------------------------------------------------------

    @cached_property
    def matrix(self) -> np.ndarray:
        """Block matrix acting on the coefficient vector (f0, f)."""
        N, w = self.grid.size, self.grid.weight
        m = np.empty((N + 1, N + 1), dtype=complex)
        m[0, 0] = self.vac_vac
        m[0, 1:] = self.vac_row * w
        m[1:, 0] = self.vac_col
        m[1:, 1:] = self.kernel * w
        m.setflags(write=False)
        return m

    @property
    def weighted(self) -> np.ndarray:
        """Matrix in the orthonormal picture, D M D^-1 with D = diag(1, sqrt(w), ...)."""
        s = _sqrt_weights(self.grid)
        return self.matrix * s[:, None] * (1.0 / s)[None, :]

    def adjoint(self) -> "FieldOperator":
        return FieldOperator(
            self.grid, self.vac_vac.conjugate(), self.vac_col.conj(), self.vac_row.conj(), self.kernel.conj().T
        )

    # -- arithmetic ----------------------------------------------------------

    def __add__(self, other: "FieldOperator") -> "FieldOperator":
        _check_grid(self.grid, other.grid)
        return FieldOperator(
            self.grid,
            self.vac_vac + other.vac_vac,
            self.vac_row + other.vac_row,
            self.vac_col + other.vac_col,
            self.kernel + other.kernel,
        )

    def __neg__(self) -> "FieldOperator":
        return self * -1.0

    def __sub__(self, other: "FieldOperator") -> "FieldOperator":
        return self + (-other)

    def __mul__(self, c) -> "FieldOperator":
        c = complex(c)
        return FieldOperator(self.grid, self.vac_vac * c, self.vac_row * c, self.vac_col * c, self.kernel * c)

    __rmul__ = __mul__

    def __matmul__(self, other: "FieldOperator") -> "FieldOperator":
        return compose(self, other)

    def norm(self) -> float:
        return operator_norm(self)

    def allclose(self, other: "FieldOperator", atol: float = 1e-12) -> bool:
        return self.grid.same_as(other.grid) and bool(np.allclose(self.matrix, other.matrix, rtol=0, atol=atol))


def _sqrt_weights(grid: MomentumGrid) -> np.ndarray:
    return np.concatenate([[1.0], np.sqrt(grid.weights)])


@dataclass(frozen=True, eq=False)
class VacuumProjector:
    """Projector onto the physical subspace; identity on the truncation unless a kernel is given.

    ``kernel`` uses the same units as :attr:`FieldOperator.kernel` (identity = I / w).
    The vacuum component is always kept.
    """

    kernel: np.ndarray | None = None
    tol: float = 1e-10

    @classmethod
    def identity(cls) -> "VacuumProjector":
        return cls()

    @classmethod
    def explicit(cls, grid: MomentumGrid, kernel: np.ndarray, tol: float = 1e-10) -> "VacuumProjector":
        proj = cls(np.asarray(kernel, dtype=complex), tol)
        proj.validate(grid)
        return proj

    @classmethod
    def diagonal(cls, grid: MomentumGrid, mask: Sequence[bool]) -> "VacuumProjector":
        """Projector keeping the grid points where ``mask`` is true."""
        mask = np.asarray(mask, dtype=float)
        return cls.explicit(grid, np.diag(mask) / grid.weight)

    @property
    def mode(self) -> str:
        return "identity" if self.kernel is None else "explicit"

    def as_operator(self, grid: MomentumGrid) -> FieldOperator:
        if self.kernel is None:
            return FieldOperator.identity(grid)
        return FieldOperator.from_blocks(grid, kernel=self.kernel, vac_vac=1.0)

    def kernel_on(self, grid: MomentumGrid) -> np.ndarray:
        if self.kernel is None:
            return np.eye(grid.size) / grid.weight
        return self.kernel

    def validate(self, grid: MomentumGrid) -> None:
        m = self.as_operator(grid).matrix
        if np.max(np.abs(m @ m - m)) > self.tol:
            raise ValueError("vacuum projector kernel is not idempotent")
        lam = grid.spectrum()
        for mu in range(grid.d):
            comm = (lam[:, mu][:, None] - lam[:, mu][None, :]) * m
            if np.max(np.abs(comm)) > self.tol:
                raise ValueError(f"vacuum projector does not commute with generator {mu}")


# -- operations ----------------------------------------------------------------


def apply_field(op: FieldOperator, s: StateVector) -> StateVector:
    _check_grid(op.grid, s.grid)
    out = op.matrix @ s.coeffs
    return StateVector(op.grid, complex(out[0]), out[1:])


def compose(a: FieldOperator, b: FieldOperator) -> FieldOperator:
    """Operator product ``a b`` (apply ``b`` first)."""
    _check_grid(a.grid, b.grid)
    return FieldOperator.from_matrix(a.grid, a.matrix @ b.matrix)


def vacuum_expectation(op: FieldOperator) -> complex:
    return complex(op.vac_vac)


def operator_norm(op: FieldOperator) -> float:
    """Largest singular value in the orthonormal (sqrt-weighted) picture."""
    return float(np.linalg.norm(op.weighted, 2))


def commutator(a: FieldOperator, b: FieldOperator) -> FieldOperator:
    return compose(a, b) - compose(b, a)


def generator_commutator(op: FieldOperator, mu: int) -> FieldOperator:
    """[P_mu, op]: entry (i, j) of the block matrix times lam_i - lam_j."""
    lam = op.grid.spectrum()[:, mu]
    return FieldOperator.from_matrix(op.grid, (lam[:, None] - lam[None, :]) * op.matrix)


def normal_order_powers(
    op: FieldOperator, k: int, projector: VacuumProjector | None = None
) -> list[FieldOperator]:
    """All normal-ordered powers N(op^0), ..., N(op^k).

    N(op^j) = op^j - sum_{i=1..j} C(j, i) <0|op^i|0> N(op^{j-i}), with the
    projector standing in for N(op^0) in the i = j term.
    """
    if k < 0:
        raise ValueError("power must be non-negative")
    projector = projector or VacuumProjector.identity()
    grid = op.grid
    pi_m = projector.as_operator(grid).matrix
    m = op.matrix
    n1 = grid.size + 1
    powers = [np.eye(n1, dtype=complex)]
    for _ in range(k):
        powers.append(powers[-1] @ m)
    vev = [p[0, 0] for p in powers]
    nord = [np.eye(n1, dtype=complex)]
    for j in range(1, k + 1):
        acc = powers[j].copy()
        for i in range(1, j + 1):
            if vev[i] != 0:
                acc -= math.comb(j, i) * vev[i] * (pi_m if i == j else nord[j - i])
        nord.append(acc)
    return [FieldOperator.from_matrix(grid, x) for x in nord]


def normal_order_power(op: FieldOperator, k: int, projector: VacuumProjector | None = None) -> FieldOperator:
    return normal_order_powers(op, k, projector)[k]


def _coeff_dict(coeffs) -> dict[int, complex]:
    if isinstance(coeffs, Mapping):
        out = {int(n): complex(c) for n, c in coeffs.items()}
    else:
        out = {n + 2: complex(c) for n, c in enumerate(coeffs)}
    bad = [n for n in out if n < 2]
    if bad:
        raise ValueError(f"potential coefficients must be indexed n >= 2, got {sorted(bad)}")
    return out


def normal_order_potential(op: FieldOperator, coeffs, projector: VacuumProjector | None = None) -> FieldOperator:
    """sum_n c_n N(op^n) for a finite coefficient set (mapping n -> c_n, or a list from n = 2)."""
    c = {n: v for n, v in _coeff_dict(coeffs).items() if v != 0}
    if not c:
        return FieldOperator.zeros(op.grid)
    nord = normal_order_powers(op, max(c), projector)
    total = np.zeros_like(op.matrix)
    for n, cn in c.items():
        total += cn * nord[n].matrix
    return FieldOperator.from_matrix(op.grid, total)


def big_T(op: FieldOperator, m: float, signature: Signature) -> FieldOperator:
    """P^2 op + op P^2 - 2 P op P + m^2 op, diagonal on basis pairs."""
    factors = pair_factors(op.grid, m, signature, +1)
    return FieldOperator.from_matrix(op.grid, op.matrix * factors)


def inv_T(op: FieldOperator, m: float, signature: Signature, floor: float | None = None) -> FieldOperator:
    """Entrywise inverse of :func:`big_T`.

    Euclidean factors are bounded below by m^2.  In other signatures a positive
    ``floor`` is mandatory and any factor below it raises.
    """
    if m <= 0:
        raise ValueError(f"mass must be positive, got {m}")
    factors = pair_factors(op.grid, m, signature, +1)
    if not signature.is_euclidean:
        if floor is None or floor <= 0:
            raise SingularShellError("non-Euclidean inv_T needs an explicit positive floor")
        worst = float(np.min(np.abs(factors)))
        if worst < floor:
            raise SingularShellError(f"shell factor {worst:.3e} below floor {floor:.3e}")
    return FieldOperator.from_matrix(op.grid, op.matrix / factors)
