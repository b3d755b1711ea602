"""Piecewise-polynomial basis on which multiplication by -ip shifts multi-indices.

For k-argument coefficients f_{n_1..n_k} (d = 1) we build single-argument
functions e~_{n_1..n_k}(p) with

    -ip e~_{n}(p) = sum_j e~_{n + e_j}(p).

The base elements (last index 1) are unit indicators placed by a bijection
N^{k-1} -> Z; higher last indices follow from solving the relation above for
the k-th raised term.  Pieces live on unit intervals [z, z+1).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from numbers import Number
from typing import Iterable, Mapping

import numpy as np
import sympy as sp
from sympy import QQ_I

_ZERO = QQ_I.zero
_ONE = QQ_I.one
_MINUS_I = QQ_I(0, -1)


def to_exact(x):
    """Convert a Python/sympy scalar to a Gaussian rational (QQ_I element)."""
    if isinstance(x, type(_ONE)):
        return x
    if isinstance(x, (int, np.integer)):
        return QQ_I(int(x), 0)
    if isinstance(x, Fraction):
        return QQ_I.from_sympy(sp.Rational(x.numerator, x.denominator))
    if isinstance(x, (complex, float, np.complexfloating, np.floating)):
        z = complex(x)
        re, im = Fraction(z.real), Fraction(z.imag)
        return QQ_I.from_sympy(sp.Rational(re.numerator, re.denominator) + sp.I * sp.Rational(im.numerator, im.denominator))
    return QQ_I.from_sympy(sp.sympify(x))


def _to_complex(c) -> complex:
    return complex(QQ_I.to_sympy(c)) if isinstance(c, type(_ONE)) else complex(c)


def _trim(coeffs: tuple) -> tuple:
    end = len(coeffs)
    while end and not coeffs[end - 1]:
        end -= 1
    return coeffs[:end]


@dataclass(frozen=True)
class PiecewisePoly:
    """Map from interval index z (interval [z, z+1)) to ascending polynomial coefficients in p.

    ``exact`` pieces hold QQ_I elements; otherwise complex floats.
    """

    pieces: Mapping[int, tuple]
    exact: bool = True

    @classmethod
    def zero(cls, exact: bool = True) -> "PiecewisePoly":
        return cls({}, exact)

    @classmethod
    def indicator(cls, z: int) -> "PiecewisePoly":
        return cls({int(z): (_ONE,)}, True)

    def _zero_scalar(self):
        return _ZERO if self.exact else 0j

    def _build(self, raw: dict[int, tuple], exact: bool) -> "PiecewisePoly":
        clean = {}
        for z in sorted(raw):
            t = _trim(raw[z])
            if t:
                clean[z] = t
        return PiecewisePoly(clean, exact)

    def to_float(self) -> "PiecewisePoly":
        if not self.exact:
            return self
        return PiecewisePoly({z: tuple(_to_complex(c) for c in cs) for z, cs in self.pieces.items()}, False)

    def __add__(self, other: "PiecewisePoly") -> "PiecewisePoly":
        if self.exact != other.exact:
            return self.to_float() + other.to_float()
        zero = self._zero_scalar()
        out: dict[int, tuple] = {}
        for z in set(self.pieces) | set(other.pieces):
            a, b = self.pieces.get(z, ()), other.pieces.get(z, ())
            n = max(len(a), len(b))
            a = a + (zero,) * (n - len(a))
            b = b + (zero,) * (n - len(b))
            out[z] = tuple(x + y for x, y in zip(a, b))
        return self._build(out, self.exact)

    def scale(self, c) -> "PiecewisePoly":
        if self.exact:
            try:
                c = to_exact(c)
            except (TypeError, ValueError, sp.SympifyError):
                return self.to_float().scale(c)
        else:
            c = complex(c)
        return self._build({z: tuple(c * x for x in cs) for z, cs in self.pieces.items()}, self.exact)

    def __neg__(self) -> "PiecewisePoly":
        return self.scale(-1)

    def __sub__(self, other: "PiecewisePoly") -> "PiecewisePoly":
        return self + (-other)

    def times_minus_ip(self) -> "PiecewisePoly":
        """Multiply by -i p (shift coefficients up one degree)."""
        f = _MINUS_I if self.exact else -1j
        zero = self._zero_scalar()
        return self._build({z: (zero,) + tuple(f * x for x in cs) for z, cs in self.pieces.items()}, self.exact)

    def degree(self) -> int:
        return max((len(cs) - 1 for cs in self.pieces.values()), default=-1)

    def is_zero(self, tol: float = 0.0) -> bool:
        if self.exact:
            return not self.pieces
        return all(abs(c) <= tol for cs in self.pieces.values() for c in cs)

    def max_coeff(self) -> float:
        return max((abs(_to_complex(c)) for cs in self.pieces.values() for c in cs), default=0.0)

    def __call__(self, p) -> np.ndarray:
        p = np.atleast_1d(np.asarray(p, dtype=float))
        out = np.zeros(p.shape, dtype=complex)
        z = np.floor(p).astype(int)
        for zz, cs in self.pieces.items():
            sel = z == zz
            if np.any(sel):
                coeffs = np.array([_to_complex(c) for c in cs])
                out[sel] = np.polynomial.polynomial.polyval(p[sel], coeffs)
        return out

    def dump(self) -> list[tuple[int, list[str]]]:
        return [(z, [str(QQ_I.to_sympy(c)) if self.exact else repr(complex(c)) for c in cs]) for z, cs in self.pieces.items()]


PiecewisePolyBasis = PiecewisePoly


# -- index bijection -------------------------------------------------------------


def cantor_pair(a: int, b: int) -> int:
    """Bijection N x N -> N on positive integers."""
    x, y = a - 1, b - 1
    return (x + y) * (x + y + 1) // 2 + y + 1


def zigzag(n: int) -> int:
    """1, 2, 3, 4, 5, ... -> 0, 1, -1, 2, -2, ..."""
    return n // 2 if n % 2 == 0 else -(n - 1) // 2


def pairing_bijection(t: tuple[int, ...]) -> int:
    """Injective map N^{k-1} -> Z used to place base indicators."""
    t = tuple(int(v) for v in t)
    if not t:
        raise ValueError("pairing needs a non-empty tuple (k >= 2)")
    if any(v < 1 for v in t):
        raise ValueError(f"indices must be positive, got {t}")
    n = t[0]
    for v in t[1:]:
        n = cantor_pair(n, v)
    return zigzag(n)


def base_element(t: tuple[int, ...]) -> PiecewisePoly:
    return PiecewisePoly.indicator(pairing_bijection(t))


# -- basis table -------------------------------------------------------------------


class LevelNotBuiltError(LookupError):
    """A predecessor element needed by the recurrence is missing from the table."""


class BasisTable:
    """Memoized e~ elements for a fixed argument count ``k`` (d = 1)."""

    def __init__(self, k: int):
        if k < 2:
            raise ValueError("argument count k must be >= 2")
        self.k = k
        self._elements: dict[tuple[int, ...], PiecewisePoly] = {}

    def __contains__(self, n) -> bool:
        return tuple(n) in self._elements

    def __len__(self) -> int:
        return len(self._elements)

    def items(self):
        return sorted(self._elements.items())

    def _check(self, n: tuple[int, ...]) -> tuple[int, ...]:
        n = tuple(int(v) for v in n)
        if len(n) != self.k or any(v < 1 for v in n):
            raise ValueError(f"expected {self.k} positive indices, got {n}")
        return n

    def put_base(self, prefix: tuple[int, ...]) -> PiecewisePoly:
        n = self._check(tuple(prefix) + (1,))
        el = self._elements.get(n)
        if el is None:
            el = self._elements[n] = base_element(n[:-1])
        return el

    def element(self, n) -> PiecewisePoly:
        """Element for multi-index ``n``, building predecessors on demand."""
        n = self._check(n)
        if n in self._elements:
            return self._elements[n]
        if n[-1] == 1:
            return self.put_base(n[:-1])
        prev = n[:-1] + (n[-1] - 1,)
        self.element(prev)
        for j in range(self.k - 1):
            self.element(_raise(prev, j))
        return raise_index(self, n)

    def build_box(self, max_prefix: int, max_level: int) -> list[tuple[int, ...]]:
        """Build every element with prefix entries <= max_prefix and last index <= max_level."""
        keys = []
        for prefix in itertools.product(range(1, max_prefix + 1), repeat=self.k - 1):
            for level in range(1, max_level + 1):
                n = prefix + (level,)
                self.element(n)
                keys.append(n)
        return keys

    def dump_text(self) -> str:
        lines = []
        for n, el in self.items():
            body = "; ".join(f"{z}: [{', '.join(cs)}]" for z, cs in el.dump())
            lines.append(f"{' '.join(map(str, n))} -> {body}")
        return "\n".join(lines) + "\n"


def _raise(n: tuple[int, ...], j: int) -> tuple[int, ...]:
    return n[:j] + (n[j] + 1,) + n[j + 1 :]


def raise_index(table: BasisTable, target) -> PiecewisePoly:
    """e~_{.., n_k + 1} = (-ip) e~_{.., n_k} - sum_{j<k} e~_{.., n_j + 1, .., n_k}.

    All elements at the predecessor level must already be in ``table``.
    """
    target = table._check(target)
    if target[-1] < 2:
        raise ValueError("raise_index targets last index >= 2; use the base indicator otherwise")
    prev = target[:-1] + (target[-1] - 1,)
    needed = [prev] + [_raise(prev, j) for j in range(table.k - 1)]
    missing = [t for t in needed if t not in table]
    if missing:
        raise LevelNotBuiltError(f"predecessors not built: {missing}")
    el = table._elements[prev].times_minus_ip()
    for t in needed[1:]:
        el = el - table._elements[t]
    table._elements[target] = el
    return el


# -- coefficient maps ----------------------------------------------------------------

MultiIndexCoefficients = Mapping[tuple[int, ...], Number]


def v_map(coeffs: MultiIndexCoefficients, table: BasisTable, exact: bool | None = None) -> PiecewisePoly:
    """sum_t c_t e~_t.  Exact when every coefficient converts to a Gaussian rational and ``exact`` allows it."""
    if exact is None:
        exact = all(isinstance(c, (int, Fraction, np.integer, sp.Basic)) for c in coeffs.values())
    total = PiecewisePoly.zero(exact)
    for t, c in coeffs.items():
        if not c:
            continue
        el = table.element(t)
        total = total + (el.scale(c) if exact else el.to_float().scale(c))
    return total


def shift(coeffs: MultiIndexCoefficients) -> dict[tuple[int, ...], Number]:
    """Coefficient-level image of the total derivative: each index raised once, summed over positions."""
    out: dict[tuple[int, ...], Number] = {}
    for t, c in coeffs.items():
        t = tuple(t)
        for j in range(len(t)):
            u = _raise(t, j)
            out[u] = out.get(u, 0) + c
    return out


def check_intertwining(
    coeffs: MultiIndexCoefficients, table: BasisTable, samples_per_piece: int = 8, exact: bool | None = None
) -> float:
    """Max |v_map(shift(c)) - (-ip) v_map(c)| over sample points in every piece."""
    lhs = v_map(shift(coeffs), table, exact)
    rhs = v_map(coeffs, table, exact).times_minus_ip()
    zs = sorted(set(lhs.pieces) | set(rhs.pieces))
    if not zs:
        return 0.0
    frac = (np.arange(samples_per_piece) + 0.5) / samples_per_piece
    pts = np.concatenate([z + frac for z in zs])
    return float(np.max(np.abs(lhs(pts) - rhs(pts))))


def recurrence_defect(table: BasisTable, n) -> PiecewisePoly:
    """(-ip) e~_n - sum_j e~_{n + e_j}; identically zero for a consistent table."""
    n = table._check(n)
    out = table.element(n).times_minus_ip()
    for j in range(table.k):
        out = out - table.element(_raise(n, j))
    return out


def independence_rank(elements: Iterable[PiecewisePoly]) -> tuple[int, int]:
    """(rank, count) of the coefficient vectors of ``elements`` over (interval, degree) slots."""
    els = list(elements)
    slots = sorted({(z, d) for e in els for z, cs in e.pieces.items() for d in range(len(cs))})
    index = {s: i for i, s in enumerate(slots)}
    mat = sp.zeros(len(els), len(slots))
    for r, e in enumerate(els):
        for z, cs in e.pieces.items():
            for d, c in enumerate(cs):
                mat[r, index[(z, d)]] = QQ_I.to_sympy(c) if e.exact else sp.nsimplify(complex(c))
    return mat.rank(), len(els)
