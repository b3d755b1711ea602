"""Vacuum n-point functions of a truncated field operator.

Two independent evaluators:

* :func:`vacuum_npoint` follows the chain formula for the connected pieces
  W(x_1..x_k) and the recursion over the first return to the vacuum;
* :func:`brute_force_npoint` multiplies translated block matrices
  phi(x) = exp(-iPx) phi exp(iPx) and reads off the vacuum-vacuum entry.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Sequence

import numpy as np

from .grid import Signature
from .operators import FieldOperator


def _points(points, d: int) -> np.ndarray:
    x = np.asarray(points, dtype=float)
    if x.ndim == 1:
        x = x.reshape(-1, d) if d > 1 else x[:, None]
    if x.ndim != 2 or x.shape[1] != d:
        raise ValueError(f"points must be a sequence of {d}-vectors")
    if not np.all(np.isfinite(x)):
        raise ValueError("points must be finite")
    return x


def _phase(op: FieldOperator, dx: np.ndarray, signature: Signature) -> np.ndarray:
    """exp(i (p, dx)) per grid point, contraction through the metric."""
    return np.exp(1j * signature.dot(op.grid.momenta, dx[None, :]))


def connected_w(op: FieldOperator, points, signature: Signature | None = None) -> complex:
    """Chain phi1*(p1) e^{i p1(x1-x2)} phi(p1,p2) ... phi2(p_{k-1}) with quadrature sums."""
    signature = signature or Signature.euclidean(op.grid.d)
    x = _points(points, op.grid.d)
    k = len(x)
    if k < 2:
        raise ValueError("connected_w needs at least two points")
    w = op.grid.weight
    v = op.vac_row * w * _phase(op, x[0] - x[1], signature)
    kw = op.kernel * w
    for i in range(1, k - 1):
        v = (v @ kw) * _phase(op, x[i] - x[i + 1], signature)
    return complex(v @ op.vac_col)


def vacuum_npoint(op: FieldOperator, points, signature: Signature | None = None) -> complex:
    """<0|phi(x_1)...phi(x_n)|0> by decomposition over the first vacuum return.

    The vacuum-vacuum entry contributes a leading ``vac_vac * <rest>`` term; it
    vanishes for the usual <0|phi|0> = 0 fields.
    """
    signature = signature or Signature.euclidean(op.grid.d)
    x = _points(points, op.grid.d)
    n = len(x)

    @lru_cache(maxsize=None)
    def tail(start: int) -> complex:
        if start == n:
            return 1.0 + 0j
        total = op.vac_vac * tail(start + 1)
        for stop in range(start + 2, n + 1):
            total += connected_w(op, x[start:stop], signature) * tail(stop)
        return total

    return complex(tail(0))


def translated_matrix(op: FieldOperator, x: np.ndarray, signature: Signature) -> np.ndarray:
    """Block matrix of phi(x) = E(-x) phi E(x), E(x) = diag(1, e^{i (p, x)})."""
    e = np.concatenate([[1.0 + 0j], _phase(op, np.asarray(x, float), signature)])
    return e.conj()[:, None] * op.matrix * e[None, :]


def brute_force_npoint(op: FieldOperator, points, signature: Signature | None = None) -> complex:
    signature = signature or Signature.euclidean(op.grid.d)
    x = _points(points, op.grid.d)
    prod = np.eye(op.grid.size + 1, dtype=complex)
    for xi in x:
        prod = prod @ translated_matrix(op, xi, signature)
    return complex(prod[0, 0])


def wightman_table(
    op: FieldOperator, tuples: Sequence, signature: Signature | None = None
) -> list[tuple[np.ndarray, complex]]:
    """Evaluate :func:`vacuum_npoint` for each point tuple."""
    return [(_points(t, op.grid.d), vacuum_npoint(op, t, signature)) for t in tuples]
