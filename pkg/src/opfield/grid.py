"""Finite grids over the compactified momentum cube and the translation spectrum.

The DL picture places every one-particle momentum in the open cube (0, pi)^d;
the physical momentum along axis mu is tan(p_mu - pi/2).  A midpoint tensor grid
keeps every sample strictly away from the tangent singularities at 0 and pi.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Signature:
    """Diagonal metric; ``diag`` holds the +/-1 entries."""

    diag: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.diag or any(v not in (1, -1) for v in self.diag):
            raise ValueError(f"signature entries must be +1/-1, got {self.diag}")

    @classmethod
    def euclidean(cls, d: int) -> "Signature":
        return cls((1,) * d)

    @classmethod
    def minkowski(cls, d: int) -> "Signature":
        return cls((1,) + (-1,) * (d - 1))

    @classmethod
    def from_name(cls, name: str, d: int) -> "Signature":
        name = name.lower()
        if name == "euclidean":
            return cls.euclidean(d)
        if name == "minkowski":
            return cls.minkowski(d)
        raise ValueError(f"unknown signature {name!r}")

    @property
    def d(self) -> int:
        return len(self.diag)

    @property
    def is_euclidean(self) -> bool:
        return all(v == 1 for v in self.diag)

    @property
    def metric(self) -> np.ndarray:
        return np.diag(np.asarray(self.diag, dtype=float))

    def square(self, v: np.ndarray) -> np.ndarray:
        """Contract the last axis of ``v`` with itself through the metric."""
        v = np.asarray(v)
        return np.tensordot(v * v, np.asarray(self.diag, dtype=float), axes=([-1], [0]))

    def dot(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        a, b = np.asarray(a), np.asarray(b)
        return np.tensordot(a * b, np.asarray(self.diag, dtype=float), axes=([-1], [0]))


@dataclass(frozen=True, eq=False)
class MomentumGrid:
    """Midpoint tensor grid of ``n**d`` points in the open cube (0, pi)^d.

    Points are ordered row-major over the axis indices, so the flat index of
    ``(i_0, ..., i_{d-1})`` is ``np.ravel_multi_index`` of that tuple.
    """

    d: int
    n: int
    coords: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    momenta: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.n**self.d

    @property
    def weight(self) -> float:
        return (math.pi / self.n) ** self.d

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.d

    def same_as(self, other: "MomentumGrid") -> bool:
        return self is other or (self.d == other.d and self.n == other.n)

    def spectrum(self) -> np.ndarray:
        """Generator eigenvalues per basis vector, vacuum first: shape (N+1, d)."""
        return np.vstack([np.zeros((1, self.d)), self.momenta])

    def integrate(self, values: np.ndarray) -> complex:
        return complex(np.sum(self.weights * np.asarray(values)))

    def describe(self) -> dict:
        return {"d": self.d, "n": self.n, "points": self.size}


def build_grid(d: int, n: int) -> MomentumGrid:
    """Build the midpoint grid p_i = pi (i + 1/2) / n along every axis."""
    if not isinstance(d, (int, np.integer)) or not isinstance(n, (int, np.integer)):
        raise TypeError("d and n must be integers")
    if d < 1 or n < 1:
        raise ValueError(f"grid needs d >= 1 and n >= 1, got d={d}, n={n}")
    axis = math.pi * (np.arange(n) + 0.5) / n
    coords = np.array(list(itertools.product(axis, repeat=d)), dtype=float).reshape(n**d, d)
    # exact antisymmetry under i -> n-1-i: evaluate tan on the non-negative half only
    half = np.tan(axis - math.pi / 2)
    half = 0.5 * (half - half[::-1])
    momenta = np.array(list(itertools.product(half, repeat=d)), dtype=float).reshape(n**d, d)
    weights = np.full(n**d, (math.pi / n) ** d)
    for arr in (coords, momenta, weights):
        arr.setflags(write=False)
    return MomentumGrid(d=int(d), n=int(n), coords=coords, weights=weights, momenta=momenta)


def translation_generator(grid: MomentumGrid, mu: int) -> np.ndarray:
    """Eigenvalues of the axis-``mu`` translation generator, vacuum entry first."""
    if not 0 <= mu < grid.d:
        raise IndexError(f"axis {mu} out of range for d={grid.d}")
    return np.concatenate([[0.0], grid.momenta[:, mu]])


def reflect_index(grid: MomentumGrid, axis: int) -> np.ndarray:
    """Flat-index permutation for the reflection i -> n-1-i along ``axis``."""
    idx = np.arange(grid.size).reshape(grid.shape)
    return np.flip(idx, axis=axis).ravel()


def shell_gap(grid: MomentumGrid, m: float, signature: Signature, sign: int = 1) -> float:
    """Smallest |m^2 + sign * (lam_i - lam_j)^2| over all basis pairs (vacuum included)."""
    factors = pair_factors(grid, m, signature, sign)
    return float(np.min(np.abs(factors)))


def pair_factors(grid: MomentumGrid, m: float, signature: Signature, sign: int = 1) -> np.ndarray:
    """Matrix of m^2 + sign * sum_mu eta_mu (lam_i^mu - lam_j^mu)^2 on the full block basis."""
    if signature.d != grid.d:
        raise ValueError(f"signature has d={signature.d}, grid has d={grid.d}")
    lam = grid.spectrum()
    diff = lam[:, None, :] - lam[None, :, :]
    return m * m + sign * signature.square(diff)


def kl_momentum(p) -> np.ndarray:
    """Physical momentum of the Euclidean cotangent picture: cot({|p|}) p / (pi |p|)."""
    p = np.asarray(p, dtype=float)
    r = float(np.linalg.norm(p))
    if r == 0.0:
        raise ValueError("kl_momentum undefined at p = 0")
    frac = r - math.floor(r)
    if frac == 0.0 or math.sin(frac) == 0.0:
        raise ValueError(f"cotangent singular: fractional part of |p|={r} is zero")
    return (math.cos(frac) / math.sin(frac)) * p / (math.pi * r)
