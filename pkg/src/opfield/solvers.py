"""Solvers for the truncated operator equations of motion.

Two problems are handled:

* the cubic-interaction kernel equations, a square quadratic system in
  (phi1*, phi2, phi(p, q)) solved by damped Gauss-Newton;
* the sourced equation  T(phi) + N(V(phi)) + alpha J = 0  solved by Picard
  iteration of  S(phi) = -T^{-1}(N(V(phi)) + alpha J)  with a contraction
  certificate.
"""

from __future__ import annotations

import itertools
import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import ShellProximityWarning, SingularStepWarning
from .grid import MomentumGrid, Signature, pair_factors
from .operators import (
    FieldOperator,
    VacuumProjector,
    _coeff_dict,
    big_T,
    inv_T,
    normal_order_potential,
    operator_norm,
)

log = logging.getLogger(__name__)

# ---------------------------------------------------------------------------
# cubic-interaction kernel equations
# ---------------------------------------------------------------------------


@dataclass
class Phi3Config:
    grid: MomentumGrid
    m: float
    lam: complex = 0.1
    signature: Signature | None = None
    shell_floor: float = 1e-6
    seed: FieldOperator | None = None
    max_iter: int = 50
    tol: float = 1e-12
    projector: VacuumProjector = field(default_factory=VacuumProjector.identity)

    def __post_init__(self) -> None:
        if self.signature is None:
            self.signature = Signature.euclidean(self.grid.d)
        if self.m <= 0:
            raise ValueError(f"m must be positive, got {self.m}")
        if self.shell_floor <= 0:
            raise ValueError("shell_floor must be positive")
        if self.tol <= 0:
            raise ValueError("tol must be positive")


@dataclass
class Phi3Residual:
    r1: np.ndarray
    r2: np.ndarray
    r3: np.ndarray
    norms: tuple[float, float, float]

    @property
    def total(self) -> float:
        return math.sqrt(sum(n * n for n in self.norms))


def _mass_factors(grid: MomentumGrid, m: float, signature: Signature) -> tuple[np.ndarray, np.ndarray]:
    """(m^2 - pi(p)^2) per point and (m^2 - (pi(p) - pi(q))^2) per pair."""
    full = pair_factors(grid, m, signature, -1)
    return full[1:, 0], full[1:, 1:]


def phi3_residual(vac_row, vac_col, kernel, projector: VacuumProjector | None, cfg: Phi3Config) -> Phi3Residual:
    grid, lam = cfg.grid, cfg.lam
    projector = projector or cfg.projector
    w = grid.weight
    phi1, phi2, K = (np.asarray(a, dtype=complex) for a in (vac_row, vac_col, kernel))
    a, b = _mass_factors(grid, cfg.m, cfg.signature)
    pk = projector.kernel_on(grid)
    r1 = a * phi1 - lam * w * (phi1 @ K)
    r2 = a * phi2 - lam * w * (K @ phi2)
    vev2 = w * np.sum(phi1 * phi2)
    r3 = b * K - lam * (w * (K @ K) + np.outer(phi2, phi1) - pk * vev2)
    norms = (
        math.sqrt(w * float(np.sum(np.abs(r1) ** 2))),
        math.sqrt(w * float(np.sum(np.abs(r2) ** 2))),
        w * math.sqrt(float(np.sum(np.abs(r3) ** 2))),
    )
    return Phi3Residual(r1, r2, r3, norms)


def _pack(phi1, phi2, K) -> np.ndarray:
    return np.concatenate([phi1, phi2, K.ravel()])


def _unpack(x: np.ndarray, N: int):
    return x[:N], x[N : 2 * N], x[2 * N :].reshape(N, N)


def _weighted_vector(res: Phi3Residual, w: float) -> np.ndarray:
    s = math.sqrt(w)
    return np.concatenate([s * res.r1, s * res.r2, w * res.r3.ravel()])


def phi3_jacobian(phi1, phi2, K, cfg: Phi3Config, projector: VacuumProjector | None = None) -> np.ndarray:
    """Analytic Jacobian of the weighted stacked residual w.r.t. (phi1*, phi2, kernel).

    The residual is holomorphic in the unknowns, so the complex Jacobian
    determines the Gauss-Newton step.
    """
    grid, lam = cfg.grid, cfg.lam
    projector = projector or cfg.projector
    N, w = grid.size, grid.weight
    a, b = _mass_factors(grid, cfg.m, cfg.signature)
    pk = projector.kernel_on(grid)
    eye = np.eye(N)
    col = lambda v: np.asarray(v).reshape(N, 1)  # noqa: E731
    row = lambda v: np.asarray(v).reshape(1, N)  # noqa: E731

    J11 = np.diag(a) - lam * w * K.T
    J13 = -lam * w * np.kron(row(phi1), eye)
    J22 = np.diag(a) - lam * w * K
    J23 = -lam * w * np.kron(eye, row(phi2))
    J31 = -lam * (np.kron(col(phi2), eye) - w * pk.reshape(-1, 1) * row(phi2))
    J32 = -lam * (np.kron(eye, col(phi1)) - w * pk.reshape(-1, 1) * row(phi1))
    J33 = np.diag(b.ravel()) - lam * w * (np.kron(eye, K.T) + np.kron(K, eye))
    zero = np.zeros((N, N))
    J = np.block(
        [
            [J11, zero, J13],
            [zero, J22, J23],
            [J31, J32, J33],
        ]
    ).astype(complex)
    s = math.sqrt(w)
    J[: 2 * N] *= s
    J[2 * N :] *= w
    return J


@dataclass
class Phi3Result:
    solution: FieldOperator
    trace: list[float]
    converged: bool
    iterations: int
    warnings: list[str] = field(default_factory=list)


def check_shell(cfg: Phi3Config) -> float | None:
    """Return the smallest |mass-shell factor| and warn if it is below the floor."""
    a, b = _mass_factors(cfg.grid, cfg.m, cfg.signature)
    gap = float(min(np.min(np.abs(a)), np.min(np.abs(b))))
    if gap < cfg.shell_floor:
        warnings.warn(
            f"mass-shell factor {gap:.3e} below floor {cfg.shell_floor:.3e}", ShellProximityWarning, stacklevel=3
        )
    return gap


def phi3_solve(cfg: Phi3Config) -> Phi3Result:
    """Damped Gauss-Newton on the stacked kernel equations, starting from ``cfg.seed``."""
    grid = cfg.grid
    N, w = grid.size, grid.weight
    notes: list[str] = []
    if not cfg.signature.is_euclidean:
        notes.append("non-Euclidean signature: solve is not certified")
    gap = check_shell(cfg)
    if gap < cfg.shell_floor:
        notes.append(f"shell proximity: min |factor| = {gap:.3e}")

    seed = cfg.seed or FieldOperator.zeros(grid)
    x = _pack(seed.vac_row, seed.vac_col, seed.kernel).astype(complex)

    def resid(x):
        return phi3_residual(*_unpack(x, N), cfg.projector, cfg)

    r = resid(x)
    trace = [r.total]
    converged = r.total <= cfg.tol
    it = 0
    while not converged and it < cfg.max_iter:
        it += 1
        J = phi3_jacobian(*_unpack(x, N), cfg)
        rv = _weighted_vector(r, w)
        step, _, rank, _ = np.linalg.lstsq(J, -rv, rcond=None)
        if rank < J.shape[1]:
            msg = f"iteration {it}: rank-deficient Jacobian ({rank}/{J.shape[1]}), minimum-norm step used"
            warnings.warn(msg, SingularStepWarning, stacklevel=2)
            notes.append(msg)
        t = 1.0
        accepted = False
        for _ in range(40):
            trial = x + t * step
            rt = resid(trial)
            if rt.total < r.total:
                x, r, accepted = trial, rt, True
                break
            t *= 0.5
        if not accepted:
            notes.append(f"iteration {it}: line search stalled at residual {r.total:.3e}")
            break
        trace.append(r.total)
        log.debug("phi3 iter %d residual %.3e step %.3g", it, r.total, t)
        converged = r.total <= cfg.tol
    phi1, phi2, K = _unpack(x, N)
    return Phi3Result(
        solution=FieldOperator.from_blocks(grid, phi1, phi2, K),
        trace=trace,
        converged=converged,
        iterations=it,
        warnings=notes,
    )


# ---------------------------------------------------------------------------
# sourced model
# ---------------------------------------------------------------------------


@dataclass
class SourcedConfig:
    m: float
    alpha: complex
    coeffs: dict[int, complex]
    source: FieldOperator
    R: float
    max_iter: int = 200
    tol: float = 1e-10
    projector: VacuumProjector = field(default_factory=VacuumProjector.identity)
    signature: Signature | None = None
    lipschitz_pairs: int = 50
    lipschitz_seed: int = 0
    beta: float | None = None
    aux_mass: float | None = None

    def __post_init__(self) -> None:
        self.coeffs = _coeff_dict(self.coeffs)
        if self.signature is None:
            self.signature = Signature.euclidean(self.source.grid.d)
        if self.m <= 0:
            raise ValueError(f"m must be positive, got {self.m}")
        if self.R <= 0:
            raise ValueError(f"R must be positive, got {self.R}")
        jn = operator_norm(self.source)
        if not math.isfinite(jn) or jn == 0:
            raise ValueError("source must have finite nonzero norm")
        if abs(self.source.vac_vac) > 1e-10:
            raise ValueError(f"source vacuum expectation must vanish, got {self.source.vac_vac}")
        if not np.any(self.source.vac_col):
            raise ValueError("source must not annihilate the vacuum (phi2 column is zero)")

    @property
    def grid(self) -> MomentumGrid:
        return self.source.grid

    @property
    def source_norm(self) -> float:
        return operator_norm(self.source)


def alpha_bound(m: float, R: float, source_norm: float) -> float:
    return m * m * R / (2.0 * source_norm)


def s_map(phi: FieldOperator, cfg: SourcedConfig) -> FieldOperator:
    """S(phi) = -T^{-1}(N(V(phi)) + alpha J)."""
    rhs = normal_order_potential(phi, cfg.coeffs, cfg.projector) + cfg.source * cfg.alpha
    return -inv_T(rhs, cfg.m, cfg.signature)


def sourced_residual(phi: FieldOperator, cfg: SourcedConfig) -> float:
    """||T(phi) + N(V(phi)) + alpha J||."""
    total = big_T(phi, cfg.m, cfg.signature) + normal_order_potential(phi, cfg.coeffs, cfg.projector)
    return operator_norm(total + cfg.source * cfg.alpha)


@dataclass
class Inequality:
    lhs: float
    rhs: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs

    @property
    def slack(self) -> float:
        """Relative margin (rhs - lhs) / rhs."""
        return (self.rhs - self.lhs) / self.rhs if self.rhs else -math.inf

    def as_dict(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "holds": self.holds, "slack": self.slack}


LIPSCHITZ_LIMIT = 0.5 + 0.05


@dataclass
class ContractionCertificate:
    potential_bound: Inequality
    alpha_bound: Inequality
    empirical_lipschitz: float
    radius_respected: bool
    max_iterate_norm: float
    iterations: int
    converged: bool
    final_residual: float
    fixed_point_defect: float
    convergence_trace: list[float]

    @property
    def precondition_holds(self) -> bool:
        return self.potential_bound.holds and self.alpha_bound.holds

    @property
    def step_ratios(self) -> list[float]:
        t = self.convergence_trace
        return [t[i + 1] / t[i] for i in range(len(t) - 1) if t[i] > 0]

    @property
    def passed(self) -> bool:
        return (
            self.precondition_holds
            and self.empirical_lipschitz <= LIPSCHITZ_LIMIT
            and self.radius_respected
            and self.converged
        )

    def as_dict(self) -> dict:
        return {
            "status": "PASS" if self.passed else "FAIL",
            "precondition_holds": self.precondition_holds,
            "potential_bound": self.potential_bound.as_dict(),
            "alpha_bound": self.alpha_bound.as_dict(),
            "empirical_lipschitz": self.empirical_lipschitz,
            "lipschitz_limit": LIPSCHITZ_LIMIT,
            "radius_respected": self.radius_respected,
            "max_iterate_norm": self.max_iterate_norm,
            "iterations": self.iterations,
            "converged": self.converged,
            "final_residual": self.final_residual,
            "fixed_point_defect": self.fixed_point_defect,
            "step_ratios": self.step_ratios,
        }


def check_preconditions(cfg: SourcedConfig) -> tuple[Inequality, Inequality]:
    """The two sufficient conditions: sum |c_n| 6^n R^n <= m^2 R / 2 and |alpha| <= m^2 R / (2 ||J||)."""
    lhs = sum(abs(c) * 6.0**n * cfg.R**n for n, c in cfg.coeffs.items())
    pot = Inequality(lhs, cfg.m**2 * cfg.R / 2.0)
    alp = Inequality(abs(cfg.alpha), alpha_bound(cfg.m, cfg.R, cfg.source_norm))
    return pot, alp


def lipschitz_samples(cfg: SourcedConfig, pairs: int | None = None, seed: int | None = None) -> list[float]:
    """Ratios ||S(a) - S(b)|| / ||a - b|| for random a, b in the R-ball."""
    pairs = cfg.lipschitz_pairs if pairs is None else pairs
    rng = np.random.default_rng(cfg.lipschitz_seed if seed is None else seed)
    grid = cfg.grid

    def draw():
        op = FieldOperator.random(grid, rng, vac_vac=True)
        return op * (cfg.R * rng.uniform() / operator_norm(op))

    ratios = []
    for _ in range(pairs):
        a, b = draw(), draw()
        den = operator_norm(a - b)
        if den == 0:
            continue
        ratios.append(operator_norm(s_map(a, cfg) - s_map(b, cfg)) / den)
    return ratios


def solve_sourced(cfg: SourcedConfig) -> tuple[FieldOperator, ContractionCertificate]:
    """Picard iteration from zero with a recorded contraction certificate."""
    pot, alp = check_preconditions(cfg)
    ratios = lipschitz_samples(cfg)
    lip = max(ratios, default=0.0)

    phi = FieldOperator.zeros(cfg.grid)
    steps: list[float] = []
    max_norm = 0.0
    converged = False
    it = 0
    while it < cfg.max_iter:
        it += 1
        nxt = s_map(phi, cfg)
        step = operator_norm(nxt - phi)
        phi = nxt
        steps.append(step)
        max_norm = max(max_norm, operator_norm(phi))
        log.debug("picard iter %d step %.3e", it, step)
        if not math.isfinite(step):
            break
        if step <= cfg.tol:
            converged = True
            break
    cert = ContractionCertificate(
        potential_bound=pot,
        alpha_bound=alp,
        empirical_lipschitz=lip,
        radius_respected=max_norm <= cfg.R,
        max_iterate_norm=max_norm,
        iterations=it,
        converged=converged,
        final_residual=sourced_residual(phi, cfg),
        fixed_point_defect=operator_norm(phi - s_map(phi, cfg)),
        convergence_trace=steps,
    )
    return phi, cert


def matrix_sine(op: FieldOperator, beta: float) -> FieldOperator:
    """sin(beta op) as a function of the block matrix."""
    s = scipy.linalg.sinm(beta * op.matrix)
    if not np.all(np.isfinite(s)):
        raise ArithmeticError("matrix sine did not produce finite entries")
    return FieldOperator.from_matrix(op.grid, s)


def make_sin_source(aux: FieldOperator, beta: float) -> FieldOperator:
    """sin(beta aux) with its vacuum expectation removed, so <0|J|0> = 0."""
    if not math.isfinite(operator_norm(aux)):
        raise ValueError("auxiliary field must have finite norm")
    s = matrix_sine(aux, beta)
    return s - FieldOperator.identity(aux.grid) * s.vac_vac


# ---------------------------------------------------------------------------
# grid symmetry
# ---------------------------------------------------------------------------


def hyperoctahedral_permutations(grid: MomentumGrid) -> list[np.ndarray]:
    """Point permutations for every axis permutation combined with every axis reflection."""
    idx = np.arange(grid.size).reshape(grid.shape)
    perms = []
    for order in itertools.permutations(range(grid.d)):
        base = np.transpose(idx, order)
        for flips in itertools.product((False, True), repeat=grid.d):
            arr = base
            for ax, f in enumerate(flips):
                if f:
                    arr = np.flip(arr, axis=ax)
            perms.append(arr.ravel().copy())
    return perms


def symmetry_commutant_check(phi: FieldOperator, grid: MomentumGrid | None = None) -> float:
    """max over the grid symmetry group of ||U phi U^-1 - phi||; zero iff phi is in the commutant."""
    grid = grid or phi.grid
    m = phi.matrix
    worst = 0.0
    for perm in hyperoctahedral_permutations(grid):
        full = np.concatenate([[0], perm + 1])
        moved = FieldOperator.from_matrix(grid, m[np.ix_(full, full)])
        worst = max(worst, operator_norm(moved - phi))
    return worst
