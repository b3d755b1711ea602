"""Residuals of the quark and gluon operator equations on a truncated d = 4 grid.

Fields are stored as stacks of block matrices (see :mod:`opfield.operators`):
quarks ``psi[k, i]`` (color, spinor) and gluons ``G[a, mu]`` with a lower
Lorentz index.  Indices are raised with eta = diag(+, -, -, -).  No equation
is solved here; the evaluators only report how far a candidate is from
satisfying the equations.

Index placement follows the printed equations literally.  In the gluon
equation this means G^{c nu} and G^{e mu} carry an explicit eta factor:

    [P_mu, G^{c nu}]            -> eta^{nu nu} [P_mu, G^c_nu]
    G^b_nu G^{d nu} G^{e mu}    -> eta^{nu nu} eta^{mu mu} G^b_nu G^d_nu G^e_mu
    gamma_mu                    -> eta_{mu mu} gamma^mu
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .grid import MomentumGrid
from .operators import FieldOperator, VacuumProjector, operator_norm


@dataclass(frozen=True, eq=False)
class GaugeData:
    N: int
    t: np.ndarray  # (N^2-1, N, N)
    f: np.ndarray  # (N^2-1,)*3
    gamma: np.ndarray  # (4, 4, 4), upper index
    g_s: float = 1.0
    m: float = 1.0

    @property
    def eta(self) -> np.ndarray:
        return np.array([1.0, -1.0, -1.0, -1.0])

    @property
    def num_gluons(self) -> int:
        return self.N * self.N - 1

    def with_couplings(self, g_s: float | None = None, m: float | None = None) -> "GaugeData":
        return GaugeData(self.N, self.t, self.f, self.gamma, self.g_s if g_s is None else g_s, self.m if m is None else m)

    def invariant_defects(self) -> dict[str, float]:
        """Max deviations of the algebraic identities the generators must satisfy."""
        t, f, A = self.t, self.f, self.num_gluons
        herm = max(np.max(np.abs(x - x.conj().T)) for x in t)
        trace = max(abs(np.trace(x)) for x in t)
        norm = np.max(np.abs(np.einsum("aij,bji->ab", t, t) - 0.5 * np.eye(A)))
        comm = np.einsum("aij,bjk->abik", t, t) - np.einsum("bij,ajk->abik", t, t)
        rhs = 1j * np.einsum("abc,cik->abik", f, t)
        lie = np.max(np.abs(comm - rhs))
        anti = max(
            np.max(np.abs(f + f.transpose(1, 0, 2))),
            np.max(np.abs(f + f.transpose(0, 2, 1))),
            np.max(np.abs(f + f.transpose(2, 1, 0))),
        )
        jac = np.einsum("abe,ecd->abcd", f, f) + np.einsum("bce,ead->abcd", f, f) + np.einsum("cae,ebd->abcd", f, f)
        eta = np.diag(self.eta)
        anticomm = np.einsum("mij,njk->mnik", self.gamma, self.gamma) + np.einsum("nij,mjk->mnik", self.gamma, self.gamma)
        clifford = np.max(np.abs(anticomm - 2 * eta[:, :, None, None] * np.eye(4)[None, None]))
        return {
            "hermitian": float(herm),
            "traceless": float(trace),
            "trace_normalization": float(norm),
            "lie_algebra": float(lie),
            "f_antisymmetry": float(anti),
            "jacobi": float(np.max(np.abs(jac))),
            "clifford": float(clifford),
        }


def su_n_generators(N: int) -> np.ndarray:
    """Generalized Gell-Mann matrices / 2, in the standard order (N = 3 gives lambda_1..lambda_8)."""
    gens = []
    for k in range(1, N):
        for i in range(k):
            sym = np.zeros((N, N), complex)
            sym[i, k] = sym[k, i] = 1
            anti = np.zeros((N, N), complex)
            anti[i, k], anti[k, i] = -1j, 1j
            gens += [sym, anti]
        diag = np.zeros((N, N), complex)
        diag[np.arange(k), np.arange(k)] = 1
        diag[k, k] = -k
        gens.append(diag * np.sqrt(2.0 / (k * (k + 1))))
    return np.array(gens) / 2


def dirac_gammas() -> np.ndarray:
    """Dirac-basis gamma^mu for eta = diag(+, -, -, -)."""
    sig = [np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]), np.array([[1, 0], [0, -1]])]
    I2, Z2 = np.eye(2), np.zeros((2, 2))
    g0 = np.block([[I2, Z2], [Z2, -I2]])
    gs = [np.block([[Z2, s], [-s, Z2]]) for s in sig]
    return np.array([g0] + gs, dtype=complex)


def build_gauge(N: int, g_s: float = 1.0, m: float = 1.0) -> GaugeData:
    if N < 2:
        raise ValueError(f"N must be >= 2, got {N}")
    t = su_n_generators(N)
    comm = np.einsum("aij,bjk->abik", t, t) - np.einsum("bij,ajk->abik", t, t)
    f = (-2j * np.einsum("abij,cji->abc", comm, t)).real
    return GaugeData(N=N, t=t, f=f, gamma=dirac_gammas(), g_s=g_s, m=m)


@dataclass(eq=False)
class QcdFieldSet:
    grid: MomentumGrid
    psi: np.ndarray  # (N, 4, n1, n1) block matrices
    G: np.ndarray  # (N^2-1, 4, n1, n1) block matrices, lower Lorentz index
    projector: VacuumProjector = field(default_factory=VacuumProjector.identity)

    def __post_init__(self) -> None:
        if self.grid.d != 4:
            raise ValueError(f"QCD fields need a d = 4 grid, got d = {self.grid.d}")
        n1 = self.grid.size + 1
        if self.psi.ndim != 4 or self.psi.shape[1:] != (4, n1, n1):
            raise ValueError(f"quark stack must be (N, 4, {n1}, {n1}), got {self.psi.shape}")
        if self.G.ndim != 4 or self.G.shape[1:] != (4, n1, n1):
            raise ValueError(f"gluon stack must be (A, 4, {n1}, {n1}), got {self.G.shape}")
        if self.G.shape[0] != self.psi.shape[0] ** 2 - 1:
            raise ValueError("gluon count must be N^2 - 1")

    @property
    def N(self) -> int:
        return self.psi.shape[0]

    @classmethod
    def zeros(cls, grid: MomentumGrid, N: int) -> "QcdFieldSet":
        n1 = grid.size + 1
        return cls(grid, np.zeros((N, 4, n1, n1), complex), np.zeros((N * N - 1, 4, n1, n1), complex))

    @classmethod
    def from_operators(cls, grid, quarks, gluons, projector=None) -> "QcdFieldSet":
        """``quarks[k][i]`` and ``gluons[a][mu]`` are FieldOperators."""
        psi = np.array([[q.matrix for q in row] for row in quarks])
        G = np.array([[g.matrix for g in row] for row in gluons])
        return cls(grid, psi, G, projector or VacuumProjector.identity())

    @classmethod
    def random(cls, grid: MomentumGrid, N: int, rng: np.random.Generator, scale: float = 1.0) -> "QcdFieldSet":
        """Random fields with <0|psi|0> = <0|G|0> = 0."""
        quarks = [[FieldOperator.random(grid, rng, scale=scale) for _ in range(4)] for _ in range(N)]
        gluons = [[FieldOperator.random(grid, rng, scale=scale) for _ in range(4)] for _ in range(N * N - 1)]
        return cls.from_operators(grid, quarks, gluons)

    def quark(self, k: int, i: int) -> FieldOperator:
        return FieldOperator.from_matrix(self.grid, self.psi[k, i])

    def gluon(self, a: int, mu: int) -> FieldOperator:
        return FieldOperator.from_matrix(self.grid, self.G[a, mu])


@dataclass
class QcdResidual:
    grid: MomentumGrid
    matrices: np.ndarray  # (X, 4, n1, n1)
    norms: np.ndarray  # (X, 4)

    def operator(self, x: int, y: int) -> FieldOperator:
        return FieldOperator.from_matrix(self.grid, self.matrices[x, y])

    @property
    def vacuum_values(self) -> np.ndarray:
        return self.matrices[..., 0, 0]

    @property
    def max_norm(self) -> float:
        return float(self.norms.max(initial=0.0))


def _norms(grid: MomentumGrid, mats: np.ndarray) -> np.ndarray:
    out = np.empty(mats.shape[:2])
    for idx in np.ndindex(*mats.shape[:2]):
        out[idx] = operator_norm(FieldOperator.from_matrix(grid, mats[idx]))
    return out


def _diffs(grid: MomentumGrid) -> tuple[np.ndarray, np.ndarray]:
    """Generator eigenvalues (n1, 4) and commutator multipliers D[mu] = lam_i - lam_j."""
    lam = grid.spectrum()
    return lam, lam.T[:, :, None] - lam.T[:, None, :]


def _vev(x: np.ndarray) -> np.ndarray:
    return x[..., 0, 0]


def _check(fields: QcdFieldSet, gauge: GaugeData) -> None:
    if fields.N != gauge.N:
        raise ValueError(f"field set has N={fields.N}, gauge data has N={gauge.N}")


def quark_residual(fields: QcdFieldSet, gauge: GaugeData) -> QcdResidual:
    """gamma^mu [P_mu, psi^k] + m psi^k + g_s gamma^mu t^a (G^a_mu psi - Pi <0|G^a_mu psi|0>)."""
    _check(fields, gauge)
    grid = fields.grid
    _, D = _diffs(grid)
    psi, G, gam, t = fields.psi, fields.G, gauge.gamma, gauge.t
    pi = fields.projector.as_operator(grid).matrix

    dpsi = D[:, None, None] * psi[None]  # (mu, k, i, x, y)
    res = np.einsum("mij,mkjxy->kixy", gam, dpsi) + gauge.m * psi
    if gauge.g_s != 0:
        gp = np.einsum("amxy,kjyz->amkjxz", G, psi)
        gp = gp - _vev(gp)[..., None, None] * pi
        res = res + gauge.g_s * np.einsum("mij,akl,amljxy->kixy", gam, t, gp)
    return QcdResidual(grid, res, _norms(grid, res))


def gluon_residual(fields: QcdFieldSet, gauge: GaugeData) -> QcdResidual:
    """Residual of the gluon equation, blocks and signs as printed (see module docstring)."""
    _check(fields, gauge)
    grid = fields.grid
    lam, D = _diffs(grid)
    eta = gauge.eta
    G, psi, f, t, g = fields.G, fields.psi, gauge.f, gauge.t, gauge.g_s
    pi = fields.projector.as_operator(grid).matrix
    A = gauge.num_gluons

    # [P^nu, [P_nu, G_mu]] - [P_mu, [P^nu, G_nu]]
    box = np.einsum("n,nxy->xy", eta, D * D)
    divG = np.einsum("n,nxy,anxy->axy", eta, D, G)
    res = box[None, None] * G - D[None] * divG[:, None]

    if g != 0:
        # cubic block: i g f^{abc} ( [P^nu, G^b_nu G^c_mu] + G^b_nu([P^nu, G^c_mu] + [P_mu, G^{c nu}])
        #                            - Pi <0| G^b_nu (P^nu G^c_mu + P_mu G^{c nu}) |0> )
        GG = np.einsum("bnxy,cmyz->bcnmxz", G, G)  # G^b_nu G^c_mu
        t1 = np.einsum("n,nxz,bcnmxz->bcmxz", eta, D, GG)
        dG_up = eta[:, None, None, None] * np.einsum("nxy,cmxy->cnmxy", D, G)  # [P^nu, G^c_mu]
        dG_low = np.einsum("mxy,n,cnxy->cnmxy", D, eta, G)  # [P_mu, G^{c nu}]
        t2 = np.einsum("bnxy,cnmyz->bcmxz", G, dG_up + dG_low)
        # P^nu G^c_mu: (c, nu, mu, x, y)
        PG_up = np.einsum("n,nx,cmxy->cnmxy", eta, lam.T, G)
        # P_mu G^{c nu}: (c, nu, mu, x, y)
        PG_low = np.einsum("mx,n,cnxy->cnmxy", lam.T, eta, G)
        sub = np.einsum("bnxy,cnmyz->bcmxz", G, PG_up + PG_low)
        cubic = t1 + t2 - _vev(sub)[..., None, None] * pi
        res = res - 1j * g * np.einsum("abc,bcmxz->amxz", f, cubic)

        # quartic block: g^2 f^{abc} f^{cde} ( G^b_nu G^{d nu} G^{e mu} - ... )
        ff = np.einsum("abc,cde->abde", f, f)
        Gdn = eta[None, :, None, None] * G  # G^{d nu}
        Gem = eta[None, :, None, None] * G  # G^{e mu}
        pair_bd = np.einsum("bnxy,dnyz->bdxz", G, Gdn)  # sum_nu G^b_nu G^{d nu}
        full = np.einsum("bdxy,emyz->bdemxz", pair_bd, Gem)
        vev_dn_em = _vev(np.einsum("dnxy,emyz->dnemxz", Gdn, Gem))  # <G^{d nu} G^{e mu}> (d, nu, e, mu)
        s1 = np.einsum("bnxy,dnem->bdemxy", G, vev_dn_em)
        s2 = _vev(pair_bd)[:, :, None, None, None, None] * Gem[None, None]
        vev_bn_em = _vev(np.einsum("bnxy,emyz->bnemxz", G, Gem))  # <G^b_nu G^{e mu}>
        s3 = np.einsum("dnxy,bnem->bdemxy", Gdn, vev_bn_em)
        s4 = _vev(full)[..., None, None] * pi
        quartic = full - s1 - s2 - s3 - s4
        res = res - g * g * np.einsum("abde,bdemxy->amxy", ff, quartic)

        # quark bilinear: g psi^{k dagger}_i gamma^0_{i i'} gamma_{mu i' i''} t^a_{k k'} psi^{k'}_{i''} - vev Pi
        gam = gauge.gamma
        gam_low = eta[:, None, None] * gam
        g0gm = np.einsum("ij,mjl->mil", gam[0], gam_low)  # (mu, i, i'')
        w = grid.weight
        s = np.concatenate([[1.0], np.full(grid.size, np.sqrt(w))])
        # weighted-picture adjoint: M^dagger = D^-1 (D M D^-1)^H D
        psi_dag = np.conj(np.swapaxes(psi, -1, -2)) * (1 / s**2)[:, None] * (s**2)[None, :]
        bil = np.einsum("kixy,mil,akq,qlyz->amxz", psi_dag, g0gm, t, psi)
        bil = bil - _vev(bil)[..., None, None] * pi
        res = res + g * bil
    return QcdResidual(grid, res, _norms(grid, res))


def load_field_set(manifest: str | Path, grid: MomentumGrid | None = None) -> QcdFieldSet:
    """Read a manifest of ``quark k i FILE`` / ``gluon a mu FILE`` lines (operator text format)."""
    from .textio import load_operator

    manifest = Path(manifest)
    quarks: dict[tuple[int, int], FieldOperator] = {}
    gluons: dict[tuple[int, int], FieldOperator] = {}
    N = None
    for lineno, line in enumerate(manifest.read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "N" and len(parts) == 2:
            N = int(parts[1])
            continue
        if parts[0] not in ("quark", "gluon") or len(parts) != 4:
            raise ValueError(f"{manifest}:{lineno}: expected 'quark k i FILE' or 'gluon a mu FILE'")
        op, _ = load_operator(manifest.parent / parts[3])
        if grid is None:
            grid = op.grid
        key = (int(parts[1]), int(parts[2]))
        (quarks if parts[0] == "quark" else gluons)[key] = op
    if N is None:
        N = 1 + max(k for k, _ in quarks)
    missing = [("quark", k, i) for k, i in itertools.product(range(N), range(4)) if (k, i) not in quarks]
    missing += [("gluon", a, mu) for a, mu in itertools.product(range(N * N - 1), range(4)) if (a, mu) not in gluons]
    if missing:
        raise ValueError(f"manifest {manifest} is missing components: {missing[:5]}")
    return QcdFieldSet.from_operators(
        grid,
        [[quarks[k, i] for i in range(4)] for k in range(N)],
        [[gluons[a, mu] for mu in range(4)] for a in range(N * N - 1)],
    )


def write_field_set(fields: QcdFieldSet, directory: str | Path) -> Path:
    """Dump every component in the operator text format plus a manifest; returns the manifest path."""
    from .textio import dump_operator

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    lines = [f"N {fields.N}"]
    for k, i in itertools.product(range(fields.N), range(4)):
        name = f"quark_{k}_{i}.op"
        dump_operator(fields.quark(k, i), directory / name)
        lines.append(f"quark {k} {i} {name}")
    for a, mu in itertools.product(range(fields.G.shape[0]), range(4)):
        name = f"gluon_{a}_{mu}.op"
        dump_operator(fields.gluon(a, mu), directory / name)
        lines.append(f"gluon {a} {mu} {name}")
    path = directory / "manifest.txt"
    path.write_text("\n".join(lines) + "\n")
    return path

