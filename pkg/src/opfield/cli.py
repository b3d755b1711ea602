"""``opfield <command> --config <file> [--set key=value ...] --out <dir>``.

Exit status: 0 success, 2 the run finished but its certificate failed, 1 error.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import time
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from .config import COMMANDS, RunConfig, load_config
from .errors import ConfigError
from .gns import reconstruct, round_trip_error, wick_moments, random_two_point
from .grid import Signature, build_grid
from .intertwiner import BasisTable, check_intertwining, recurrence_defect
from .operators import FieldOperator, operator_norm
from .qcd import QcdFieldSet, build_gauge, gluon_residual, load_field_set, quark_residual
from .solvers import (
    LIPSCHITZ_LIMIT,
    Phi3Config,
    SourcedConfig,
    alpha_bound,
    check_preconditions,
    lipschitz_samples,
    make_sin_source,
    phi3_solve,
    solve_sourced,
)
from .textio import dump_moments, dump_operator, write_csv
from .wightman import brute_force_npoint, vacuum_npoint

log = logging.getLogger("opfield")

EXIT_OK, EXIT_ERROR, EXIT_CERT_FAIL = 0, 1, 2


class Outcome:
    """Collected results of one command."""

    def __init__(self) -> None:
        self.results: dict[str, Any] = {}
        self.certificate: dict[str, Any] | None = None
        self.files: list[str] = []
        self.failed = False

    def csv(self, out: Path, name: str, header, rows) -> None:
        write_csv(out / name, header, rows)
        self.files.append(name)

    def operator(self, out: Path, name: str, op: FieldOperator, m: float | None = None) -> None:
        dump_operator(op, out / name, m)
        self.files.append(name)


def _signature(cfg: RunConfig) -> Signature:
    return Signature.from_name(cfg.signature, cfg.d)


def _sourced_setup(cfg: RunConfig) -> SourcedConfig:
    grid = build_grid(cfg.d, cfg.n)
    rng = np.random.default_rng(cfg.seed)
    aux = FieldOperator.random(grid, rng, scale=cfg.aux_scale, hermitian=True)
    J = make_sin_source(aux, cfg.beta)
    bound = alpha_bound(cfg.m, cfg.R, operator_norm(J))
    alpha = cfg.alpha if cfg.alpha is not None else cfg.alpha_fraction * bound
    return SourcedConfig(
        m=cfg.m,
        alpha=alpha,
        coeffs=list(cfg.coeffs),
        source=J,
        R=cfg.R,
        max_iter=cfg.max_iter,
        tol=cfg.tol,
        signature=_signature(cfg),
        lipschitz_pairs=cfg.lipschitz_pairs,
        lipschitz_seed=cfg.seed,
        beta=cfg.beta,
    )


def run_solve_sourced(cfg: RunConfig, out: Path, res: Outcome) -> None:
    scfg = _sourced_setup(cfg)
    phi, cert = solve_sourced(scfg)
    res.certificate = cert.as_dict()
    res.failed = not cert.passed
    res.results = {
        "grid": scfg.grid.describe(),
        "alpha": float(np.real(scfg.alpha)),
        "source_norm": scfg.source_norm,
        "solution_norm": operator_norm(phi),
    }
    res.csv(out, "convergence.csv", ["iteration", "step_norm"], enumerate(cert.convergence_trace, 1))
    res.operator(out, "source.op", scfg.source, cfg.m)
    res.operator(out, "solution.op", phi, cfg.m)


def run_certify(cfg: RunConfig, out: Path, res: Outcome) -> None:
    scfg = _sourced_setup(cfg)
    pot, alp = check_preconditions(scfg)
    ratios = lipschitz_samples(scfg)
    lip = max(ratios, default=0.0)
    passed = pot.holds and alp.holds and lip <= LIPSCHITZ_LIMIT
    res.certificate = {
        "status": "PASS" if passed else "FAIL",
        "precondition_holds": pot.holds and alp.holds,
        "potential_bound": pot.as_dict(),
        "alpha_bound": alp.as_dict(),
        "empirical_lipschitz": lip,
        "lipschitz_limit": LIPSCHITZ_LIMIT,
    }
    res.failed = not passed
    res.results = {"grid": scfg.grid.describe(), "source_norm": scfg.source_norm, "samples": len(ratios)}
    res.csv(out, "lipschitz.csv", ["pair", "ratio"], enumerate(ratios))


def run_solve_phi3(cfg: RunConfig, out: Path, res: Outcome) -> None:
    grid = build_grid(cfg.d, cfg.n)
    seed = None
    if cfg.seed_scale > 0:
        seed = FieldOperator.random(grid, np.random.default_rng(cfg.seed), scale=cfg.seed_scale)
    pcfg = Phi3Config(
        grid=grid,
        m=cfg.m,
        lam=cfg.lam,
        signature=_signature(cfg),
        shell_floor=cfg.shell_floor,
        seed=seed,
        max_iter=cfg.max_iter,
        tol=cfg.tol,
    )
    result = phi3_solve(pcfg)
    res.results = {
        "grid": grid.describe(),
        "converged": result.converged,
        "iterations": result.iterations,
        "residual": result.trace[-1],
        "solution_norm": operator_norm(result.solution),
        "notes": result.warnings,
    }
    res.csv(out, "residual_trace.csv", ["iteration", "residual"], enumerate(result.trace))
    res.operator(out, "solution.op", result.solution, cfg.m)


def run_wightman(cfg: RunConfig, out: Path, res: Outcome) -> None:
    grid = build_grid(cfg.d, cfg.n)
    rng = np.random.default_rng(cfg.seed)
    op = FieldOperator.random(grid, rng, scale=cfg.field_scale, hermitian=True)
    sig = _signature(cfg)
    rows, worst = [], 0.0
    for _ in range(cfg.tuples):
        x = rng.uniform(-cfg.extent, cfg.extent, size=(cfg.points, cfg.d))
        w = vacuum_npoint(op, x, sig)
        worst = max(worst, abs(w - brute_force_npoint(op, x, sig)) / (1 + abs(w)))
        rows.append([*x.ravel().tolist(), w.real, w.imag])
    header = [f"x{i}_{mu}" for i in range(1, cfg.points + 1) for mu in range(cfg.d)] + ["re", "im"]
    res.results = {"grid": grid.describe(), "tuples": cfg.tuples, "max_relative_brute_force_gap": worst}
    res.csv(out, "wightman.csv", header, rows)
    res.operator(out, "field.op", op)


def run_reconstruct(cfg: RunConfig, out: Path, res: Outcome) -> None:
    rng = np.random.default_rng(cfg.seed)
    W = random_two_point(cfg.sample_points, rng)
    pts = rng.uniform(-1.0, 1.0, size=(cfg.sample_points, cfg.d))
    table = wick_moments(W, 2 * cfg.L + 2, points=pts, max_word=cfg.L)
    rep, q = reconstruct(table)
    res.results = {
        "words": int(len(q.eigenvalues)),
        "rank": q.rank,
        "rank_tolerance": q.rank_tolerance,
        "min_gram_eigenvalue": float(q.eigenvalues.min()),
        "round_trip_error": round_trip_error(rep, table),
        "truncated": rep.truncated,
        "boundary_leakage": rep.boundary_leakage,
    }
    res.csv(out, "gram_spectrum.csv", ["index", "eigenvalue"], enumerate(q.eigenvalues.tolist()))
    dump_moments(table, out / "moments.txt")
    res.files.append("moments.txt")


def run_intertwine_check(cfg: RunConfig, out: Path, res: Outcome) -> None:
    rng = np.random.default_rng(cfg.seed)
    table = BasisTable(cfg.k)
    table.build_box(cfg.max_prefix + 1, cfg.max_level + 1)
    base = [n for n, _ in table.items() if n[-1] <= cfg.max_level and max(n[:-1]) <= cfg.max_prefix]
    exact_ok = all(recurrence_defect(table, n).is_zero() for n in base)
    rows, worst, exact_worst = [], 0.0, 0.0
    for s in range(cfg.coefficient_sets):
        size = int(rng.integers(1, min(len(base), 6) + 1))
        chosen = rng.choice(len(base), size=size, replace=False)
        coeffs = {base[i]: complex(rng.standard_normal(), rng.standard_normal()) for i in sorted(chosen)}
        defect = check_intertwining(coeffs, table)
        rational = {t: Fraction(int(rng.integers(-9, 10)), int(rng.integers(1, 10))) for t in coeffs}
        exact_defect = check_intertwining(rational, table, exact=True)
        worst, exact_worst = max(worst, defect), max(exact_worst, exact_defect)
        rows.append([s, size, defect, exact_defect])
    res.results = {
        "k": cfg.k,
        "elements": len(table),
        "recurrence_exact": exact_ok,
        "max_float_defect": worst,
        "max_rational_defect": exact_worst,
    }
    res.csv(out, "intertwine.csv", ["set", "terms", "float_defect", "rational_defect"], rows)
    (out / "basis_table.txt").write_text(table.dump_text())
    res.files.append("basis_table.txt")


def run_qcd_residual(cfg: RunConfig, out: Path, res: Outcome) -> None:
    gauge = build_gauge(cfg.N, g_s=cfg.g_s, m=cfg.m)
    if cfg.fields:
        fields = load_field_set(cfg.fields)
        if fields.N != cfg.N:
            raise ValueError(f"field set has N={fields.N}, config has N={cfg.N}")
    else:
        grid = build_grid(4, cfg.n)
        fields = QcdFieldSet.random(grid, cfg.N, np.random.default_rng(cfg.seed), cfg.field_scale)
    q = quark_residual(fields, gauge)
    g = gluon_residual(fields, gauge)
    rows = []
    for name, r in (("quark", q), ("gluon", g)):
        for x, y in np.ndindex(*r.norms.shape):
            v = r.vacuum_values[x, y]
            rows.append([name, x, y, float(r.norms[x, y]), float(v.real), float(v.imag)])
    res.results = {
        "grid": fields.grid.describe(),
        "invariants": build_gauge(cfg.N).invariant_defects(),
        "quark_max_norm": q.max_norm,
        "gluon_max_norm": g.max_norm,
        "max_vacuum_value": float(max(np.abs(q.vacuum_values).max(), np.abs(g.vacuum_values).max())),
    }
    res.csv(out, "qcd_residual.csv", ["equation", "index1", "index2", "norm", "vev_re", "vev_im"], rows)


RUNNERS: dict[str, Callable[[RunConfig, Path, Outcome], None]] = {
    "solve-sourced": run_solve_sourced,
    "certify": run_certify,
    "solve-phi3": run_solve_phi3,
    "wightman": run_wightman,
    "reconstruct": run_reconstruct,
    "intertwine-check": run_intertwine_check,
    "qcd-residual": run_qcd_residual,
}


def _jsonable(x: Any) -> Any:
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (complex, np.complexfloating)):
        return {"re": _jsonable(float(x.real)), "im": _jsonable(float(x.imag))}
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def run(cfg: RunConfig, out: str | Path) -> int:
    """Execute ``cfg.command`` writing ``report.json`` and data files into ``out``."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    res = Outcome()
    t0 = time.perf_counter()
    RUNNERS[cfg.command](cfg, out, res)
    elapsed = time.perf_counter() - t0
    status = EXIT_CERT_FAIL if res.failed else EXIT_OK
    report = {
        "opfield_version": __version__,
        "command": cfg.command,
        "config": cfg.echo(),
        "results": res.results,
        "certificate": res.certificate,
        "files": sorted(res.files),
        "timings": {"total_seconds": elapsed},
        "exit_status": status,
    }
    (out / "report.json").write_text(json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n")
    return status


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="opfield", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", type=Path, help="TOML run configuration")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config, args.command, args.overrides)
        status = run(cfg, args.out)
    except ConfigError as exc:
        print(f"opfield: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except Exception as exc:  # noqa: BLE001 - any module error becomes exit 1
        print(f"opfield {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if status == EXIT_CERT_FAIL:
        print(f"opfield {args.command}: certificate FAIL (see {args.out / 'report.json'})", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
