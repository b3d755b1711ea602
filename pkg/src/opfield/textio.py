"""Plain-text file formats.

Operator format::

    opfield-operator 1
    d <d> n <n> m <mass or none>
    vacvac
    <re> <im>
    vacrow <N>
    <re> <im>            (N lines)
    vaccol <N>
    <re> <im>            (N lines)
    kernel <N> <N>
    <re> <im>            (N*N lines, row-major)

Moment-table format::

    opfield-moments 1
    L <max word length>
    points <count> <d>
    <x_0> ... <x_{d-1}>  (one line per point)
    <i1> ... <ik> <re> <im>   (one line per tuple; the empty tuple is just "<re> <im>")

Floats are written with ``repr`` so files round-trip exactly.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import IO, Iterable, Sequence

import numpy as np

from .gns import MomentTable
from .grid import build_grid
from .operators import FieldOperator

OPERATOR_MAGIC = "opfield-operator 1"
MOMENTS_MAGIC = "opfield-moments 1"


def _fmt(z: complex) -> str:
    z = complex(z)
    return f"{float(z.real)!r} {float(z.imag)!r}"


def _parse_complex(line: str) -> complex:
    re, im = line.split()
    return complex(float(re), float(im))


def format_operator(op: FieldOperator, m: float | None = None) -> str:
    N = op.grid.size
    out = [OPERATOR_MAGIC, f"d {op.grid.d} n {op.grid.n} m {'none' if m is None else repr(float(m))}", "vacvac"]
    out.append(_fmt(op.vac_vac))
    out.append(f"vacrow {N}")
    out += [_fmt(z) for z in op.vac_row]
    out.append(f"vaccol {N}")
    out += [_fmt(z) for z in op.vac_col]
    out.append(f"kernel {N} {N}")
    out += [_fmt(z) for z in op.kernel.ravel()]
    return "\n".join(out) + "\n"


def dump_operator(op: FieldOperator, target: str | Path | IO[str], m: float | None = None) -> None:
    text = format_operator(op, m)
    if hasattr(target, "write"):
        target.write(text)
    else:
        Path(target).write_text(text)


def parse_operator(text: str) -> tuple[FieldOperator, dict]:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != OPERATOR_MAGIC:
        raise ValueError("not an opfield operator file")
    head = lines[1].split()
    if head[0::2] != ["d", "n", "m"]:
        raise ValueError(f"bad operator header: {lines[1]!r}")
    d, n = int(head[1]), int(head[3])
    m = None if head[5] == "none" else float(head[5])
    grid = build_grid(d, n)
    N = grid.size
    pos = 2

    def section(name: str, count: int, dims: str) -> np.ndarray:
        nonlocal pos
        if lines[pos] != f"{name}{dims}":
            raise ValueError(f"expected section {name!r}, got {lines[pos]!r}")
        vals = np.array([_parse_complex(ln) for ln in lines[pos + 1 : pos + 1 + count]], dtype=complex)
        if len(vals) != count:
            raise ValueError(f"section {name!r} truncated")
        pos += 1 + count
        return vals

    vv = section("vacvac", 1, "")[0]
    row = section("vacrow", N, f" {N}")
    col = section("vaccol", N, f" {N}")
    ker = section("kernel", N * N, f" {N} {N}").reshape(N, N)
    return FieldOperator(grid, complex(vv), row, col, ker), {"d": d, "n": n, "m": m}


def load_operator(path: str | Path) -> tuple[FieldOperator, dict]:
    return parse_operator(Path(path).read_text())


def format_moments(table: MomentTable) -> str:
    pts = table.points
    out = [MOMENTS_MAGIC, f"L {table.max_word}", f"points {len(pts)} {pts.shape[1]}"]
    out += [" ".join(repr(float(v)) for v in x) for x in pts]
    for t in sorted(table.values, key=lambda t: (len(t), t)):
        out.append(" ".join([*map(str, t), _fmt(table.values[t])]))
    return "\n".join(out) + "\n"


def dump_moments(table: MomentTable, path: str | Path) -> None:
    Path(path).write_text(format_moments(table))


def parse_moments(text: str) -> MomentTable:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != MOMENTS_MAGIC:
        raise ValueError("not an opfield moment file")
    key, L = lines[1].split()
    if key != "L":
        raise ValueError("missing L header")
    tag, count, d = lines[2].split()
    if tag != "points":
        raise ValueError("missing points header")
    count, d = int(count), int(d)
    pts = np.array([[float(v) for v in ln.split()] for ln in lines[3 : 3 + count]]).reshape(count, d)
    values = {}
    for ln in lines[3 + count :]:
        parts = ln.split()
        t = tuple(int(v) for v in parts[:-2])
        if any(i < 0 or i >= count for i in t):
            raise ValueError(f"point index out of range in {ln!r}")
        if t in values:
            raise ValueError(f"duplicate moment entry {t}")
        values[t] = complex(float(parts[-2]), float(parts[-1]))
    return MomentTable(points=pts, values=values, max_word=int(L))


def load_moments(path: str | Path) -> MomentTable:
    return parse_moments(Path(path).read_text())


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    """Deterministic CSV: '\\n' line endings, floats via repr."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    Path(path).write_text(buf.getvalue())
