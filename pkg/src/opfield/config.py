"""Run configuration: a flat TOML file plus ``--set key=value`` overrides.

Grammar (TOML subset actually used)::

    command = "solve-sourced"   # optional in the file; the CLI command wins if both are given
    seed = 7                    # mandatory
    d = 2
    n = 6
    m = 1.0
    coeffs = [0.0111]           # c_2, c_3, ... of the potential
    R = 1.0

Override values are parsed as TOML values (``--set coeffs=[0.01,0.0]``,
``--set signature="minkowski"``); a bare word that is not valid TOML is taken
as a string.  Unknown keys and duplicate keys are errors.
"""

from __future__ import annotations

import sys
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import ConfigError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

Command = Literal[
    "solve-sourced", "certify", "solve-phi3", "wightman", "reconstruct", "intertwine-check", "qcd-residual"
]
COMMANDS: tuple[str, ...] = Command.__args__

# grid defaults differ by command; everything else has a single default below
_GRID_DEFAULTS: dict[str, tuple[int, int]] = {
    "solve-sourced": (2, 6),
    "certify": (2, 6),
    "solve-phi3": (1, 4),
    "wightman": (1, 4),
    "reconstruct": (1, 1),
    "intertwine-check": (1, 1),
    "qcd-residual": (4, 2),
}


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    command: Command
    seed: int = Field(ge=0)

    d: int = Field(default=0, ge=0)  # 0: command default
    n: int = Field(default=0, ge=0)
    signature: Literal["euclidean", "minkowski"] = "euclidean"

    m: float = Field(default=1.0, gt=0)
    lam: float = 0.1
    alpha: float | None = None  # None: alpha_fraction times the bound
    alpha_fraction: float = Field(default=1.0, ge=0)
    beta: float = Field(default=0.3, gt=0)
    aux_scale: float = Field(default=1.0, gt=0)
    coeffs: list[float] = Field(default_factory=lambda: [0.4 / 36])
    R: float = Field(default=1.0, gt=0)

    tol: float = Field(default=1e-10, gt=0)
    max_iter: int = Field(default=200, gt=0)
    lipschitz_pairs: int = Field(default=50, gt=0)
    shell_floor: float = Field(default=1e-6, gt=0)
    seed_scale: float = Field(default=0.0, ge=0)  # solve-phi3 start; 0 is the zero seed

    points: int = Field(default=2, ge=2)  # wightman: points per tuple
    tuples: int = Field(default=20, gt=0)
    extent: float = Field(default=2.0, gt=0)
    field_scale: float = Field(default=1.0, gt=0)

    sample_points: int = Field(default=3, gt=0)  # reconstruct
    L: int = Field(default=2, ge=0)

    k: int = Field(default=2, ge=2)  # intertwine-check
    max_prefix: int = Field(default=2, gt=0)
    max_level: int = Field(default=4, gt=0)
    coefficient_sets: int = Field(default=50, gt=0)

    N: int = Field(default=2, ge=2)  # qcd-residual
    g_s: float = 1.0
    fields: str | None = None  # manifest path; random fields when absent

    @model_validator(mode="after")
    def _grid_defaults(self) -> "RunConfig":
        d0, n0 = _GRID_DEFAULTS[self.command]
        if self.d == 0:
            object.__setattr__(self, "d", d0)
        if self.n == 0:
            object.__setattr__(self, "n", n0)
        if self.command == "qcd-residual" and self.d != 4:
            raise ValueError("qcd-residual needs d = 4")
        return self

    def echo(self) -> dict[str, Any]:
        return self.model_dump(mode="json")


def parse_override(item: str) -> tuple[str, Any]:
    key, sep, raw = item.partition("=")
    key = key.strip()
    if not sep or not key:
        raise ConfigError(f"override {item!r} is not of the form key=value")
    try:
        value = tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw.strip()
    return key, value


def _validate(data: dict[str, Any]) -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        msgs = "; ".join(f"{'.'.join(map(str, e['loc'])) or 'config'}: {e['msg']}" for e in exc.errors())
        raise ConfigError(f"invalid config: {msgs}") from None


def load_config(
    path: str | Path | None, command: str | None = None, overrides: list[str] | tuple[str, ...] = ()
) -> RunConfig:
    """Parse, merge and validate.  Raises ConfigError on any problem."""
    data: dict[str, Any] = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
        try:
            data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"cannot parse config {path}: {exc}") from None
    for item in overrides:
        key, value = parse_override(item)
        data[key] = value
    if command is not None:
        if "command" in data and data["command"] != command:
            raise ConfigError(f"config names command {data['command']!r} but {command!r} was requested")
        data["command"] = command
    return _validate(data)
