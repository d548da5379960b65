"""JSON run configuration for the command-line front end.

Schema (unknown keys anywhere are rejected)::

    {
      "grid":    {"n": [nx, ny, nz], "L": [Lx, Ly, Lz]},
      "bc":      "dirichlet" | "neumann" | [six of "tangential"/"normal"],
      "eps":     {"scalar": v} | {"diag": [a, b, c]} | {"file": "path.csv"},
      "solver":  {"tol": 1e-8, "maxit": 10000, "seed": 3735928559, "dense_cap": 2000},
      "outputs": {"json": "report.json", "csv": "table.csv"}
    }

``grid.n`` may be a single integer for a cube grid.  ``grid.L`` defaults to
the unit cube, ``bc`` to ``dirichlet``, ``eps`` to the identity.  Relative
eps file paths are resolved against the directory of the config file.  The
boundary label order is ``x0, x1, y0, y1, z0, z1``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Tuple

from .constants import SolverSettings
from .derham_grid import BoundarySpec, Grid3, MaterialField, build_grid
from .dual_pair import DEFAULT_SEED
from .errors import ValidationError

DEFAULTS = {
    "grid.L": [1.0, 1.0, 1.0],
    "bc": "dirichlet",
    "eps": "identity",
    "solver.tol": 1e-8,
    "solver.maxit": 10000,
    "solver.seed": DEFAULT_SEED,
    "solver.dense_cap": 2000,
}

_TOP = {"grid", "bc", "eps", "solver", "outputs"}
_GRID = {"n", "L"}
_SOLVER = {"tol", "maxit", "seed", "dense_cap"}
_OUTPUTS = {"json", "csv"}


@dataclass(frozen=True)
class EpsSpec:
    kind: str = "identity"
    value: Optional[Tuple[float, ...]] = None
    path: Optional[Path] = None

    def build(self, grid: Grid3) -> MaterialField:
        if self.kind == "scalar":
            return MaterialField.scalar(grid, self.value[0])
        if self.kind == "diag":
            return MaterialField.diag(grid, *self.value)
        if self.kind == "file":
            try:
                return MaterialField.from_csv(self.path, grid)
            except OSError as exc:
                raise ValidationError(f"cannot read eps file {self.path}: {exc.strerror}") from None
        return MaterialField.identity(grid)


@dataclass(frozen=True)
class RunConfig:
    n: Tuple[int, int, int]
    L: Tuple[float, float, float] = (1.0, 1.0, 1.0)
    bc: BoundarySpec = field(default_factory=BoundarySpec.dirichlet)
    eps: EpsSpec = field(default_factory=EpsSpec)
    tol: float = 1e-8
    maxit: int = 10000
    seed: int = DEFAULT_SEED
    dense_cap: int = 2000
    json_out: Optional[Path] = None
    csv_out: Optional[Path] = None

    @property
    def grid(self) -> Grid3:
        return build_grid(self.n, self.L)

    def material(self, grid: Optional[Grid3] = None) -> MaterialField:
        return self.eps.build(grid or self.grid)

    @property
    def settings(self) -> SolverSettings:
        return SolverSettings(tol=self.tol, maxit=self.maxit, seed=self.seed, dense_cap=self.dense_cap)

    def with_seed(self, seed: Optional[int]) -> "RunConfig":
        return self if seed is None else replace(self, seed=int(seed))

    def with_n(self, n: int) -> "RunConfig":
        return replace(self, n=(n, n, n))


def _check_keys(obj, allowed, where):
    if not isinstance(obj, dict):
        raise ValidationError(f"{where}: expected an object")
    extra = sorted(set(obj) - allowed)
    if extra:
        raise ValidationError(f"{where}: unknown key(s) {', '.join(extra)}")


def _number(v, where, kind=float):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValidationError(f"{where}: expected a number")
    if kind is int and v != int(v):
        raise ValidationError(f"{where}: expected an integer")
    return kind(v)


def _triple(v, where, kind):
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        v = [v, v, v]
    if not isinstance(v, list) or len(v) != 3:
        raise ValidationError(f"{where}: expected three values")
    return tuple(_number(x, f"{where}[{i}]", kind) for i, x in enumerate(v))


def _parse_eps(obj, base: Path) -> EpsSpec:
    _check_keys(obj, {"scalar", "diag", "file"}, "eps")
    if len(obj) != 1:
        raise ValidationError("eps: give exactly one of scalar, diag, file")
    (kind, v), = obj.items()
    if kind == "scalar":
        return EpsSpec("scalar", (_number(v, "eps.scalar"),))
    if kind == "diag":
        return EpsSpec("diag", _triple(v, "eps.diag", float))
    if not isinstance(v, str):
        raise ValidationError("eps.file: expected a path string")
    path = Path(v)
    return EpsSpec("file", path=path if path.is_absolute() else base / path)


def parse_config(doc: dict, base: Path = Path(".")) -> RunConfig:
    """Validate a decoded config document.  Raises :class:`ValidationError`."""
    _check_keys(doc, _TOP, "config")
    if "grid" not in doc:
        raise ValidationError("config: missing grid")
    g = doc["grid"]
    _check_keys(g, _GRID, "grid")
    if "n" not in g:
        raise ValidationError("grid: missing n")
    kw = {"n": _triple(g["n"], "grid.n", int)}
    if "L" in g:
        kw["L"] = _triple(g["L"], "grid.L", float)
    if "bc" in doc:
        kw["bc"] = BoundarySpec.parse(doc["bc"])
    if "eps" in doc:
        kw["eps"] = _parse_eps(doc["eps"], base)
    s = doc.get("solver", {})
    _check_keys(s, _SOLVER, "solver")
    if "tol" in s:
        kw["tol"] = _number(s["tol"], "solver.tol")
        if not 0 < kw["tol"] < 1:
            raise ValidationError("solver.tol: must lie in (0, 1)")
    for key in ("maxit", "seed", "dense_cap"):
        if key in s:
            kw[key] = _number(s[key], f"solver.{key}", int)
            if kw[key] < (0 if key == "seed" else 1):
                raise ValidationError(f"solver.{key}: out of range")
    o = doc.get("outputs", {})
    _check_keys(o, _OUTPUTS, "outputs")
    for key in ("json", "csv"):
        if key in o:
            if not isinstance(o[key], str):
                raise ValidationError(f"outputs.{key}: expected a path string")
            kw[f"{key}_out"] = Path(o[key])
    cfg = RunConfig(**kw)
    cfg.grid  # validates n and L
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    return parse_config(doc, path.parent)
