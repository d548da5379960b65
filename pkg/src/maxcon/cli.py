"""Command-line front end: ``maxcon constants|converge|helmholtz|selftest``.

Exit statuses: 0 success, 1 check or suite failure, 2 configuration error,
3 solver failure.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from . import __version__
from .config import DEFAULTS, RunConfig, load_config
from .constants import report_json, maxwell_rot_constant, poincare_constant, verify_all
from .derham_grid import all_boundary_specs, build_complex, build_grid, check_adjointness, exact_sequence_residuals
from .dual_pair import (
    DEFAULT_SEED,
    BlockMaxwellOperator,
    block_spectrum_check,
    dual_constant_check,
    random_dual_pair,
    spectra_match_check,
)
from .errors import ConvergenceError, MaxconError, NoPositiveSpectrumError, ValidationError
from .helmholtz import decompose, harmonic_dimension

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3
SOLVER_ERRORS = (ConvergenceError, NoPositiveSpectrumError)

HELMHOLTZ_RTOL = 1e-7
SELFTEST_RTOL = 1e-9
SELFTEST_SYM_RTOL = 1e-10

CONFIG_HELP = f"""\
config file (JSON, unknown keys rejected):
  grid.n          cells per axis, [nx, ny, nz] or one integer   (required)
  grid.L          box edge lengths                               (default {DEFAULTS['grid.L']})
  bc              "dirichlet", "neumann" or six labels from
                  tangential/normal for faces x0,x1,y0,y1,z0,z1  (default {DEFAULTS['bc']})
  eps             {{"scalar": v}} | {{"diag": [a,b,c]}} | {{"file": path}}
                  file rows: i,j,k,eps1,eps2,eps3                (default {DEFAULTS['eps']})
  solver.tol      eigenvalue tolerance                           (default {DEFAULTS['solver.tol']})
  solver.maxit    outer iteration limit                          (default {DEFAULTS['solver.maxit']})
  solver.seed     start-vector seed                              (default {DEFAULTS['solver.seed']})
  solver.dense_cap  largest dense cross-check                    (default {DEFAULTS['solver.dense_cap']})
  outputs.json, outputs.csv  report paths                        (default stdout)

exit status: 0 ok, 1 check/suite failure, 2 configuration error, 3 solver failure
"""


def timestamp() -> str:
    return _dt.datetime.now(_dt.timezone.utc).replace(microsecond=0).isoformat()


def _emit(text: str, path: Optional[Path]) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _load(args) -> RunConfig:
    if args.config is None:
        raise ValidationError("--config is required")
    return load_config(args.config).with_seed(args.seed)


def _error_doc(exc: Exception) -> dict:
    return {"timestamp": timestamp(), "error": {"type": type(exc).__name__, "message": str(exc)}}


# ----------------------------------------------------------------------------
# constants


def cmd_constants(args) -> int:
    cfg = _load(args)
    grid = cfg.grid
    mat = cfg.material(grid)
    out = args.out or cfg.json_out
    try:
        report = verify_all(grid, cfg.bc, mat, cfg.settings)
    except SOLVER_ERRORS as exc:
        _emit(report_json(_error_doc(exc)), out)
        print(f"maxcon: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    _emit(report_json({"timestamp": timestamp(), **report.to_dict()}), out)
    for c in report.failed_checks:
        print(f"maxcon: check {c.name} failed: {c.lhs!r} > {c.rhs!r}", file=sys.stderr)
    return EXIT_OK if report.ok else EXIT_CHECK


# ----------------------------------------------------------------------------
# converge


def parse_levels(text: Optional[str], default: int) -> List[int]:
    if text is None:
        return [default]
    try:
        levels = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ValidationError(f"--levels: expected comma-separated integers, got {text!r}") from None
    if not levels:
        raise ValidationError("--levels: empty")
    if any(b <= a for a, b in zip(levels, levels[1:])):
        raise ValidationError(f"--levels must be strictly ascending, got {levels}")
    return levels


def richardson(h: Sequence[float], values: Sequence[float], order: float = 2.0) -> float:
    """Extrapolate the last two values to ``h -> 0`` assuming error ``~ h^order``."""
    r = (h[-2] / h[-1]) ** order
    return float(values[-1] + (values[-1] - values[-2]) / (r - 1.0))


def converge_table(cfg: RunConfig, levels: Sequence[int]) -> str:
    rows = []
    s = cfg.settings
    for n in levels:
        grid = build_grid((n, n, n), cfg.L)
        mat = cfg.material(grid)
        ops = build_complex(grid, cfg.bc, mat)
        c_p = poincare_constant(ops, s)
        c_rot_id = maxwell_rot_constant(ops, True, s)
        c_rot = c_rot_id if mat.is_identity else maxwell_rot_constant(ops, False, s)
        rows.append((n, float(grid.h.max()), c_p, c_rot, max(c_p, c_rot_id)))

    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(["n", "h", "c_p", "c_m_rot", "c_m_full"])
    for n, h, *vals in rows:
        out.writerow([n, repr(h), *(repr(float(v)) for v in vals)])
    if len(rows) > 1:
        hs = [r[1] for r in rows]
        out.writerow(["richardson", repr(0.0), *(repr(richardson(hs, [r[k] for r in rows])) for k in (2, 3, 4))])
    return buf.getvalue()


def cmd_converge(args) -> int:
    cfg = _load(args)
    levels = parse_levels(args.levels, cfg.n[0])
    try:
        table = converge_table(cfg, levels)
    except SOLVER_ERRORS as exc:
        print(f"maxcon: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    _emit(table, args.out or cfg.csv_out)
    return EXIT_OK


# ----------------------------------------------------------------------------
# helmholtz


def helmholtz_report(cfg: RunConfig, fields: int) -> dict:
    grid = cfg.grid
    ops = build_complex(grid, cfg.bc, cfg.material(grid))
    n_edges = ops.grad_pair.Y.dim
    dense = n_edges <= cfg.dense_cap
    dim = harmonic_dimension(ops, dense=dense, cap=cfg.dense_cap)
    rng = np.random.default_rng(cfg.seed)
    tol = min(cfg.tol, 1e-10)
    rec = orth = 0.0
    for _ in range(fields):
        E = rng.standard_normal(n_edges)
        parts = decompose(E, ops, tol)
        e2 = parts.norm(E) ** 2
        rec = max(rec, parts.reconstruction_error(E) / np.sqrt(e2))
        orth = max(orth, max(parts.orthogonality().values()) / e2)
    return {
        "grid": {"n": list(grid.n), "L": list(grid.L), "diameter": grid.diameter},
        "bc": list(cfg.bc.labels),
        "harmonic_dimension": dim,
        "harmonic_method": "dense" if dense else "iterative",
        "fields": fields,
        "residuals": {"reconstruction": rec, "orthogonality": orth, "limit": HELMHOLTZ_RTOL},
        "solver": {"tol": tol, "seed": cfg.seed},
    }


def cmd_helmholtz(args) -> int:
    cfg = _load(args)
    out = args.out or cfg.json_out
    try:
        doc = helmholtz_report(cfg, args.fields)
    except SOLVER_ERRORS as exc:
        _emit(report_json(_error_doc(exc)), out)
        print(f"maxcon: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    _emit(report_json({"timestamp": timestamp(), **doc}), out)
    r = doc["residuals"]
    return EXIT_OK if max(r["reconstruction"], r["orthogonality"]) <= HELMHOLTZ_RTOL else EXIT_CHECK


# ----------------------------------------------------------------------------
# selftest


class Suite:
    """Running maximum of a deviation, remembering the first failing case."""

    def __init__(self, name: str, limit: float):
        self.name, self.limit = name, limit
        self.worst, self.cases, self.failure = 0.0, 0, None

    def record(self, value: float, case: str) -> None:
        self.cases += 1
        if not np.isfinite(value) or value > self.limit:
            if self.failure is None:
                self.failure = case
            value = np.inf if not np.isfinite(value) else value
        self.worst = max(self.worst, value)

    def fail(self, case: str, why: str) -> None:
        self.record(np.inf, f"{case} ({why})")

    @property
    def passed(self) -> bool:
        return self.failure is None

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        text = f"{tag} {self.name:<24} max_dev={self.worst:.3e} limit={self.limit:.0e} cases={self.cases}"
        if not self.passed:
            text += f" first_failure: {self.failure}"
        return text


def run_selftest(seed: int, pairs: int = 50, fault: bool = False, n: int = 2) -> List[Suite]:
    spectra = Suite("dual_pair.spectra_match", SELFTEST_RTOL)
    sym = Suite("dual_pair.block_symmetry", SELFTEST_SYM_RTOL)
    square = Suite("dual_pair.block_square", SELFTEST_RTOL)
    dual = Suite("dual_pair.dual_constant", SELFTEST_RTOL)
    for k in range(pairs):
        case = f"seed={seed} pair={k}"
        pair = random_dual_pair(np.random.default_rng([seed, k]))
        sp = spectra_match_check(pair)
        bl = block_spectrum_check(BlockMaxwellOperator(pair))
        scale = max(1.0, float(np.max(sp.nonzero_AsA, initial=0.0)))
        spectra.record(sp.max_deviation / scale, case)
        sym.record(bl.symmetry_deviation, case)
        square.record(bl.square_deviation / scale, case)
        try:
            dual.record(dual_constant_check(pair, seed=seed).deviation, case)
        except SOLVER_ERRORS as exc:
            dual.fail(case, type(exc).__name__)

    exact = Suite("derham.exact_sequence", 0.0)
    adj = Suite("derham.adjointness", SELFTEST_RTOL)
    dr_dual = Suite("derham.dual_constant", SELFTEST_RTOL)
    grid = build_grid((n, n, n))
    for bc in all_boundary_specs():
        case = f"seed={seed} bc={','.join(bc.tangential_faces) or 'none'}"
        ops = build_complex(grid, bc, fault=fault)
        exact.record(float(max(exact_sequence_residuals(ops))), case)
        adj.record(check_adjointness(ops, seed=seed), case)
        for name, pair in ops.pairs.items():
            if pair.A.nnz == 0:
                continue
            try:
                dr_dual.record(dual_constant_check(pair, seed=seed).deviation, f"{case} pair={name}")
            except SOLVER_ERRORS as exc:
                dr_dual.fail(f"{case} pair={name}", type(exc).__name__)
    return [spectra, sym, square, dual, exact, adj, dr_dual]


def cmd_selftest(args) -> int:
    seed = DEFAULT_SEED if args.seed is None else args.seed
    suites = run_selftest(seed, args.pairs, fault=args.inject_fault)
    lines = [s.line() for s in suites]
    ok = all(s.passed for s in suites)
    lines.append(f"selftest seed={seed}: {'ok' if ok else 'FAILED'}")
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if args.out:
        Path(args.out).write_text(text)
    return EXIT_OK if ok else EXIT_CHECK


# ----------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON run configuration")
    common.add_argument("--seed", type=int, default=None,
                        help=f"override solver.seed (default {DEFAULT_SEED})")
    common.add_argument("--out", type=Path, default=None,
                        help="output path (default: outputs.json/outputs.csv from the config, else stdout)")

    fmt = argparse.RawDescriptionHelpFormatter
    parser = argparse.ArgumentParser(
        prog="maxcon", formatter_class=fmt, epilog=CONFIG_HELP,
        description="Poincare, Friedrichs and Maxwell constants on boxes with mixed boundary conditions.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("constants", parents=[common], formatter_class=fmt, epilog=CONFIG_HELP,
                       help="compute all constants and check the inequalities (JSON)")
    p.set_defaults(func=cmd_constants)

    p = sub.add_parser("converge", parents=[common], formatter_class=fmt, epilog=CONFIG_HELP,
                       help="refinement study with Richardson extrapolation (CSV)")
    p.add_argument("--levels", default=None,
                   help="ascending cells-per-axis levels, e.g. 4,8,16 (default: grid.n of the config)")
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("helmholtz", parents=[common], formatter_class=fmt, epilog=CONFIG_HELP,
                       help="harmonic dimension and decomposition residuals (JSON)")
    p.add_argument("--fields", type=int, default=20, help="random edge fields to decompose (default 20)")
    p.set_defaults(func=cmd_helmholtz)

    p = sub.add_parser("selftest", parents=[common], formatter_class=fmt,
                       help="randomized dual-pair and de Rham identity suites")
    p.add_argument("--pairs", type=int, default=50, help="random dual pairs (default 50)")
    p.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"maxcon: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SOLVER_ERRORS as exc:
        print(f"maxcon: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except MaxconError as exc:
        print(f"maxcon: error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
