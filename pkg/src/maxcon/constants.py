"""Poincare, Friedrichs and Maxwell constants and the relations between them.

All constants are reciprocal square roots of smallest positive eigenvalues of
``A*A`` for one of the dual pairs of the assembled complex:

* ``c_p``              grad pair (nodes -> eps-weighted edges)
* ``c_m_div``          the swapped grad pair (``-div eps``); equals ``c_p``
* ``c_m_rot_eps_id``   curl pair, ``||E||_eps <= c ||rot E||``
* ``c_m_rot``          curl pair with ``1/eps`` on faces,
                       ``||E||_eps <= c ||rot E||_{1/eps}``
* ``c_m_full``         ``max(c_p, c_m_rot_eps_id)``, cross-checked against a
                       dense solve of the combined rot/div form when small.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from .derham_grid import BoundarySpec, ComplexOperators, Grid3, MaterialField, build_complex
from .dual_pair import DEFAULT_SEED, DualPair, min_positive_eigenvalue
from .helmholtz import hodge_form
from .sparse_core import DENSE_CAP, dense_eigh

log = logging.getLogger(__name__)

CHECK_RTOL = 1e-9
ROT_SLACK = 1e-3
ROT_ENFORCE_MIN_N = 8
MAX_IDENTITY_RTOL = 1e-7
DUAL_RTOL = 1e-8


@dataclass
class SolverSettings:
    tol: float = 1e-10
    maxit: int = 2000
    seed: int = DEFAULT_SEED
    dense_cap: int = DENSE_CAP
    residual_tol: float = 1e-6


def _solve(pair: DualPair, settings: Optional[SolverSettings], iterations: Optional[dict], key: str) -> float:
    s = settings or SolverSettings()
    res = min_positive_eigenvalue(pair, tol=s.tol, seed=s.seed, maxit=s.maxit, residual_tol=s.residual_tol)
    if iterations is not None:
        iterations[key] = res.iterations
    log.debug("%s: lambda=%.12g after %d steps (%d CG)", key, res.eigenvalue, res.iterations, res.cg_iterations)
    return res.constant


def poincare_constant(ops: ComplexOperators, settings: SolverSettings = None, iterations: dict = None) -> float:
    """``1/sqrt(lambda_1)`` of the weighted graph Laplacian with the grid's boundary labels."""
    return _solve(ops.grad_pair, settings, iterations, "c_p")


def maxwell_div_constant(ops: ComplexOperators, settings: SolverSettings = None, iterations: dict = None) -> float:
    return _solve(ops.grad_pair.swapped(), settings, iterations, "c_m_div")


def maxwell_rot_constant(ops: ComplexOperators, unweighted_rhs: bool = True,
                         settings: SolverSettings = None, iterations: dict = None) -> float:
    """Rotation constant; ``unweighted_rhs`` selects ``||rot E||`` over ``||rot E||_{1/eps}``."""
    if unweighted_rhs:
        return _solve(ops.curl_pair, settings, iterations, "c_m_rot_eps_id")
    return _solve(ops.curl_pair_eps_codomain(), settings, iterations, "c_m_rot")


def maxwell_full_constant(c_p: float, c_m_rot_eps_id: float) -> float:
    return max(c_p, c_m_rot_eps_id)


def maxwell_full_constant_direct(ops: ComplexOperators, cap: int = DENSE_CAP, zero_tol: float = 1e-10) -> float:
    """Dense ``min (||rot E||^2 + ||div eps E||^2) / ||E||_eps^2`` off the harmonic fields."""
    vals = dense_eigh(hodge_form(ops), np.diag(ops.grad_pair.wy), cap=cap)[0]
    positive = vals[vals > zero_tol * vals[-1]]
    return float(1.0 / np.sqrt(positive[0]))


def payne_weinberger_bound(grid: Grid3) -> float:
    return grid.diameter / np.pi


# ----------------------------------------------------------------------------
# report


@dataclass
class CheckRecord:
    name: str
    lhs: Optional[float]
    rhs: Optional[float]
    enforced: bool = True
    reason: Optional[str] = None

    @property
    def skipped(self) -> bool:
        return self.lhs is None

    @property
    def margin(self) -> Optional[float]:
        return None if self.skipped else self.rhs - self.lhs

    @property
    def passed(self) -> Optional[bool]:
        if self.skipped:
            return None
        return bool(self.lhs <= self.rhs + CHECK_RTOL * max(abs(self.lhs), abs(self.rhs)))

    @classmethod
    def skip(cls, name: str, reason: str) -> "CheckRecord":
        return cls(name, None, None, enforced=False, reason=reason)

    def to_dict(self) -> dict:
        return {"name": self.name, "lhs": self.lhs, "rhs": self.rhs, "margin": self.margin,
                "pass": self.passed, "enforced": self.enforced, "reason": self.reason}


@dataclass
class ConstantsReport:
    grid: Grid3
    bc: BoundarySpec
    eps_under: float
    eps_over: float
    eps_hat: float
    c_p: float
    c_m_div: float
    c_m_rot: float
    c_m_rot_eps_id: float
    c_m_full: float
    c_m_full_direct: Optional[float]
    pw_bound: float
    checks: List[CheckRecord] = field(default_factory=list)
    reference: Dict[str, float] = field(default_factory=dict)
    tol: float = 1e-10
    seed: int = DEFAULT_SEED
    iterations: Dict[str, int] = field(default_factory=dict)

    @property
    def failed_checks(self) -> List[CheckRecord]:
        return [c for c in self.checks if c.enforced and c.passed is False]

    @property
    def ok(self) -> bool:
        return not self.failed_checks

    def check(self, name: str) -> CheckRecord:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "grid": {"n": list(self.grid.n), "L": list(self.grid.L), "diameter": self.grid.diameter},
            "bc": list(self.bc.labels),
            "eps": {"under": self.eps_under, "over": self.eps_over, "hat": self.eps_hat},
            "constants": {
                "c_p": self.c_p,
                "c_m_div": self.c_m_div,
                "c_m_rot": self.c_m_rot,
                "c_m_rot_eps_id": self.c_m_rot_eps_id,
                "c_m_full": self.c_m_full,
                "c_m_full_direct": self.c_m_full_direct,
            },
            "reference": dict(self.reference),
            "pw_bound": self.pw_bound,
            "checks": [c.to_dict() for c in self.checks],
            "solver": {"tol": self.tol, "iterations": dict(self.iterations), "seed": self.seed},
        }


def report_json(doc: dict) -> str:
    """Canonical serialization; re-serializing a parsed report is byte-identical."""
    return json.dumps(doc, indent=2) + "\n"


# ----------------------------------------------------------------------------
# verification


def verify_all(grid: Grid3, bc: BoundarySpec, mat: Optional[MaterialField] = None,
               settings: Optional[SolverSettings] = None, direct: Optional[bool] = None) -> ConstantsReport:
    """Compute every constant for one configuration and evaluate the inequalities.

    Reference values with eps = id (same boundary labels) feed the eps
    sandwich checks.  For full boundary conditions both extreme cases are
    also computed with eps = id for the Friedrichs/Poincare comparisons and
    the convex-domain bounds; for mixed conditions those checks are skipped.

    ``direct`` requests the dense cross-check of the full Maxwell constant;
    by default it runs whenever the edge space fits under the dense cap.
    """
    s = settings or SolverSettings()
    mat = MaterialField.identity(grid) if mat is None else mat
    its: Dict[str, int] = {}
    ops = build_complex(grid, bc, mat)

    c_p = poincare_constant(ops, s, its)
    c_m_div = maxwell_div_constant(ops, s, its)
    c_m_rot_eps_id = maxwell_rot_constant(ops, True, s, its)
    if mat.is_identity:
        c_m_rot = c_m_rot_eps_id
    else:
        c_m_rot = maxwell_rot_constant(ops, False, s, its)
    c_m_full = maxwell_full_constant(c_p, c_m_rot_eps_id)

    n_edges = ops.grad_pair.Y.dim
    if direct is None:
        direct = n_edges <= s.dense_cap
    c_direct = maxwell_full_constant_direct(ops, s.dense_cap) if direct else None

    # eps = id references on the same boundary labels
    cache: Dict[BoundarySpec, ComplexOperators] = {}

    def ref(prefix, fn, *args):
        sub: Dict[str, int] = {}
        value = fn(*args, settings=s, iterations=sub)
        its.update({f"{prefix}_{k}": v for k, v in sub.items()})
        return value

    def id_ops(spec: BoundarySpec) -> ComplexOperators:
        if mat.is_identity and spec == bc:
            return ops
        if spec not in cache:
            cache[spec] = build_complex(grid, spec)
        return cache[spec]

    if mat.is_identity:
        c_p_id, c_rot_id = c_p, c_m_rot_eps_id
    else:
        c_p_id = ref("id", poincare_constant, id_ops(bc))
        c_rot_id = ref("id", maxwell_rot_constant, id_ops(bc), True)
    reference = {"c_p_id": c_p_id, "c_m_rot_id": c_rot_id}

    eu, eo, eh = mat.eps_under, mat.eps_over, mat.eps_hat
    pw = payne_weinberger_bound(grid)
    checks: List[CheckRecord] = []

    checks.append(CheckRecord("dual_poincare_div", abs(c_p - c_m_div), DUAL_RTOL * c_p))

    if bc.is_full:
        dirichlet, neumann = BoundarySpec.dirichlet(), BoundarySpec.neumann()
        c_pG = c_p_id if bc == dirichlet else ref("dirichlet", poincare_constant, id_ops(dirichlet))
        c_pN = c_p_id if bc == neumann else ref("neumann", poincare_constant, id_ops(neumann))
        reference.update({"c_p_dirichlet": c_pG, "c_p_neumann": c_pN})
        checks.append(CheckRecord("friedrichs_below_poincare", c_pG, c_pN))
        checks.append(CheckRecord("poincare_below_payne_weinberger", c_pN, pw))
        enforced = min(grid.n) >= ROT_ENFORCE_MIN_N
        checks.append(CheckRecord(
            "rot_below_poincare", c_rot_id, c_pN * (1.0 + ROT_SLACK), enforced=enforced,
            reason=None if enforced else f"reported only below n={ROT_ENFORCE_MIN_N}"))
    else:
        why = "full boundary conditions only"
        c_pG = c_pN = None
        for name in ("friedrichs_below_poincare", "poincare_below_payne_weinberger", "rot_below_poincare"):
            checks.append(CheckRecord.skip(name, why))

    if c_direct is not None:
        checks.append(CheckRecord("max_identity", abs(c_direct - c_m_full), MAX_IDENTITY_RTOL * c_m_full))
    else:
        checks.append(CheckRecord("max_identity", abs(c_m_full - max(c_p, c_m_rot_eps_id)),
                                  MAX_IDENTITY_RTOL * c_m_full,
                                  reason="dense cross-check not run; max formula only"))

    checks.append(CheckRecord("eps_sandwich_poincare_lower", c_p_id / eo, c_p))
    checks.append(CheckRecord("eps_sandwich_poincare_upper", c_p, eu * c_p_id))
    checks.append(CheckRecord("eps_sandwich_rot_lower", c_rot_id / eu, c_m_rot_eps_id))
    checks.append(CheckRecord("eps_sandwich_rot_upper", c_m_rot_eps_id, eo * c_rot_id))
    checks.append(CheckRecord("eps_sandwich_rot_eps_lower", c_rot_id / eu**2, c_m_rot))
    checks.append(CheckRecord("eps_sandwich_rot_eps_upper", c_m_rot, eo**2 * c_rot_id))

    if bc.is_full:
        c_low = c_pG if bc.is_full_tangential else c_pN
        checks.append(CheckRecord("convex_full_lower", c_low / eo, c_m_full))
        checks.append(CheckRecord("convex_full_upper", c_m_full, eh * c_pN))
    else:
        why = "full boundary conditions only"
        checks.append(CheckRecord.skip("convex_full_lower", why))
        checks.append(CheckRecord.skip("convex_full_upper", why))

    return ConstantsReport(
        grid=grid, bc=bc, eps_under=eu, eps_over=eo, eps_hat=eh,
        c_p=c_p, c_m_div=c_m_div, c_m_rot=c_m_rot, c_m_rot_eps_id=c_m_rot_eps_id,
        c_m_full=c_m_full, c_m_full_direct=c_direct, pw_bound=pw, checks=checks,
        reference=reference, tol=s.tol, seed=s.seed, iterations=its,
    )
