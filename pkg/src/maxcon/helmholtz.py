"""Discrete Helmholtz-Weyl decomposition of edge fields.

An edge field splits eps-orthogonally into a gradient, a harmonic
Dirichlet-Neumann part and an ``eps^{-1} rot`` part.  The gradient and rot
parts are computed as weighted range projections; the harmonic part is the
remainder.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sps

from .derham_grid import ComplexOperators
from .dual_pair import DEFAULT_SEED, adjoint, orthonormal_rows, range_projection
from .errors import DenseCapError
from .sparse_core import DENSE_CAP, dense_eigh


@dataclass(frozen=True)
class HelmholtzParts:
    grad_part: np.ndarray
    harmonic_part: np.ndarray
    curl_part: np.ndarray
    scalar_potential: np.ndarray
    vector_potential: np.ndarray
    weight: np.ndarray

    def _inner(self, a, b) -> float:
        return float(np.dot(self.weight * a, b))

    def norm(self, a) -> float:
        return float(np.sqrt(self._inner(a, a)))

    def reconstruction_error(self, E) -> float:
        return self.norm(E - self.grad_part - self.harmonic_part - self.curl_part)

    def orthogonality(self) -> dict:
        g, h, c = self.grad_part, self.harmonic_part, self.curl_part
        return {"grad_harmonic": abs(self._inner(g, h)),
                "grad_curl": abs(self._inner(g, c)),
                "harmonic_curl": abs(self._inner(h, c))}


def decompose(E, ops: ComplexOperators, tol: float = 1e-10) -> HelmholtzParts:
    """Split ``E`` into gradient, harmonic and rotational parts.

    ``tol`` is the relative CG tolerance of the two projections.  For
    ``Gamma_t = empty`` the scalar potential is normalized to zero mean.
    """
    E = np.asarray(E, dtype=float)
    W = ops.grad_pair.Y.weight
    grad = range_projection(ops.grad_pair.A, W, E, rtol=tol)
    u = grad.coefficients
    if ops.bc.is_full_normal:
        wn = ops.grad_pair.wx
        u = u - np.dot(wn, u) / wn.sum()
    curl = range_projection(adjoint(ops.curl_pair), W, E, rtol=tol)
    harmonic = E - grad.value - curl.value
    return HelmholtzParts(grad.value, harmonic, curl.value, u, curl.coefficients, W.entries)


def hodge_form(ops: ComplexOperators) -> sps.csr_matrix:
    """``||rot E||^2 + ||div eps E||^2`` as a symmetric matrix on edges."""
    G, C = ops.grad_pair.A, ops.curl_pair.A
    wn, we, wf = ops.grad_pair.wx, ops.grad_pair.wy, ops.curl_pair.wy
    return (C.T @ sps.diags(wf) @ C
            + sps.diags(we) @ G @ sps.diags(1.0 / wn) @ G.T @ sps.diags(we)).tocsr()


def harmonic_basis(ops: ComplexOperators, tol: float = 1e-10, seed: int = DEFAULT_SEED,
                   batch: int = 4, rank_tol: float = 1e-6) -> np.ndarray:
    """Eps-orthonormal harmonic fields (rows), found from remainders of random fields.

    Batches of random fields are decomposed until a batch contributes no
    direction above ``rank_tol`` relative to the input size.
    """
    rng = np.random.default_rng(seed)
    W = ops.grad_pair.Y.weight
    n = W.entries.size
    basis = np.zeros((0, n))
    while True:
        found = []
        for _ in range(batch):
            E = rng.standard_normal(n)
            h = decompose(E, ops, tol).harmonic_part
            if len(basis):
                h = h - basis.T @ (basis @ (W.entries * h))
            if W.norm(h) > rank_tol * W.norm(E):
                found.append(h / W.norm(E))
        if not found:
            return basis
        # projection noise is ~tol relative to |E|; drop it along with duplicates
        basis = orthonormal_rows(np.vstack([basis, *found]), W, rank_tol=rank_tol)
        if len(basis) >= n:
            return basis


def harmonic_dimension(ops: ComplexOperators, dense: Optional[bool] = None,
                       cap: int = DENSE_CAP, zero_tol: float = 1e-10) -> int:
    """Dimension of the discrete harmonic Dirichlet-Neumann fields.

    Dense path: nullity of the Hodge form against the eps-mass, counting
    eigenvalues below ``zero_tol`` times the largest.  ``dense=None`` picks the
    dense path when the edge space fits under ``cap``, the iterative
    :func:`harmonic_basis` otherwise.
    """
    n = ops.grad_pair.Y.dim
    if dense is None:
        dense = n <= cap
    if not dense:
        return len(harmonic_basis(ops))
    if n > cap:
        raise DenseCapError(f"edge space of size {n} exceeds dense cap {cap}")
    vals = dense_eigh(hodge_form(ops), np.diag(ops.grad_pair.wy), cap=cap)[0]
    return int(np.sum(vals <= zero_tol * vals[-1]))


@dataclass(frozen=True)
class EstimateResidual:
    lhs: float
    rhs: float

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @property
    def scale(self) -> float:
        return max(abs(self.lhs), abs(self.rhs))

    @property
    def holds(self) -> bool:
        return self.slack >= -1e-9 * self.scale


def maxwell_estimate_check(E, ops: ComplexOperators, constants, tol: float = 1e-10) -> EstimateResidual:
    """Both sides of ``||E - pi E||_eps^2 <= c_p^2 ||div eps E||^2 + c_rot^2 ||rot E||^2``.

    ``constants`` is a :class:`~maxcon.constants.ConstantsReport` (or anything
    with ``c_p`` and ``c_m_rot_eps_id``) computed for the same configuration.
    """
    E = np.asarray(E, dtype=float)
    parts = decompose(E, ops, tol)
    lhs = parts.norm(E - parts.harmonic_part) ** 2
    div_eps_E = -(adjoint(ops.grad_pair) @ E)
    rot_E = ops.curl_pair.A @ E
    rhs = (constants.c_p**2 * ops.grad_pair.X.norm(div_eps_E) ** 2
           + constants.c_m_rot_eps_id**2 * ops.curl_pair.Y.norm(rot_E) ** 2)
    return EstimateResidual(lhs, rhs)
