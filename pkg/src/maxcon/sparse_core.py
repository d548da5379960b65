"""Sparse and dense linear algebra primitives.

Matrices are ``scipy.sparse.csr_matrix`` objects kept in canonical form
(sorted column indices, no duplicates, no stored zeros, float64 entries).
Inner products come from strictly positive diagonal weights, which is all the
lumped-mass discretization needs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
import scipy.linalg
import scipy.sparse as sps

from .errors import (
    ConvergenceError,
    DenseCapError,
    DimensionError,
    NotPositiveDefiniteError,
    ValidationError,
)

DENSE_CAP = 2000


def as_csr(A) -> sps.csr_matrix:
    """Return ``A`` as a canonical float64 CSR matrix (copy)."""
    M = sps.csr_matrix(A, dtype=np.float64, copy=True)
    M.sum_duplicates()
    M.eliminate_zeros()
    M.sort_indices()
    M.has_canonical_format = True
    return M


def is_canonical(A: sps.csr_matrix) -> bool:
    """Check the CSR storage invariants without trusting scipy's cached flags."""
    rows, cols = A.shape
    ptr, idx = A.indptr, A.indices
    if len(ptr) != rows + 1 or ptr[0] != 0 or np.any(np.diff(ptr) < 0):
        return False
    if len(idx) and (idx.min() < 0 or idx.max() >= cols):
        return False
    for r in range(rows):
        seg = idx[ptr[r]:ptr[r + 1]]
        if np.any(np.diff(seg) <= 0):
            return False
    return True


@dataclass(frozen=True)
class DiagonalWeight:
    """Diagonal inner product ``<u, v>_W = sum_i w_i u_i v_i``."""

    entries: np.ndarray

    def __post_init__(self):
        w = np.array(self.entries, dtype=np.float64).ravel()
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise ValidationError("weight entries must be finite and strictly positive")
        w.setflags(write=False)
        object.__setattr__(self, "entries", w)

    @classmethod
    def identity(cls, n: int) -> "DiagonalWeight":
        return cls(np.ones(n))

    def __len__(self):
        return len(self.entries)

    def inner(self, u, v) -> float:
        return float(np.dot(self.entries * u, v))

    def norm(self, u) -> float:
        return float(np.sqrt(self.inner(u, u)))

    def matrix(self) -> sps.csr_matrix:
        return sps.diags(self.entries, format="csr")

    def inverse_matrix(self) -> sps.csr_matrix:
        return sps.diags(1.0 / self.entries, format="csr")

    def scaled(self, factor) -> "DiagonalWeight":
        return DiagonalWeight(self.entries * factor)


def transpose(A: sps.csr_matrix) -> sps.csr_matrix:
    return as_csr(A.T)


def spmv(A: sps.csr_matrix, x) -> np.ndarray:
    """Sparse matrix-vector product with an explicit shape check."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != A.shape[1]:
        raise DimensionError(f"vector of length {x.shape} does not match {A.shape[1]} columns")
    return A @ x


def cg_solve(
    apply: Callable[[np.ndarray], np.ndarray],
    b,
    rtol: float = 1e-10,
    maxit: int = 10000,
    x0: Optional[np.ndarray] = None,
    strict: bool = True,
) -> Tuple[np.ndarray, int]:
    """Conjugate gradients for a symmetric positive (semi)definite operator.

    Semidefinite operators are fine as long as ``b`` lies in their range; the
    iterates then stay in the range as well (up to rounding).

    Returns:
        ``(x, iterations)`` with ``||apply(x) - b|| <= rtol * ||b||``, checked
        against a freshly recomputed residual.

    With ``strict=False`` the current iterate is returned instead of raising
    when ``maxit`` is hit or the curvature vanishes; callers that only need an
    approximate solve (inverse iteration) use this on ill-conditioned systems
    where rounding stalls the residual just above ``rtol``.

    Raises:
        ConvergenceError: after ``maxit`` iterations without meeting ``rtol``.
    """
    b = np.asarray(b, dtype=np.float64)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros_like(b), 0
    target = rtol * bnorm

    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=np.float64)
    r = b - apply(x) if x0 is not None else b.copy()
    p = r.copy()
    rr = float(r @ r)
    it = 0
    while True:
        if np.sqrt(rr) <= target:
            # the recursive residual drifts; confirm with the true one
            r = b - apply(x)
            rr = float(r @ r)
            if np.sqrt(rr) <= target:
                return x, it
            p = r.copy()
        if it >= maxit:
            if not strict:
                return x, it
            raise ConvergenceError(
                f"CG did not converge in {maxit} iterations "
                f"(relative residual {np.sqrt(rr) / bnorm:.3e})",
                residual=np.sqrt(rr) / bnorm,
                iterations=it,
            )
        Ap = apply(p)
        pAp = float(p @ Ap)
        if pAp <= 0.0:
            if not strict:
                return x, it
            # p is in the null space of a semidefinite operator: b is
            # (numerically) outside the range
            raise ConvergenceError(
                "CG breakdown: search direction has nonpositive curvature",
                residual=np.sqrt(rr) / bnorm,
                iterations=it,
            )
        alpha = rr / pAp
        x += alpha * p
        r -= alpha * Ap
        rr_new = float(r @ r)
        p = r + (rr_new / rr) * p
        rr = rr_new
        it += 1


def dense_eigh(A, B=None, cap: int = DENSE_CAP) -> Tuple[np.ndarray, np.ndarray]:
    """Solve ``A v = lam B v`` densely; eigenvalues ascending, ``B``-orthonormal vectors."""
    A = A.toarray() if sps.issparse(A) else np.asarray(A, dtype=np.float64)
    n = A.shape[0]
    if A.ndim != 2 or A.shape[1] != n:
        raise DimensionError("A must be square")
    if n > cap:
        raise DenseCapError(f"dense eigensolve of size {n} exceeds cap {cap}")
    if B is None:
        return scipy.linalg.eigh(A)
    B = B.toarray() if sps.issparse(B) else np.asarray(B, dtype=np.float64)
    if B.shape != A.shape:
        raise DimensionError("A and B must have the same shape")
    try:
        np.linalg.cholesky(B)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError("B is not symmetric positive definite") from exc
    return scipy.linalg.eigh(A, B)
