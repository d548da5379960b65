"""Operators between weighted spaces, their adjoints and spectral constants.

A :class:`DualPair` holds a sparse ``A: X -> Y`` together with the diagonal
inner products of ``X`` and ``Y``.  Its adjoint is ``A* = W_X^{-1} A^T W_Y``.
The constant ``c_A`` is the reciprocal square root of the smallest positive
eigenvalue of ``A*A``; it is computed by inverse iteration on the orthogonal
complement of ``N(A)``, which is the range of ``A*``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
import scipy.sparse as sps

from .errors import ConvergenceError, DenseCapError, DimensionError, NoPositiveSpectrumError
from .sparse_core import DENSE_CAP, DiagonalWeight, as_csr, cg_solve, dense_eigh

DEFAULT_SEED = 3735928559


@dataclass(frozen=True)
class WeightedSpace:
    """Coefficient space ``R^dim`` with a lumped-mass inner product."""

    weight: DiagonalWeight
    name: str = ""

    @property
    def dim(self) -> int:
        return len(self.weight)

    def inner(self, u, v) -> float:
        return self.weight.inner(u, v)

    def norm(self, u) -> float:
        return self.weight.norm(u)


@dataclass(frozen=True)
class DualPair:
    """A sparse operator ``A: X -> Y`` and the spaces it acts between.

    ``kernel_hint`` optionally holds a potential operator whose range lies in
    ``N(A)`` (e.g. the gradient for the curl pair).
    """

    A: sps.csr_matrix
    X: WeightedSpace
    Y: WeightedSpace
    kernel_hint: Optional[sps.csr_matrix] = None
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "A", as_csr(self.A))
        if self.A.shape != (self.Y.dim, self.X.dim):
            raise DimensionError(
                f"operator shape {self.A.shape} does not match spaces ({self.Y.dim}, {self.X.dim})"
            )
        if self.kernel_hint is not None:
            hint = as_csr(self.kernel_hint)
            if hint.shape[0] != self.X.dim:
                raise DimensionError("kernel_hint must map into X")
            object.__setattr__(self, "kernel_hint", hint)

    @classmethod
    def from_arrays(cls, A, wx=None, wy=None, name: str = "") -> "DualPair":
        A = as_csr(A)
        wx = np.ones(A.shape[1]) if wx is None else wx
        wy = np.ones(A.shape[0]) if wy is None else wy
        return cls(A, WeightedSpace(DiagonalWeight(wx)), WeightedSpace(DiagonalWeight(wy)), name=name)

    @property
    def wx(self) -> np.ndarray:
        return self.X.weight.entries

    @property
    def wy(self) -> np.ndarray:
        return self.Y.weight.entries

    def adjoint(self) -> sps.csr_matrix:
        return adjoint(self)

    def swapped(self) -> "DualPair":
        """The pair ``(A*, A)`` with the roles of ``X`` and ``Y`` exchanged."""
        name = f"{self.name}*" if self.name else ""
        return DualPair(adjoint(self), self.Y, self.X, name=name)

    def normal_form(self) -> sps.csr_matrix:
        """Euclidean-symmetric ``A^T W_Y A``; ``A*A = W_X^{-1}`` times this."""
        return as_csr(self.A.T @ sps.diags(self.wy) @ self.A)


def adjoint(pair: DualPair) -> sps.csr_matrix:
    """``A* = W_X^{-1} A^T W_Y`` as an explicit sparse matrix."""
    return as_csr(sps.diags(1.0 / pair.wx) @ pair.A.T @ sps.diags(pair.wy))


@dataclass(frozen=True)
class Projection:
    """Result of a weighted range projection ``P v = B z``."""

    value: np.ndarray
    coefficients: np.ndarray
    iterations: int


def range_projection(B, W: DiagonalWeight, v, rtol: float = 1e-10, maxit: int = 20000,
                     strict: bool = True) -> Projection:
    """W-orthogonal projection of ``v`` onto ``range(B)``.

    Solves the normal equations ``(B^T W B) z = B^T W v`` by CG.  The
    returned ``B z`` lies in ``range(B)`` exactly, whatever the CG accuracy;
    ``strict=False`` accepts an inaccurate ``z`` instead of raising.
    """
    B = as_csr(B)
    w = W.entries
    v = np.asarray(v, dtype=np.float64)
    if B.shape[0] != len(w) or v.shape != (len(w),):
        raise DimensionError("projector operands have inconsistent sizes")
    BT = as_csr(B.T)
    rhs = BT @ (w * v)
    # a right-hand side at cancellation level (v orthogonal to range(B) up to
    # rounding) is noise that CG cannot be asked to resolve
    magnitude = np.linalg.norm(abs(BT) @ np.abs(w * v))
    if np.linalg.norm(rhs) <= 1e-13 * magnitude:
        return Projection(np.zeros_like(v), np.zeros(B.shape[1]), 0)
    z, its = cg_solve(lambda s: BT @ (w * (B @ s)), rhs, rtol=rtol, maxit=maxit, strict=strict)
    return Projection(B @ z, z, its)


def range_projector_apply(B, W: DiagonalWeight, v, rtol: float = 1e-10, maxit: int = 20000,
                          strict: bool = True) -> np.ndarray:
    return range_projection(B, W, v, rtol=rtol, maxit=maxit, strict=strict).value


@dataclass(frozen=True)
class RangeDeflation:
    """Remove the component in ``range(B)`` (W-orthogonal, via CG)."""

    B: sps.csr_matrix


@dataclass(frozen=True)
class BasisDeflation:
    """Remove the span of explicit vectors (rows or columns of ``vectors``)."""

    vectors: np.ndarray


DeflationSpec = Union[RangeDeflation, BasisDeflation]


class _Deflator:
    """Compiled deflation: removes a list of subspaces from X-vectors."""

    def __init__(self, specs: Sequence[DeflationSpec], W: DiagonalWeight, rtol: float):
        self.W = W
        self.rtol = rtol
        self.maxit = 20000
        self.ranges = []
        bases = []
        for spec in specs:
            if isinstance(spec, RangeDeflation):
                self.ranges.append(as_csr(spec.B))
            elif isinstance(spec, BasisDeflation):
                V = np.atleast_2d(np.asarray(spec.vectors, dtype=np.float64))
                if V.shape[0] == len(W) and V.shape[1] != len(W):
                    V = V.T
                bases.append(V)
            else:
                raise TypeError(f"unknown deflation spec {spec!r}")
        self.Q = orthonormal_rows(np.vstack(bases), W) if bases else None

    def __call__(self, v: np.ndarray) -> np.ndarray:
        for B in self.ranges:
            v = v - range_projector_apply(B, self.W, v, rtol=self.rtol, maxit=self.maxit)
        if self.Q is not None:
            v = v - self.Q.T @ (self.Q @ (self.W.entries * v))
        return v


def orthonormal_rows(V: np.ndarray, W: DiagonalWeight, rank_tol: float = 1e-10) -> np.ndarray:
    """W-orthonormal basis (as rows) of the row span of ``V``."""
    s = np.sqrt(W.entries)
    U, sig, _ = np.linalg.svd((V * s).T, full_matrices=False)
    keep = sig > rank_tol * (sig[0] if len(sig) else 1.0)
    return (U[:, keep] / s[:, None]).T


@dataclass
class SpectralResult:
    """Smallest positive eigenpair of ``A*A`` on the deflated subspace."""

    eigenvalue: float
    eigenvector: np.ndarray
    residual: float
    iterations: int
    cg_iterations: int = 0
    history: list = field(default_factory=list, repr=False)

    @property
    def constant(self) -> float:
        return float(1.0 / np.sqrt(self.eigenvalue))


def min_positive_eigenvalue(
    pair: DualPair,
    deflation: Sequence[DeflationSpec] = (),
    tol: float = 1e-10,
    seed: int = DEFAULT_SEED,
    maxit: int = 2000,
    residual_tol: float = 1e-6,
    cg_maxit: int = 50000,
    use_kernel_hint: bool = False,
    block: int = 4,
) -> SpectralResult:
    """Block inverse iteration for ``min sigma(A*A) \\ {0}`` with per-step projection.

    A block of ``block`` vectors is iterated with Rayleigh-Ritz after every
    step, so clustered or split-degenerate eigenvalues (cube symmetries,
    slightly perturbed by eps) converge at the rate of the gap to the
    ``block + 1``-th eigenvalue instead of the first gap.

    Every iterate is projected onto ``R(A*)`` (the X-orthogonal complement
    of ``N(A)``) and then stripped of the ``deflation`` subspaces.  With
    ``use_kernel_hint`` the kernel is removed through ``pair.kernel_hint``
    instead, which is only correct when that range exhausts ``N(A)`` up to the
    supplied deflations.

    Converged when successive smallest Ritz values differ by at most
    ``tol * lam + 1e-14`` and the relative residual of the lowest Ritz pair
    ``||A*A v - lam v||_X / (lam ||v||_X)`` is at most ``residual_tol``.

    Raises:
        NoPositiveSpectrumError: the deflated subspace is trivial.
        ConvergenceError: no convergence within ``maxit`` outer steps, or an
            inner CG failure.
    """
    A = pair.A
    AT = as_csr(A.T)
    wx, wy = pair.wx, pair.wy
    W = pair.X.weight
    # inner solves run 100x tighter, floored above rounding level
    inner_rtol = max(0.01 * tol, 1e-13)
    # Inner solves only steer the iteration: the iterate stays in R(A*)
    # exactly and convergence is judged on the outer residual, so a stalled
    # CG (rounding on ill-conditioned pairs) is accepted after ~2 sweeps.
    solve_maxit = min(cg_maxit, 2 * pair.X.dim + 50)
    proj_maxit = min(cg_maxit, 2 * pair.Y.dim + 50)
    Astar = adjoint(pair)

    if use_kernel_hint:
        if pair.kernel_hint is None:
            raise ValueError("pair has no kernel_hint")
        specs = [RangeDeflation(pair.kernel_hint), *deflation]
        deflate = _Deflator(specs, W, max(inner_rtol * 1e-2, 1e-13))

        def project(v):
            return deflate(v)
    else:
        deflate = _Deflator(deflation, W, inner_rtol)

        def project(v):
            if A.nnz == 0:
                return np.zeros_like(v)
            return deflate(range_projector_apply(Astar, W, v, rtol=inner_rtol,
                                                 maxit=proj_maxit, strict=False))

    def apply(v):
        return AT @ (wy * (A @ v))

    def ritz(Q):
        """Rayleigh-Ritz on the W-orthonormal rows of ``Q``; ascending values."""
        KQ = np.array([apply(q) for q in Q])
        H = Q @ KQ.T
        vals, V = np.linalg.eigh(0.5 * (H + H.T))
        return vals, V.T @ Q

    def orthonormal(Y):
        Q = orthonormal_rows(np.atleast_2d(Y), W) if A.nnz else np.zeros((0, pair.X.dim))
        if len(Q) == 0 or not np.all(np.isfinite(Q)):
            raise NoPositiveSpectrumError("no positive spectrum: deflated subspace is trivial")
        return Q

    rng = np.random.default_rng(seed)
    start = rng.standard_normal((max(1, block), pair.X.dim))
    Q = orthonormal(np.array([project(v) for v in start]) if A.nnz else start)
    theta, Q = ritz(Q)
    if not theta[0] > 0.0:
        raise NoPositiveSpectrumError("no positive spectrum: Rayleigh quotient vanishes")
    lam = float(theta[0])
    history = [lam]
    total_cg = 0
    rel_res = np.inf
    for it in range(1, maxit + 1):
        Y = []
        for q, t in zip(Q, theta):
            y, its = cg_solve(apply, wx * q, rtol=inner_rtol, maxit=solve_maxit,
                              x0=q / max(t, lam), strict=False)
            total_cg += its
            Y.append(project(y))
        theta, Q = ritz(orthonormal(np.array(Y)))
        lam_new = float(theta[0])
        if not lam_new > 0.0:
            raise NoPositiveSpectrumError("no positive spectrum: iterate collapsed")
        history.append(lam_new)
        x = Q[0]
        res = apply(x) / wx - lam_new * x
        rel_res = W.norm(res) / lam_new
        if abs(lam_new - lam) <= tol * lam_new + 1e-14 and rel_res <= residual_tol:
            return SpectralResult(lam_new, x.copy(), rel_res, it, total_cg, history)
        lam = lam_new
    raise ConvergenceError(
        f"inverse iteration did not converge in {maxit} steps", residual=rel_res, iterations=maxit
    )


def constant_cA(pair: DualPair, **kwargs) -> float:
    """Best constant in ``||x||_X <= c_A ||A x||_Y`` on ``R(A*)``."""
    return min_positive_eigenvalue(pair, **kwargs).constant


# ----------------------------------------------------------------------------
# dense oracles

def dense_normal_spectrum(pair: DualPair, cap: int = DENSE_CAP) -> np.ndarray:
    """All eigenvalues of ``A*A`` in the X inner product (ascending)."""
    K = pair.normal_form().toarray()
    return dense_eigh(K, np.diag(pair.wx), cap=cap)[0]


def nonzero_part(vals: np.ndarray, scale: float, zero_tol: float = 1e-10) -> np.ndarray:
    vals = np.sort(np.asarray(vals))
    return vals[vals > zero_tol * scale]


@dataclass(frozen=True)
class SpectraReport:
    nonzero_AsA: np.ndarray
    nonzero_AAs: np.ndarray
    max_deviation: float


def spectra_match_check(pair: DualPair, cap: int = DENSE_CAP, zero_tol: float = 1e-10) -> SpectraReport:
    """Compare the nonzero spectra of ``A*A`` (on X) and ``AA*`` (on Y)."""
    if pair.X.dim + pair.Y.dim > cap:
        raise DenseCapError(f"total dimension {pair.X.dim + pair.Y.dim} exceeds cap {cap}")
    s1 = dense_normal_spectrum(pair, cap)
    s2 = dense_normal_spectrum(pair.swapped(), cap)
    scale = max(1.0, np.max(np.abs(s1), initial=0.0), np.max(np.abs(s2), initial=0.0))
    n1, n2 = nonzero_part(s1, scale, zero_tol), nonzero_part(s2, scale, zero_tol)
    if len(n1) != len(n2):
        dev = np.inf
    else:
        dev = float(np.max(np.abs(n1 - n2), initial=0.0))
    return SpectraReport(n1, n2, dev)


@dataclass(frozen=True)
class BlockMaxwellOperator:
    """``M(x, y) = (A* y, A x)`` on ``Z = X x Y`` with the product inner product."""

    pair: DualPair

    @property
    def dim(self) -> int:
        return self.pair.X.dim + self.pair.Y.dim

    @property
    def weight(self) -> np.ndarray:
        return np.concatenate([self.pair.wx, self.pair.wy])

    def apply(self, z) -> np.ndarray:
        n = self.pair.X.dim
        x, y = z[:n], z[n:]
        return np.concatenate([adjoint(self.pair) @ y, self.pair.A @ x])

    def inner(self, z1, z2) -> float:
        return float(np.dot(self.weight * z1, z2))

    def weighted_dense(self) -> np.ndarray:
        """``W_Z M``, which is symmetric exactly when ``M`` is self-adjoint."""
        WA = (self.pair.wy[:, None] * self.pair.A.toarray())
        n, m = self.pair.X.dim, self.pair.Y.dim
        out = np.zeros((n + m, n + m))
        out[:n, n:] = WA.T
        out[n:, :n] = WA
        return out


@dataclass(frozen=True)
class BlockSpectrumReport:
    eigenvalues: np.ndarray
    symmetry_deviation: float
    eigenvector_residual: float
    square_deviation: float


def block_spectrum_check(M: BlockMaxwellOperator, cap: int = DENSE_CAP, zero_tol: float = 1e-10) -> BlockSpectrumReport:
    """Check point symmetry of ``sigma(M)`` and its relation to ``sigma(A*A)``."""
    pair = M.pair
    vals, vecs = dense_eigh(M.weighted_dense(), np.diag(M.weight), cap=cap)
    scale = max(1.0, float(np.max(np.abs(vals), initial=0.0)))
    sym = float(np.max(np.abs(vals + vals[::-1]), initial=0.0)) / scale

    n = pair.X.dim
    Astar = adjoint(pair)
    worst = 0.0
    for lam, z in zip(vals, vecs.T):
        if abs(lam) <= zero_tol * scale:
            continue
        x, y = z[:n], z[n:]
        rx = Astar @ (pair.A @ x) - lam**2 * x
        ry = pair.A @ (Astar @ y) - lam**2 * y
        # z is W-normalized; x and y each carry half of the mass
        worst = max(worst, pair.X.norm(rx) / scale**2, pair.Y.norm(ry) / scale**2)

    sq = nonzero_part(vals[np.abs(vals) > zero_tol * scale] ** 2, scale**2, zero_tol)
    normal = nonzero_part(dense_normal_spectrum(pair, cap), scale**2, zero_tol)
    # every nonzero eigenvalue of A*A appears twice in sigma(M)^2 (as +-lam)
    doubled = np.sort(np.repeat(normal, 2))
    if len(sq) != len(doubled):
        sqdev = np.inf
    else:
        sqdev = float(np.max(np.abs(np.sort(sq) - doubled), initial=0.0))
    return BlockSpectrumReport(vals, sym, worst, sqdev)


# ----------------------------------------------------------------------------
# randomized property checks

def random_dual_pair(rng: np.random.Generator, max_dim: int = 40, density: float = 0.5) -> DualPair:
    """Random sparse pair with dimensions in ``[2, max_dim]`` and weights in ``[0.5, 2]``.

    Roughly half the draws are rank deficient with singular values spread
    over ``[0.1, 10]``, so kernels on both sides get exercised without
    making the inner solves ill-conditioned; the rest are sparse Gaussian.
    """
    n, m = (int(k) for k in rng.integers(2, max_dim + 1, size=2))
    if rng.random() < 0.5:
        r = int(rng.integers(1, min(n, m) + 1))
        U = np.linalg.qr(rng.standard_normal((m, r)))[0]
        V = np.linalg.qr(rng.standard_normal((n, r)))[0]
        A = (U * np.exp(rng.uniform(np.log(0.1), np.log(10.0), r))) @ V.T
    else:
        A = rng.standard_normal((m, n)) * (rng.random((m, n)) < density)
        if not A.any():
            A[0, 0] = 1.0
    return DualPair.from_arrays(A, rng.uniform(0.5, 2.0, n), rng.uniform(0.5, 2.0, m))


@dataclass(frozen=True)
class DualConstantReport:
    c_A: float
    c_A_star: float
    c_dense: float

    @property
    def deviation(self) -> float:
        """Largest relative disagreement among the three values."""
        vals = (self.c_A, self.c_A_star, self.c_dense)
        return (max(vals) - min(vals)) / self.c_dense


def dual_constant_check(pair: DualPair, cap: int = DENSE_CAP, zero_tol: float = 1e-10,
                        **kwargs) -> DualConstantReport:
    """``c_A`` and ``c_A*`` by inverse iteration against a dense weighted SVD."""
    B = np.sqrt(pair.wy)[:, None] * pair.A.toarray() / np.sqrt(pair.wx)[None, :]
    if B.shape[0] + B.shape[1] > 2 * cap:
        raise DenseCapError(f"pair of size {B.shape} exceeds dense cap {cap}")
    sv = np.linalg.svd(B, compute_uv=False)
    positive = sv[sv > np.sqrt(zero_tol) * max(sv[0], 1e-300)] if sv.size else sv
    if positive.size == 0:
        raise NoPositiveSpectrumError("operator is zero")
    c_dense = float(1.0 / positive[-1])
    return DualConstantReport(constant_cA(pair, **kwargs), constant_cA(pair.swapped(), **kwargs), c_dense)
