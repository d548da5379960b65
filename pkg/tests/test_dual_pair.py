import numpy as np
import pytest
import scipy.sparse as sps
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from maxcon.dual_pair import (
    BasisDeflation,
    BlockMaxwellOperator,
    DualPair,
    RangeDeflation,
    adjoint,
    block_spectrum_check,
    constant_cA,
    dense_normal_spectrum,
    dual_constant_check,
    min_positive_eigenvalue,
    orthonormal_rows,
    random_dual_pair,
    range_projection,
    spectra_match_check,
)
from maxcon.errors import ConvergenceError, DimensionError, NoPositiveSpectrumError
from maxcon.sparse_core import DiagonalWeight

seeds = st.integers(0, 2**32 - 1)


def _svd_constant(pair):
    """Independent oracle: 1 / smallest positive singular value of W_Y^1/2 A W_X^-1/2."""
    B = np.sqrt(pair.wy)[:, None] * pair.A.toarray() / np.sqrt(pair.wx)
    s = np.linalg.svd(B, compute_uv=False)
    return 1.0 / s[s > 1e-8 * s[0]].min()


def test_shape_validation():
    with pytest.raises(DimensionError):
        DualPair.from_arrays(np.ones((2, 3)), wx=np.ones(2))
    with pytest.raises(DimensionError):
        DualPair.from_arrays(np.ones((2, 3)), wy=np.ones(3))


@given(seeds)
@settings(max_examples=30, deadline=None)
def test_adjoint_identity(seed):
    rng = np.random.default_rng(seed)
    pair = random_dual_pair(rng, max_dim=15)
    x = rng.standard_normal(pair.X.dim)
    y = rng.standard_normal(pair.Y.dim)
    lhs = pair.Y.inner(pair.A @ x, y)
    rhs = pair.X.inner(x, adjoint(pair) @ y)
    assert abs(lhs - rhs) <= 1e-12 * (1 + abs(lhs))


@given(seeds)
@settings(max_examples=20, deadline=None)
def test_double_adjoint_is_identity(seed):
    pair = random_dual_pair(np.random.default_rng(seed), max_dim=12)
    twice = pair.swapped().swapped()
    assert_allclose(twice.A.toarray(), pair.A.toarray(), atol=1e-13)


@given(seeds)
@settings(max_examples=25, deadline=None)
def test_dual_constants_coincide(seed):
    pair = random_dual_pair(np.random.default_rng(seed), max_dim=20)
    rep = dual_constant_check(pair)
    assert rep.deviation <= 1e-9
    assert rep.c_dense == pytest.approx(_svd_constant(pair), rel=1e-9)


@given(seeds)
@settings(max_examples=25, deadline=None)
def test_spectra_of_both_normal_operators_agree(seed):
    pair = random_dual_pair(np.random.default_rng(seed), max_dim=25)
    rep = spectra_match_check(pair)
    scale = max(1.0, rep.nonzero_AsA.max(initial=0.0))
    assert rep.max_deviation <= 1e-9 * scale
    rank = np.linalg.matrix_rank(pair.A.toarray())
    assert len(rep.nonzero_AsA) == rank


@given(seeds)
@settings(max_examples=25, deadline=None)
def test_block_operator_spectrum(seed):
    pair = random_dual_pair(np.random.default_rng(seed), max_dim=25)
    M = BlockMaxwellOperator(pair)
    rep = block_spectrum_check(M)
    assert rep.symmetry_deviation <= 1e-10
    assert rep.square_deviation <= 1e-9 * max(1.0, np.max(rep.eigenvalues) ** 2)
    assert rep.eigenvector_residual <= 1e-9
    # M is self-adjoint in the product inner product
    WM = M.weighted_dense()
    assert_allclose(WM, WM.T, atol=0)


def test_block_operator_apply_matches_dense():
    pair = random_dual_pair(np.random.default_rng(5), max_dim=10)
    M = BlockMaxwellOperator(pair)
    z = np.random.default_rng(6).standard_normal(M.dim)
    assert_allclose(M.weighted_dense() @ z, M.weight * M.apply(z), atol=1e-12)


def test_range_projection_is_orthogonal_projector():
    rng = np.random.default_rng(0)
    B = sps.random(12, 4, density=0.6, random_state=1, format="csr")
    W = DiagonalWeight(rng.uniform(0.5, 2, 12))
    v = rng.standard_normal(12)
    p = range_projection(B, W, v, rtol=1e-13)
    # residual is W-orthogonal to every column of B
    assert_allclose(B.T @ (W.entries * (v - p.value)), 0.0, atol=1e-10)
    # idempotent
    p2 = range_projection(B, W, p.value, rtol=1e-13)
    assert_allclose(p2.value, p.value, atol=1e-10)


def test_orthonormal_rows_drops_dependent_vectors():
    W = DiagonalWeight(np.array([1.0, 2.0, 3.0, 4.0]))
    V = np.array([[1.0, 0, 0, 1], [2.0, 0, 0, 2], [0, 1.0, 1, 0]])
    Q = orthonormal_rows(V, W)
    assert Q.shape == (2, 4)
    assert_allclose(Q @ np.diag(W.entries) @ Q.T, np.eye(2), atol=1e-12)


def test_closed_form_path_graph():
    # 1D Dirichlet difference operator: eigenvalues of A^T A are 4 sin^2(k pi / 2(n+1))
    n = 9
    A = sps.diags([np.ones(n), -np.ones(n)], [0, -1], shape=(n + 1, n))
    pair = DualPair.from_arrays(A)
    res = min_positive_eigenvalue(pair, tol=1e-12)
    assert res.eigenvalue == pytest.approx(4 * np.sin(np.pi / (2 * (n + 1))) ** 2, rel=1e-10)
    assert res.residual <= 1e-6
    assert res.history[-1] == res.eigenvalue


def test_kernel_is_skipped():
    # Neumann path graph: constants are in the kernel, first positive is 4 sin^2(pi/2n)
    n = 10
    A = sps.diags([-np.ones(n - 1), np.ones(n - 1)], [0, 1], shape=(n - 1, n))
    pair = DualPair.from_arrays(A)
    lam = min_positive_eigenvalue(pair, tol=1e-12).eigenvalue
    assert lam == pytest.approx(4 * np.sin(np.pi / (2 * n)) ** 2, rel=1e-10)


def test_kernel_hint_route_agrees():
    n = 10
    A = sps.diags([-np.ones(n - 1), np.ones(n - 1)], [0, 1], shape=(n - 1, n))
    base = DualPair.from_arrays(A)
    hinted = DualPair(base.A, base.X, base.Y, kernel_hint=sps.csr_matrix(np.ones((n, 1))))
    a = min_positive_eigenvalue(hinted, use_kernel_hint=True, tol=1e-12).eigenvalue
    b = min_positive_eigenvalue(base, tol=1e-12).eigenvalue
    assert a == pytest.approx(b, rel=1e-10)
    with pytest.raises(ValueError):
        min_positive_eigenvalue(base, use_kernel_hint=True)


def test_basis_deflation_finds_next_eigenvalue():
    d = np.array([1.0, 2.0, 3.0, 5.0])
    pair = DualPair.from_arrays(np.diag(np.sqrt(d)))
    e0 = np.eye(4)[0]
    res = min_positive_eigenvalue(pair, deflation=[BasisDeflation(e0)], tol=1e-12)
    assert res.eigenvalue == pytest.approx(2.0, rel=1e-10)
    res = min_positive_eigenvalue(pair, deflation=[RangeDeflation(sps.csr_matrix(np.eye(4)[:, :2]))], tol=1e-12)
    assert res.eigenvalue == pytest.approx(3.0, rel=1e-10)


def test_weighted_constant_matches_dense_spectrum():
    pair = random_dual_pair(np.random.default_rng(11), max_dim=30)
    vals = dense_normal_spectrum(pair)
    lam = vals[vals > 1e-10 * vals[-1]].min()
    assert constant_cA(pair) == pytest.approx(1 / np.sqrt(lam), rel=1e-9)


def test_zero_operator_has_no_positive_spectrum():
    pair = DualPair.from_arrays(sps.csr_matrix((3, 4)))
    with pytest.raises(NoPositiveSpectrumError):
        min_positive_eigenvalue(pair)


def test_deflating_everything_has_no_positive_spectrum():
    pair = DualPair.from_arrays(np.eye(3))
    with pytest.raises(NoPositiveSpectrumError):
        min_positive_eigenvalue(pair, deflation=[BasisDeflation(np.eye(3))])


def test_iteration_limit():
    # clustered spectrum: inverse iteration needs many steps
    pair = DualPair.from_arrays(np.diag(np.sqrt(np.linspace(1.0, 1.01, 30))))
    with pytest.raises(ConvergenceError):
        min_positive_eigenvalue(pair, maxit=2, tol=1e-12)


def test_seeded_runs_are_reproducible():
    pair = random_dual_pair(np.random.default_rng(4), max_dim=30)
    a = min_positive_eigenvalue(pair, seed=7)
    b = min_positive_eigenvalue(pair, seed=7)
    assert a.eigenvalue == b.eigenvalue
    assert a.iterations == b.iterations
