import numpy as np
import pytest
from numpy.testing import assert_allclose

from maxcon.constants import verify_all
from maxcon.derham_grid import BoundarySpec, MaterialField, build_complex, build_grid, lumped_weights
from maxcon.dual_pair import adjoint
from maxcon.errors import DenseCapError
from maxcon.helmholtz import (
    EstimateResidual,
    decompose,
    harmonic_basis,
    harmonic_dimension,
    hodge_form,
    maxwell_estimate_check,
)

SPECS = {
    "dirichlet": BoundarySpec.dirichlet(),
    "neumann": BoundarySpec.neumann(),
    "one_face": BoundarySpec.from_tangential(["x0"]),
    "two_opposite": BoundarySpec.from_tangential(["x0", "x1"]),
}


def _x_witness(ops):
    """Unit field along x on the free edges: curl free and eps-divergence free."""
    nx_edges = int(np.prod(ops.grid.edge_shapes()[0]))
    full = np.zeros(ops.grid.num_edges)
    full[:nx_edges] = 1.0
    return full[ops.free_edges]


@pytest.mark.parametrize("name", SPECS)
def test_decomposition_residuals(name):
    grid = build_grid((4, 4, 4))
    ops = build_complex(grid, SPECS[name], MaterialField.random(grid, seed=2))
    rng = np.random.default_rng(0)
    for _ in range(3):
        E = rng.standard_normal(ops.grad_pair.Y.dim)
        parts = decompose(E, ops)
        e2 = parts.norm(E) ** 2
        assert parts.reconstruction_error(E) <= 1e-12 * np.sqrt(e2)
        assert max(parts.orthogonality().values()) <= 1e-9 * e2
        assert_allclose(ops.grad_pair.A @ parts.scalar_potential, parts.grad_part, atol=1e-12)
        # rot part carries all of rot E, the other parts are curl free
        assert_allclose(ops.curl_pair.A @ parts.curl_part, ops.curl_pair.A @ E, atol=1e-8)
        assert np.abs(ops.curl_pair.A @ parts.harmonic_part).max() <= 1e-8
        div = adjoint(ops.grad_pair) @ parts.harmonic_part
        assert np.abs(div).max() <= 1e-9 * np.abs(adjoint(ops.grad_pair) @ E).max()


def test_neumann_potential_has_zero_mean():
    ops = build_complex(build_grid((3, 3, 3)), BoundarySpec.neumann())
    E = np.random.default_rng(1).standard_normal(ops.grad_pair.Y.dim)
    u = decompose(E, ops).scalar_potential
    assert abs(ops.grad_pair.wx @ u) <= 1e-12


def test_pure_gradient_is_recovered():
    ops = build_complex(build_grid((3, 3, 3)), BoundarySpec.dirichlet())
    u = np.random.default_rng(2).standard_normal(ops.grad_pair.X.dim)
    E = ops.grad_pair.A @ u
    parts = decompose(E, ops)
    assert_allclose(parts.grad_part, E, atol=1e-9)
    assert_allclose(parts.scalar_potential, u, atol=1e-8)
    assert parts.norm(parts.curl_part) <= 1e-9 * parts.norm(E)


@pytest.mark.parametrize("name, expected", [("dirichlet", 0), ("neumann", 0), ("one_face", 0), ("two_opposite", 1)])
def test_harmonic_dimension_dense(name, expected):
    ops = build_complex(build_grid((3, 3, 3)), SPECS[name])
    assert harmonic_dimension(ops, dense=True) == expected


@pytest.mark.parametrize("name, expected", [("dirichlet", 0), ("two_opposite", 1)])
def test_harmonic_dimension_iterative(name, expected):
    ops = build_complex(build_grid((3, 3, 3)), SPECS[name])
    assert harmonic_dimension(ops, dense=False) == expected


def test_harmonic_witness():
    grid = build_grid((3, 4, 3))
    ops = build_complex(grid, SPECS["two_opposite"], MaterialField.random(grid, seed=4))
    E = _x_witness(ops)
    assert np.abs(ops.curl_pair.A @ E).max() == 0.0
    # eps varies per cell, so only the unweighted divergence vanishes identically
    ops_id = build_complex(grid, SPECS["two_opposite"])
    assert np.abs(adjoint(ops_id.grad_pair) @ E).max() <= 1e-12
    parts = decompose(E, ops_id)
    assert_allclose(parts.harmonic_part, E, atol=1e-9)


def test_harmonic_basis_is_orthonormal_and_harmonic():
    ops = build_complex(build_grid((3, 3, 3)), SPECS["two_opposite"])
    B = harmonic_basis(ops)
    assert B.shape[0] == 1
    W = ops.grad_pair.wy
    assert_allclose(B @ (W * B[0]), [1.0], atol=1e-10)
    w = _x_witness(ops)
    # the witness lies in the span
    assert_allclose(abs(B[0] @ (W * w)), np.sqrt(w @ (W * w)), rtol=1e-8)


def test_hodge_form_is_symmetric_psd():
    ops = build_complex(build_grid((2, 2, 2)), SPECS["one_face"], MaterialField.random(build_grid((2, 2, 2))))
    K = hodge_form(ops).toarray()
    assert_allclose(K, K.T, atol=1e-12)
    assert np.linalg.eigvalsh(K).min() >= -1e-10 * np.abs(K).max()


def test_dense_cap():
    ops = build_complex(build_grid((3, 3, 3)), SPECS["neumann"])
    with pytest.raises(DenseCapError):
        harmonic_dimension(ops, dense=True, cap=10)


@pytest.mark.parametrize("name", ["dirichlet", "neumann", "two_opposite"])
def test_maxwell_estimate_holds(name):
    grid = build_grid((4, 4, 4))
    mat = MaterialField.random(grid, seed=5)
    ops = build_complex(grid, SPECS[name], mat)
    report = verify_all(grid, SPECS[name], mat, direct=False)
    rng = np.random.default_rng(6)
    for _ in range(5):
        res = maxwell_estimate_check(rng.standard_normal(ops.grad_pair.Y.dim), ops, report)
        assert res.holds and res.slack >= 0


def test_estimate_residual_tolerance():
    assert EstimateResidual(1.0, 1.0 - 1e-12).holds
    assert not EstimateResidual(1.0, 0.99).holds
    assert EstimateResidual(1.0, 2.0).slack == 1.0


def test_unweighted_edge_volumes():
    grid = build_grid((2, 2, 2))
    ops = build_complex(grid, SPECS["one_face"], MaterialField.scalar(grid, 3.0))
    assert_allclose(ops.edge_volumes * 3.0, ops.grad_pair.wy)
    assert_allclose(ops.edge_volumes, lumped_weights(grid)["edges"][ops.free_edges])
