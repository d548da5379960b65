"""Poincare, Friedrichs and Maxwell constants on boxes with mixed boundary conditions.

The package assembles the lowest-order discrete de Rham complex on a
staggered box grid with tangential/normal labels per face, wraps each
operator as a pair between weighted spaces, and computes the best constants
as reciprocal square roots of smallest positive eigenvalues.
"""

__version__ = "0.1.0"

from .constants import (
    CheckRecord,
    ConstantsReport,
    SolverSettings,
    maxwell_div_constant,
    maxwell_full_constant,
    maxwell_full_constant_direct,
    maxwell_rot_constant,
    payne_weinberger_bound,
    poincare_constant,
    verify_all,
)
from .derham_grid import (
    BoundarySpec,
    ComplexOperators,
    Grid3,
    MaterialField,
    all_boundary_specs,
    build_complex,
    build_grid,
)
from .dual_pair import DualPair, constant_cA, min_positive_eigenvalue
from .errors import (
    ConvergenceError,
    DenseCapError,
    DimensionError,
    MaxconError,
    NoPositiveSpectrumError,
    NotPositiveDefiniteError,
    ValidationError,
)
from .helmholtz import decompose, harmonic_basis, harmonic_dimension
from .sparse_core import DiagonalWeight, cg_solve, dense_eigh

__all__ = [
    "BoundarySpec", "CheckRecord", "ComplexOperators", "ConstantsReport", "ConvergenceError",
    "DenseCapError", "DiagonalWeight", "DimensionError", "DualPair", "Grid3", "MaterialField",
    "MaxconError", "NoPositiveSpectrumError", "NotPositiveDefiniteError", "SolverSettings",
    "ValidationError", "all_boundary_specs", "build_complex", "build_grid", "cg_solve",
    "constant_cA", "decompose", "dense_eigh", "harmonic_basis", "harmonic_dimension",
    "maxwell_div_constant", "maxwell_full_constant", "maxwell_full_constant_direct",
    "maxwell_rot_constant", "min_positive_eigenvalue", "payne_weinberger_bound",
    "poincare_constant", "verify_all",
]
