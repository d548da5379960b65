"""Staggered-grid de Rham complex on an axis-aligned box.

Scalars live on grid nodes, vector fields on edges (E) and faces (H), and
divergences on cells.  The difference operators

    grad: nodes -> edges,  curl: edges -> faces,  div: faces -> cells

are the usual +-1/h incidence stencils, so ``curl @ grad`` and ``div @ curl``
vanish identically.  Tangential boundary conditions are essential: every
node, edge and face lying in a tangential box face is dropped.  Normal
conditions are natural and show up only through the adjoints.

DOF numbering is lexicographic with x fastest.  Edges and faces are ordered
orientation-major (all x-oriented ones first, then y, then z).  An x-edge
runs along x; an x-face has normal x.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sps

from .dual_pair import DEFAULT_SEED, DualPair, WeightedSpace, adjoint
from .errors import ValidationError
from .sparse_core import DiagonalWeight, as_csr

FACE_NAMES = ("x0", "x1", "y0", "y1", "z0", "z1")
TANGENTIAL = "tangential"
NORMAL = "normal"


# ----------------------------------------------------------------------------
# grid


@dataclass(frozen=True)
class Grid3:
    """Uniform tensor grid with ``n`` cells per axis on the box ``[0, L]``."""

    n: Tuple[int, int, int]
    L: Tuple[float, float, float]

    @property
    def h(self) -> np.ndarray:
        return np.array(self.L, dtype=float) / np.array(self.n)

    @property
    def diameter(self) -> float:
        return float(np.sqrt(sum(x * x for x in self.L)))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.h))

    @property
    def num_nodes(self) -> int:
        nx, ny, nz = self.n
        return (nx + 1) * (ny + 1) * (nz + 1)

    @property
    def num_cells(self) -> int:
        return int(np.prod(self.n))

    def edge_shapes(self):
        nx, ny, nz = self.n
        return [(nx, ny + 1, nz + 1), (nx + 1, ny, nz + 1), (nx + 1, ny + 1, nz)]

    def face_shapes(self):
        nx, ny, nz = self.n
        return [(nx + 1, ny, nz), (nx, ny + 1, nz), (nx, ny, nz + 1)]

    @property
    def num_edges(self) -> int:
        return sum(int(np.prod(s)) for s in self.edge_shapes())

    @property
    def num_faces(self) -> int:
        return sum(int(np.prod(s)) for s in self.face_shapes())

    def scaled(self, s: float) -> "Grid3":
        return Grid3(self.n, tuple(float(s) * x for x in self.L))


def build_grid(n: Sequence[int], L: Sequence[float] = (1.0, 1.0, 1.0)) -> Grid3:
    n = tuple(int(v) for v in n)
    L = tuple(float(v) for v in L)
    if len(n) != 3 or len(L) != 3:
        raise ValidationError("n and L must be triples")
    if min(n) < 2:
        raise ValidationError(f"need at least 2 cells per axis, got {n}")
    if not all(np.isfinite(L)) or min(L) <= 0:
        raise ValidationError(f"box lengths must be positive, got {L}")
    return Grid3(n, L)


# ----------------------------------------------------------------------------
# boundary conditions


@dataclass(frozen=True)
class BoundarySpec:
    """Tangential/normal label for each box face, in :data:`FACE_NAMES` order."""

    labels: Tuple[str, str, str, str, str, str]

    def __post_init__(self):
        labels = tuple(str(v).lower() for v in self.labels)
        if len(labels) != 6 or any(v not in (TANGENTIAL, NORMAL) for v in labels):
            raise ValidationError(f"need 6 labels from {{tangential, normal}}, got {self.labels}")
        object.__setattr__(self, "labels", labels)

    @classmethod
    def dirichlet(cls) -> "BoundarySpec":
        return cls((TANGENTIAL,) * 6)

    @classmethod
    def neumann(cls) -> "BoundarySpec":
        return cls((NORMAL,) * 6)

    @classmethod
    def from_tangential(cls, faces: Iterable[str]) -> "BoundarySpec":
        faces = set(faces)
        unknown = faces - set(FACE_NAMES)
        if unknown:
            raise ValidationError(f"unknown faces {sorted(unknown)}")
        return cls(tuple(TANGENTIAL if f in faces else NORMAL for f in FACE_NAMES))

    @classmethod
    def parse(cls, value) -> "BoundarySpec":
        """Accept ``"dirichlet"``, ``"neumann"`` or a list of six labels."""
        if isinstance(value, BoundarySpec):
            return value
        if isinstance(value, str):
            key = value.lower()
            if key == "dirichlet":
                return cls.dirichlet()
            if key == "neumann":
                return cls.neumann()
            raise ValidationError(f"unknown boundary shorthand {value!r}")
        return cls(tuple(value))

    @property
    def tangential(self) -> Tuple[bool, ...]:
        return tuple(v == TANGENTIAL for v in self.labels)

    @property
    def tangential_faces(self) -> Tuple[str, ...]:
        return tuple(f for f, t in zip(FACE_NAMES, self.tangential) if t)

    @property
    def is_full_tangential(self) -> bool:
        return all(self.tangential)

    @property
    def is_full_normal(self) -> bool:
        return not any(self.tangential)

    @property
    def is_full(self) -> bool:
        return self.is_full_tangential or self.is_full_normal

    def swapped(self) -> "BoundarySpec":
        return BoundarySpec(tuple(NORMAL if t else TANGENTIAL for t in self.tangential))


def all_boundary_specs():
    """All 64 assignments of tangential/normal to the six faces."""
    for flags in itertools.product((False, True), repeat=6):
        yield BoundarySpec(tuple(TANGENTIAL if f else NORMAL for f in flags))


# ----------------------------------------------------------------------------
# material


@dataclass(frozen=True)
class MaterialField:
    """Cellwise diagonal permittivity, ``eps[c] = (eps1, eps2, eps3)``."""

    eps: np.ndarray

    def __post_init__(self):
        e = np.array(self.eps, dtype=float)
        if e.ndim != 2 or e.shape[1] != 3:
            raise ValidationError("eps must have shape (num_cells, 3)")
        if not np.all(np.isfinite(e)) or np.any(e <= 0):
            raise ValidationError("eps entries must be finite and positive")
        e.setflags(write=False)
        object.__setattr__(self, "eps", e)

    @classmethod
    def identity(cls, grid: Grid3) -> "MaterialField":
        return cls(np.ones((grid.num_cells, 3)))

    @classmethod
    def scalar(cls, grid: Grid3, value: float) -> "MaterialField":
        return cls(np.full((grid.num_cells, 3), float(value)))

    @classmethod
    def diag(cls, grid: Grid3, a: float, b: float, c: float) -> "MaterialField":
        return cls(np.tile([float(a), float(b), float(c)], (grid.num_cells, 1)))

    @classmethod
    def random(cls, grid: Grid3, low: float = 0.5, high: float = 2.0, seed: int = DEFAULT_SEED):
        rng = np.random.default_rng(seed)
        return cls(rng.uniform(low, high, size=(grid.num_cells, 3)))

    @classmethod
    def from_csv(cls, path, grid: Grid3) -> "MaterialField":
        """Read ``i,j,k,eps1,eps2,eps3`` rows (one per cell, header optional)."""
        nx, ny, nz = grid.n
        eps = np.full((grid.num_cells, 3), np.nan)
        seen = np.zeros(grid.num_cells, dtype=bool)
        with open(path, newline="") as fh:
            for lineno, row in enumerate(csv.reader(fh), start=1):
                if not row or not "".join(row).strip():
                    continue
                if lineno == 1 and not row[0].strip().lstrip("-").isdigit():
                    continue
                if len(row) != 6:
                    raise ValidationError(f"{path}:{lineno}: expected 6 columns")
                try:
                    i, j, k = (int(v) for v in row[:3])
                    vals = [float(v) for v in row[3:]]
                except ValueError as exc:
                    raise ValidationError(f"{path}:{lineno}: {exc}") from None
                if not (0 <= i < nx and 0 <= j < ny and 0 <= k < nz):
                    raise ValidationError(f"{path}:{lineno}: cell ({i},{j},{k}) outside grid")
                c = i + nx * (j + ny * k)
                if seen[c]:
                    raise ValidationError(f"{path}:{lineno}: duplicate cell ({i},{j},{k})")
                seen[c] = True
                eps[c] = vals
        if not seen.all():
            raise ValidationError(f"{path}: {int((~seen).sum())} cells missing")
        return cls(eps)

    def to_csv(self, path, grid: Grid3) -> None:
        nx, ny, _ = grid.n
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(["i", "j", "k", "eps1", "eps2", "eps3"])
            for c, (a, b, d) in enumerate(self.eps):
                out.writerow([c % nx, (c // nx) % ny, c // (nx * ny), *(repr(float(v)) for v in (a, b, d))])

    @property
    def eps_over(self) -> float:
        return float(np.sqrt(self.eps.max()))

    @property
    def eps_under(self) -> float:
        return float(1.0 / np.sqrt(self.eps.min()))

    @property
    def eps_hat(self) -> float:
        return max(self.eps_under, self.eps_over)

    @property
    def is_identity(self) -> bool:
        return bool(np.all(self.eps == 1.0))


# ----------------------------------------------------------------------------
# stencils


def _diff(n: int, h: float) -> sps.csr_matrix:
    """(n, n+1) forward difference."""
    return sps.diags([-np.ones(n) / h, np.ones(n) / h], [0, 1], shape=(n, n + 1), format="csr")


def _eye(n: int) -> sps.csr_matrix:
    return sps.identity(n, format="csr")


def _k3(az, ay, ax) -> sps.csr_matrix:
    # index = i + nx*(j + ny*k) -> z slowest
    return sps.kron(az, sps.kron(ay, ax, format="csr"), format="csr")


def incidence_matrices(grid: Grid3):
    """Full (no boundary removal) ``G``, ``C``, ``D`` with +-1/h entries."""
    nx, ny, nz = grid.n
    hx, hy, hz = grid.h
    dx, dy, dz = _diff(nx, hx), _diff(ny, hy), _diff(nz, hz)
    Ix, Iy, Iz = _eye(nx), _eye(ny), _eye(nz)
    Nx, Ny, Nz = _eye(nx + 1), _eye(ny + 1), _eye(nz + 1)

    G = sps.vstack([_k3(Nz, Ny, dx), _k3(Nz, dy, Nx), _k3(dz, Ny, Nx)])

    Z = None
    # x-faces: d/dy Ez - d/dz Ey
    cx = [Z, -_k3(dz, Iy, Nx), _k3(Iz, dy, Nx)]
    # y-faces: d/dz Ex - d/dx Ez
    cy = [_k3(dz, Ny, Ix), Z, -_k3(Iz, Ny, dx)]
    # z-faces: d/dx Ey - d/dy Ex
    cz = [-_k3(Nz, dy, Ix), _k3(Nz, Iy, dx), Z]
    C = sps.bmat([cx, cy, cz])

    D = sps.hstack([_k3(Iz, Iy, dx), _k3(Iz, dy, Ix), _k3(dz, Iy, Ix)])
    return as_csr(G), as_csr(C), as_csr(D)


def _coords(shape):
    i, j, k = np.meshgrid(*(np.arange(s) for s in shape), indexing="ij")
    # flatten x-fastest
    return [a.transpose(2, 1, 0).ravel() for a in (i, j, k)]


def _on_faces(grid: Grid3, bc: BoundarySpec, shape, lies_in: Tuple[bool, bool, bool]):
    """Mask of DOFs on a staggered sub-grid that lie inside tangential faces.

    ``lies_in[a]`` tells whether a DOF of this kind can lie in a face normal
    to axis ``a`` (i.e. its position along ``a`` is a node coordinate).
    """
    coords = _coords(shape)
    mask = np.zeros(int(np.prod(shape)), dtype=bool)
    t = bc.tangential
    for a in range(3):
        if not lies_in[a]:
            continue
        if t[2 * a]:
            mask |= coords[a] == 0
        if t[2 * a + 1]:
            mask |= coords[a] == grid.n[a]
    return mask


def boundary_masks(grid: Grid3, bc: BoundarySpec) -> Dict[str, np.ndarray]:
    """Boolean masks of nodes, edges and faces removed by the tangential faces."""
    nx, ny, nz = grid.n
    nodes = _on_faces(grid, bc, (nx + 1, ny + 1, nz + 1), (True, True, True))
    edges = np.concatenate([
        _on_faces(grid, bc, s, tuple(a != o for a in range(3)))
        for o, s in enumerate(grid.edge_shapes())
    ])
    faces = np.concatenate([
        _on_faces(grid, bc, s, tuple(a == o for a in range(3)))
        for o, s in enumerate(grid.face_shapes())
    ])
    return {"nodes": nodes, "edges": edges, "faces": faces}


def _avg(n: int, h: float) -> sps.csr_matrix:
    """(n+1, n) node-from-adjacent-cells lumping, weight h/2 per neighbour."""
    return sps.diags([np.full(n, h / 2), np.full(n, h / 2)], [0, -1], shape=(n + 1, n), format="csr")


def lumped_weights(grid: Grid3, mat: Optional[MaterialField] = None, inverse: bool = False):
    """Lumped masses on nodes, edges, faces and cells.

    Edge masses carry the arithmetic average of the matching eps component
    over adjacent cells; with ``inverse`` faces carry the average of ``1/eps``
    instead of unit density.
    """
    nx, ny, nz = grid.n
    hx, hy, hz = grid.h
    Ax, Ay, Az = _avg(nx, hx), _avg(ny, hy), _avg(nz, hz)
    Hx, Hy, Hz = hx * _eye(nx), hy * _eye(ny), hz * _eye(nz)
    ones = np.ones(grid.num_cells)
    eps = mat.eps if mat is not None else np.ones((grid.num_cells, 3))

    nodes = _k3(Az, Ay, Ax) @ ones
    edge_ops = [_k3(Az, Ay, Hx), _k3(Az, Hy, Ax), _k3(Hz, Ay, Ax)]
    face_ops = [_k3(Hz, Hy, Ax), _k3(Hz, Ay, Hx), _k3(Az, Hy, Hx)]
    edges = np.concatenate([op @ eps[:, o] for o, op in enumerate(edge_ops)])
    face_density = (1.0 / eps) if inverse else np.ones_like(eps)
    faces = np.concatenate([op @ face_density[:, o] for o, op in enumerate(face_ops)])
    cells = np.full(grid.num_cells, grid.cell_volume)
    return {"nodes": nodes, "edges": edges, "faces": faces, "cells": cells}


# ----------------------------------------------------------------------------
# assembled complex


@dataclass(frozen=True)
class ComplexOperators:
    """The three stages of the complex as dual pairs plus their bookkeeping."""

    grid: Grid3
    bc: BoundarySpec
    mat: MaterialField
    grad_pair: DualPair
    curl_pair: DualPair
    div_pair: DualPair
    free_nodes: np.ndarray
    free_edges: np.ndarray
    free_faces: np.ndarray

    @property
    def pairs(self) -> Dict[str, DualPair]:
        return {"grad": self.grad_pair, "curl": self.curl_pair, "div": self.div_pair}

    @property
    def edge_volumes(self) -> np.ndarray:
        """Unweighted (eps = id) lumped edge masses on the free edges."""
        return lumped_weights(self.grid)["edges"][self.free_edges]

    def curl_pair_eps_codomain(self) -> DualPair:
        """Curl pair whose face space carries the averaged ``1/eps`` density.

        ``||E||_eps <= c ||rot E||_{1/eps}`` is the rotation inequality with
        equal weights on both sides.
        """
        w = lumped_weights(self.grid, self.mat, inverse=True)["faces"][self.free_faces]
        return DualPair(self.curl_pair.A, self.curl_pair.X, WeightedSpace(DiagonalWeight(w), "faces/eps"),
                        kernel_hint=self.curl_pair.kernel_hint, name="curl_eps")


def build_complex(grid: Grid3, bc: BoundarySpec, mat: Optional[MaterialField] = None,
                  fault: bool = False) -> ComplexOperators:
    """Assemble grad, curl and div pairs with the given boundary labels.

    ``fault`` flips the sign of one curl stencil entry; it exists only so the
    self-test can prove it detects a broken complex.
    """
    mat = MaterialField.identity(grid) if mat is None else mat
    if mat.eps.shape[0] != grid.num_cells:
        raise ValidationError("material field does not match the grid")
    G, C, D = incidence_matrices(grid)
    if fault:
        C = C.copy()
        C.data[0] = -C.data[0]
    masks = boundary_masks(grid, bc)
    fn = np.flatnonzero(~masks["nodes"])
    fe = np.flatnonzero(~masks["edges"])
    ff = np.flatnonzero(~masks["faces"])

    w = lumped_weights(grid, mat)
    nodes = WeightedSpace(DiagonalWeight(w["nodes"][fn]), "nodes")
    edges_eps = WeightedSpace(DiagonalWeight(w["edges"][fe]), "edges/eps")
    faces = WeightedSpace(DiagonalWeight(w["faces"][ff]), "faces")
    cells = WeightedSpace(DiagonalWeight(w["cells"]), "cells")

    Gr = as_csr(G[fe][:, fn])
    Cr = as_csr(C[ff][:, fe])
    Dr = as_csr(D[:, ff])
    grad_pair = DualPair(Gr, nodes, edges_eps, name="grad")
    curl_pair = DualPair(Cr, edges_eps, faces, kernel_hint=Gr, name="curl")
    div_pair = DualPair(Dr, faces, cells, kernel_hint=Cr, name="div")
    return ComplexOperators(grid, bc, mat, grad_pair, curl_pair, div_pair, fn, fe, ff)


# ----------------------------------------------------------------------------
# checks


def _operator_norm(pair: DualPair, seed: int, steps: int = 50) -> float:
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(pair.X.dim)
    Astar = adjoint(pair)
    lam = 0.0
    for _ in range(steps):
        nrm = pair.X.norm(x)
        if nrm == 0.0:
            return 0.0
        x = Astar @ (pair.A @ (x / nrm))
        lam = pair.X.norm(x)
    return float(np.sqrt(lam))


def check_adjointness(ops: ComplexOperators, samples: int = 10, seed: int = DEFAULT_SEED) -> float:
    """Worst ``|<Ax,y>_Y - <x,A*y>_X| / (||x|| ||y|| ||A||)`` over all pairs."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for pair in ops.pairs.values():
        if pair.A.nnz == 0:
            continue
        Astar = adjoint(pair)
        norm = _operator_norm(pair, seed)
        for _ in range(samples):
            x = rng.standard_normal(pair.X.dim)
            y = rng.standard_normal(pair.Y.dim)
            dev = abs(pair.Y.inner(pair.A @ x, y) - pair.X.inner(x, Astar @ y))
            worst = max(worst, dev / (pair.X.norm(x) * pair.Y.norm(y) * norm))
    return worst


def exact_sequence_residuals(ops: ComplexOperators) -> Tuple[int, int]:
    """Number of nonzero entries in ``curl @ grad`` and ``div @ curl``."""
    cg = as_csr(ops.curl_pair.A @ ops.grad_pair.A)
    dc = as_csr(ops.div_pair.A @ ops.curl_pair.A)
    return cg.nnz, dc.nnz


def _lap1d(m: int, h: float, neumann: bool) -> sps.csr_matrix:
    main = np.full(m, 2.0)
    if neumann:
        main[0] = main[-1] = 1.0
    off = -np.ones(m - 1)
    return sps.diags([off, main, off], [-1, 0, 1], format="csr") / (h * h)


def check_vector_laplacian_identity(grid: Grid3) -> float:
    """Compare ``curl^T W curl + W grad W^{-1} grad^T W`` with the 7-point Laplacian.

    Uses full tangential conditions and eps = id.  Each edge component then
    satisfies homogeneous Dirichlet conditions across the faces it lies in and
    reflecting (Neumann) conditions at the faces it pierces.  Returns the
    worst entry deviation of ``W_e^{-1} K`` from the scalar stencil, times h^2.
    """
    h = grid.h
    if not np.allclose(h, h[0], rtol=1e-14, atol=0):
        raise ValidationError(f"vector Laplacian check needs uniform spacing, got h={h}")
    ops = build_complex(grid, BoundarySpec.dirichlet())
    G, C = ops.grad_pair.A, ops.curl_pair.A
    wn, we, wf = ops.grad_pair.wx, ops.grad_pair.wy, ops.curl_pair.wy
    K = C.T @ sps.diags(wf) @ C + sps.diags(we) @ G @ sps.diags(1.0 / wn) @ G.T @ sps.diags(we)
    Kn = as_csr(sps.diags(1.0 / we) @ K)

    nx, ny, nz = grid.n
    hx, hy, hz = h
    blocks = []
    # free x-edges: i in [0, nx), j in [1, ny), k in [1, nz)
    blocks.append(_k3(_eye(nz - 1), _eye(ny - 1), _lap1d(nx, hx, True))
                  + _k3(_eye(nz - 1), _lap1d(ny - 1, hy, False), _eye(nx))
                  + _k3(_lap1d(nz - 1, hz, False), _eye(ny - 1), _eye(nx)))
    blocks.append(_k3(_eye(nz - 1), _eye(ny), _lap1d(nx - 1, hx, False))
                  + _k3(_eye(nz - 1), _lap1d(ny, hy, True), _eye(nx - 1))
                  + _k3(_lap1d(nz - 1, hz, False), _eye(ny), _eye(nx - 1)))
    blocks.append(_k3(_eye(nz), _eye(ny - 1), _lap1d(nx - 1, hx, False))
                  + _k3(_eye(nz), _lap1d(ny - 1, hy, False), _eye(nx - 1))
                  + _k3(_lap1d(nz, hz, True), _eye(ny - 1), _eye(nx - 1)))
    L = as_csr(sps.block_diag(blocks))
    if L.shape != Kn.shape:
        raise AssertionError("edge bookkeeping mismatch")
    diff = (Kn - L).tocoo()
    dev = float(np.max(np.abs(diff.data), initial=0.0))
    return dev * float(h[0]) ** 2
