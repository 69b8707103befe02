"""Plane-stress bilinear quadrilateral (Q4) analysis of the clamped plate.

Each element carries a 3x3 in-plane stiffness A (force per length, unit
laminate thickness) acting on engineering strains (exx, eyy, gxy).  Elements
are square, and the Q4 stiffness of a square does not depend on its size, so
all element matrices are linear combinations of nine fixed basis matrices.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .geometry import Domain


class SingularSystemError(RuntimeError):
    pass


# Local node order: counter-clockwise from the lower-left corner.
_NODE_XI = np.array([-1.0, 1.0, 1.0, -1.0])
_NODE_ETA = np.array([-1.0, -1.0, 1.0, 1.0])
_GAUSS = np.array([-1.0, 1.0]) / np.sqrt(3.0)


def _strain_displacement(xi: float, eta: float, h: float = 1.0) -> np.ndarray:
    dn_dxi = _NODE_XI * (1 + eta * _NODE_ETA) / 4
    dn_deta = _NODE_ETA * (1 + xi * _NODE_XI) / 4
    dn_dx = dn_dxi * 2 / h
    dn_dy = dn_deta * 2 / h
    b = np.zeros((3, 8))
    b[0, 0::2] = dn_dx
    b[1, 1::2] = dn_dy
    b[2, 0::2] = dn_dy
    b[2, 1::2] = dn_dx
    return b


def _stiffness_basis(h: float = 1.0) -> np.ndarray:
    """G[p, q] such that K_e = sum_pq A[p, q] G[p, q]; shape (3, 3, 8, 8)."""
    det_j = h * h / 4
    g = np.zeros((3, 3, 8, 8))
    for xi in _GAUSS:
        for eta in _GAUSS:
            b = _strain_displacement(xi, eta, h)
            g += np.einsum("pi,qj->pqij", b, b) * det_j
    return g


_BASIS = _stiffness_basis()


def element_stiffness(a) -> np.ndarray:
    """8x8 stiffness of a square element with constitutive matrix ``a`` (2x2 Gauss)."""
    return np.einsum("...pq,pqij->...ij", np.asarray(a, dtype=float), _BASIS)


@dataclass(frozen=True)
class Mesh:
    domain: Domain

    @property
    def nx(self) -> int:
        return self.domain.nx

    @property
    def ny(self) -> int:
        return self.domain.ny

    @property
    def n_nodes(self) -> int:
        return (self.nx + 1) * (self.ny + 1)

    @property
    def n_dofs(self) -> int:
        return 2 * self.n_nodes

    def node_id(self, ix, iy):
        return np.asarray(ix) * (self.ny + 1) + np.asarray(iy)

    @cached_property
    def edof(self) -> np.ndarray:
        """Global dofs of every element, shape (nx * ny, 8), elements in [ix, iy] order."""
        ix, iy = np.meshgrid(np.arange(self.nx), np.arange(self.ny), indexing="ij")
        ix, iy = ix.ravel(), iy.ravel()
        nodes = np.stack([
            self.node_id(ix, iy), self.node_id(ix + 1, iy),
            self.node_id(ix + 1, iy + 1), self.node_id(ix, iy + 1),
        ], axis=1)
        return np.stack([2 * nodes, 2 * nodes + 1], axis=2).reshape(-1, 8)

    @cached_property
    def _triplet_index(self) -> tuple[np.ndarray, np.ndarray]:
        rows = np.repeat(self.edof, 8, axis=1).ravel()
        cols = np.tile(self.edof, (1, 8)).ravel()
        return rows, cols

    def clamped_dofs(self) -> np.ndarray:
        """Both dofs of every node on x = 0."""
        nodes = self.node_id(0, np.arange(self.ny + 1))
        return np.sort(np.concatenate([2 * nodes, 2 * nodes + 1]))


@dataclass(frozen=True)
class PointLoad:
    node: tuple[int, int]
    direction: int  # 0 = x, 1 = y
    magnitude: float


def tip_load(mesh: Mesh, magnitude: float = 1.0) -> list[PointLoad]:
    """Downward load at the midpoint of the free edge.

    With an odd number of elements in y the midpoint falls on an element edge,
    and the load is shared equally by its two end nodes.
    """
    if mesh.ny % 2 == 0:
        return [PointLoad((mesh.nx, mesh.ny // 2), 1, -magnitude)]
    j = mesh.ny // 2
    return [PointLoad((mesh.nx, j), 1, -magnitude / 2),
            PointLoad((mesh.nx, j + 1), 1, -magnitude / 2)]


@dataclass
class Solution:
    u: np.ndarray = field(repr=False)
    compliance: float
    solve_stats: dict = field(default_factory=dict)


def assemble(mesh: Mesh, per_element) -> sp.csc_matrix:
    """Global stiffness from per-element constitutive matrices, shape (nx, ny, 3, 3)
    or (nx * ny, 3, 3)."""
    a = np.asarray(per_element, dtype=float).reshape(-1, 3, 3)
    if a.shape[0] != mesh.nx * mesh.ny:
        raise ValueError(f"expected {mesh.nx * mesh.ny} element matrices, got {a.shape[0]}")
    ke = element_stiffness(a)
    rows, cols = mesh._triplet_index
    k = sp.coo_matrix((ke.ravel(), (rows, cols)), shape=(mesh.n_dofs, mesh.n_dofs)).tocsc()
    k.sum_duplicates()
    return k


def load_vector(mesh: Mesh, loads) -> np.ndarray:
    if isinstance(loads, PointLoad):
        loads = [loads]
    f = np.zeros(mesh.n_dofs)
    for load in loads:
        f[2 * int(mesh.node_id(*load.node)) + load.direction] += load.magnitude
    return f


def solve_constrained(k: sp.spmatrix, f: np.ndarray, fixed: np.ndarray) -> tuple[np.ndarray, dict]:
    """Solve K u = f with u = 0 on ``fixed``; sparse LU with a fixed symmetric ordering."""
    n = k.shape[0]
    free = np.setdiff1d(np.arange(n), fixed)
    u = np.zeros(n)
    if not np.any(f[free]):
        return u, {"n_free": free.size, "factorized": False}
    kff = sp.csc_matrix(k[free][:, free])
    try:
        lu = splu(kff, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                  options={"SymmetricMode": True})
    except RuntimeError as exc:
        raise SingularSystemError(str(exc)) from exc
    u[free] = lu.solve(f[free])
    if not np.all(np.isfinite(u)):
        raise SingularSystemError("non-finite displacements")
    stats = {"n_free": int(free.size), "factorized": True,
             "nnz_factor": int(lu.L.nnz + lu.U.nnz)}
    return u, stats


def solve_cantilever(mesh: Mesh, per_element, load=None) -> Solution:
    """Clamp x = 0 and solve under ``load`` (one or several PointLoads, default tip load)."""
    load = tip_load(mesh) if load is None else load
    k = assemble(mesh, per_element)
    f = load_vector(mesh, load)
    u, stats = solve_constrained(k, f, mesh.clamped_dofs())
    return Solution(u=u, compliance=float(f @ u), solve_stats=stats)


def dump_triplets(k: sp.spmatrix, path) -> None:
    """Write a sparse matrix as 'row col value' lines."""
    coo = sp.coo_matrix(k)
    lines = (f"{r} {c} {v:.17g}" for r, c, v in zip(coo.row, coo.col, coo.data))
    Path(path).write_text("\n".join(lines) + "\n")


def dump_vector(u: np.ndarray, path) -> None:
    Path(path).write_text("\n".join(f"{v:.17g}" for v in u) + "\n")
