"""Evaluation of nodal P2 fields: sub-lattices and quadrature-point values"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..assembly.elements import (
    element_geometry,
    evaluate_field,
    p2_bary_derivatives,
    physical_points,
)
from ..geometry.mesh import Mesh

SUBDIVISION = 4


@dataclass(frozen=True)
class LatticeField:
    """Piecewise-linear resampling of a P2 field on a refined lattice"""

    points: np.ndarray     # (P, 2) SU coordinates
    values: np.ndarray     # (P,)
    triangles: np.ndarray  # (S, 3) lattice node indices, CCW

    def edges(self) -> np.ndarray:
        local = self.triangles[:, [[0, 1], [1, 2], [2, 0]]].reshape(-1, 2)
        return np.unique(np.sort(local, axis=1), axis=0)


@lru_cache(maxsize=None)
def _lattice_template(n: int):
    ij = [(i, j) for j in range(n + 1) for i in range(n + 1 - j)]
    index = {p: k for k, p in enumerate(ij)}
    bary = np.array([(n - i - j, i, j) for i, j in ij], dtype=np.int64)
    tris = []
    for i, j in ij:
        if i + j < n:
            tris.append((index[(i, j)], index[(i + 1, j)], index[(i, j + 1)]))
        if i + j < n - 1:
            tris.append((index[(i + 1, j)], index[(i + 1, j + 1)], index[(i, j + 1)]))
    return bary, np.array(tris, dtype=np.int64)


def lattice_field(mesh: Mesh, field: np.ndarray, n: int = SUBDIVISION) -> LatticeField:
    """Sample ``field`` on ``n*n`` affine sub-triangles per element.

    Lattice points shared by neighbouring elements are merged through a
    combinatorial key (corner ids and integer barycentric weights), so the
    merge does not depend on floating-point coordinates.
    """
    bary_int, sub = _lattice_template(n)
    bary = bary_int / float(n)
    corners = mesh.corners
    T, L = corners.shape[0], bary_int.shape[0]

    ids = np.broadcast_to(corners[:, None, :], (T, L, 3)).copy()
    weights = np.broadcast_to(bary_int[None, :, :], (T, L, 3)).copy()
    ids[weights == 0] = -1
    order = np.argsort(ids, axis=2, kind="stable")
    ids = np.take_along_axis(ids, order, axis=2)
    weights = np.take_along_axis(weights, order, axis=2)
    keys = np.concatenate([ids, weights], axis=2).reshape(T * L, 6)
    _, first, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    inverse = inverse.reshape(-1)

    coords = physical_points(bary, mesh.points[corners]).reshape(T * L, 2)
    values = evaluate_field(np.asarray(field)[mesh.triangles], bary).reshape(T * L)
    triangles = inverse.reshape(T, L)[:, sub].reshape(-1, 3)
    return LatticeField(points=coords[first], values=values[first], triangles=triangles)


@dataclass(frozen=True)
class QuadratureField:
    """Field value, gradient and position at quadrature points of a set of elements"""

    points: np.ndarray     # (T, Q, 2)
    values: np.ndarray     # (T, Q)
    gradients: np.ndarray  # (T, Q, 2)
    jxw: np.ndarray        # (T, Q) quadrature weight times Jacobian


def quadrature_field(mesh: Mesh, field: np.ndarray, rule, elements=None) -> QuadratureField:
    tri = mesh.triangles if elements is None else mesh.triangles[elements]
    corners = mesh.points[tri[:, :3]]
    area, lam_grads = element_geometry(corners)
    local = np.asarray(field)[tri]
    values = evaluate_field(local, rule.points)
    dN = np.einsum("qak,tkd->tqad", p2_bary_derivatives(rule.points), lam_grads)
    gradients = np.einsum("ta,tqad->tqd", local, dN)
    jxw = (2.0 * np.abs(area))[:, None] * rule.weights[None, :]
    return QuadratureField(
        points=physical_points(rule.points, corners),
        values=values,
        gradients=gradients,
        jxw=jxw,
    )


def edge_integral_of_square(mesh: Mesh, field: np.ndarray, edge_mask: np.ndarray) -> float:
    """``int psi^2 dl`` over the selected boundary edges, 3-point Gauss per edge"""
    if not np.any(edge_mask):
        return 0.0
    a = mesh.boundary_edges[edge_mask, 0]
    b = mesh.boundary_edges[edge_mask, 1]
    mid = mesh.boundary_mids[edge_mask]
    length = np.linalg.norm(mesh.points[b] - mesh.points[a], axis=1)
    x, w = np.polynomial.legendre.leggauss(3)
    t = 0.5 * (x + 1.0)
    shape = np.stack([(1 - t) * (1 - 2 * t), 4 * t * (1 - t), t * (2 * t - 1)], axis=1)
    f = np.asarray(field)
    vals = np.stack([f[a], f[mid], f[b]], axis=1) @ shape.T
    return float(np.sum(0.5 * length[:, None] * w[None, :] * vals ** 2))
