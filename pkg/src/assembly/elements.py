"""Quadratic Lagrange basis on affine triangles.

Local node order: corners 0, 1, 2, then midpoints of edges (0,1), (1,2), (2,0).
"""
from __future__ import annotations

import numpy as np

_EDGES = ((0, 1), (1, 2), (2, 0))


def p2_values(bary: np.ndarray) -> np.ndarray:
    """Basis values, shape (Q, 6)"""
    lam = np.atleast_2d(bary)
    out = np.empty((lam.shape[0], 6))
    for k in range(3):
        out[:, k] = lam[:, k] * (2.0 * lam[:, k] - 1.0)
    for k, (i, j) in enumerate(_EDGES):
        out[:, 3 + k] = 4.0 * lam[:, i] * lam[:, j]
    return out


def p2_bary_derivatives(bary: np.ndarray) -> np.ndarray:
    """Derivatives with respect to the barycentric coordinates, shape (Q, 6, 3)"""
    lam = np.atleast_2d(bary)
    out = np.zeros((lam.shape[0], 6, 3))
    for k in range(3):
        out[:, k, k] = 4.0 * lam[:, k] - 1.0
    for k, (i, j) in enumerate(_EDGES):
        out[:, 3 + k, i] = 4.0 * lam[:, j]
        out[:, 3 + k, j] = 4.0 * lam[:, i]
    return out


def element_geometry(corners: np.ndarray):
    """Signed areas (T,) and barycentric gradients (T, 3, 2) of affine triangles"""
    p0, p1, p2 = corners[:, 0], corners[:, 1], corners[:, 2]
    d1 = p1 - p0
    d2 = p2 - p0
    area = 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
    grads = np.empty((corners.shape[0], 3, 2))
    for i in range(3):
        a = corners[:, (i + 1) % 3]
        b = corners[:, (i + 2) % 3]
        grads[:, i, 0] = a[:, 1] - b[:, 1]
        grads[:, i, 1] = b[:, 0] - a[:, 0]
    grads /= (2.0 * area)[:, None, None]
    return area, grads


def physical_gradients(bary: np.ndarray, lam_grads: np.ndarray) -> np.ndarray:
    """Basis gradients at the points of ``bary``, shape (T, Q, 6, 2)"""
    return np.einsum("qak,tkd->tqad", p2_bary_derivatives(bary), lam_grads)


def physical_points(bary: np.ndarray, corners: np.ndarray) -> np.ndarray:
    """Quadrature points mapped onto each triangle, shape (T, Q, 2)"""
    return np.einsum("qk,tkd->tqd", np.atleast_2d(bary), corners)


def evaluate_field(values: np.ndarray, bary: np.ndarray) -> np.ndarray:
    """Field with nodal ``values`` (T, 6) at barycentric points, shape (T, Q)"""
    return values @ p2_values(bary).T
