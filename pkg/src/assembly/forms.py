"""Weighted quadratic forms of the partial-wave problems on P2 meshes.

All forms share one vectorized element kernel:

    K_e = int w (grad phi_a)^T D (grad phi_b) + pot * m^2/w phi_a phi_b
    M_e = int w phi_a phi_b

with a scalar weight ``w`` and a constant 2x2 metric ``D``. Element matrices
are scattered in element order and summed by scipy's COO -> CSR conversion,
so assembly is deterministic.
"""
from __future__ import annotations

import logging
import math
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

from ..geometry.domain import Aperture, BoundaryTag, weight_r
from ..geometry.mesh import Mesh, rectangle_mesh
from ..utils.errors import AssemblyError, SkewFormError
from .elements import element_geometry, p2_values, physical_gradients, physical_points
from .quadrature import QuadratureRule, collapsed_gauss_rule, seven_point_rule
from .system import (
    AssembledSystem,
    Formulation,
    apply_dirichlet,
    dirichlet_tags,
    unconstrained,
)

logger = logging.getLogger(__name__)

WeightFn = Callable[[np.ndarray, np.ndarray], np.ndarray]

IDENTITY = np.eye(2)


def _mass_and_stiffness(corners, rule: QuadratureRule, weight_fn: WeightFn, metric: np.ndarray):
    area, lam_grads = element_geometry(corners)
    X = physical_points(rule.points, corners)
    G = physical_gradients(rule.points, lam_grads)
    N = p2_values(rule.points)
    w = weight_fn(X[..., 0], X[..., 1]) * (2.0 * np.abs(area))[:, None] * rule.weights[None, :]
    K = np.einsum("tq,tqad,de,tqbe->tab", w, G, metric, G)
    M = np.einsum("tq,qa,qb->tab", w, N, N)
    return K, M


def _potential(corners, weight_fn: WeightFn, tol: float) -> np.ndarray:
    """``int phi_a phi_b / w`` with the degree-7 rule on elements touching w = 0"""
    out = np.empty((corners.shape[0], 6, 6))
    touching = np.any(weight_fn(corners[..., 0], corners[..., 1]) <= tol, axis=1)
    for mask, rule in ((~touching, seven_point_rule()), (touching, collapsed_gauss_rule(4))):
        if not np.any(mask):
            continue
        sub = corners[mask]
        area, _ = element_geometry(sub)
        X = physical_points(rule.points, sub)
        w = weight_fn(X[..., 0], X[..., 1])
        if np.any(w <= 0.0):
            bad = int(np.flatnonzero(mask)[np.flatnonzero(np.any(w <= 0.0, axis=1))[0]])
            raise AssemblyError("quadrature point on the axis with m != 0", element=bad)
        N = p2_values(rule.points)
        jw = (2.0 * np.abs(area))[:, None] * rule.weights[None, :] / w
        out[mask] = np.einsum("tq,qa,qb->tab", jw, N, N)
    return out


def _scatter(mesh: Mesh, local: np.ndarray) -> sp.csr_matrix:
    tri = mesh.triangles
    rows = np.broadcast_to(tri[:, :, None], local.shape).ravel()
    cols = np.broadcast_to(tri[:, None, :], local.shape).ravel()
    n = mesh.n_nodes
    return sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def _check_elements(local: np.ndarray, name: str) -> None:
    bad = ~np.all(np.isfinite(local), axis=(1, 2))
    if np.any(bad):
        element = int(np.flatnonzero(bad)[0])
        raise AssemblyError(f"non-finite {name} entry", element=element)


def element_matrices(
    mesh: Mesh,
    weight_fn: WeightFn,
    metric: np.ndarray = IDENTITY,
    m: int = 0,
    potential_scale: float = 1.0,
):
    """Element stiffness and mass blocks, each of shape (T, 6, 6)"""
    corners = mesh.points[mesh.corners]
    K, M = _mass_and_stiffness(corners, seven_point_rule(), weight_fn, np.asarray(metric, dtype=float))
    if m != 0:
        tol = 1e-12 * max(1.0, float(np.abs(mesh.points).max()))
        K = K + potential_scale * m * m * _potential(corners, weight_fn, tol)
    _check_elements(K, "stiffness")
    _check_elements(M, "mass")
    return K, M


def _assemble(mesh, weight_fn, metric, m, potential_scale, formulation, constrain) -> AssembledSystem:
    K, M = element_matrices(mesh, weight_fn, metric, m, potential_scale)
    system = unconstrained(_scatter(mesh, K), _scatter(mesh, M), mesh, m, formulation)
    if not constrain:
        return system
    tags = [t for t in dirichlet_tags(m) if t in mesh.tag_set()]
    system = apply_dirichlet(system, tags)
    logger.info(
        "%s m=%d: %d nodes, %d free dofs, nnz(A)=%d",
        formulation.value, m, mesh.n_nodes, system.n_free, system.A.nnz,
    )
    return system


def assemble_weighted(
    mesh: Mesh,
    aperture: Aperture,
    m: int = 0,
    weight_override: Optional[WeightFn] = None,
    constrain: bool = True,
) -> AssembledSystem:
    """Weighted form ``int r (|grad psi|^2 + m^2/r^2 psi^2)`` over ``int r psi^2``.

    ``weight_override(a, b)`` replaces the radius ``r`` (also inside the
    potential term), e.g. a constant for flat oracle problems.
    """
    weight_fn = weight_override or (lambda s, u: weight_r(s, u, aperture))
    return _assemble(mesh, weight_fn, IDENTITY, int(m), 1.0, Formulation.WEIGHTED_SU, constrain)


def assemble_scaled(
    mesh: Mesh,
    aperture: Aperture,
    theta_prime: float,
    m: int = 0,
    constrain: bool = True,
) -> AssembledSystem:
    """Form of the ``theta_prime`` layer pulled back onto a mesh built for ``aperture``.

    Under ``s' = c s`` with ``c = tan(theta')/tan(theta)`` the radius scales
    by ``k = sin(theta')/sin(theta)``, leaving the quotient
    ``(c^-2 int r psi_s^2 + int r psi_u^2 + k^-2 int m^2 psi^2/r) / int r psi^2``.
    """
    if not (0.0 < theta_prime < 0.5 * math.pi):
        raise ValueError(f"theta_prime must lie in (0, pi/2), got {theta_prime!r}")
    c = math.tan(theta_prime) / math.tan(aperture.theta)
    k = math.sin(theta_prime) / math.sin(aperture.theta)
    metric = np.diag([c ** -2, 1.0])
    return _assemble(
        mesh,
        lambda s, u: weight_r(s, u, aperture),
        metric,
        int(m),
        k ** -2,
        Formulation.SCALED_SU,
        constrain,
    )


def skew_metric(aperture: Aperture) -> np.ndarray:
    """Gradient metric of ``y = s - u tan(theta), v = u``"""
    t = math.tan(aperture.theta)
    return np.array([[1.0 + t * t, -t], [-t, 1.0]])


SKEW_SIDES = {
    "left": BoundaryTag.AXIS,
    "right": BoundaryTag.TRUNCATION,
    "bottom": BoundaryTag.WALL_OUTER,
    "top": BoundaryTag.WALL_INNER,
}


def skew_element_matrices(aperture: Aperture, mesh: Mesh):
    cos = math.cos(aperture.theta)
    return element_matrices(mesh, lambda y, v: cos * y, skew_metric(aperture))


def assemble_skew(aperture: Aperture, y_max: float, nx: int, ny: int) -> AssembledSystem:
    """m = 0 form on the skew rectangle ``(0, y_max) x (0, pi)``.

    Weight ``y cos(theta)``; the axis ``y = 0`` is natural, the other sides
    Dirichlet.
    """
    if not (y_max > 0.0):
        raise ValueError(f"y_max must be positive, got {y_max!r}")
    mesh = rectangle_mesh(y_max, math.pi, nx, ny, SKEW_SIDES)
    K, M = skew_element_matrices(aperture, mesh)
    eig_min = np.linalg.eigvalsh(K).min(axis=1)
    scale = np.abs(K).max(axis=(1, 2))
    bad = eig_min < -1e-10 * scale
    if np.any(bad):
        element = int(np.flatnonzero(bad)[0])
        raise SkewFormError(
            f"skew stiffness not positive semidefinite (min eigenvalue {eig_min[element]:.3e})",
            element=element,
        )
    system = unconstrained(_scatter(mesh, K), _scatter(mesh, M), mesh, 0, Formulation.SKEW_YV)
    system = apply_dirichlet(system, dirichlet_tags(0))
    logger.info("skew form y_max=%g: %d free dofs", y_max, system.n_free)
    return system
