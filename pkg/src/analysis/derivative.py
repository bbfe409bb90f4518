"""Angle derivatives of eigenvalue branches.

Two estimators: central differences over the angle (with Richardson
extrapolation) and the Feynman-Hellmann integral of a computed eigenpair.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ..assembly.forms import assemble_scaled
from ..assembly.quadrature import seven_point_rule, subdivision_rule
from ..assembly.system import AssembledSystem
from ..eigensolve.solver import EigenSolveParams, Spectrum, solve_lowest
from ..geometry.domain import Aperture, BoundaryTag, build_domain, weight_r
from ..geometry.mesh import Mesh, generate_mesh
from ..utils.errors import BranchCrossingError, DomainError, NonConvergentIntegralError
from .fields import edge_integral_of_square, quadrature_field

logger = logging.getLogger(__name__)

BranchSolver = Callable[[float], np.ndarray]

GAP_TOL = 1e-6
FH_LEVELS = (1, 2, 3)


@dataclass
class FHDiagnostics:
    """Flat-measure terms on ``r^(1/2) psi`` per axis subdivision level"""

    levels: tuple
    partial_sums: dict            # term name -> list over levels
    cauchy: dict                  # term name -> bool
    norm_term: float
    axis_term: float
    flat_total: float
    identity_residual: float

    @property
    def converged(self) -> bool:
        return all(self.cauchy.values())


@dataclass
class DerivativeEstimate:
    theta: float
    j: int
    h: Optional[float] = None
    value_fd: Optional[float] = None
    value_fh: Optional[float] = None
    fd_steps: dict = field(default_factory=dict)
    fh: Optional[FHDiagnostics] = None
    diagnostic: Optional[NonConvergentIntegralError] = None

    @property
    def discrepancy(self) -> Optional[float]:
        if self.value_fd is None or self.value_fh is None:
            return None
        return abs(self.value_fd - self.value_fh) / max(abs(self.value_fd), 1e-300)

    def merged(self, other: "DerivativeEstimate") -> "DerivativeEstimate":
        """Combine an FD-only and an FH-only estimate of the same branch"""
        return DerivativeEstimate(
            theta=self.theta,
            j=self.j,
            h=self.h if self.h is not None else other.h,
            value_fd=self.value_fd if self.value_fd is not None else other.value_fd,
            value_fh=self.value_fh if self.value_fh is not None else other.value_fh,
            fd_steps=self.fd_steps or other.fd_steps,
            fh=self.fh or other.fh,
            diagnostic=self.diagnostic or other.diagnostic,
        )


def cauchy_converged(sums) -> bool:
    """Geometric contraction of the last two increments, or stagnation"""
    i1, i2, i3 = sums[-3:]
    step = abs(i3 - i2)
    return step <= 0.5 * abs(i2 - i1) or step <= 1e-10 * max(1.0, abs(i3))


class ScaledBranchSolver:
    """Eigenvalues at nearby angles computed on one fixed mesh.

    The mesh is built once for ``aperture``; every other angle is reached
    through :func:`assemble_scaled`, so finite differences see a smooth
    dependence on the angle.
    """

    def __init__(self, aperture: Aperture, mesh: Mesh, k: int, m: int = 0,
                 params: Optional[EigenSolveParams] = None):
        self.aperture = aperture
        self.mesh = mesh
        self.m = m
        self.params = params or EigenSolveParams(k=k)
        if self.params.k < k:
            raise ValueError("solver params request fewer pairs than needed")

    @classmethod
    def for_layer(cls, aperture: Aperture, s_max: float, h: float, k: int, grading: float = 4.0, m: int = 0):
        mesh = generate_mesh(build_domain(aperture, s_max), h, grading)
        return cls(aperture, mesh, k, m)

    def __call__(self, theta: float) -> np.ndarray:
        system = assemble_scaled(self.mesh, self.aperture, theta, self.m)
        return solve_lowest(system, self.params).eigenvalues


def _branch(values: np.ndarray, j: int, theta: float, gap_tol: float) -> float:
    if values.size < j:
        raise BranchCrossingError(f"branch {j} missing at theta={theta:.8g} ({values.size} values)")
    lam = values[j - 1]
    gaps = []
    if j >= 2:
        gaps.append(lam - values[j - 2])
    if values.size > j:
        gaps.append(values[j] - lam)
    if gaps and min(gaps) <= gap_tol:
        raise BranchCrossingError(
            f"branch {j} not simple at theta={theta:.8g} (gap {min(gaps):.3e})"
        )
    return float(lam)


def eigenvalue_derivative_fd(
    aperture: Aperture,
    j: int,
    h: float,
    solver: Optional[BranchSolver] = None,
    richardson: bool = True,
    gap_tol: float = GAP_TOL,
    **solver_options,
) -> DerivativeEstimate:
    """Central difference ``(lambda_j(theta+h) - lambda_j(theta-h)) / 2h``.

    With ``richardson`` the steps h and h/2 are combined as
    ``(4 D(h/2) - D(h)) / 3``. ``solver`` maps an angle to ascending
    eigenvalues; by default a :class:`ScaledBranchSolver` is built from
    ``solver_options`` (``s_max``, ``h_mesh``, ``grading``, ``m``).
    """
    theta = aperture.theta
    if not (0.0 < theta - h and theta + h < 0.5 * math.pi) or h <= 0.0:
        raise DomainError(f"theta +- h must stay inside (0, pi/2): theta={theta!r}, h={h!r}")
    if solver is None:
        solver = ScaledBranchSolver.for_layer(
            aperture,
            s_max=solver_options.get("s_max", 40.0 + aperture.tip_s),
            h=solver_options.get("h_mesh", 0.25),
            k=j + 1,
            grading=solver_options.get("grading", 4.0),
            m=solver_options.get("m", 0),
        )

    cache: dict = {}

    def lam(t: float) -> float:
        if t not in cache:
            cache[t] = _branch(np.asarray(solver(t), dtype=float), j, t, gap_tol)
        return cache[t]

    lam(theta)
    d_h = (lam(theta + h) - lam(theta - h)) / (2.0 * h)
    steps = {"D(h)": d_h}
    value = d_h
    if richardson:
        d_h2 = (lam(theta + 0.5 * h) - lam(theta - 0.5 * h)) / h
        steps["D(h/2)"] = d_h2
        value = (4.0 * d_h2 - d_h) / 3.0
    logger.info("FD derivative theta=%.5f j=%d h=%.3g: %.10g", theta, j, h, value)
    return DerivativeEstimate(theta=theta, j=j, h=h, value_fd=float(value), fd_steps=steps)


def _flat_terms(mesh: Mesh, aperture: Aperture, psi: np.ndarray, rule, elements) -> dict:
    th = aperture.theta
    c, s_ = math.cos(th), math.sin(th)
    sin2 = math.sin(2.0 * th)
    cot2 = math.cos(2.0 * th) / sin2
    q = quadrature_field(mesh, psi, rule, elements)
    r = weight_r(q.points[..., 0], q.points[..., 1], aperture)
    f, fs, fu = q.values, q.gradients[..., 0], q.gradients[..., 1]
    tilde_s2 = r * fs ** 2 + f * fs * c + f ** 2 * c * c / (4.0 * r)
    tilde_u2 = r * fu ** 2 - f * fu * s_ + f ** 2 * s_ * s_ / (4.0 * r)
    return {
        "ds": float(np.sum(-2.0 / sin2 * tilde_s2 * q.jxw)),
        "du": float(np.sum(2.0 / sin2 * tilde_u2 * q.jxw)),
        "potential": float(np.sum(0.5 * cot2 * f ** 2 / r * q.jxw)),
    }


def eigenvalue_derivative_fh(
    aperture: Aperture,
    j: int,
    system: AssembledSystem,
    spectrum: Spectrum,
    levels=FH_LEVELS,
    strict: bool = False,
) -> DerivativeEstimate:
    """Feynman-Hellmann derivative ``-(4/sin 2theta) int r psi_s^2`` of branch j.

    The flat-measure terms on ``r^(1/2) psi`` are evaluated alongside, with
    elements touching the axis subdivided ``4**level`` times; each term's
    partial sums go through :func:`cauchy_converged`. A failed test is kept as
    a :class:`NonConvergentIntegralError` diagnostic and raised only with
    ``strict``.
    """
    if len(spectrum) < j:
        raise ValueError(f"spectrum has {len(spectrum)} pairs, branch {j} requested")
    mesh = system.mesh
    th = aperture.theta
    sin2 = math.sin(2.0 * th)
    cot2 = math.cos(2.0 * th) / sin2
    lam = float(spectrum.eigenvalues[j - 1])
    psi = system.expand(spectrum.vector(j))

    base = seven_point_rule()
    q = quadrature_field(mesh, psi, base)
    r = weight_r(q.points[..., 0], q.points[..., 1], aperture)
    value_fh = -4.0 / sin2 * float(np.sum(r * q.gradients[..., 0] ** 2 * q.jxw))
    m = system.m
    potential = 0.0
    if m != 0:
        # psi vanishes on the axis, so psi^2/r is bounded
        potential = m * m * float(np.sum(q.values ** 2 / r * q.jxw))
        value_fh -= 2.0 / math.tan(th) * potential

    tol = 1e-9 * max(1.0, float(np.abs(mesh.points).max()))
    corner_r = weight_r(mesh.points[mesh.corners][..., 0], mesh.points[mesh.corners][..., 1], aperture)
    touching = np.any(np.abs(corner_r) <= tol, axis=1)
    interior = _flat_terms(mesh, aperture, psi, base, np.flatnonzero(~touching))
    partial = {name: [] for name in interior}
    for level in levels:
        near = _flat_terms(mesh, aperture, psi, subdivision_rule(base, level), np.flatnonzero(touching))
        for name in partial:
            partial[name].append(interior[name] + near[name])
    cauchy = {name: cauchy_converged(sums) for name, sums in partial.items()}

    axis_mask = mesh.boundary_tags == int(BoundaryTag.AXIS)
    axis_term = edge_integral_of_square(mesh, psi, axis_mask)
    norm_term = -2.0 * (lam - potential) / sin2
    flat_total = sum(sums[-1] for sums in partial.values())
    residual = flat_total + norm_term - cot2 * axis_term - (value_fh + 2.0 / math.tan(th) * potential)

    diagnostics = FHDiagnostics(
        levels=tuple(levels),
        partial_sums=partial,
        cauchy=cauchy,
        norm_term=norm_term,
        axis_term=axis_term,
        flat_total=flat_total,
        identity_residual=residual,
    )
    diagnostic = None
    if not diagnostics.converged:
        failed = sorted(name for name, ok in cauchy.items() if not ok)
        diagnostic = NonConvergentIntegralError(
            f"partial sums of {failed} not Cauchy under axis subdivision: "
            + "; ".join(f"{n}={partial[n]}" for n in failed)
        )
        logger.warning("FH theta=%.5f j=%d: %s", th, j, diagnostic)
        if strict:
            raise diagnostic
    logger.info("FH derivative theta=%.5f j=%d: %.10g (identity residual %.2e)", th, j, value_fh, residual)
    return DerivativeEstimate(theta=th, j=j, value_fh=value_fh, fh=diagnostics, diagnostic=diagnostic)
