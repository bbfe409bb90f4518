"""End-to-end layer solve with truncation and mesh convergence control"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..assembly.forms import assemble_weighted
from ..assembly.system import AssembledSystem
from ..eigensolve.solver import EigenSolveParams, Spectrum, solve_lowest
from ..geometry.domain import Aperture, build_domain
from ..geometry.mesh import DEFAULT_MIN_ANGLE_DEG, Mesh, generate_mesh, refine_mesh

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConvergencePolicy:
    """How ``solve_layer`` picks the truncation and checks discretization error.

    ``s_max=None`` starts from the decay heuristic and doubles until the
    eigenvalues move less than ``truncation_tol``; a fixed ``s_max`` with
    ``auto_smax=False`` skips the doubling test.
    """

    h: float = 0.25
    grading: float = 4.0
    s_max: Optional[float] = None
    auto_smax: bool = True
    safety: float = 3.0
    lambda_guess: float = 0.9
    truncation_tol: float = 1e-6
    refinement_tol: float = 1e-5
    max_doublings: int = 4
    refine: bool = True
    min_angle_deg: float = DEFAULT_MIN_ANGLE_DEG


def initial_s_max(aperture: Aperture, policy: ConvergencePolicy = ConvergencePolicy()) -> float:
    """Inner tip plus ``safety`` decay lengths of a mode at ``lambda_guess``"""
    decay = 1.0 / math.sqrt(1.0 - policy.lambda_guess)
    return policy.safety * (aperture.tip_s + decay)


@dataclass
class LayerResult:
    aperture: Aperture
    m: int
    spectrum: Spectrum
    system: AssembledSystem
    mesh: Mesh
    s_max: float
    eigenvalues: np.ndarray
    error_estimates: np.ndarray
    truncation_ok: np.ndarray
    refinement_ok: np.ndarray
    truncation_deltas: np.ndarray = field(default_factory=lambda: np.empty(0))
    refinement_deltas: np.ndarray = field(default_factory=lambda: np.empty(0))
    doublings: int = 0
    timings: dict = field(default_factory=dict)

    @property
    def n_dof(self) -> int:
        return self.system.n_free

    @property
    def converged(self) -> np.ndarray:
        return self.spectrum.converged & self.truncation_ok & self.refinement_ok

    def summary(self) -> dict:
        return {
            "theta_rad": self.aperture.theta,
            "theta_deg": self.aperture.theta_deg,
            "beta_deg": self.aperture.beta_deg,
            "m": self.m,
            "s_max": self.s_max,
            "ndof": self.n_dof,
            "doublings": self.doublings,
            "count": int(self.eigenvalues.size),
            "smallest_ritz": self.spectrum.smallest_ritz,
            "mesh": self.mesh.stats(),
        }


def _solve_on(mesh: Mesh, aperture: Aperture, m: int, params: EigenSolveParams):
    system = assemble_weighted(mesh, aperture, m)
    return system, solve_lowest(system, params)


def _fit(mask: np.ndarray, n: int) -> np.ndarray:
    """Trim or pad a per-branch flag array to n entries; unchecked branches are False"""
    out = np.zeros(n, dtype=bool)
    out[: min(n, mask.size)] = mask[:n]
    return out


def _deltas(coarse: np.ndarray, fine: np.ndarray, n: int) -> np.ndarray:
    """Differences of the first n values, NaN where either level lacks one"""
    out = np.full(n, np.nan)
    common = min(coarse.size, fine.size, n)
    out[:common] = coarse[:common] - fine[:common]
    return out


def solve_layer(
    aperture: Aperture,
    m: int = 0,
    params: EigenSolveParams = EigenSolveParams(),
    policy: ConvergencePolicy = ConvergencePolicy(),
) -> LayerResult:
    """Lowest discrete eigenvalues of the partial wave ``m`` with error control.

    Reported eigenvalues are Richardson extrapolations of the accepted mesh
    and its red refinement (fourth order for P2); eigenvectors come from the
    refined level.
    """
    started = time.perf_counter()
    s_max = policy.s_max if policy.s_max is not None else initial_s_max(aperture, policy)

    def mesh_at(s):
        return generate_mesh(build_domain(aperture, s), policy.h, policy.grading, policy.min_angle_deg)

    mesh = mesh_at(s_max)
    system, spectrum = _solve_on(mesh, aperture, m, params)
    doublings = 0
    truncation_deltas = np.empty(0)
    truncation_ok = np.ones(len(spectrum), dtype=bool)

    if policy.auto_smax:
        while True:
            longer_mesh = mesh_at(2.0 * s_max)
            longer_system, longer = _solve_on(longer_mesh, aperture, m, params)
            common = min(len(spectrum), len(longer))
            truncation_deltas = spectrum.eigenvalues[:common] - longer.eigenvalues[:common]
            truncation_ok = np.abs(truncation_deltas) < policy.truncation_tol
            s_max, mesh, system, spectrum = 2.0 * s_max, longer_mesh, longer_system, longer
            doublings += 1
            logger.info(
                "theta=%.4f deg s_max=%.4g: max |delta| on doubling %.3e",
                aperture.theta_deg, s_max,
                float(np.abs(truncation_deltas).max()) if common else 0.0,
            )
            if len(longer) > common:
                logger.info("branches %s appeared at s_max=%.4g", list(range(common + 1, len(longer) + 1)), s_max)
            if np.all(truncation_ok) or doublings >= policy.max_doublings:
                break
        if not np.all(truncation_ok):
            logger.warning(
                "truncation test failed for branches %s at s_max=%.4g",
                (np.flatnonzero(~truncation_ok) + 1).tolist(), s_max,
            )

    coarse_values = spectrum.eigenvalues
    eigenvalues = coarse_values.copy()
    errors = np.full(coarse_values.size, np.nan)
    refinement_deltas = np.empty(0)
    refinement_ok = np.ones(coarse_values.size, dtype=bool)
    if policy.refine:
        fine_mesh = refine_mesh(mesh)
        fine_system, fine = _solve_on(fine_mesh, aperture, m, params)
        n = len(fine)
        refinement_deltas = _deltas(coarse_values, fine.eigenvalues, n)
        refinement_ok = np.abs(refinement_deltas) < policy.refinement_tol
        eigenvalues = fine.eigenvalues - np.nan_to_num(refinement_deltas) / 15.0
        errors = np.abs(refinement_deltas) / 15.0
        mesh, system, spectrum = fine_mesh, fine_system, fine
        if not np.all(refinement_ok):
            logger.warning(
                "refinement test failed for branches %s (max |delta| %.3e)",
                (np.flatnonzero(~refinement_ok) + 1).tolist(),
                float(np.nanmax(np.abs(refinement_deltas))),
            )
    truncation_ok = _fit(truncation_ok, len(spectrum))

    result = LayerResult(
        aperture=aperture,
        m=int(m),
        spectrum=spectrum,
        system=system,
        mesh=mesh,
        s_max=s_max,
        eigenvalues=eigenvalues,
        error_estimates=errors,
        truncation_ok=truncation_ok,
        refinement_ok=refinement_ok,
        truncation_deltas=truncation_deltas,
        refinement_deltas=refinement_deltas,
        doublings=doublings,
        timings={"solve_layer_seconds": time.perf_counter() - started},
    )
    logger.info(
        "theta=%.4f deg m=%d: %d eigenvalues, s_max=%.4g, %d dofs",
        aperture.theta_deg, m, eigenvalues.size, s_max, result.n_dof,
    )
    return result
