"""Lower bounds on the eigenvalue count from inscribed cylinders"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass

import numpy as np

from ..eigensolve.solver import Spectrum
from ..geometry.domain import Aperture
from ..oracles.spectra import J0_FIRST_ZERO, LAMBDA_0

logger = logging.getLogger(__name__)

R_GRID = 10_000


@dataclass(frozen=True)
class CylinderBound:
    theta: float
    lambda_bar: float
    R: float
    L: float
    N: int

    def as_dict(self) -> dict:
        out = asdict(self)
        out["theta_deg"] = math.degrees(self.theta)
        out["beta_deg"] = 90.0 - out["theta_deg"]
        return out


def cylinder_length(aperture: Aperture, radius):
    """Axial length of a cylinder of given radius inscribed against the inner tip"""
    return (math.pi - np.asarray(radius) * math.sin(aperture.theta)) / math.cos(aperture.theta)


def cylinder_counts(aperture: Aperture, lambda_bar: float, radius) -> np.ndarray:
    """Number of q >= 1 with ``(j01/R)^2 + (pi q/L)^2 < lambda_bar`` for each radius"""
    radius = np.asarray(radius, dtype=float)
    radicand = lambda_bar - (J0_FIRST_ZERO / radius) ** 2
    length = cylinder_length(aperture, radius)
    x = np.where(radicand > 0.0, length * np.sqrt(np.maximum(radicand, 0.0)) / math.pi, 0.0)
    # strict inequality: q < x
    return np.where(x > 0.0, np.ceil(x) - 1.0, 0.0).astype(np.int64)


def cylinder_count_bound(aperture: Aperture, lambda_bar: float, n_grid: int = R_GRID) -> CylinderBound:
    """Best guaranteed count over a radius grid strictly inside (0, pi)"""
    if not (LAMBDA_0 < lambda_bar < 1.0):
        raise ValueError(f"lambda_bar must lie in (lambda_0={LAMBDA_0:.6f}, 1), got {lambda_bar!r}")
    radius = math.pi * np.arange(1, n_grid + 1) / (n_grid + 1)
    counts = cylinder_counts(aperture, lambda_bar, radius)
    radicand = lambda_bar - (J0_FIRST_ZERO / radius) ** 2
    score = np.where(radicand > 0.0, cylinder_length(aperture, radius) * np.sqrt(np.maximum(radicand, 0.0)), -np.inf)
    best_n = int(counts.max())
    candidates = np.flatnonzero(counts == best_n)
    pick = int(candidates[np.argmax(score[candidates])])
    R = float(radius[pick])
    bound = CylinderBound(
        theta=aperture.theta,
        lambda_bar=float(lambda_bar),
        R=R,
        L=float(cylinder_length(aperture, R)),
        N=best_n,
    )
    logger.info("cylinder bound theta=%.4f deg lambda_bar=%.4f: N=%d at R=%.5f", aperture.theta_deg, lambda_bar, bound.N, R)
    return bound


def count_below(spectrum: Spectrum, lambda_bar: float) -> int:
    """Converged discrete eigenvalues strictly below ``lambda_bar``"""
    mask = (spectrum.eigenvalues < lambda_bar) & spectrum.converged
    return int(mask.sum())
