"""Axial envelopes and spatial extent of eigenfunctions"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.signal import find_peaks

from ..assembly.quadrature import seven_point_rule
from ..geometry.domain import Aperture, Chart, map_coords, weight_r
from ..geometry.mesh import Mesh
from .fields import lattice_field, quadrature_field

logger = logging.getLogger(__name__)

PEAK_PROMINENCE = 0.05


@dataclass(frozen=True)
class ProfileReport:
    z: np.ndarray
    envelope: np.ndarray
    peaks_z: np.ndarray

    @property
    def farthest_peak(self) -> float:
        return float(self.peaks_z.max()) if self.peaks_z.size else float("nan")

    @property
    def dominant_peak(self) -> float:
        if self.z.size == 0:
            return float("nan")
        return float(self.z[int(np.argmax(self.envelope))])


def profile_report(mesh: Mesh, aperture: Aperture, field: np.ndarray, n_bins: int = 200) -> ProfileReport:
    """Maximum of ``psi^2`` over the transverse section on a uniform z grid.

    Bins without lattice points are dropped, so ``z`` may hold fewer than
    ``n_bins`` centers.

    ``field`` is nodal over all mesh nodes; B-normalized eigenvectors share a
    normalization, so envelopes of different modes are comparable.
    """
    lattice = lattice_field(mesh, field)
    _, z = map_coords(lattice.points[:, 0], lattice.points[:, 1], Chart.SU, Chart.RZ, aperture)
    density = lattice.values ** 2
    edges = np.linspace(z.min(), z.max(), n_bins + 1)
    which = np.clip(np.digitize(z, edges) - 1, 0, n_bins - 1)
    envelope = np.zeros(n_bins)
    np.maximum.at(envelope, which, density)
    centers = 0.5 * (edges[:-1] + edges[1:])
    # bins no lattice point falls into carry no data, not a zero envelope
    occupied = np.bincount(which, minlength=n_bins) > 0
    if not occupied.all():
        logger.debug("dropping %d empty z-bins", int((~occupied).sum()))
    centers, envelope = centers[occupied], envelope[occupied]

    top = envelope.max()
    if top > 0.0 and np.ptp(envelope) > PEAK_PROMINENCE * top:
        # pad so that maxima at either end of the range count as peaks
        padded = np.concatenate([[0.0], envelope, [0.0]])
        idx, _ = find_peaks(padded, prominence=PEAK_PROMINENCE * top)
        peaks = centers[idx - 1]
    else:
        peaks = np.empty(0)
    logger.debug("envelope peaks at z=%s", np.round(peaks, 3).tolist())
    return ProfileReport(z=centers, envelope=envelope, peaks_z=peaks)


def extent_report(mesh: Mesh, aperture: Aperture, field: np.ndarray, z_limit: float) -> float:
    """Fraction of ``int r psi^2`` carried by the part of the layer with z <= z_limit"""
    q = quadrature_field(mesh, field, seven_point_rule())
    s, u = q.points[..., 0], q.points[..., 1]
    _, z = map_coords(s, u, Chart.SU, Chart.RZ, aperture)
    density = weight_r(s, u, aperture) * q.values ** 2 * q.jxw
    total = density.sum()
    if total <= 0.0:
        raise ValueError("field has zero weighted norm")
    return float(density[z <= z_limit].sum() / total)
