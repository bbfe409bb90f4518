"""Static SVG figures: branch diagram, eigenfunction contours and axial envelopes"""
from __future__ import annotations

import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import matplotlib.tri as mtri  # noqa: E402
import numpy as np  # noqa: E402

from ..analysis.nodal import NodalData  # noqa: E402
from ..analysis.profile import ProfileReport  # noqa: E402
from ..analysis.sweep import SweepResult  # noqa: E402
from ..geometry.domain import Chart, MeridianDomain, map_coords  # noqa: E402
from ..oracles.spectra import LAMBDA_0  # noqa: E402

logger = logging.getLogger(__name__)

# SVG text as paths, stable ids
SVG_PARAMS = {
    "svg.fonttype": "path",
    "svg.hashsalt": "conelayer",
    "font.size": 9,
    "axes.labelsize": 10,
    "legend.fontsize": 8,
    "lines.linewidth": 1.2,
    "figure.dpi": 100,
}
SAVE_KW = {"format": "svg", "metadata": {"Date": None}, "bbox_inches": "tight"}
NODAL_COLOR = "black"
OUTLINE_COLOR = "0.55"


def _save(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, **SAVE_KW)
    plt.close(fig)
    logger.debug("wrote %s", path)
    return path


def plot_sweep(result: SweepResult, path) -> Path:
    """Branches lambda_j against beta in degrees, threshold at 1 and lambda_0 at beta = 0"""
    branches = result.branch_table()
    with plt.rc_context(SVG_PARAMS):
        fig, ax = plt.subplots(figsize=(5.0, 3.6))
        if not branches.empty:
            beta = 90.0 - np.degrees(branches.index.to_numpy())
            order = np.argsort(beta)
            for j in branches.columns:
                ax.plot(beta[order], branches[j].to_numpy()[order], marker=".", markersize=3,
                        label=f"$\\lambda_{{{j}}}$")
        ax.axhline(1.0, color=OUTLINE_COLOR, linestyle="--", linewidth=0.8)
        ax.plot([0.0], [LAMBDA_0], "o", color=NODAL_COLOR, markersize=6, gid="lambda-0")
        ax.set_xlim(left=0.0)
        ax.set_xlabel(r"$\beta$ [deg]")
        ax.set_ylabel(r"$\lambda$")
        if not branches.empty:
            ax.legend(loc="lower right", frameon=False, ncol=2)
        fig.tight_layout()
        return _save(fig, path)


def _outline(ax, domain: MeridianDomain) -> None:
    aperture = domain.aperture
    for tag, (a, b) in domain.boundary_pieces().items():
        s = np.array([a[0], b[0]])
        u = np.array([a[1], b[1]])
        r, z = map_coords(s, u, Chart.SU, Chart.RZ, aperture)
        ax.plot(r, z, color=OUTLINE_COLOR, linewidth=0.6, gid=f"boundary-{tag.name.lower()}")


def plot_mode(domain: MeridianDomain, nodal: NodalData, j: int, lam: float, path,
              vertical_scale: float = 1.0, levels: int = 21) -> Path:
    """Filled contours of psi_j in the (r, z) half-plane, nodal lines stroked black.

    ``vertical_scale`` compresses the z axis: one unit of z is drawn
    ``1/vertical_scale`` times as long as one unit of r.
    """
    aperture = domain.aperture
    lattice = nodal.lattice
    r, z = map_coords(lattice.points[:, 0], lattice.points[:, 1], Chart.SU, Chart.RZ, aperture)
    tri = mtri.Triangulation(r, z, lattice.triangles)
    bound = nodal.max_abs
    with plt.rc_context(SVG_PARAMS):
        fig, ax = plt.subplots(figsize=(3.2, 6.0))
        ax.tricontourf(tri, lattice.values, levels=np.linspace(-bound, bound, levels), cmap="RdBu_r")
        _outline(ax, domain)
        for i, line in enumerate(nodal.polylines):
            lr, lz = map_coords(line[:, 0], line[:, 1], Chart.SU, Chart.RZ, aperture)
            ax.plot(lr, lz, color=NODAL_COLOR, linewidth=1.0, gid=f"nodal-line-{i + 1}")
        ax.set_aspect(1.0 / vertical_scale)
        ax.set_xlabel("r")
        ax.set_ylabel("z")
        ax.set_title(f"j = {j}, $\\lambda$ = {lam:.6f}")
        fig.tight_layout()
        return _save(fig, path)


def plot_profiles(profiles: list[ProfileReport], path) -> Path:
    """Axial envelopes of psi_j^2 for B-normalized modes on common axes"""
    with plt.rc_context(SVG_PARAMS):
        fig, ax = plt.subplots(figsize=(6.0, 3.2))
        for j, prof in enumerate(profiles, start=1):
            ax.plot(prof.z, prof.envelope, label=f"j = {j}")
        ax.set_xlabel("z")
        ax.set_ylabel(r"$\max\,|\psi_j|^2$")
        if profiles:
            ax.legend(loc="upper right", frameon=False, ncol=2)
        fig.tight_layout()
        return _save(fig, path)
