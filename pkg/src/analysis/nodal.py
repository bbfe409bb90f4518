"""Nodal sets of eigenfunctions: sign domains, nodal polylines, mid-line nodes"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from ..geometry.domain import MeridianDomain
from ..geometry.mesh import Mesh
from .fields import LatticeField, lattice_field

logger = logging.getLogger(__name__)

ZERO_FRACTION = 1e-6
NEAR_ZERO_FIELD = 1e-12


@dataclass
class NodalData:
    polylines: list
    sign_domains: int
    midline_s: np.ndarray
    max_abs: float
    lattice: Optional[LatticeField] = field(default=None, repr=False)
    s_tip: Optional[float] = None

    @property
    def line_count(self) -> int:
        return len(self.polylines)


@dataclass(frozen=True)
class SpacingReport:
    positions: np.ndarray
    spacings: np.ndarray
    cap_spacings: np.ndarray
    increasing: bool
    ratios: np.ndarray


@dataclass(frozen=True)
class TipClearance:
    distance: float
    in_cap: bool


def _signs(values: np.ndarray, zero_fraction: float) -> np.ndarray:
    cutoff = zero_fraction * np.abs(values).max()
    signs = np.sign(values).astype(np.int8)
    signs[np.abs(values) <= cutoff] = 0
    return signs


def _sign_domains(lattice: LatticeField, signs: np.ndarray) -> int:
    edges = lattice.edges()
    same = (signs[edges[:, 0]] == signs[edges[:, 1]]) & (signs[edges[:, 0]] != 0)
    e = edges[same]
    n = lattice.points.shape[0]
    graph = sp.coo_matrix((np.ones(e.shape[0]), (e[:, 0], e[:, 1])), shape=(n, n))
    _, labels = connected_components(graph, directed=False)
    return int(np.unique(labels[signs != 0]).size)


def _segments(lattice: LatticeField, signs: np.ndarray):
    """Zero-crossing segments per sub-triangle, keyed by the lattice edges they cut"""
    pts, vals = lattice.points, lattice.values
    segs, keys = [], []
    s = signs[lattice.triangles]
    mixed = np.any(s > 0, axis=1) & np.any(s < 0, axis=1)
    for tri in lattice.triangles[mixed]:
        cuts = []
        for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            if signs[a] * signs[b] < 0:
                t = vals[a] / (vals[a] - vals[b])
                cuts.append(((min(a, b), max(a, b)), pts[a] + t * (pts[b] - pts[a])))
        if len(cuts) == 2:
            keys.append((cuts[0][0], cuts[1][0]))
            segs.append((cuts[0][1], cuts[1][1]))
    return segs, keys


def _link(segs, keys) -> list[np.ndarray]:
    """Chain segments sharing a cut edge into polylines"""
    by_key: dict = {}
    for i, (k0, k1) in enumerate(keys):
        by_key.setdefault(k0, []).append(i)
        by_key.setdefault(k1, []).append(i)
    used = np.zeros(len(segs), dtype=bool)
    lines = []
    for start in range(len(segs)):
        if used[start]:
            continue
        used[start] = True
        chain = [keys[start][0], keys[start][1]]
        points = [segs[start][0], segs[start][1]]
        for forward in (True, False):
            while True:
                end = chain[-1] if forward else chain[0]
                nxt = [i for i in by_key[end] if not used[i]]
                if not nxt:
                    break
                i = nxt[0]
                used[i] = True
                k0, k1 = keys[i]
                new_key, new_pt = (k1, segs[i][1]) if k0 == end else (k0, segs[i][0])
                if forward:
                    chain.append(new_key)
                    points.append(new_pt)
                else:
                    chain.insert(0, new_key)
                    points.insert(0, new_pt)
        lines.append(np.array(points))
    return lines


def _midline_crossings(lines: list[np.ndarray], u_mid: float) -> np.ndarray:
    out = []
    for line in lines:
        du = line[:, 1] - u_mid
        for k in range(line.shape[0] - 1):
            if du[k] == 0.0:
                out.append(line[k, 0])
            elif du[k] * du[k + 1] < 0:
                t = du[k] / (du[k] - du[k + 1])
                out.append(line[k, 0] + t * (line[k + 1, 0] - line[k, 0]))
        if du[-1] == 0.0:
            out.append(line[-1, 0])
    return np.sort(np.array(out, dtype=float))


def nodal_extract(mesh: Mesh, field: np.ndarray, zero_fraction: float = ZERO_FRACTION) -> NodalData:
    """Nodal structure of a nodal P2 field given over all mesh nodes"""
    field = np.asarray(field, dtype=float)
    max_abs = float(np.abs(field).max()) if field.size else 0.0
    if not max_abs >= NEAR_ZERO_FIELD:
        raise ValueError(f"near-zero field (max |psi| = {max_abs:.3e}) has no nodal structure")
    lattice = lattice_field(mesh, field)
    signs = _signs(lattice.values, zero_fraction)
    domains = _sign_domains(lattice, signs)
    segs, keys = _segments(lattice, signs)
    lines = _link(segs, keys)
    midline = _midline_crossings(lines, 0.5 * math.pi)
    logger.debug("%d sign domains, %d nodal lines, %d mid-line nodes", domains, len(lines), midline.size)
    return NodalData(
        polylines=lines,
        sign_domains=domains,
        midline_s=midline,
        max_abs=max_abs,
        lattice=lattice,
        s_tip=mesh.domain.aperture.tip_s if mesh.domain is not None else None,
    )


def node_spacing_report(nodal: NodalData, s_tip: Optional[float] = None) -> SpacingReport:
    """Mid-line node distances measured outward from the tip.

    The node nearest ``s_tip`` is the common start: ``spacings`` runs from it
    towards the truncation, ``cap_spacings`` from it towards the origin. Without
    a tip position the first node is the start.
    """
    positions = np.sort(np.asarray(nodal.midline_s, dtype=float))
    s_tip = nodal.s_tip if s_tip is None else s_tip
    start = int(np.argmin(np.abs(positions - s_tip))) if s_tip is not None and positions.size else 0
    spacings = np.diff(positions[start:])
    cap_spacings = -np.diff(positions[: start + 1][::-1])
    ratios = spacings[1:] / spacings[:-1] if spacings.size > 1 else np.empty(0)
    increasing = bool(np.all(np.diff(spacings) > 0.0) and np.all(np.diff(cap_spacings) > 0.0))
    return SpacingReport(
        positions=positions, spacings=spacings, cap_spacings=cap_spacings, increasing=increasing, ratios=ratios,
    )


def _point_segment_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = b - a
    len2 = np.einsum("ij,ij->i", d, d)
    t = np.clip(np.einsum("ij,ij->i", p - a, d) / np.where(len2 > 0, len2, 1.0), 0.0, 1.0)
    closest = a + t[:, None] * d
    return np.linalg.norm(closest - p, axis=1)


def tip_clearance(nodal: NodalData, domain: MeridianDomain) -> TipClearance:
    """Distance from the inner tip to the nearest nodal line, and cap occupancy"""
    if not nodal.polylines:
        return TipClearance(distance=math.inf, in_cap=False)
    tip = np.array(domain.tip_su)
    s_tip = domain.aperture.tip_s
    best = math.inf
    in_cap = False
    for line in nodal.polylines:
        if line.shape[0] == 1:
            best = min(best, float(np.linalg.norm(line[0] - tip)))
        else:
            best = min(best, float(_point_segment_distance(tip, line[:-1], line[1:]).min()))
        in_cap = in_cap or bool(np.any(line[:, 0] < s_tip))
    return TipClearance(distance=best, in_cap=in_cap)
