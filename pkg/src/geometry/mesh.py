"""Structured quadratic (P2) triangulations of the meridian domain.

Nodes are laid out on parallel lines, vertical columns ``s = const``. For
theta < 45 deg the origin wedge uses horizontal rows ``u = const`` up to one
step past the tip instead. Consecutive lines are joined by a zipper
triangulation. Both domain boundaries that the lines end on are straight, so
every boundary vertex is exact and the mesh is deterministic for given inputs.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ..utils.errors import MeshQualityError
from .domain import BoundaryTag, MeridianDomain, weight_r

logger = logging.getLogger(__name__)

# local edge pairs of a triangle, midpoint node k+3 sits on edge k
LOCAL_EDGES = np.array([[0, 1], [1, 2], [2, 0]])

DEFAULT_MIN_ANGLE_DEG = 15.0
_GEOMETRIC_RATIO = 0.5   # column growth factor minus one inside the origin wedge
_ROW_ASPECT = 2.0        # max s-step / u-step in row layout
_END_GAP = 0.5           # shortest admissible last gap, in local steps


@dataclass(frozen=True)
class MeshQuality:
    min_angle_deg: float
    max_aspect_ratio: float


@dataclass
class Mesh:
    """P2 triangle mesh.

    ``points`` holds all nodes, the ``n_vertices`` triangle corners first and
    edge midpoints after them. ``triangles`` rows are
    ``(c0, c1, c2, m01, m12, m20)``. Boundary edges are stored by their corner
    pair, midpoint node and :class:`BoundaryTag`.
    """

    points: np.ndarray
    triangles: np.ndarray
    n_vertices: int
    boundary_edges: np.ndarray
    boundary_mids: np.ndarray
    boundary_tags: np.ndarray
    domain: Optional[MeridianDomain] = None
    _quality: Optional[MeshQuality] = field(default=None, repr=False, compare=False)

    @property
    def n_nodes(self) -> int:
        return self.points.shape[0]

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]

    @property
    def corners(self) -> np.ndarray:
        return self.triangles[:, :3]

    def vertex_points(self) -> np.ndarray:
        return self.points[: self.n_vertices]

    def tag_set(self) -> set:
        return {BoundaryTag(int(t)) for t in np.unique(self.boundary_tags)}

    def nodes_on(self, tags) -> np.ndarray:
        """Sorted node indices (corners and midpoints) on edges with the given tags"""
        tags = [int(t) for t in tags]
        if not tags:
            return np.empty(0, dtype=np.int64)
        mask = np.isin(self.boundary_tags, tags)
        nodes = np.concatenate([self.boundary_edges[mask].ravel(), self.boundary_mids[mask]])
        return np.unique(nodes)

    def areas(self) -> np.ndarray:
        p = self.points
        c = self.corners
        d1 = p[c[:, 1]] - p[c[:, 0]]
        d2 = p[c[:, 2]] - p[c[:, 0]]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def quality(self) -> MeshQuality:
        if self._quality is None:
            self._quality = mesh_quality(self)
        return self._quality

    def stats(self) -> dict:
        q = self.quality()
        return {
            "n_vertices": int(self.n_vertices),
            "n_nodes": int(self.n_nodes),
            "n_triangles": int(self.n_triangles),
            "n_boundary_edges": int(self.boundary_edges.shape[0]),
            "min_angle_deg": float(q.min_angle_deg),
            "max_aspect_ratio": float(q.max_aspect_ratio),
        }


def triangle_angles(points: np.ndarray, corners: np.ndarray) -> np.ndarray:
    """Interior angles in degrees, shape (T, 3)"""
    p = points[corners]
    angles = np.empty(corners.shape, dtype=float)
    for k in range(3):
        a = p[:, (k + 1) % 3] - p[:, k]
        b = p[:, (k + 2) % 3] - p[:, k]
        cross = np.abs(a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0])
        dot = np.einsum("ij,ij->i", a, b)
        angles[:, k] = np.degrees(np.arctan2(cross, dot))
    return angles


def mesh_quality(mesh: Mesh) -> MeshQuality:
    p = mesh.points[mesh.corners]
    lengths = np.stack(
        [np.linalg.norm(p[:, (k + 1) % 3] - p[:, k], axis=1) for k in range(3)], axis=1
    )
    area = np.abs(mesh.areas())
    # 1 for the equilateral triangle
    aspect = lengths.max(axis=1) * lengths.sum(axis=1) / (4.0 * math.sqrt(3.0) * area)
    return MeshQuality(
        min_angle_deg=float(triangle_angles(mesh.points, mesh.corners).min()),
        max_aspect_ratio=float(aspect.max()),
    )


def _unique_edges(tris: np.ndarray):
    """Sorted unique edges of a P1 triangle list and the triangle-to-edge map"""
    local = tris[:, LOCAL_EDGES]                       # (T, 3, 2)
    pairs = np.sort(local.reshape(-1, 2), axis=1)
    edges, inverse, counts = np.unique(pairs, axis=0, return_inverse=True, return_counts=True)
    return edges, inverse.reshape(-1, 3), counts


def build_p2(
    vertices: np.ndarray,
    tris: np.ndarray,
    tagger: Callable[[np.ndarray, np.ndarray], np.ndarray],
    domain: Optional[MeridianDomain] = None,
) -> Mesh:
    """Promote a P1 triangulation to P2 and tag its boundary edges.

    ``tagger(vertices, edges)`` returns one tag per boundary edge or -1 where
    the edge lies on no known boundary piece.
    """
    vertices = np.asarray(vertices, dtype=float)
    tris = np.array(tris, dtype=np.int64)
    d1 = vertices[tris[:, 1]] - vertices[tris[:, 0]]
    d2 = vertices[tris[:, 2]] - vertices[tris[:, 0]]
    signed = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    if np.any(signed == 0.0):
        bad = int(np.flatnonzero(signed == 0.0)[0])
        raise MeshQualityError(f"degenerate triangle {bad}", min_angle_deg=0.0)
    flip = signed < 0
    tris[flip] = tris[flip][:, [0, 2, 1]]

    edges, t2e, counts = _unique_edges(tris)
    if np.any(counts > 2):
        raise MeshQualityError("non-manifold edge shared by more than two triangles")
    nv = vertices.shape[0]
    mids = 0.5 * (vertices[edges[:, 0]] + vertices[edges[:, 1]])
    points = np.vstack([vertices, mids])
    triangles = np.hstack([tris, nv + t2e])

    boundary = np.flatnonzero(counts == 1)
    b_edges = edges[boundary]
    tags = np.asarray(tagger(vertices, b_edges), dtype=np.int64)
    if np.any(tags < 0):
        bad = b_edges[np.flatnonzero(tags < 0)[0]]
        raise MeshQualityError(
            f"boundary edge {tuple(int(i) for i in bad)} lies on no tagged boundary piece"
        )
    return Mesh(
        points=points,
        triangles=triangles,
        n_vertices=nv,
        boundary_edges=b_edges,
        boundary_mids=nv + boundary,
        boundary_tags=tags,
        domain=domain,
    )


def _zipper(left: list[int], right: list[int], coords: np.ndarray) -> list[tuple[int, int, int]]:
    """Triangulate the strip between two sorted node chains on parallel lines"""
    out = []
    i = j = 0
    nl, nr = len(left) - 1, len(right) - 1
    while i < nl or j < nr:
        if i == nl:
            advance_left = False
        elif j == nr:
            advance_left = True
        else:
            d_left = np.linalg.norm(coords[left[i + 1]] - coords[right[j]])
            d_right = np.linalg.norm(coords[left[i]] - coords[right[j + 1]])
            advance_left = d_left <= d_right
        if advance_left:
            out.append((left[i], right[j], left[i + 1]))
            i += 1
        else:
            out.append((left[i], right[j], right[j + 1]))
            j += 1
    return out


def _size_function(h: float, grading: float, s_tip: float, radius: float):
    h_tip = h / grading

    def size(s: float) -> float:
        t = min(1.0, abs(s - s_tip) / radius)
        return h_tip + (h - h_tip) * t

    return size


def _march_right(start: float, stop: float, step: Callable[[float], float]) -> list[float]:
    out = [start]
    s = start
    while True:
        st = step(s)
        if s + st >= stop - _END_GAP * st:
            break
        s += st
        out.append(s)
    out.append(stop)
    return out


def _march_left(start: float, step: Callable[[float], float], floor: float) -> list[float]:
    """Positions from ``start`` down to 0; ``floor`` ends geometric grading"""
    out = [start]
    s = start
    while True:
        st = step(s)
        if s - st <= max(floor, _END_GAP * st):
            break
        s -= st
        out.append(s)
    out.append(0.0)
    return out


def _domain_tagger(domain: MeridianDomain, tol: float):
    ap = domain.aperture

    def tagger(vertices: np.ndarray, edges: np.ndarray) -> np.ndarray:
        a = vertices[edges[:, 0]]
        b = vertices[edges[:, 1]]
        tags = np.full(edges.shape[0], -1, dtype=np.int64)

        def on(gap_a, gap_b):
            return (np.abs(gap_a) <= tol) & (np.abs(gap_b) <= tol)

        outer = on(a[:, 1], b[:, 1])
        trunc = on(a[:, 0] - domain.s_max, b[:, 0] - domain.s_max)
        inner = on(a[:, 1] - math.pi, b[:, 1] - math.pi)
        axis = on(weight_r(a[:, 0], a[:, 1], ap), weight_r(b[:, 0], b[:, 1], ap))
        tags[axis] = BoundaryTag.AXIS
        tags[inner] = BoundaryTag.WALL_INNER
        tags[trunc] = BoundaryTag.TRUNCATION
        tags[outer] = BoundaryTag.WALL_OUTER
        return tags

    return tagger


def _column_chain(coords: list, s: float, height: float, size) -> list[int]:
    if height <= 0.0:
        chain_u = [0.0]
    else:
        n = max(1, int(math.ceil(height / size(s) - 1e-9)))
        chain_u = [height * i / n for i in range(n + 1)]
    base = len(coords)
    coords.extend((s, u) for u in chain_u)
    return list(range(base, base + len(chain_u)))


def _column_layout(domain: MeridianDomain, size, h: float):
    ap = domain.aperture
    s_tip = ap.tip_s
    cot = 1.0 / math.tan(ap.theta)
    kappa = _GEOMETRIC_RATIO

    def left_step(s):
        return min(size(s), kappa / (1.0 + kappa) * s)

    left = _march_left(s_tip, left_step, floor=1e-3 * h)
    right = _march_right(s_tip, domain.s_max, size)

    coords: list = []
    chains = [
        _column_chain(coords, s, min(math.pi, s * cot) if s < s_tip else math.pi, size)
        for s in left[::-1] + right[1:]
    ]
    return np.array(coords), [chains]


def _row_layout(domain: MeridianDomain, size, h: float, grading: float):
    """Rows over the origin wedge up to one step past the tip, columns beyond.

    The rows carry the tip spacing ``h/grading`` across the wedge; the columns
    coarsen with ``size`` exactly as in the column layout.
    """
    ap = domain.aperture
    s_tip = ap.tip_s
    tan = math.tan(ap.theta)
    n_rows = max(1, int(math.ceil(math.pi / (h / grading) - 1e-9)))
    h_u = math.pi / n_rows

    def step(s):
        return min(size(s), _ROW_ASPECT * h_u)

    right = _march_right(s_tip, domain.s_max, size)
    s_join = right[1]
    wedge = np.array(_march_left(s_tip, step, floor=0.0)[::-1])
    gaps = _END_GAP * np.array([step(g) for g in wedge])

    coords: list = []
    rows = []
    for j in range(n_rows + 1):
        u = math.pi * j / n_rows
        s_left = s_tip if j == n_rows else u * tan
        inner = wedge[(wedge > s_left + gaps) & (wedge < s_join)]
        chain_s = [s_left] + [float(g) for g in inner] + [s_join]
        base = len(coords)
        coords.extend((s, u) for s in chain_s)
        rows.append(list(range(base, base + len(chain_s))))

    columns = [[row[-1] for row in rows]]
    columns += [_column_chain(coords, s, math.pi, size) for s in right[2:]]
    return np.array(coords), [rows, columns]


def generate_mesh(
    domain: MeridianDomain,
    h: float,
    grading: float = 4.0,
    min_angle_deg: float = DEFAULT_MIN_ANGLE_DEG,
    radius: float = math.pi,
) -> Mesh:
    """Conforming P2 mesh of the truncated domain.

    ``h`` is the target edge length away from the inner tip; edges within
    the tip neighbourhood of size ``radius`` shrink linearly to ``h/grading``.
    The achievable minimum angle is capped by the domain corner at the
    origin, whose angle is beta.
    """
    if not (h > 0.0):
        raise ValueError(f"h must be positive, got {h!r}")
    if not (grading >= 1.0):
        raise ValueError(f"grading must be >= 1, got {grading!r}")
    ap = domain.aperture
    size = _size_function(h, grading, ap.tip_s, radius)
    if ap.theta >= 0.25 * math.pi:
        coords, groups = _column_layout(domain, size, h)
        layout = "columns"
    else:
        coords, groups = _row_layout(domain, size, h, grading)
        layout = "rows"

    tris = []
    for chains in groups:
        for left, right in zip(chains[:-1], chains[1:]):
            tris.extend(_zipper(left, right, coords))

    tol = 1e-9 * max(1.0, domain.s_max)
    mesh = build_p2(coords, np.array(tris), _domain_tagger(domain, tol), domain=domain)
    check_conformity(mesh)

    threshold = min(min_angle_deg, ap.beta_deg) - 1e-9
    q = mesh.quality()
    logger.info(
        "%s mesh: %d vertices, %d nodes, %d triangles, min angle %.2f deg",
        layout, mesh.n_vertices, mesh.n_nodes, mesh.n_triangles, q.min_angle_deg,
    )
    if q.min_angle_deg < threshold:
        raise MeshQualityError(
            f"min angle {q.min_angle_deg:.3f} deg below attainable threshold {threshold:.3f} deg",
            min_angle_deg=q.min_angle_deg,
        )
    return mesh


def rectangle_mesh(
    a: float,
    b: float,
    nx: int,
    ny: int,
    side_tags: dict[str, BoundaryTag],
    x0: float = 0.0,
    y0: float = 0.0,
) -> Mesh:
    """Right-triangle P2 mesh of ``[x0, x0+a] x [y0, y0+b]``.

    ``side_tags`` maps ``left``, ``right``, ``bottom`` and ``top`` to tags.
    """
    if nx < 1 or ny < 1:
        raise ValueError("nx and ny must be >= 1")
    xs = x0 + a * np.arange(nx + 1) / nx
    ys = y0 + b * np.arange(ny + 1) / ny
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    vertices = np.column_stack([X.ravel(), Y.ravel()])
    idx = np.arange((nx + 1) * (ny + 1)).reshape(nx + 1, ny + 1)
    v00 = idx[:-1, :-1].ravel()
    v10 = idx[1:, :-1].ravel()
    v01 = idx[:-1, 1:].ravel()
    v11 = idx[1:, 1:].ravel()
    tris = np.vstack([
        np.column_stack([v00, v10, v11]),
        np.column_stack([v00, v11, v01]),
    ])
    tol = 1e-12 * max(1.0, abs(a), abs(b))
    sides = {
        "left": (0, x0), "right": (0, x0 + a),
        "bottom": (1, y0), "top": (1, y0 + b),
    }

    def tagger(verts, edges):
        tags = np.full(edges.shape[0], -1, dtype=np.int64)
        pa, pb = verts[edges[:, 0]], verts[edges[:, 1]]
        for side, (axis, value) in sides.items():
            mask = (np.abs(pa[:, axis] - value) <= tol) & (np.abs(pb[:, axis] - value) <= tol)
            tags[mask] = int(side_tags[side])
        return tags

    return build_p2(vertices, tris, tagger)


def refine_mesh(mesh: Mesh) -> Mesh:
    """Red refinement: every triangle split into four along its midpoints"""
    t = mesh.triangles
    c0, c1, c2, m01, m12, m20 = (t[:, k] for k in range(6))
    tris = np.vstack([
        np.column_stack([c0, m01, m20]),
        np.column_stack([m01, c1, m12]),
        np.column_stack([m20, m12, c2]),
        np.column_stack([m01, m12, m20]),
    ])
    lookup = {}
    for (a, b), mid, tag in zip(mesh.boundary_edges, mesh.boundary_mids, mesh.boundary_tags):
        lookup[tuple(sorted((int(a), int(mid))))] = int(tag)
        lookup[tuple(sorted((int(mid), int(b))))] = int(tag)

    def tagger(_verts, edges):
        return np.array([lookup.get((int(e[0]), int(e[1])), -1) for e in edges], dtype=np.int64)

    fine = build_p2(mesh.points, tris, tagger, domain=mesh.domain)
    logger.debug("refined %d -> %d triangles", mesh.n_triangles, fine.n_triangles)
    return fine


def check_conformity(mesh: Mesh) -> None:
    """Raise :class:`MeshQualityError` unless the mesh is conforming and tagged"""
    edges, _, counts = _unique_edges(mesh.corners)
    if np.any(counts > 2):
        raise MeshQualityError("edge shared by more than two triangles")
    boundary = {tuple(e) for e in edges[counts == 1].tolist()}
    tagged = {tuple(sorted(e)) for e in mesh.boundary_edges.tolist()}
    if boundary != tagged:
        raise MeshQualityError(
            f"{len(boundary ^ tagged)} boundary edges without a tag or tags on interior edges"
        )
    if np.any(mesh.areas() <= 0.0):
        raise MeshQualityError("triangle with non-positive orientation")
