"""Plain-text mesh exchange format.

::

    conelayer-mesh v1
    <N>
    <s> <u>                          N lines, %.17g, corners first
    <T>
    <c0> <c1> <c2> <m01> <m12> <m20> T lines, 0-based
    <E>
    <a> <b> <TAG>                    E lines, corner pair and tag name
"""
from __future__ import annotations

import logging
from pathlib import Path
from typing import Optional

import numpy as np

from ..utils.errors import MeshQualityError
from .domain import Aperture, BoundaryTag, build_domain
from .mesh import LOCAL_EDGES, Mesh, check_conformity

logger = logging.getLogger(__name__)

MAGIC = "conelayer-mesh v1"


def write_mesh(mesh: Mesh, path) -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        fh.write(MAGIC + "\n")
        fh.write(f"{mesh.n_nodes}\n")
        np.savetxt(fh, mesh.points, fmt="%.17g")
        fh.write(f"{mesh.n_triangles}\n")
        np.savetxt(fh, mesh.triangles, fmt="%d")
        fh.write(f"{mesh.boundary_edges.shape[0]}\n")
        for (a, b), tag in zip(mesh.boundary_edges, mesh.boundary_tags):
            fh.write(f"{int(a)} {int(b)} {BoundaryTag(int(tag)).name}\n")
    logger.info("wrote mesh with %d nodes to %s", mesh.n_nodes, path)
    return path


def _block(lines, pos: int, what: str) -> tuple[int, list[str]]:
    try:
        count = int(lines[pos])
    except (IndexError, ValueError):
        raise MeshQualityError(f"expected the {what} count at line {pos + 1}") from None
    body = lines[pos + 1 : pos + 1 + count]
    if len(body) != count:
        raise MeshQualityError(f"truncated {what} block")
    return pos + 1 + count, body


def read_mesh(path, aperture: Optional[Aperture] = None) -> Mesh:
    """Mesh from a ``conelayer-mesh v1`` file.

    The file carries no angle; with ``aperture`` the domain is rebuilt,
    truncated at the largest s-coordinate.
    """
    lines = [ln.strip() for ln in Path(path).read_text(encoding="utf-8").splitlines() if ln.strip()]
    if not lines or lines[0] != MAGIC:
        raise MeshQualityError(f"{path}: not a '{MAGIC}' file")

    pos, body = _block(lines, 1, "node")
    points = np.array([[float(x) for x in ln.split()] for ln in body], dtype=float).reshape(-1, 2)
    pos, body = _block(lines, pos, "triangle")
    triangles = np.array([[int(x) for x in ln.split()] for ln in body], dtype=np.int64).reshape(-1, 6)
    _, body = _block(lines, pos, "boundary edge")
    pairs, tags = [], []
    for ln in body:
        a, b, name = ln.split()
        pairs.append(sorted((int(a), int(b))))
        tags.append(int(BoundaryTag[name]))
    edges = np.array(pairs, dtype=np.int64).reshape(-1, 2)

    mid_of = {}
    for tri in triangles:
        for k, (i, j) in enumerate(LOCAL_EDGES):
            mid_of[tuple(sorted((int(tri[i]), int(tri[j]))))] = int(tri[3 + k])
    try:
        mids = np.array([mid_of[tuple(e)] for e in edges.tolist()], dtype=np.int64)
    except KeyError as exc:
        raise MeshQualityError(f"boundary edge {exc.args[0]} is not a triangle edge") from exc

    mesh = Mesh(
        points=points,
        triangles=triangles,
        n_vertices=int(triangles[:, :3].max()) + 1 if triangles.size else 0,
        boundary_edges=edges,
        boundary_mids=mids,
        boundary_tags=np.array(tags, dtype=np.int64),
        domain=build_domain(aperture, float(points[:, 0].max())) if aperture is not None else None,
    )
    check_conformity(mesh)
    return mesh
