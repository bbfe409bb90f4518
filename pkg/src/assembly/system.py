"""Assembled generalized eigenproblem and Dirichlet elimination"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, replace
from typing import Iterable

import numpy as np
import scipy.sparse as sp

from ..geometry.domain import BoundaryTag
from ..geometry.mesh import Mesh
from ..utils.errors import EmptySystemError

logger = logging.getLogger(__name__)

CONSTRAINED = -1


class Formulation(enum.Enum):
    WEIGHTED_SU = "weighted_su"
    SKEW_YV = "skew_yv"
    SCALED_SU = "scaled_su"


def dirichlet_tags(m: int) -> tuple[BoundaryTag, ...]:
    """Walls and truncation always; the axis only for nonzero m"""
    tags = (BoundaryTag.WALL_OUTER, BoundaryTag.WALL_INNER, BoundaryTag.TRUNCATION)
    return tags + (BoundaryTag.AXIS,) if m != 0 else tags


def symmetrize(matrix: sp.spmatrix) -> sp.csr_matrix:
    """Bitwise symmetric CSR built from the upper triangle"""
    upper = sp.triu(matrix, format="csr")
    return (upper + sp.triu(matrix, k=1, format="csr").T).tocsr()


@dataclass(frozen=True)
class AssembledSystem:
    A: sp.csr_matrix
    B: sp.csr_matrix
    dof_map: np.ndarray
    m: int
    formulation: Formulation
    mesh: Mesh
    constrained_tags: tuple = ()

    @property
    def n_free(self) -> int:
        return self.A.shape[0]

    @property
    def free_nodes(self) -> np.ndarray:
        """Mesh node index of every free dof, in dof order"""
        nodes = np.flatnonzero(self.dof_map != CONSTRAINED)
        return nodes[np.argsort(self.dof_map[nodes])]

    def expand(self, vector: np.ndarray) -> np.ndarray:
        """Nodal field over the whole mesh, zero on constrained nodes"""
        out = np.zeros(self.mesh.n_nodes, dtype=float)
        out[self.free_nodes] = vector
        return out

    def restrict(self, field: np.ndarray) -> np.ndarray:
        return np.asarray(field, dtype=float)[self.free_nodes]


def apply_dirichlet(system: AssembledSystem, tags: Iterable[BoundaryTag]) -> AssembledSystem:
    """Eliminate the nodes on ``tags`` from the pencil"""
    tags = tuple(BoundaryTag(t) for t in tags)
    unknown = set(tags) - system.mesh.tag_set()
    if unknown:
        raise ValueError(f"tags {sorted(t.name for t in unknown)} not present on the mesh")
    nodes = system.mesh.nodes_on(tags)
    drop = system.dof_map[nodes]
    drop = drop[drop != CONSTRAINED]
    keep_mask = np.ones(system.n_free, dtype=bool)
    keep_mask[drop] = False
    keep = np.flatnonzero(keep_mask)
    if keep.size == 0:
        raise EmptySystemError("empty system: every degree of freedom is constrained")

    renumber = np.full(system.n_free, CONSTRAINED, dtype=np.int64)
    renumber[keep] = np.arange(keep.size)
    dof_map = np.where(
        system.dof_map == CONSTRAINED, CONSTRAINED, renumber[np.maximum(system.dof_map, 0)]
    )
    A = system.A[keep][:, keep].tocsr()
    B = system.B[keep][:, keep].tocsr()
    logger.debug("constrained %d dofs on %s, %d free", drop.size, [t.name for t in tags], keep.size)
    merged = tuple(dict.fromkeys(system.constrained_tags + tags))
    return replace(system, A=A, B=B, dof_map=dof_map, constrained_tags=merged)


def unconstrained(
    A: sp.spmatrix, B: sp.spmatrix, mesh: Mesh, m: int, formulation: Formulation
) -> AssembledSystem:
    n = mesh.n_nodes
    return AssembledSystem(
        A=symmetrize(A),
        B=symmetrize(B),
        dof_map=np.arange(n, dtype=np.int64),
        m=int(m),
        formulation=formulation,
        mesh=mesh,
    )

