"""Coordinate text export of symmetric sparse matrices.

Header ``conelayer-matrix v1 <dim> <nnz> sym`` followed by ``i j value``
triples of the upper triangle, 1-based, values in %.17g.
"""
from __future__ import annotations

import logging
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from ..utils.errors import AssemblyError
from .system import symmetrize

logger = logging.getLogger(__name__)

MAGIC = "conelayer-matrix v1"


def write_matrix(matrix: sp.spmatrix, path) -> Path:
    path = Path(path)
    upper = sp.triu(matrix, format="coo")
    order = np.lexsort((upper.col, upper.row))
    rows, cols, vals = upper.row[order] + 1, upper.col[order] + 1, upper.data[order]
    with path.open("w", encoding="utf-8") as fh:
        fh.write(f"{MAGIC} {matrix.shape[0]} {rows.size} sym\n")
        for i, j, v in zip(rows, cols, vals):
            fh.write(f"{i} {j} {v:.17g}\n")
    logger.debug("wrote %dx%d matrix (%d entries) to %s", matrix.shape[0], matrix.shape[1], rows.size, path)
    return path


def read_matrix(path) -> sp.csr_matrix:
    with Path(path).open(encoding="utf-8") as fh:
        header = fh.readline().split()
        if " ".join(header[:2]) != MAGIC or header[-1] != "sym":
            raise AssemblyError(f"{path}: not a '{MAGIC}' file")
        dim, nnz = int(header[2]), int(header[3])
        data = np.loadtxt(fh, ndmin=2) if nnz else np.empty((0, 3))
    if data.shape[0] != nnz:
        raise AssemblyError(f"{path}: expected {nnz} entries, found {data.shape[0]}")
    rows = data[:, 0].astype(np.int64) - 1
    cols = data[:, 1].astype(np.int64) - 1
    upper = sp.coo_matrix((data[:, 2], (rows, cols)), shape=(dim, dim))
    return symmetrize(upper)
