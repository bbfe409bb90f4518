"""Lowest eigenpairs of the symmetric definite pencil ``A x = lambda B x``.

Production path: ARPACK Lanczos in shift-invert mode with a sparse LU of
``A - sigma B``. Oracle path: dense generalized ``eigh``.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh, splu

from ..oracles.spectra import LAMBDA_0
from ..utils.errors import DimensionCapError, FactorizationError, SolverError

logger = logging.getLogger(__name__)

SEED = 0x5EED
DENSE_CAP = 3000
CLUSTER_TOL = 1e-10
SHIFT_RETRIES = 3
SMALL_DENSE = 64
MAX_DESCENTS = 6


@dataclass(frozen=True)
class EigenSolveParams:
    k: int = 7
    sigma: float = 0.5 * LAMBDA_0
    tol: float = 1e-9
    max_iter: Optional[int] = None
    threshold: float = 1.0
    ncv: Optional[int] = None

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if not self.sigma < self.threshold:
            raise ValueError("sigma must lie below the threshold")
        if not self.tol > 0.0:
            raise ValueError("tol must be positive")


@dataclass(frozen=True)
class Pencil:
    """Bare matrix pair accepted wherever an assembled system is"""

    A: sp.spmatrix
    B: sp.spmatrix

    @property
    def n_free(self) -> int:
        return self.A.shape[0]


@dataclass
class Spectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residuals: np.ndarray
    relative_residuals: np.ndarray
    converged: np.ndarray
    above_threshold: np.ndarray = field(default_factory=lambda: np.empty(0))
    ambiguous: np.ndarray = field(default_factory=lambda: np.empty(0))
    clusters: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return self.eigenvalues.size

    @property
    def all_converged(self) -> bool:
        return bool(np.all(self.converged))

    @property
    def smallest_ritz(self) -> float:
        """Smallest computed value, discrete or above threshold"""
        pool = np.concatenate([self.eigenvalues, self.above_threshold])
        return float(pool.min()) if pool.size else float("nan")

    def vector(self, j: int) -> np.ndarray:
        """Eigenvector of branch ``j`` (1-based)"""
        return self.eigenvectors[:, j - 1]


@dataclass(frozen=True)
class ResidualReport:
    absolute: np.ndarray
    relative: np.ndarray
    gram: np.ndarray

    @property
    def orthogonality_error(self) -> float:
        if self.gram.size == 0:
            return 0.0
        return float(np.abs(self.gram - np.eye(self.gram.shape[0])).max())


def _residuals(A, B, values, vectors):
    if values.size == 0:
        return np.empty(0), np.empty(0)
    Ax = A @ vectors
    Bx = B @ vectors
    absolute = np.linalg.norm(Ax - Bx * values[None, :], axis=0)
    denom = np.linalg.norm(Ax, axis=0) + np.abs(values) * np.linalg.norm(Bx, axis=0)
    relative = absolute / np.where(denom > 0.0, denom, 1.0)
    return absolute, relative


def _normalize_signs(vectors: np.ndarray) -> np.ndarray:
    if vectors.size == 0:
        return vectors
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs[None, :]


def degenerate_clusters(values: np.ndarray, tol: float = CLUSTER_TOL) -> list[list[int]]:
    """Groups of (0-based) indices whose consecutive values differ by <= tol"""
    clusters, current = [], []
    for i in range(1, values.size):
        if values[i] - values[i - 1] <= tol:
            current = current or [i - 1]
            current.append(i)
        elif current:
            clusters.append(current)
            current = []
    if current:
        clusters.append(current)
    return clusters


def _build_spectrum(system, values, vectors, params: EigenSolveParams, metadata, filter_threshold=True):
    order = np.argsort(values, kind="stable")
    values = np.asarray(values, dtype=float)[order]
    vectors = _normalize_signs(np.asarray(vectors, dtype=float)[:, order])
    absolute, relative = _residuals(system.A, system.B, values, vectors)
    converged = relative <= params.tol

    above = np.empty(0)
    if filter_threshold:
        below = values < params.threshold
        above = values[~below]
        values, vectors = values[below][: params.k], vectors[:, below][:, : params.k]
        absolute, relative, converged = (
            absolute[below][: params.k], relative[below][: params.k], converged[below][: params.k]
        )
    ambiguous = above[above <= params.threshold + params.tol]
    clusters = degenerate_clusters(values)

    if not np.all(converged):
        logger.warning("%d of %d eigenpairs unconverged", int((~converged).sum()), converged.size)
    if ambiguous.size:
        logger.warning("threshold-ambiguous values: %s", ambiguous.tolist())
    if clusters:
        logger.warning("degenerate clusters: %s", clusters)
    return Spectrum(
        eigenvalues=values,
        eigenvectors=vectors,
        residuals=absolute,
        relative_residuals=relative,
        converged=converged,
        above_threshold=above,
        ambiguous=ambiguous,
        clusters=clusters,
        metadata=metadata,
    )


def _factorize(A, B, sigma: float):
    """Symmetric-mode LU of the shifted pencil, perturbing the shift on singular factorizations"""
    scale = max(1.0, abs(sigma))
    last = None
    for attempt in range(SHIFT_RETRIES + 1):
        shift = sigma - 1e-3 * attempt * scale
        shifted = sp.csc_matrix(A - shift * B)
        try:
            lu = splu(shifted, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                      options={"SymmetricMode": True})
        except RuntimeError as exc:
            last = exc
            logger.info("factorization at shift %.6g failed (%s), retrying", shift, exc)
            continue
        return lu, shift, attempt, _count_below(lu, shifted)
    raise FactorizationError(f"shifted pencil singular after {SHIFT_RETRIES} retries: {last}")


def _count_below(lu, shifted) -> Optional[int]:
    """Eigenvalues of the pencil below the shift: negative pivots of ``A - shift B``.

    With diagonal pivoting the LU is ``P (A - shift B) P^T = L D L^T`` and
    Sylvester's law gives the count. When SuperLU had to pivot off the diagonal
    the count falls back to a dense LDL^T, or is unknown above ``DENSE_CAP``.
    """
    if np.array_equal(lu.perm_r, lu.perm_c):
        return int(np.count_nonzero(lu.U.diagonal() < 0.0))
    if shifted.shape[0] <= DENSE_CAP:
        _, d, _ = sla.ldl(shifted.toarray())
        return int(np.count_nonzero(np.linalg.eigvalsh(d) < 0.0))
    logger.warning("inertia unavailable for n=%d, lowest-k not certified", shifted.shape[0])
    return None


def _lanczos(A, B, lu, shift: float, params: EigenSolveParams, v0: np.ndarray, ncv: int):
    n = A.shape[0]
    op_inv = LinearOperator((n, n), matvec=lu.solve, dtype=float)
    try:
        values, vectors = eigsh(
            A, k=params.k, M=B, sigma=shift, which="LM", OPinv=op_inv,
            v0=v0, ncv=ncv, tol=0.0, maxiter=params.max_iter,
        )
    except ArpackNoConvergence as exc:
        logger.warning("ARPACK stopped early with %d of %d pairs", exc.eigenvalues.size, params.k)
        if exc.eigenvalues.size == 0:
            raise SolverError("no eigenpair converged within max_iter") from exc
        return exc.eigenvalues, exc.eigenvectors, False
    return values, vectors, True


def solve_lowest(system, params: EigenSolveParams = EigenSolveParams()) -> Spectrum:
    """Lowest ``params.k`` eigenpairs below ``params.threshold``.

    Shift-invert returns the pairs nearest the shift. The inertia of
    ``A - shift B`` says how many eigenvalues lie below it; while some of those
    are missing from the Lanczos result the shift is moved under everything
    seen so far and the solve repeated.
    """
    A, B = system.A, system.B
    n = A.shape[0]
    if n == 0:
        raise SolverError("empty pencil")
    if n <= SMALL_DENSE or params.k >= n - 1:
        logger.debug("n=%d k=%d, using the dense path", n, params.k)
        dense = _dense_eigh(A, B)
        return _build_spectrum(system, dense[0], dense[1], params, {"method": "dense", "n": n})

    started = time.perf_counter()
    rng = np.random.default_rng(SEED)
    v0 = rng.standard_normal(n)
    v0 /= np.sqrt(v0 @ (B @ v0))
    ncv = params.ncv or min(n, max(2 * params.k + 1, 20))

    shift = params.sigma
    for descent in range(MAX_DESCENTS + 1):
        lu, shift, retries, below = _factorize(A, B, shift)
        values, vectors, converged_all = _lanczos(A, B, lu, shift, params, v0, ncv)
        found = int(np.count_nonzero(values < shift))
        if below is None or found >= below:
            break
        lowest = min(float(values.min()), shift)
        width = 10.0 ** descent * max(float(np.ptp(values)), 1e-2 * max(1.0, abs(shift)))
        logger.info("%d eigenvalues below shift %.6g but %d found, shifting to %.6g",
                    below, shift, found, lowest - width)
        shift = lowest - width
    else:
        raise SolverError(f"lowest {params.k} eigenvalues not bracketed after {MAX_DESCENTS} shift descents")

    metadata = {
        "method": "shift-invert-lanczos",
        "n": n,
        "sigma": shift,
        "shift_retries": retries,
        "shift_descents": descent,
        "below_shift": below,
        "ncv": ncv,
        "lu_nnz": int(lu.L.nnz + lu.U.nnz),
        "arpack_converged": converged_all,
        "seconds": time.perf_counter() - started,
    }
    spectrum = _build_spectrum(system, values, vectors, params, metadata)
    logger.info(
        "n=%d sigma=%.4g: %d eigenvalues below %.3g in %.2fs",
        n, shift, len(spectrum), params.threshold, metadata["seconds"],
    )
    return spectrum


def _dense_eigh(A, B):
    a = A.toarray() if sp.issparse(A) else np.asarray(A, dtype=float)
    b = B.toarray() if sp.issparse(B) else np.asarray(B, dtype=float)
    try:
        return sla.eigh(a, b)
    except sla.LinAlgError as exc:
        raise SolverError(f"dense generalized eigh failed: {exc}") from exc


def solve_dense(system, params: Optional[EigenSolveParams] = None) -> Spectrum:
    """Full spectrum by dense reduction; ground truth for small systems"""
    n = system.A.shape[0]
    if n > DENSE_CAP:
        raise DimensionCapError(f"dense solve limited to {DENSE_CAP} dofs, got {n}")
    values, vectors = _dense_eigh(system.A, system.B)
    params = params or EigenSolveParams(k=max(1, n))
    return _build_spectrum(system, values, vectors, params, {"method": "dense", "n": n}, filter_threshold=False)


def residual_report(system, spectrum: Spectrum) -> ResidualReport:
    """Residuals and B-Gram matrix recomputed from the pencil"""
    x = spectrum.eigenvectors
    absolute, relative = _residuals(system.A, system.B, spectrum.eigenvalues, x)
    gram = x.T @ (system.B @ x) if x.size else np.empty((0, 0))
    return ResidualReport(absolute=absolute, relative=relative, gram=gram)

