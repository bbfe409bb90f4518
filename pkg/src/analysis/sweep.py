"""Eigenvalue branches over a grid of apertures"""
from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import pandas as pd

from ..eigensolve.solver import EigenSolveParams
from ..geometry.domain import Aperture
from .layer import ConvergencePolicy, LayerResult, solve_layer

logger = logging.getLogger(__name__)

THREADS_ENV = "CONELAYER_THREADS"

TABLE_COLUMNS = [
    "angle_theta_rad", "theta_deg", "beta_deg", "j", "lambda",
    "error_estimate", "residual", "converged", "s_max", "ndof", "status",
]


def worker_count(n_tasks: int) -> int:
    """Pool size capped by ``CONELAYER_THREADS`` and the task count"""
    raw = os.environ.get(THREADS_ENV)
    try:
        cap = int(raw) if raw else min(4, os.cpu_count() or 1)
    except ValueError:
        logger.warning("ignoring non-integer %s=%r", THREADS_ENV, raw)
        cap = min(4, os.cpu_count() or 1)
    return max(1, min(cap, n_tasks))


@dataclass
class SweepEntry:
    index: int
    aperture: Aperture
    result: Optional[LayerResult] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.result is not None


@dataclass
class SweepResult:
    apertures: list
    entries: list
    j_max: int
    params: EigenSolveParams = field(default_factory=EigenSolveParams)

    @property
    def succeeded(self) -> int:
        return sum(e.ok for e in self.entries)

    def table(self) -> pd.DataFrame:
        """Long format, one row per (angle, branch); failed angles get one flagged row"""
        rows = []
        for e in self.entries:
            ap = e.aperture
            base = {"angle_theta_rad": ap.theta, "theta_deg": ap.theta_deg, "beta_deg": ap.beta_deg}
            if not e.ok:
                rows.append({**base, "j": 0, "lambda": np.nan, "error_estimate": np.nan,
                             "residual": np.nan, "converged": False, "s_max": np.nan,
                             "ndof": 0, "status": f"failed: {e.error}"})
                continue
            res = e.result
            conv = res.converged
            for j in range(min(self.j_max, res.eigenvalues.size)):
                rows.append({
                    **base,
                    "j": j + 1,
                    "lambda": float(res.eigenvalues[j]),
                    "error_estimate": float(res.error_estimates[j]),
                    "residual": float(res.spectrum.relative_residuals[j]),
                    "converged": bool(conv[j]),
                    "s_max": res.s_max,
                    "ndof": res.n_dof,
                    "status": "ok",
                })
        return pd.DataFrame(rows, columns=TABLE_COLUMNS)

    def branch_table(self) -> pd.DataFrame:
        """lambda_j(theta) with one column per branch"""
        t = self.table()
        t = t[t["status"] == "ok"]
        return t.pivot(index="angle_theta_rad", columns="j", values="lambda").sort_index()

    def monotonicity_report(self) -> pd.DataFrame:
        """Neighbouring angles where a branch grows with theta beyond twice the error bound"""
        t = self.table()
        t = t[t["status"] == "ok"].sort_values(["j", "angle_theta_rad"])
        rows = []
        for j, grp in t.groupby("j"):
            th = grp["angle_theta_rad"].to_numpy()
            lam = grp["lambda"].to_numpy()
            err = np.nan_to_num(grp["error_estimate"].to_numpy())
            for i in range(len(th) - 1):
                excess = lam[i + 1] - lam[i] - 2.0 * (err[i] + err[i + 1])
                if excess > 0.0:
                    rows.append({"j": int(j), "theta_1": th[i], "theta_2": th[i + 1],
                                 "lambda_1": lam[i], "lambda_2": lam[i + 1], "excess": excess})
        return pd.DataFrame(rows, columns=["j", "theta_1", "theta_2", "lambda_1", "lambda_2", "excess"])

    def min_gaps(self) -> pd.Series:
        """Smallest spacing of consecutive eigenvalues per angle"""
        out = {}
        for e in self.entries:
            if e.ok and e.result.eigenvalues.size >= 2:
                out[e.aperture.theta] = float(np.diff(e.result.eigenvalues).min())
            else:
                out[e.aperture.theta] = np.nan
        return pd.Series(out, name="min_gap").sort_index()


def _check_sorted(apertures: Sequence[Aperture]) -> None:
    th = np.array([a.theta for a in apertures])
    d = np.diff(th)
    if th.size > 1 and not (np.all(d > 0) or np.all(d < 0)):
        raise ValueError("sweep angles must be strictly sorted")


def sweep(
    apertures: Sequence[Aperture],
    j_max: int,
    params: Optional[EigenSolveParams] = None,
    policy: ConvergencePolicy = ConvergencePolicy(),
    m: int = 0,
    workers: Optional[int] = None,
    solve: Callable[..., LayerResult] = solve_layer,
) -> SweepResult:
    """Converged solves at every aperture; a failing angle is recorded, not raised"""
    apertures = list(apertures)
    _check_sorted(apertures)
    params = params or EigenSolveParams(k=j_max)

    def run(index: int) -> SweepEntry:
        ap = apertures[index]
        try:
            result = solve(ap, m, params, policy)
        except Exception as exc:
            logger.warning("sweep: theta=%.5f deg failed: %s", ap.theta_deg, exc)
            return SweepEntry(index=index, aperture=ap, error=f"{type(exc).__name__}: {exc}")
        logger.info("sweep: theta=%.5f deg done (%d values)", ap.theta_deg, result.eigenvalues.size)
        return SweepEntry(index=index, aperture=ap, result=result)

    n_workers = workers or worker_count(len(apertures))
    with ThreadPoolExecutor(max_workers=n_workers) as pool:
        entries = list(pool.map(run, range(len(apertures))))
    entries.sort(key=lambda e: e.index)
    logger.info("sweep: %d/%d angles succeeded with %d workers", sum(e.ok for e in entries), len(entries), n_workers)
    return SweepResult(apertures=apertures, entries=entries, j_max=j_max, params=params)
