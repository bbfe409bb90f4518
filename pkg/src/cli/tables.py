"""CSV and JSON emission of result tables"""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
import pandas as pd

from ..analysis.layer import LayerResult

SPECTRUM_COLUMNS = ["angle_theta_rad", "m", "j", "lambda", "residual", "ndof", "smax", "converged"]
FLOAT_FORMAT = "%.17g"


def spectrum_table(result: LayerResult) -> pd.DataFrame:
    conv = result.converged
    rows = [
        {
            "angle_theta_rad": result.aperture.theta,
            "m": result.m,
            "j": j + 1,
            "lambda": float(value),
            "residual": float(result.spectrum.relative_residuals[j]),
            "ndof": result.n_dof,
            "smax": float(result.s_max),
            "converged": bool(conv[j]),
        }
        for j, value in enumerate(result.eigenvalues)
    ]
    return pd.DataFrame(rows, columns=SPECTRUM_COLUMNS)


def write_table(frame: pd.DataFrame, path) -> Path:
    """17 significant digits so parsing reproduces every float exactly"""
    path = Path(path)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def read_table(path) -> pd.DataFrame:
    return pd.read_csv(path, float_precision="round_trip")


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, Path):
        return str(value)
    return value


def write_json(payload: dict, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")
    return path


def table_json(frame: pd.DataFrame, metadata: dict, path) -> Path:
    """JSON mirror of a table: ``{"metadata": ..., "columns": ..., "rows": [...]}``"""
    return write_json(
        {"metadata": metadata, "columns": list(frame.columns), "rows": frame.to_dict(orient="records")},
        path,
    )
