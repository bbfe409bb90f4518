"""Run configuration: defaults, ``key = value`` files and command-line overrides"""
from __future__ import annotations

import configparser
import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np

from ..analysis.layer import ConvergencePolicy
from ..eigensolve.solver import EigenSolveParams
from ..geometry.domain import Aperture
from ..oracles.spectra import LAMBDA_0
from ..utils.errors import ConfigError, DomainError

ANGLE_KEYS = ("theta_rad", "theta_deg", "beta_deg")
COMMANDS = ("solve", "sweep", "plot-modes", "bound", "mesh-export")
_SECTION = "run"


def parse_angles(text) -> tuple[float, ...]:
    """``"2.5"``, ``"1,2,5"`` or an inclusive ``"start:stop:step"`` range"""
    if isinstance(text, (int, float)):
        return (float(text),)
    if isinstance(text, (list, tuple)):
        return tuple(v for item in text for v in parse_angles(item))
    text = str(text).strip()
    try:
        if ":" in text:
            start, stop, step = (float(p) for p in text.split(":"))
            if step == 0.0 or (stop - start) * step < 0.0:
                raise ConfigError(f"empty angle range {text!r}")
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            return tuple(float(v) for v in np.round(start + step * np.arange(count), 12))
        return tuple(float(p) for p in text.split(",") if p.strip())
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"cannot parse angle list {text!r}") from exc


def _to_bool(value) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {value!r}")


def _optional_float(value) -> Optional[float]:
    if value is None:
        return None
    if isinstance(value, str) and value.strip().lower() in ("", "auto", "none"):
        return None
    return float(value)


@dataclass
class RunConfig:
    command: str
    angle_key: Optional[str] = None
    angles: tuple = ()
    m: int = 0
    k: int = 7
    h: float = 0.25
    grading: float = 4.0
    s_max: Optional[float] = None        # None: automatic doubling
    refine: bool = True
    sigma: Optional[float] = None
    tol: float = 1e-9
    max_iter: Optional[int] = None
    threshold: float = 1.0
    out: Path = field(default_factory=lambda: Path("out"))
    vertical_scale: float = 1.0
    contour_levels: int = 21
    lambda_bar: Optional[float] = None
    sweep_file: Optional[Path] = None
    matrices: bool = False
    archive: Optional[Path] = None

    @property
    def apertures(self) -> list[Aperture]:
        try:
            if self.angle_key == "theta_rad":
                return [Aperture.from_theta(a) for a in self.angles]
            if self.angle_key == "theta_deg":
                return [Aperture.from_theta(math.radians(a)) for a in self.angles]
            return [Aperture.from_beta(math.radians(a)) for a in self.angles]
        except DomainError as exc:
            raise ConfigError(str(exc)) from exc

    @property
    def aperture(self) -> Aperture:
        return self.apertures[0]

    def solver_params(self) -> EigenSolveParams:
        extra = {} if self.sigma is None else {"sigma": self.sigma}
        try:
            return EigenSolveParams(k=self.k, tol=self.tol, max_iter=self.max_iter,
                                    threshold=self.threshold, **extra)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def policy(self) -> ConvergencePolicy:
        return ConvergencePolicy(h=self.h, grading=self.grading, s_max=self.s_max,
                                 auto_smax=self.s_max is None, refine=self.refine)

    def validate(self) -> "RunConfig":
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.angle_key is None or not self.angles:
            raise ConfigError("one of theta_rad, theta_deg, beta_deg is required")
        if self.command != "sweep" and len(self.angles) != 1:
            raise ConfigError(f"{self.command} takes a single angle, got {len(self.angles)}")
        steps = np.diff(self.angles)
        if steps.size and not (np.all(steps > 0) or np.all(steps < 0)):
            raise ConfigError("sweep angles must be strictly increasing or decreasing")
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if self.m < 0:
            raise ConfigError(f"m must be >= 0, got {self.m}")
        if self.h <= 0.0 or self.grading < 1.0:
            raise ConfigError("mesh size must be positive and grading >= 1")
        if self.s_max is not None and self.s_max <= 0.0:
            raise ConfigError(f"s_max must be positive, got {self.s_max}")
        if self.vertical_scale <= 0.0:
            raise ConfigError("vertical_scale must be positive")
        if self.command == "bound":
            if self.lambda_bar is None:
                raise ConfigError("bound requires lambda_bar")
            if not (LAMBDA_0 < self.lambda_bar < 1.0):
                raise ConfigError(f"lambda_bar must lie in ({LAMBDA_0:.5f}, 1), got {self.lambda_bar}")
        self.apertures  # angle range check
        self.solver_params()
        return self

    def resolved(self) -> dict:
        """JSON-ready view echoed into manifests"""
        out = asdict(self)
        for key in ("out", "sweep_file", "archive"):
            out[key] = None if out[key] is None else str(out[key])
        out["angles"] = list(self.angles)
        out["apertures"] = [a.describe() for a in self.apertures] if self.angles else []
        return out


_CASTS = {
    "m": int,
    "k": int,
    "h": float,
    "grading": float,
    "s_max": _optional_float,
    "refine": _to_bool,
    "sigma": _optional_float,
    "tol": float,
    "max_iter": lambda v: None if str(v).strip().lower() in ("", "none") else int(v),
    "threshold": float,
    "out": Path,
    "vertical_scale": float,
    "contour_levels": int,
    "lambda_bar": _optional_float,
    "sweep_file": lambda v: None if not str(v).strip() else Path(v),
    "matrices": _to_bool,
    "archive": lambda v: None if not str(v).strip() else Path(v),
}


def _from_manifest(payload: dict, path: Path) -> dict:
    try:
        config = dict(payload["config"])
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"{path} is not a run manifest") from exc
    angle_key = config.pop("angle_key", None)
    angles = config.pop("angles", [])
    for derived in ("command", "apertures"):
        config.pop(derived, None)
    values = {k: v for k, v in config.items() if v is not None}
    if angle_key:
        values[angle_key] = list(angles)
    return values


def read_config_file(path) -> dict:
    """``key = value`` lines without a section header; ``#`` starts a comment.

    A ``manifest.json`` from an earlier run is accepted too and reproduces
    its resolved configuration.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    if path.suffix == ".json":
        try:
            return _from_manifest(json.loads(text), path)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed manifest {path}: {exc}") from exc
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        parser.read_string(f"[{_SECTION}]\n{text}", source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"malformed config file {path}: {exc}") from exc
    return dict(parser[_SECTION])


def build_config(command: str, file_values: Optional[dict] = None, overrides: Optional[dict] = None) -> RunConfig:
    """Merge defaults < config file < command line, then validate"""
    merged: dict = {}
    for source in (file_values or {}, {k: v for k, v in (overrides or {}).items() if v is not None}):
        source = {k.replace("-", "_"): v for k, v in source.items()}
        given = [k for k in ANGLE_KEYS if k in source]
        if len(given) > 1:
            raise ConfigError(f"exactly one angle key allowed, got {given}")
        if given:
            merged = {k: v for k, v in merged.items() if k not in ANGLE_KEYS}
        merged.update(source)

    angle_keys = [k for k in ANGLE_KEYS if k in merged]
    known = {f.name for f in fields(RunConfig)}
    kwargs: dict = {"command": command}
    if angle_keys:
        kwargs["angle_key"] = angle_keys[0]
        kwargs["angles"] = parse_angles(merged.pop(angle_keys[0]))
    for key, value in merged.items():
        if key not in known or key in ("command", "angle_key", "angles"):
            raise ConfigError(f"unknown config key {key!r}")
        try:
            kwargs[key] = _CASTS[key](value)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad value for {key}: {value!r}") from exc
    return RunConfig(**kwargs).validate()
