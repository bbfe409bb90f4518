"""Conical-layer meridian domain and its three coordinate charts.

The layer of width pi between two coaxial cones is reduced by rotational
symmetry to a half-plane cross section. Three charts describe it:

* RZ -- cylindrical radius and axial height,
* SU -- rotated coordinates s = r cos(theta) + z sin(theta),
  u = -r sin(theta) + z cos(theta), in which the cross section is
  ``0 <= s, 0 < u < min(pi, s cot(theta))``,
* YV -- skew coordinates y = s - u tan(theta), v = u, in which the whole
  (untruncated) cross section becomes the half strip ``y > 0, 0 < v < pi``.

Angles follow two conventions: ``theta`` parameterizes the cross section
above, ``beta = pi/2 - theta`` is the cone half-aperture measured from the
symmetry axis.
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass

import numpy as np

from ..utils.errors import DomainError

logger = logging.getLogger(__name__)

HALF_PI = 0.5 * math.pi


class Chart(enum.Enum):
    RZ = "rz"
    SU = "su"
    YV = "yv"


class BoundaryTag(enum.IntEnum):
    WALL_OUTER = 1   # u = 0
    WALL_INNER = 2   # u = pi, s >= pi tan(theta)
    AXIS = 3         # u = s cot(theta), s <= pi tan(theta)
    TRUNCATION = 4   # s = s_max


@dataclass(frozen=True)
class Aperture:
    """Cone opening; build with :meth:`from_theta` or :meth:`from_beta`"""

    theta: float
    beta: float

    def __post_init__(self):
        if not (0.0 < self.theta < HALF_PI) or not math.isfinite(self.theta):
            raise DomainError(f"theta must lie in (0, pi/2), got {self.theta!r}")
        if self.beta != HALF_PI - self.theta:
            raise DomainError("beta must equal pi/2 - theta")

    @classmethod
    def from_theta(cls, theta: float) -> "Aperture":
        theta = float(theta)
        return cls(theta=theta, beta=HALF_PI - theta)

    @classmethod
    def from_beta(cls, beta: float) -> "Aperture":
        beta = float(beta)
        if not (0.0 < beta < HALF_PI):
            raise DomainError(f"beta must lie in (0, pi/2), got {beta!r}")
        return cls.from_theta(HALF_PI - beta)

    @classmethod
    def resolve(cls, theta: float | None = None, beta: float | None = None) -> "Aperture":
        """Build from exactly one of the two conventions"""
        if (theta is None) == (beta is None):
            raise DomainError("exactly one of theta or beta must be given")
        return cls.from_theta(theta) if theta is not None else cls.from_beta(beta)

    @property
    def theta_deg(self) -> float:
        return math.degrees(self.theta)

    @property
    def beta_deg(self) -> float:
        return math.degrees(self.beta)

    @property
    def tip_s(self) -> float:
        """s-position of the inner-cone tip"""
        return math.pi * math.tan(self.theta)

    def describe(self) -> dict:
        return {
            "theta_rad": self.theta,
            "theta_deg": self.theta_deg,
            "beta_rad": self.beta,
            "beta_deg": self.beta_deg,
        }


@dataclass(frozen=True)
class Point2:
    a: float
    b: float
    chart: Chart

    def as_tuple(self) -> tuple[float, float]:
        return (self.a, self.b)


@dataclass(frozen=True)
class MeridianDomain:
    """Truncated cross section ``0 <= s <= s_max, 0 < u < min(pi, s cot theta)``"""

    aperture: Aperture
    s_max: float

    @property
    def tip_su(self) -> tuple[float, float]:
        return (self.aperture.tip_s, math.pi)

    @property
    def tip_rz(self) -> tuple[float, float]:
        return (0.0, math.pi / math.cos(self.aperture.theta))

    @property
    def z_max(self) -> float:
        """Largest axial height reached by the truncated domain"""
        th = self.aperture.theta
        return self.s_max * math.sin(th) + math.pi * math.cos(th)

    def upper(self, s):
        """Upper u-boundary ``min(pi, s cot theta)``; accepts scalars or arrays"""
        cot = 1.0 / math.tan(self.aperture.theta)
        return np.minimum(math.pi, np.asarray(s, dtype=float) * cot)

    def corners(self) -> np.ndarray:
        """Polygon corners in SU, counter-clockwise from the origin"""
        s_tip = self.aperture.tip_s
        return np.array([
            [0.0, 0.0],
            [self.s_max, 0.0],
            [self.s_max, math.pi],
            [s_tip, math.pi],
        ])

    def boundary_pieces(self) -> dict[BoundaryTag, tuple[tuple[float, float], tuple[float, float]]]:
        c = self.corners()
        return {
            BoundaryTag.WALL_OUTER: (tuple(c[0]), tuple(c[1])),
            BoundaryTag.TRUNCATION: (tuple(c[1]), tuple(c[2])),
            BoundaryTag.WALL_INNER: (tuple(c[2]), tuple(c[3])),
            BoundaryTag.AXIS: (tuple(c[3]), tuple(c[0])),
        }

    def contains(self, s, u, eps: float = 1e-10):
        s = np.asarray(s, dtype=float)
        u = np.asarray(u, dtype=float)
        return (s >= -eps) & (s <= self.s_max + eps) & (u >= -eps) & (u <= self.upper(s) + eps)


def build_domain(aperture: Aperture, s_max: float) -> MeridianDomain:
    """Truncate the cross section at ``s = s_max`` beyond the inner tip"""
    s_max = float(s_max)
    if not math.isfinite(s_max) or s_max <= aperture.tip_s:
        raise DomainError(
            f"s_max={s_max!r} must exceed the inner-tip position pi*tan(theta)={aperture.tip_s!r}"
        )
    domain = MeridianDomain(aperture=aperture, s_max=s_max)
    logger.debug(
        "domain theta=%.6g deg, s_max=%.6g, tip (s,u)=%s, tip (r,z)=%s",
        aperture.theta_deg, s_max, domain.tip_su, domain.tip_rz,
    )
    return domain


def map_coords(a, b, source: Chart, target: Chart, aperture: Aperture):
    """Vectorized chart change; returns the two target coordinate arrays"""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if source is target:
        return a.copy(), b.copy()
    c, s_ = math.cos(aperture.theta), math.sin(aperture.theta)
    t = math.tan(aperture.theta)
    # everything goes through SU
    if source is Chart.RZ:
        s, u = a * c + b * s_, -a * s_ + b * c
    elif source is Chart.YV:
        s, u = a + b * t, b
    else:
        s, u = a, b
    if target is Chart.RZ:
        return s * c - u * s_, s * s_ + u * c
    if target is Chart.YV:
        return s - u * t, np.array(u, dtype=float)
    return s, u


def map_point(p: Point2, target: Chart, aperture: Aperture) -> Point2:
    a, b = map_coords(p.a, p.b, p.chart, target, aperture)
    return Point2(float(a), float(b), target)


def weight_r(s, u, aperture: Aperture):
    """Cylindrical radius ``r = s cos(theta) - u sin(theta)`` of SU points"""
    return np.asarray(s, dtype=float) * math.cos(aperture.theta) - np.asarray(u, dtype=float) * math.sin(aperture.theta)
