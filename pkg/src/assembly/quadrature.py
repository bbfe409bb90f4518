"""Quadrature rules on the reference triangle (0,0), (1,0), (0,1).

Points are barycentric ``(l0, l1, l2)``; weights sum to the reference area 1/2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

REFERENCE_AREA = 0.5


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray   # (Q, 3) barycentric
    weights: np.ndarray  # (Q,)
    degree: int

    def __post_init__(self):
        if np.any(self.weights <= 0.0):
            raise ValueError("quadrature weights must be positive")
        if abs(self.weights.sum() - REFERENCE_AREA) > 1e-14:
            raise ValueError("quadrature weights must sum to the reference area")

    @property
    def size(self) -> int:
        return self.weights.shape[0]


@lru_cache(maxsize=None)
def seven_point_rule() -> QuadratureRule:
    """Symmetric 7-point rule, exact for degree 5"""
    r15 = math.sqrt(15.0)
    a1, b1 = (6.0 - r15) / 21.0, (9.0 + 2.0 * r15) / 21.0
    a2, b2 = (6.0 + r15) / 21.0, (9.0 - 2.0 * r15) / 21.0
    w0 = 9.0 / 40.0
    w1 = (155.0 - r15) / 1200.0
    w2 = (155.0 + r15) / 1200.0
    pts = [(1 / 3, 1 / 3, 1 / 3)]
    wts = [w0]
    for a, b, w in ((a1, b1, w1), (a2, b2, w2)):
        pts += [(a, a, b), (a, b, a), (b, a, a)]
        wts += [w, w, w]
    return QuadratureRule(
        points=np.array(pts),
        weights=REFERENCE_AREA * np.array(wts),
        degree=5,
    )


@lru_cache(maxsize=None)
def collapsed_gauss_rule(n: int = 4) -> QuadratureRule:
    """Duffy-collapsed tensor Gauss rule, exact for degree ``2n - 1``.

    The collapsed direction carries the extra ``(1 - x)`` Jacobian factor, so
    it gets one more Gauss point than the other.
    """
    xa, wa = np.polynomial.legendre.leggauss(n + 1)
    xb, wb = np.polynomial.legendre.leggauss(n)
    x = 0.5 * (1.0 + xa)
    pts, wts = [], []
    for xi, wi in zip(x, wa):
        for eta_ref, wj in zip(xb, wb):
            y = 0.5 * (1.0 - xi) * (1.0 + eta_ref)
            pts.append((1.0 - xi - y, xi, y))
            wts.append(0.25 * wi * wj * (1.0 - xi))
    weights = np.array(wts)
    # leggauss weights carry ~1e-16 rounding
    weights *= REFERENCE_AREA / weights.sum()
    return QuadratureRule(points=np.array(pts), weights=weights, degree=2 * n - 1)


def subdivision_rule(base: QuadratureRule, level: int) -> QuadratureRule:
    """Composite rule on ``4**level`` congruent sub-triangles"""
    if level == 0:
        return base
    corners = [np.eye(3)]
    for _ in range(level):
        nxt = []
        for c in corners:
            m01 = 0.5 * (c[0] + c[1])
            m12 = 0.5 * (c[1] + c[2])
            m20 = 0.5 * (c[2] + c[0])
            nxt += [
                np.array([c[0], m01, m20]),
                np.array([m01, c[1], m12]),
                np.array([m20, m12, c[2]]),
                np.array([m01, m12, m20]),
            ]
        corners = nxt
    scale = 4.0 ** (-level)
    pts = np.concatenate([base.points @ c for c in corners])
    wts = np.concatenate([base.weights * scale for _ in corners])
    return QuadratureRule(points=pts, weights=wts, degree=base.degree)
