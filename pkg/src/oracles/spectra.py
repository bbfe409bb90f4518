"""Closed-form Dirichlet spectra used as ground truth"""
from __future__ import annotations

import math

import numpy as np

from ..utils.errors import OracleRangeError
from .bessel import MAX_ZERO_INDEX, bessel_j0_zero

J0_FIRST_ZERO = bessel_j0_zero(1)

# lower edge of the spectrum of the sharp-cone limit, j_{0,1}^2 / pi^2
LAMBDA_0 = J0_FIRST_ZERO ** 2 / math.pi ** 2


def cylinder_spectrum(radius: float, length: float, count: int, m: int = 0) -> np.ndarray:
    """Lowest ``count`` values of ``(j_{0,p}/R)^2 + (pi q/L)^2``, ascending"""
    if radius <= 0.0 or length <= 0.0:
        raise ValueError("radius and length must be positive")
    if m != 0:
        raise ValueError("only the m = 0 cylinder spectrum is tabulated")
    if count > MAX_ZERO_INDEX:
        raise OracleRangeError(f"at most {MAX_ZERO_INDEX} cylinder eigenvalues are available")
    p = np.array([bessel_j0_zero(i) for i in range(1, count + 1)]) / radius
    q = math.pi * np.arange(1, count + 1) / length
    values = (p[:, None] ** 2 + q[None, :] ** 2).ravel()
    return np.sort(values)[:count]


def rectangle_spectrum(a: float, b: float, count: int) -> np.ndarray:
    """Lowest ``count`` values of ``pi^2 (p^2/a^2 + q^2/b^2)``, ascending"""
    if a <= 0.0 or b <= 0.0:
        raise ValueError("side lengths must be positive")
    n = np.arange(1, count + 1)
    values = (math.pi ** 2 * ((n[:, None] / a) ** 2 + (n[None, :] / b) ** 2)).ravel()
    return np.sort(values)[:count]
