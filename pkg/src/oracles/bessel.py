"""Self-contained Bessel J0/J1 and the zeros of J0.

Three evaluation regimes: power series for x <= 8, Miller's backward
recurrence for 8 < x < 25, Hankel's asymptotic expansion for x >= 25.
"""
from __future__ import annotations

import math
from functools import lru_cache

from scipy.optimize import brentq

from ..utils.errors import OracleRangeError

MAX_ZERO_INDEX = 20
SERIES_LIMIT = 8.0
ASYMPTOTIC_LIMIT = 25.0


def _series(order: int, x: float) -> float:
    half = 0.5 * x
    term = half ** order / math.factorial(order)
    total = term
    q = -half * half
    k = 0
    while abs(term) > 1e-17 * max(abs(total), 1e-300):
        k += 1
        term *= q / (k * (k + order))
        total += term
        if k > 200:
            break
    return total


def _miller(x: float) -> tuple[float, float]:
    """(J0, J1) by downward recurrence normalized with J0 + 2 sum J_2k = 1"""
    start = 2 * ((int(x) + 40) // 2)
    j_next, j_cur = 0.0, 1e-30
    norm = 0.0
    j0 = j1 = 0.0
    for n in range(start, 0, -1):
        j_prev = 2.0 * n / x * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        if abs(j_cur) > 1e250:
            j_cur *= 1e-250
            j_next *= 1e-250
            norm *= 1e-250
            j1 *= 1e-250
        if (n - 1) % 2 == 0 and n - 1 > 0:
            norm += 2.0 * j_cur
        if n - 1 == 1:
            j1 = j_cur
    j0 = j_cur
    norm += j0
    return j0 / norm, j1 / norm


def _hankel(order: int, x: float) -> float:
    mu = 4.0 * order * order
    p, q = 1.0, 0.0
    term = 1.0
    prev = math.inf
    for k in range(1, 60):
        term *= (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        if abs(term) >= prev or abs(term) < 1e-18:
            break
        prev = abs(term)
        sign = (-1) ** (k // 2)
        if k % 2:
            q += sign * term
        else:
            p += sign * term
    chi = x - (0.5 * order + 0.25) * math.pi
    return math.sqrt(2.0 / (math.pi * x)) * (p * math.cos(chi) - q * math.sin(chi))


def _evaluate(order: int, x: float) -> float:
    x = float(x)
    sign = -1.0 if (order == 1 and x < 0.0) else 1.0
    x = abs(x)
    if x <= SERIES_LIMIT:
        return sign * _series(order, x)
    if x < ASYMPTOTIC_LIMIT:
        return sign * _miller(x)[order]
    return sign * _hankel(order, x)


def bessel_j0(x: float) -> float:
    return _evaluate(0, x)


def bessel_j1(x: float) -> float:
    return _evaluate(1, x)


@lru_cache(maxsize=None)
def bessel_j0_zero(k: int) -> float:
    """k-th positive zero of J0, bracketed in ((k - 1/2) pi, k pi)"""
    if int(k) != k or k < 1 or k > MAX_ZERO_INDEX:
        raise OracleRangeError(f"zero index must be an integer in [1, {MAX_ZERO_INDEX}], got {k!r}")
    lo, hi = (k - 0.5) * math.pi, k * math.pi
    root = brentq(bessel_j0, lo, hi, xtol=1e-15, maxiter=200)
    for _ in range(2):
        j1 = bessel_j1(root)
        if j1 == 0.0:
            break
        root += bessel_j0(root) / j1
    return root


def bessel_j0_zeros(count: int) -> list[float]:
    return [bessel_j0_zero(k) for k in range(1, count + 1)]
