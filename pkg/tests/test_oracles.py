import math

import numpy as np
import pytest
from scipy import special

from src.oracles import (
    J0_FIRST_ZERO,
    LAMBDA_0,
    bessel_j0,
    bessel_j0_zero,
    bessel_j0_zeros,
    bessel_j1,
    cylinder_spectrum,
    rectangle_spectrum,
)
from src.utils.errors import OracleRangeError


def test_first_zeros_of_j0():
    assert J0_FIRST_ZERO == pytest.approx(2.404825557695773, abs=1e-13)
    assert bessel_j0_zero(2) == pytest.approx(5.520078110286311, abs=1e-13)


def test_zeros_match_scipy_table():
    assert np.allclose(bessel_j0_zeros(20), special.jn_zeros(0, 20), rtol=0.0, atol=1e-12)


def test_sharp_cone_threshold():
    assert LAMBDA_0 == pytest.approx(0.58596, abs=5e-6)
    assert LAMBDA_0 == pytest.approx(J0_FIRST_ZERO ** 2 / math.pi ** 2)


# one point on each side of both regime switches
@pytest.mark.parametrize("x", [0.0, 1.0, 7.9, 8.0, 8.1, 15.0, 24.9, 25.1, 40.0])
def test_bessel_values_in_every_regime(x):
    assert bessel_j0(x) == pytest.approx(special.j0(x), abs=1e-12)
    assert bessel_j1(x) == pytest.approx(special.j1(x), abs=1e-12)


def test_bessel_parity():
    assert bessel_j0(-3.0) == bessel_j0(3.0)
    assert bessel_j1(-3.0) == -bessel_j1(3.0)


@pytest.mark.parametrize("k", [0, 21, 1.5])
def test_zero_index_outside_table(k):
    with pytest.raises(OracleRangeError):
        bessel_j0_zero(k)


def test_cylinder_spectrum():
    values = cylinder_spectrum(1.0, 1.0, 3)
    expected = sorted([
        J0_FIRST_ZERO ** 2 + math.pi ** 2,
        J0_FIRST_ZERO ** 2 + 4.0 * math.pi ** 2,
        bessel_j0_zero(2) ** 2 + math.pi ** 2,
    ])
    assert np.allclose(values, expected, rtol=1e-14)
    assert np.all(np.diff(values) >= 0.0)


def test_cylinder_spectrum_limits():
    with pytest.raises(OracleRangeError):
        cylinder_spectrum(1.0, 1.0, 21)
    with pytest.raises(ValueError):
        cylinder_spectrum(1.0, 1.0, 3, m=1)
    with pytest.raises(ValueError):
        cylinder_spectrum(0.0, 1.0, 3)


def test_rectangle_spectrum():
    pi2 = math.pi ** 2
    assert np.allclose(rectangle_spectrum(1.0, 1.0, 3), [2.0 * pi2, 5.0 * pi2, 5.0 * pi2])
    assert np.allclose(rectangle_spectrum(2.0, 1.0, 2), [1.25 * pi2, 2.0 * pi2])
    with pytest.raises(ValueError):
        rectangle_spectrum(-1.0, 1.0, 2)
