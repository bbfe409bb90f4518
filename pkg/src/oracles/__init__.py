from .bessel import bessel_j0, bessel_j0_zero, bessel_j0_zeros, bessel_j1
from .spectra import J0_FIRST_ZERO, LAMBDA_0, cylinder_spectrum, rectangle_spectrum
