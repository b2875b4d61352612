"""Extended-precision ascending-series oracle for J_nu (test use only)."""

import gmpy2
from gmpy2 import mpfr

PRECISION = 320


def besselj_series(nu, z, terms=None):
    """Sum the ascending series of J_nu(z) in 320-bit arithmetic.

    With ``terms=None`` summation continues until the terms are negligible.
    """
    with gmpy2.context(gmpy2.get_context(), precision=PRECISION):
        nu = mpfr(nu)
        z = mpfr(z)
        if z == 0:
            return 1.0 if nu == 0 else 0.0
        h = z / 2
        h2 = h * h
        term = h**nu / gmpy2.gamma(nu + 1)
        total = term
        k = 0
        tiny = mpfr(2) ** (-PRECISION)
        while True:
            k += 1
            term = -term * h2 / (k * (k + nu))
            total += term
            if terms is not None:
                if k + 1 >= terms:
                    break
            elif k > h and abs(term) < tiny * (1 + abs(total)):
                break
        return float(total)
