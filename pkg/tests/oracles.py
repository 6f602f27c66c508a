"""Independent reference values: adaptive quadrature of the defining integrals."""

import math

from scipy.integrate import quad


def rl_integral_left(f, a, x, alpha):
    if x == a:
        return 0.0
    val, _ = quad(f, a, x, weight="alg", wvar=(0.0, alpha - 1.0), epsabs=1e-13, epsrel=1e-12)
    return val / math.gamma(alpha)


def rl_integral_right(f, x, b, alpha):
    if x == b:
        return 0.0
    val, _ = quad(f, x, b, weight="alg", wvar=(alpha - 1.0, 0.0), epsabs=1e-13, epsrel=1e-12)
    return val / math.gamma(alpha)


def caputo_left(df, a, x, alpha, n=1):
    """Caputo derivative of order alpha in (n-1, n) from the n-th derivative df."""
    return rl_integral_left(df, a, x, n - alpha)


def caputo_right(df, x, b, alpha, n=1):
    """Right Caputo from the n-th derivative df of f (sign (-1)^n applied here)."""
    return (-1) ** n * rl_integral_right(df, x, b, n - alpha)
