"""Independent reference computations shared by the tests (scipy/mpmath only)."""
import math

import mpmath as mp
import numpy as np
from scipy import integrate, special

mp.mp.dps = 30


def volume(n):
    return 2 * math.pi ** ((n + 1) / 2) / math.gamma((n + 1) / 2)


def sphere_integral(F, n):
    """Integral over S^n of a zonal profile F(t) by adaptive quadrature."""
    if n == 1:
        val, _ = integrate.quad(lambda th: F(math.cos(th)), 0, 2 * math.pi, limit=400, epsabs=1e-13, epsrel=1e-13)
        return val
    val, _ = integrate.quad(lambda t: F(t) * (1 - t * t) ** ((n - 2) / 2), -1, 1, limit=400,
                            epsabs=1e-14, epsrel=1e-13)
    return volume(n - 1) * val


def basis(l, n, t):
    """Zonal basis: Chebyshev for n = 1, Gegenbauer C_l^{(n-1)/2} otherwise."""
    if n == 1:
        return special.eval_chebyt(l, t)
    return special.eval_gegenbauer(l, (n - 1) / 2, t)


def multiplier(n, gamma, l):
    """Gamma(l + n/2 + gamma) / Gamma(l + n/2 - gamma) in high precision, 1/Gamma(pole) = 0."""
    return float(mp.gamma(l + mp.mpf(n) / 2 + gamma) * mp.rgamma(l + mp.mpf(n) / 2 - gamma))


def conformal_factor(a, t):
    return (1 - a * a) / (1 + a * a - 2 * a * t)
