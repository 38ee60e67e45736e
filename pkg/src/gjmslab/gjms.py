"""The operator P_{2 gamma} on S^n as a spectral multiplier and as an integral kernel."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import AmbiguousPole, DomainError, KernelSingularity, PoleError
from .specfun import (
    QuadratureRule,
    gamma_ratio,
    gauss_jacobi_rule,
    gegenbauer_table,
    is_nonpositive_integer,
    lgamma_signed,
    pochhammer,
    rgamma,
)
from .zonal import DEFAULT_M, SphereGeometry, ZonalFunction, make_grid


@dataclass(frozen=True)
class OperatorSpectrum:
    geometry: SphereGeometry
    gamma: float
    multipliers: np.ndarray

    @property
    def L(self) -> int:
        return self.multipliers.size - 1

    def apply(self, f: ZonalFunction) -> ZonalFunction:
        return apply_spectrum(self, f)

    def inverse(self) -> "OperatorSpectrum":
        if np.any(self.multipliers == 0):
            raise PoleError("spectrum has zero multipliers; inverse undefined on those modes")
        return OperatorSpectrum(self.geometry, -self.gamma, 1.0 / self.multipliers)


def gjms_multiplier(n: int, gamma: float, l: int) -> float:
    """Gamma(l + n/2 + gamma) / Gamma(l + n/2 - gamma), zero when the
    denominator sits on a pole."""
    num = l + n / 2 + gamma
    den = l + n / 2 - gamma
    if is_nonpositive_integer(num) and is_nonpositive_integer(den):
        raise AmbiguousPole(f"0/0 multiplier at l={l}, n={n}, gamma={gamma}")
    return gamma_ratio(num, den).to_real()


def gjms_spectrum(geometry: SphereGeometry, gamma: float, L: int) -> OperatorSpectrum:
    if gamma <= 0:
        raise DomainError("gamma must be positive")
    m = np.array([gjms_multiplier(geometry.n, gamma, l) for l in range(L + 1)])
    return OperatorSpectrum(geometry, float(gamma), m)


def apply_spectrum(spec: OperatorSpectrum, f: ZonalFunction) -> ZonalFunction:
    if spec.geometry != f.geometry:
        raise DomainError("spectrum and function live on different spheres")
    if spec.L < f.L:
        raise DomainError("spectrum truncated below the function's degree")
    return f.multiply_modes(spec.multipliers)


def apply_gjms(f: ZonalFunction, gamma: float) -> ZonalFunction:
    return apply_spectrum(gjms_spectrum(f.geometry, gamma, f.L), f)


def conformal_energy(f: ZonalFunction, gamma: float) -> float:
    """a_{2 gamma}(f) = integral of f P_{2 gamma} f."""
    m = gjms_spectrum(f.geometry, gamma, f.L).multipliers
    return float(np.sum(m * f.mode_energies()))


# --------------------------------------------------------------------------
# Funk-Hecke

def _funk_hecke_prefactor(geometry: SphereGeometry, l: int) -> float:
    n = geometry.n
    if n == 1:
        return 2.0
    return (4 * math.pi) ** ((n - 1) / 2) * math.gamma((n - 1) / 2) * math.exp(
        math.lgamma(l + 1) - math.lgamma(l + n - 1)
    )


def kernel_rule(geometry: SphereGeometry, M: int, endpoint_exponent: float = 0.0) -> QuadratureRule:
    """Gauss rule for (1-t)^(s + mu - 1/2) (1+t)^(mu - 1/2), absorbing a kernel
    factor (1-t)^s that is singular or non-smooth at t = 1."""
    if endpoint_exponent == 0.0:
        return make_grid(geometry, M)
    w = geometry.mu - 0.5
    return gauss_jacobi_rule(endpoint_exponent + w, w, M, extended=True)


def _endpoint(K: Callable, endpoint_exponent: float | None) -> float:
    if endpoint_exponent is None:
        return float(getattr(K, "endpoint_exponent", 0.0))
    return float(endpoint_exponent)


def funk_hecke_eigenvalues(K: Callable, geometry: SphereGeometry, L: int, M: int = DEFAULT_M,
                           endpoint_exponent: float | None = None) -> np.ndarray:
    """Eigenvalues lambda_0..lambda_L of f -> integral K(<xi, eta>) f(eta) dV(eta).

    ``endpoint_exponent`` s declares K(t) = (1-t)^s h(t) with h smooth; the
    factor is then carried by a Gauss-Jacobi rule.  When omitted it is read
    from ``K.endpoint_exponent`` (0 if absent).
    """
    endpoint_exponent = _endpoint(K, endpoint_exponent)
    rule = kernel_rule(geometry, M, endpoint_exponent)
    t = rule.nodes
    h = np.asarray(K(t))
    if endpoint_exponent != 0.0:
        h = h / (1 - t) ** endpoint_exponent
    table = gegenbauer_table(L, geometry.mu, t)
    integrals = (table @ (rule.weights * h)).astype(float)
    if geometry.n == 1:
        return 2.0 * integrals
    pref = np.array([_funk_hecke_prefactor(geometry, l) for l in range(L + 1)])
    return pref * integrals


def funk_hecke_eigenvalue(K: Callable, l: int, geometry: SphereGeometry, grid: QuadratureRule | None = None,
                          M: int = DEFAULT_M, endpoint_exponent: float | None = None) -> float:
    """Single Funk-Hecke eigenvalue; with ``grid`` given, that rule is used as is."""
    endpoint_exponent = _endpoint(K, endpoint_exponent) if grid is None else float(endpoint_exponent or 0.0)
    if grid is None:
        return float(funk_hecke_eigenvalues(K, geometry, l, M, endpoint_exponent)[l])
    t = grid.nodes
    h = np.asarray(K(t), dtype=float)
    if endpoint_exponent != 0.0:
        h = h / (1.0 - t) ** endpoint_exponent
    integral = float(np.dot(grid.weights, h * gegenbauer_table(l, geometry.mu, t)[l]))
    return _funk_hecke_prefactor(geometry, l) * integral


def distance_power_kernel(exponent: float) -> Callable:
    """K(t) = |xi - eta|^exponent with |xi - eta|^2 = 2 - 2t; carries its endpoint exponent."""
    def kernel(t):
        return np.power(2.0 - 2.0 * np.asarray(t, dtype=float), exponent / 2.0)

    kernel.endpoint_exponent = exponent / 2.0
    return kernel


def distance_power_eigenvalues(geometry: SphereGeometry, exponent: float, L: int,
                               M: int = DEFAULT_M) -> np.ndarray:
    """Quadrature eigenvalues of |xi - eta|^exponent."""
    n = geometry.n
    if exponent <= -n:
        raise KernelSingularity(f"|xi-eta|^{exponent} is not integrable on S^{n}")
    s = exponent / 2.0
    kern = lambda t: 2.0 ** s * (1 - t) ** s
    return funk_hecke_eigenvalues(kern, geometry, L, M, endpoint_exponent=s)


def distance_power_eigenvalues_closed(geometry: SphereGeometry, exponent: float, L: int) -> np.ndarray:
    """Closed form 2^{2g} pi^{n/2} Gamma(g) (n/2-g)_l / Gamma(l+n/2+g), g = (n+exponent)/2."""
    n = geometry.n
    g = (n + exponent) / 2.0
    if g <= 0:
        raise KernelSingularity("kernel not integrable")
    lead = 2.0 * g * math.log(2.0) + (n / 2) * math.log(math.pi) + lgamma_signed(g)[1]
    out = np.empty(L + 1)
    for l in range(L + 1):
        poch = pochhammer(n / 2 - g, l) if l <= 150 else None
        if poch is None:
            r = gamma_ratio(l + n / 2 - g, n / 2 - g)
            poch = r.to_real()
        if poch == 0.0:
            out[l] = 0.0
            continue
        s, lg = lgamma_signed(l + n / 2 + g)
        out[l] = math.copysign(1.0, poch) * s * math.exp(lead + math.log(abs(poch)) - lg)
    return out


def inverse_kernel_constant(n: int, gamma: float) -> float:
    """Gamma(n/2 - gamma) / (2^{2 gamma} pi^{n/2} Gamma(gamma))."""
    if is_nonpositive_integer(n / 2 - gamma):
        raise PoleError(f"gamma - n/2 = {gamma - n / 2} is a nonnegative integer; P^-1 has no kernel form")
    s, lg = lgamma_signed(n / 2 - gamma)
    return s * math.exp(lg - 2 * gamma * math.log(2.0) - (n / 2) * math.log(math.pi) - lgamma_signed(gamma)[1])


def inverse_kernel_apply(f: ZonalFunction, gamma: float, M: int = DEFAULT_M) -> ZonalFunction:
    """P_{2 gamma}^{-1} f as the integral operator with kernel |xi - eta|^{2 gamma - n}."""
    n = f.geometry.n
    if gamma <= 0:
        raise KernelSingularity("gamma must be positive for an integrable kernel")
    c = inverse_kernel_constant(n, gamma)
    lam = distance_power_eigenvalues(f.geometry, 2 * gamma - n, f.L, M)
    return f.multiply_modes(c * lam)


def inverse_spectral_apply(f: ZonalFunction, gamma: float) -> ZonalFunction:
    return apply_spectrum(gjms_spectrum(f.geometry, gamma, f.L).inverse(), f)


def inverse_multipliers(n: int, gamma: float, L: int) -> np.ndarray:
    """Gamma(l + n/2 - gamma)/Gamma(l + n/2 + gamma)."""
    out = np.empty(L + 1)
    for l in range(L + 1):
        out[l] = gamma_ratio(l + n / 2 - gamma, l + n / 2 + gamma).to_real()
    return out
