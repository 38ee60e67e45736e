"""The Poisson problem -Delta_+ u - s(n-s) u = 0 on the Poincare ball.

With s = n/2 + gamma and boundary datum f (rho_0^{s-n} u -> f), the solution is
computed two independent ways for zonal f:

* integral route: the kernel ((1-|x|^2)/|x-xi|^2)^s is rotation invariant, so
  integrating it against f acts mode by mode through Funk-Hecke eigenvalues;
* series route: u = rho_0^{n-s} sum_l phi_l(r^2) r^l a_l B_l(t) with phi_l a
  normalized Gauss hypergeometric function.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, IntegerGamma
from .gjms import funk_hecke_eigenvalues, gjms_multiplier
from .jets import RhoJet
from .specfun import gamma_ratio_value, gegenbauer_table, hyp2f1, hyp2f1_taylor, lgamma_signed
from .zonal import DEFAULT_M, SphereGeometry, ZonalFunction

NEAR_BOUNDARY_R = 0.99


class NearBoundaryWarning(UserWarning):
    """Evaluation radius where the integral route loses accuracy."""


def c_gamma(gamma: float) -> float:
    """2^{2 gamma} Gamma(gamma) / Gamma(-gamma)."""
    if float(gamma).is_integer():
        raise IntegerGamma(f"c_gamma undefined at integer gamma = {gamma}")
    s1, l1 = lgamma_signed(gamma)
    s2, l2 = lgamma_signed(-gamma)
    return s1 * s2 * math.exp(2 * gamma * math.log(2.0) + l1 - l2)


def c_gamma_inv(gamma: float) -> float:
    return 1.0 / c_gamma(gamma)


@dataclass(frozen=True)
class BallPoint:
    r: float
    t: float

    def __post_init__(self):
        if not 0.0 <= self.r < 1.0:
            raise DomainError(f"radius {self.r} outside [0, 1)")
        if not -1.0 <= self.t <= 1.0:
            raise DomainError(f"latitude {self.t} outside [-1, 1]")

    @classmethod
    def from_rho(cls, rho: float, t: float) -> "BallPoint":
        return cls((2.0 - rho) / (2.0 + rho), t)

    @property
    def rho(self) -> float:
        return 2.0 * (1.0 - self.r) / (1.0 + self.r)

    @property
    def rho0(self) -> float:
        return (1.0 - self.r * self.r) / 2.0


@dataclass
class PoissonSolution:
    geometry: SphereGeometry
    gamma: float
    boundary: ZonalFunction

    def __post_init__(self):
        if self.gamma <= 0 or float(self.gamma).is_integer():
            raise IntegerGamma("the Poisson problem needs gamma in (0, inf) minus the integers")
        if self.boundary.geometry != self.geometry:
            raise DomainError("boundary datum lives on a different sphere")

    @property
    def s(self) -> float:
        return self.geometry.n / 2 + self.gamma

    def eval_series(self, r, t) -> np.ndarray:
        return poisson_eval_series(self, r, t)

    def eval_integral(self, r, t, M: int = DEFAULT_M) -> np.ndarray:
        return poisson_eval_integral(self, r, t, M)


def integral_prefactor(n: int, gamma: float) -> float:
    """pi^{-n/2} 2^{-s} Gamma(n/2 + gamma)/Gamma(gamma)."""
    s = n / 2 + gamma
    return math.exp(-(n / 2) * math.log(math.pi) - s * math.log(2.0)
                    + math.lgamma(s) - math.lgamma(gamma))


def poisson_kernel_eigenvalues(geometry: SphereGeometry, gamma: float, r: float, L: int,
                               M: int = DEFAULT_M) -> np.ndarray:
    """Funk-Hecke eigenvalues of tau -> ((1-r^2)/(1+r^2-2 r tau))^s."""
    s = geometry.n / 2 + gamma
    q = 1.0 - r * r
    kern = lambda tau: (q / (1.0 + r * r - 2.0 * r * np.asarray(tau, dtype=float))) ** s
    return funk_hecke_eigenvalues(kern, geometry, L, M)


def _points(r, t):
    r = np.asarray(r, dtype=float)
    t = np.asarray(t, dtype=float)
    r, t = np.broadcast_arrays(r, t)
    if np.any(r < 0) or np.any(r >= 1):
        raise DomainError("radius outside [0, 1)")
    return r, t


def poisson_eval_integral(sol: PoissonSolution, r, t, M: int = DEFAULT_M) -> np.ndarray:
    """u(r, t) from the integral formula, evaluated spectrally by quadrature."""
    r, t = _points(r, t)
    g = sol.geometry
    f = sol.boundary
    if np.any(r >= NEAR_BOUNDARY_R):
        warnings.warn(f"integral route at r >= {NEAR_BOUNDARY_R} is unstable", NearBoundaryWarning, stacklevel=2)
    pref = integral_prefactor(g.n, sol.gamma)
    out = np.empty(r.shape)
    flat_r, flat_t, flat_o = r.ravel(), t.ravel(), out.reshape(-1)
    for rv in np.unique(flat_r):
        idx = np.nonzero(flat_r == rv)[0]
        lam = poisson_kernel_eigenvalues(g, sol.gamma, float(rv), f.L, M)
        table = gegenbauer_table(f.L, g.mu, flat_t[idx])
        flat_o[idx] = pref * ((lam * f.coeffs) @ table)
    return out


def phi_prefactor(n: int, gamma: float, l: int) -> float:
    """Gamma(gamma+1/2)/Gamma(2 gamma) * Gamma(l+gamma+n/2)/Gamma(l+(n+1)/2)."""
    return gamma_ratio_value(gamma + 0.5, 2 * gamma) * gamma_ratio_value(l + gamma + n / 2, l + (n + 1) / 2)


def phi_mode(n: int, gamma: float, l: int, x: float) -> float:
    """phi_l(x), normalized so that phi_l(1) = 1."""
    if x == 1.0:
        return 1.0
    return phi_prefactor(n, gamma, l) * hyp2f1(l + n / 2 - gamma, 0.5 - gamma, l + (n + 1) / 2, x)


def series_multipliers(n: int, gamma: float, r: float, L: int) -> np.ndarray:
    """phi_l(r^2) r^l for l = 0..L."""
    x = r * r
    out = np.empty(L + 1)
    for l in range(L + 1):
        out[l] = phi_mode(n, gamma, l, x) * (r ** l if l else 1.0)
    return out


def poisson_eval_series(sol: PoissonSolution, r, t) -> np.ndarray:
    r, t = _points(r, t)
    g = sol.geometry
    f = sol.boundary
    n = g.n
    out = np.empty(r.shape)
    flat_r, flat_t, flat_o = r.ravel(), t.ravel(), out.reshape(-1)
    for rv in np.unique(flat_r):
        idx = np.nonzero(flat_r == rv)[0]
        mult = series_multipliers(n, sol.gamma, float(rv), f.L)
        terms = mult * f.coeffs
        table = gegenbauer_table(f.L, g.mu, flat_t[idx])
        rho0 = (1.0 - rv * rv) / 2.0
        flat_o[idx] = rho0 ** (n / 2 - sol.gamma) * (terms @ table)
    return out


def origin_value_integral(n: int, gamma: float) -> float:
    """u(0) for f = 1 from the integral formula."""
    return integral_prefactor(n, gamma) * SphereGeometry(n).volume


def origin_value_series(n: int, gamma: float) -> float:
    """u(0) for f = 1 from the series formula."""
    s = n / 2 + gamma
    return 2.0 ** (s - n) * phi_prefactor(n, gamma, 0)


def boundary_trend(sol: PoissonSolution, t, ks=(2, 3, 4)) -> np.ndarray:
    """rho_0^{s-n} u at r = 1 - 10^{-k}; tends to f(t) as k grows."""
    out = []
    for k in ks:
        r = 1.0 - 10.0 ** (-k)
        rho0 = (1.0 - r * r) / 2.0
        out.append(rho0 ** (sol.gamma - sol.geometry.n / 2) * poisson_eval_series(sol, r, t))
    return np.array(out)


# --------------------------------------------------------------------------
# PDE and ODE residuals

def hyperbolic_laplacian_fd(u, n: int, r: float, t: float, h: float = 1e-3) -> float:
    """Delta_+ u at an interior zonal point by fourth-order central differences.

    Delta_+ = ((1-r^2)/4) [ (1-r^2)(u_rr + (n/r) u_r + r^{-2} Lap_S u) + 2(n-1) r u_r ]
    with Lap_S u = (1-t^2) u_tt - n t u_t on zonal functions.
    """
    def d1(g, x):
        return (-g(x + 2 * h) + 8 * g(x + h) - 8 * g(x - h) + g(x - 2 * h)) / (12 * h)

    def d2(g, x):
        return (-g(x + 2 * h) + 16 * g(x + h) - 30 * g(x) + 16 * g(x - h) - g(x - 2 * h)) / (12 * h * h)

    ur = d1(lambda x: u(x, t), r)
    urr = d2(lambda x: u(x, t), r)
    ut = d1(lambda y: u(r, y), t)
    utt = d2(lambda y: u(r, y), t)
    lap_s = (1 - t * t) * utt - n * t * ut
    q = 1.0 - r * r
    return q / 4.0 * (q * (urr + n / r * ur + lap_s / (r * r)) + 2 * (n - 1) * r * ur)


def pde_residual(sol: PoissonSolution, r: float, t: float, h: float = 1e-3) -> float:
    """|(-Delta_+ - s(n-s)) u| / |u| at (r, t)."""
    if not 2 * h < r < 1 - 2 * h or not -1 + 2 * h < t < 1 - 2 * h:
        raise DomainError("stencil leaves the interior")
    n = sol.geometry.n
    s = sol.s
    u = lambda rr, tt: float(poisson_eval_series(sol, rr, tt))
    val = u(r, t)
    res = -hyperbolic_laplacian_fd(u, n, r, t, h) - s * (n - s) * val
    return abs(res) / max(abs(val), 1e-300)


def mode_ode_residual(n: int, gamma: float, l: int, x: float, h: float = 1e-3) -> float:
    """Residual of the hypergeometric equation for v(x) = F(l+n/2-g, 1/2-g; l+(n+1)/2; x)."""
    a, b, c = l + n / 2 - gamma, 0.5 - gamma, l + (n + 1) / 2
    v = lambda y: hyp2f1(a, b, c, y)
    v0 = v(x)
    v1 = (-v(x + 2 * h) + 8 * v(x + h) - 8 * v(x - h) + v(x - 2 * h)) / (12 * h)
    v2 = (-v(x + 2 * h) + 16 * v(x + h) - 30 * v0 + 16 * v(x - h) - v(x - 2 * h)) / (12 * h * h)
    res = x * (1 - x) * v2 + (c - (a + b + 1) * x) * v1 - a * b * v0
    return abs(res) / max(abs(v0), abs(v1), abs(v2), 1e-300)


# --------------------------------------------------------------------------
# Boundary expansion and scattering operator

def _jet_series(a: float, b: float, c: float, l: int, order: int) -> np.ndarray:
    """Coefficients of (1-x)^l F(a, b; c; x) in powers of x, up to x**order."""
    f = hyp2f1_taylor(a, b, c, order)
    binom = np.array([(-1) ** k * math.comb(l, k) if k <= l else 0 for k in range(order + 1)], dtype=float)
    return np.convolve(binom, f)[: order + 1]


def branch_two_lead(n: int, gamma: float, l: int) -> float:
    """Leading rho^{n/2 + gamma} coefficient for datum B_l, from the connection formula
    of F(l+n/2-g, 1/2-g; l+(n+1)/2; x) at x = 1, with the pole pair Gamma(-2g)/Gamma(1/2-g)
    resolved by reflection:

        -2^{2g} Gamma(g+1/2)^2 Gamma(l+n/2+g) / (2 sin(pi g) Gamma(1+2g) Gamma(2g) Gamma(l+n/2-g)).
    """
    g = gamma
    s1, a = lgamma_signed(g + 0.5)
    s2, b = lgamma_signed(1 + 2 * g)
    s3, c = lgamma_signed(2 * g)
    head = -s1 * s1 * s2 * s3 * math.exp(2 * g * math.log(2.0) + 2 * a - b - c) / (2.0 * math.sin(math.pi * g))
    return head * gamma_ratio_value(l + n / 2 + g, l + n / 2 - g)


def extension_jet(geometry: SphereGeometry, l: int, gamma_prime: float, order: int,
                  amplitude: float = 1.0) -> RhoJet:
    """rho-jet of the solution with boundary datum amplitude * B_l and gamma = gamma_prime.

    Branch 1 sits on rho^{n/2 - g'} with (1 - rho^2/4)^l F(l+n/2-g', l+n/2; 1-g'; rho^2/4);
    branch 2 sits on rho^{n/2 + g'} scaled by ``branch_two_lead`` and uses
    F(l+n/2+g', l+n/2; 1+g'; rho^2/4).
    """
    if float(gamma_prime).is_integer():
        raise IntegerGamma(f"extension jet undefined at integer order {gamma_prime}")
    n = geometry.n
    g = gamma_prime
    jet = RhoJet.zeros(geometry, g, n / 2 - g, order, l)
    powers = 4.0 ** -np.arange(order + 1)
    one = _jet_series(l + n / 2 - g, l + n / 2, 1 - g, l, order) * powers
    lead2 = branch_two_lead(n, g, l)
    two = _jet_series(l + n / 2 + g, l + n / 2, 1 + g, l, order) * powers * lead2
    row = np.zeros(l + 1)
    for m in range(order + 1):
        row[l] = amplitude * one[m]
        jet.add_term(n / 2 - g + 2 * m, row)
        if lead2 != 0.0:
            row[l] = amplitude * two[m]
            jet.add_term(n / 2 + g + 2 * m, row)
    return jet


def extension_jet_function(f: ZonalFunction, gamma_prime: float, order: int) -> RhoJet:
    """Mode-wise sum of extension jets for a zonal datum f."""
    out = None
    for l, a in enumerate(f.coeffs):
        j = extension_jet(f.geometry, l, gamma_prime, order, amplitude=a)
        j = j.rebase(j.alpha, j.order, f.L)
        out = j if out is None else out + j
    return out


def scattering_multipliers(n: int, gamma: float, L: int) -> np.ndarray:
    cinv = c_gamma_inv(gamma)
    return np.array([cinv * gjms_multiplier(n, gamma, l) for l in range(L + 1)])


def scattering_apply(f: ZonalFunction, gamma: float) -> ZonalFunction:
    """S(n/2 + gamma) f = c_gamma^{-1} P_{2 gamma} f."""
    return f.multiply_modes(scattering_multipliers(f.geometry.n, gamma, f.L))


def write_solution_csv(path, sol: PoissonSolution, rs, ts) -> None:
    rr, tt = np.meshgrid(np.asarray(rs, dtype=float), np.asarray(ts, dtype=float), indexing="ij")
    u = poisson_eval_series(sol, rr, tt)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["r", "t", "u"])
        for a, b, c in zip(rr.ravel(), tt.ravel(), u.ravel()):
            w.writerow([repr(float(a)), repr(float(b)), repr(float(c))])
