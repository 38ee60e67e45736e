"""Deficit evaluators for the sharp spherical inequalities.

Every evaluator returns a DeficitReport with lhs - rhs; a nonnegative deficit
means the inequality holds for that input.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .conformal import conformal_factor, normalize_center_of_mass, pushforward, sobolev_weight
from .errors import BudgetExhausted, DomainError, NonPositiveValue, UnsupportedGamma
from .gjms import conformal_energy, distance_power_eigenvalues, gjms_multiplier, gjms_spectrum
from .specfun import lgamma_signed
from .zonal import (
    DEFAULT_L,
    DEFAULT_M,
    SphereGeometry,
    ZonalFunction,
    from_callable,
    integrate,
    lp_norm,
    make_grid,
    synthesize,
)

EPS = 1e-300


@dataclass
class DeficitReport:
    name: str
    lhs: float
    rhs: float
    inputs: dict = field(default_factory=dict)
    refinement: tuple | None = None
    extras: dict = field(default_factory=dict)

    @property
    def deficit(self) -> float:
        return self.lhs - self.rhs

    @property
    def relative(self) -> float:
        return self.deficit / max(abs(self.lhs), abs(self.rhs), EPS)

    def holds(self, tol: float = 1e-8) -> bool:
        return self.deficit >= -tol * max(abs(self.lhs), abs(self.rhs), 1.0)

    def record(self, verdict: str | None = None, tol: float = 1e-8) -> dict:
        return {
            "name": self.name,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "deficit": self.deficit,
            "relative": self.relative,
            "refinement": list(self.refinement) if self.refinement else None,
            "verdict": verdict or ("pass" if self.holds(tol) else "fail"),
        }


def _classify(n: int, gamma: float) -> str:
    """'usual' for 0 < gamma < n/2, 'reverse' for the two supported ranges above n/2."""
    if gamma <= 0:
        raise DomainError("gamma must be positive")
    h = n / 2
    if gamma < h:
        return "usual"
    if gamma == h or gamma == h + 1:
        raise UnsupportedGamma(f"gamma = {gamma} is a resonant order for n = {n}")
    if float(gamma).is_integer():
        raise UnsupportedGamma("integer gamma above n/2 is excluded")
    if gamma < h + 2:
        return "reverse"
    raise UnsupportedGamma(f"gamma = {gamma} > n/2 + 2: the inequality fails there; use counterexample_search")


def sobolev_exponent(n: int, gamma: float) -> float:
    return 2.0 * n / (n - 2.0 * gamma)


def sobolev_constant(n: int, gamma: float) -> float:
    """Gamma(n/2+g)/Gamma(n/2-g) |S^n|^{2g/n}."""
    return gjms_multiplier(n, gamma, 0) * SphereGeometry(n).volume ** (2.0 * gamma / n)


def _sobolev_parts(f: ZonalFunction, gamma: float, M: int, positive: bool):
    g = f.geometry
    n = g.n
    p = sobolev_exponent(n, gamma)
    grid = make_grid(g, M)
    vals = synthesize(f, grid)
    if positive and np.any(vals <= 0):
        raise NonPositiveValue(f"input must be positive (min {vals.min():.3e})")
    norm = lp_norm(vals if positive else np.abs(vals), grid, g, p)
    return conformal_energy(f, gamma), sobolev_constant(n, gamma) * norm * norm


def sobolev_deficit(f: ZonalFunction, gamma: float, M: int = DEFAULT_M) -> DeficitReport:
    """a_{2g}(f) - C ||f||^2_{2n/(n-2g)} for the usual and reverse Sobolev inequalities."""
    n = f.geometry.n
    kind = _classify(n, gamma)
    positive = kind == "reverse"
    lhs, rhs = _sobolev_parts(f, gamma, M, positive)
    refinement = None
    if positive:
        l2, r2 = _sobolev_parts(f, gamma, 2 * M, positive)
        refinement = (lhs - rhs, l2 - r2)
    return DeficitReport(
        "reverse-sobolev" if positive else "sobolev",
        lhs,
        rhs,
        {"n": n, "gamma": gamma, "M": M, "L": f.L},
        refinement,
    )


def extremal_profile(a: float, gamma: float, geometry: SphereGeometry, L: int = DEFAULT_L,
                     M: int | None = None) -> ZonalFunction:
    """J_a^{(n-2g)/2} = (det dphi)^{(n-2g)/(2n)}, the conformal image of a constant."""
    if not -1 < a < 1:
        raise DomainError("a must lie in (-1, 1)")
    e = (geometry.n - 2.0 * gamma) / 2.0
    return from_callable(lambda t: conformal_factor(a, t) ** e, geometry, L, M, warn_tol=np.inf)


def beckner_deficit(f: ZonalFunction, M: int = DEFAULT_M) -> DeficitReport:
    """(1/(2 n!)) avg(f P_n f) - log avg(exp(f - mean f))."""
    g = f.geometry
    n = g.n
    vol = g.volume
    lhs = conformal_energy(f, n / 2) / (2.0 * math.factorial(n) * vol)
    grid = make_grid(g, M)
    vals = synthesize(f, grid) - f.mean()
    top = float(vals.max())
    if top > 700:
        # factor out the maximum before exponentiating
        rhs = top + math.log(integrate(np.exp(vals - top), grid, g) / vol)
    else:
        rhs = math.log(integrate(np.exp(vals), grid, g) / vol)
    return DeficitReport("beckner", lhs, rhs, {"n": n, "M": M, "L": f.L})


def reverse_hls_constant(n: int, lam: float) -> float:
    """pi^{-l/2} Gamma((n+l)/2)/Gamma(n+l/2) (Gamma(n)/Gamma(n/2))^{1+l/n}."""
    lg = (
        -lam / 2 * math.log(math.pi)
        + math.lgamma((n + lam) / 2)
        - math.lgamma(n + lam / 2)
        + (1 + lam / n) * (math.lgamma(n) - math.lgamma(n / 2))
    )
    return math.exp(lg)


def reverse_hls_ratio(f: ZonalFunction, g: ZonalFunction, lam: float, M: int = DEFAULT_M) -> DeficitReport:
    """Double integral of f g |xi - eta|^lam against the sharp lower bound."""
    if lam <= 0:
        raise DomainError("lambda must be positive")
    geo = f.geometry
    n = geo.n
    L = max(f.L, g.L)
    f, g = f.padded(L), g.padded(L)
    eig = distance_power_eigenvalues(geo, lam, L)
    lhs = float(np.sum(eig * f.coeffs * g.coeffs * geo.basis_norms(L)))
    p = 2.0 * n / (2.0 * n + lam)

    def norms(MM):
        grid = make_grid(geo, MM)
        fv, gv = synthesize(f, grid), synthesize(g, grid)
        if np.any(fv < 0) or np.any(gv < 0):
            raise NonPositiveValue("reverse HLS needs nonnegative inputs")
        if np.any(fv == 0) or np.any(gv == 0):
            return 0.0
        return lp_norm(fv, grid, geo, p) * lp_norm(gv, grid, geo, p)

    c = reverse_hls_constant(n, lam)
    rhs = c * norms(M)
    rhs2 = c * norms(2 * M)
    rep = DeficitReport("reverse-hls", lhs, rhs, {"n": n, "lambda": lam, "M": M, "L": L},
                        (lhs - rhs, lhs - rhs2))
    rep.extras["ratio"] = lhs / rhs if rhs else math.inf
    return rep


def hls_extremal(a: float, lam: float, geometry: SphereGeometry, L: int = DEFAULT_L) -> ZonalFunction:
    """(det dphi)^{(2n+lam)/(2n)} = J_a^{(2n+lam)/2}."""
    e = (2.0 * geometry.n + lam) / 2.0
    return from_callable(lambda t: conformal_factor(a, t) ** e, geometry, L, warn_tol=np.inf)


def _check_duality_range(n: int, gamma: float):
    if not n / 2 < gamma < n / 2 + 1:
        raise DomainError(f"duality inequality needs gamma in ({n / 2}, {n / 2 + 1})")


def duality_gap(f: ZonalFunction, g: ZonalFunction, gamma: float, M: int = DEFAULT_M) -> DeficitReport:
    """(int fg)^2 - int f(-P)f * int g(-P^{-1})g, with the quadratic pieces attached."""
    geo = f.geometry
    n = geo.n
    _check_duality_range(n, gamma)
    L = max(f.L, g.L)
    f, g = f.padded(L), g.padded(L)
    grid = make_grid(geo, M)
    if np.any(synthesize(f, grid) <= 0) or np.any(synthesize(g, grid) <= 0):
        raise NonPositiveValue("duality inequality needs positive inputs")
    m = gjms_spectrum(geo, gamma, L).multipliers
    ef = f.mode_energies()
    eg = g.mode_energies()
    a_f = -m[0] * ef[0]
    a2 = float(np.sum(m[1:] * ef[1:]))
    b_g = -eg[0] / m[0]
    b2 = float(np.sum(eg[1:] / m[1:]))
    lhs = f.inner(g) ** 2
    rhs = (a_f - a2) * (b_g - b2)
    an, bn = math.sqrt(a2), math.sqrt(b2)
    id_left = (a_f - a2) * (b_g - b2) - (math.sqrt(a_f * b_g) - an * bn) ** 2
    id_right = -(an * math.sqrt(b_g) - bn * math.sqrt(a_f)) ** 2
    rep = DeficitReport("duality", lhs, rhs, {"n": n, "gamma": gamma, "L": L})
    rep.extras.update(
        a_f=a_f, a_norm2=a2, b_g=b_g, b_norm2=b2,
        form_f=a_f - a2, form_g=b_g - b2,
        mixed=(math.sqrt(a_f * b_g) - an * bn) ** 2,
        identity_residual=abs(id_left - id_right) / max(abs(id_left), abs(id_right), abs(a_f * b_g), EPS),
    )
    return rep


@dataclass
class StabilityReport:
    deficit: float
    lower_bound: float
    lower_bound_alt: float
    a_star: float
    c: float
    residual_mode1: float
    sobolev: DeficitReport

    @property
    def lower_bound_agreement(self) -> float:
        scale = max(abs(self.lower_bound), abs(self.lower_bound_alt), abs(self.sobolev.lhs) * 1e-12, EPS)
        return abs(self.lower_bound - self.lower_bound_alt) / scale

    def holds(self, tol: float = 1e-8) -> bool:
        return self.deficit >= self.lower_bound - tol and self.lower_bound >= -tol

    def as_dict(self) -> dict:
        d = asdict(self)
        d["sobolev"] = self.sobolev.record()
        return d


def stability_bound(f: ZonalFunction, gamma: float, L: int | None = None, M: int = DEFAULT_M) -> StabilityReport:
    """Deficit versus the energy of f_phi minus its mean after centering."""
    geo = f.geometry
    n = geo.n
    if not n / 2 + 1 < gamma < n / 2 + 2:
        raise DomainError(f"stability bound needs gamma in ({n / 2 + 1}, {n / 2 + 2})")
    L = max(f.L, DEFAULT_L) if L is None else L
    rep = sobolev_deficit(f, gamma, M)
    norm = normalize_center_of_mass(f, gamma, L=L, M=max(M, 2 * L + 1))
    fphi = norm.f_norm
    m = gjms_spectrum(geo, gamma, L).multipliers
    e = fphi.mode_energies()
    lower = float(np.sum(m[2:] * e[2:]))
    c = fphi.mean()
    beta = sobolev_weight(n, gamma)
    back = pushforward(ZonalFunction.constant(geo, 1.0), -norm.a_star, beta, L=L, M=max(M, 2 * L + 1))
    lower_alt = conformal_energy(f.padded(L) - c * back, gamma)
    resid = fphi.coeffs[1] * math.sqrt(geo.basis_norm(1)) if fphi.L >= 1 else 0.0
    return StabilityReport(rep.deficit, lower, lower_alt, norm.a_star, c, float(resid), rep)


def _raw_deficit(f: ZonalFunction, gamma: float, M: int) -> float:
    lhs, rhs = _sobolev_parts(f, gamma, M, True)
    return lhs - rhs


def counterexample_search(gamma: float, geometry: SphereGeometry, budget: int = 400,
                          L: int = 6, seed: int = 0, M: int = DEFAULT_M) -> DeficitReport:
    """Look for positive f with a_{2g}(f) < C ||f||^2 when gamma > n/2 + 2.

    Random restarts followed by coordinate descent on the coefficients of
    degree 1..L; candidates that are not strictly positive are rejected.  A candidate
    counts only if its deficit is negative at both M and 2M nodes.
    """
    n = geometry.n
    if gamma <= n / 2 + 2:
        raise DomainError("counterexample search is meant for gamma > n/2 + 2")
    if float(gamma - n / 2).is_integer():
        raise DomainError("resonant gamma in n/2 + N excluded")
    rng = np.random.default_rng(seed)
    grid = make_grid(geometry, M)
    evals = 0

    def score(c):
        f = ZonalFunction(geometry, c)
        vals = synthesize(f, grid)
        if vals.min() <= 1e-6 * vals.max():
            return math.inf, None
        d = _raw_deficit(f, gamma, M)
        scale = abs(sobolev_constant(n, gamma)) * function_scale(vals, grid, geometry)
        return d / scale, d

    def function_scale(vals, grid, geo):
        return integrate(vals * vals, grid, geo)

    best_c = np.zeros(L + 1)
    best_c[0] = 1.0
    best_s, best_d = 0.0, 0.0
    if budget <= 0:
        raise BudgetExhausted("search budget is zero", DeficitReport("counterexample", 0.0, 0.0, {"n": n, "gamma": gamma}))
    step = 0.1
    while evals < budget:
        # random restart around the current best
        cand = best_c.copy()
        cand[1:] += step * rng.standard_normal(L) / (1 + np.arange(L))
        s, d = score(cand)
        evals += 1
        if s < best_s:
            best_c, best_s, best_d = cand, s, d
        for l in range(1, L + 1):
            for sgn in (1.0, -1.0):
                if evals >= budget:
                    break
                cand = best_c.copy()
                cand[l] += sgn * step
                s, d = score(cand)
                evals += 1
                if s < best_s:
                    best_c, best_s, best_d = cand, s, d
        if best_s < 0:
            f = ZonalFunction(geometry, best_c)
            d1 = _raw_deficit(f, gamma, M)
            d2 = _raw_deficit(f, gamma, 2 * M)
            if d1 < 0 and d2 < 0 and abs(d1 - d2) < 0.1 * abs(d1):
                lhs, rhs = _sobolev_parts(f, gamma, M, True)
                rep = DeficitReport("counterexample", lhs, rhs, {"n": n, "gamma": gamma, "M": M, "L": L},
                                    (d1, d2))
                rep.extras["coeffs"] = best_c.tolist()
                rep.extras["evaluations"] = evals
                return rep
        step *= 0.8
    f = ZonalFunction(geometry, best_c)
    lhs, rhs = _sobolev_parts(f, gamma, M, True)
    best = DeficitReport("counterexample", lhs, rhs, {"n": n, "gamma": gamma, "M": M, "L": L})
    best.extras["coeffs"] = best_c.tolist()
    raise BudgetExhausted(f"no certified negative deficit within {budget} evaluations", best)


def nonneg_energy_check(f: ZonalFunction, gamma: float, M: int = DEFAULT_M) -> DeficitReport:
    """a_{2g}(f) >= 0 for nonnegative f that vanishes somewhere."""
    vals = synthesize(f, make_grid(f.geometry, M))
    if np.any(vals < -1e-12 * max(1.0, abs(vals).max())):
        raise NonPositiveValue("input must be nonnegative")
    return DeficitReport("nonneg-energy", conformal_energy(f, gamma), 0.0,
                         {"n": f.geometry.n, "gamma": gamma, "min": float(vals.min())})
