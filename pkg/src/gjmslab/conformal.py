"""Axis-preserving Moebius maps of S^n acting on zonal functions.

The map with parameter a in (-1, 1) moves latitude t to

    t' = ((1 + a^2) t - 2a) / (1 + a^2 - 2 a t)

and has conformal factor J_a(t) = (1 - a^2) / (1 + a^2 - 2 a t), so that
det dphi = J_a^n.  The parameter -a gives the inverse map.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import BracketingError, DomainError, NonPositiveValue
from .zonal import DEFAULT_M, SphereGeometry, ZonalFunction, analyze, make_grid, synthesize

A_EDGE = 1e-6


@dataclass(frozen=True)
class ConformalMap:
    geometry: SphereGeometry
    a: float = 0.0

    def __post_init__(self):
        if not -1.0 < self.a < 1.0:
            raise DomainError(f"Moebius parameter {self.a} outside (-1, 1)")

    def inverse(self) -> "ConformalMap":
        return ConformalMap(self.geometry, -self.a)

    def factor(self, t):
        return conformal_factor(self, t)

    def latitude(self, t):
        return transported_latitude(self.a, t)

    def det(self, t):
        return self.factor(t) ** self.geometry.n


def conformal_factor(cmap: ConformalMap | float, t):
    a = cmap.a if isinstance(cmap, ConformalMap) else float(cmap)
    t = np.asarray(t, dtype=float)
    return (1.0 - a * a) / (1.0 + a * a - 2.0 * a * t)


def transported_latitude(a: float, t):
    t = np.asarray(t, dtype=float)
    out = ((1.0 + a * a) * t - 2.0 * a) / (1.0 + a * a - 2.0 * a * t)
    return np.clip(out, -1.0, 1.0)


def pushforward_values(f: ZonalFunction, a: float, weight_exp: float, t) -> np.ndarray:
    """Samples of f(phi(xi)) (det dphi)^weight_exp at latitudes t."""
    n = f.geometry.n
    return f.evaluate(transported_latitude(a, t)) * conformal_factor(a, t) ** (n * weight_exp)


def pushforward(f: ZonalFunction, cmap: ConformalMap | float, weight_exp: float,
                L: int | None = None, M: int | None = None) -> ZonalFunction:
    """f_phi = f o phi * (det dphi)^weight_exp, re-analyzed to degree L."""
    a = cmap.a if isinstance(cmap, ConformalMap) else float(cmap)
    L = f.L if L is None else L
    if a == 0.0:
        return f.padded(L)
    grid = make_grid(f.geometry, M or max(DEFAULT_M, 2 * L + 1))
    vals = pushforward_values(f, a, weight_exp, grid.nodes)
    return analyze(vals, grid, f.geometry, L, warn_tol=np.inf)


def sobolev_weight(n: int, gamma: float) -> float:
    return (n - 2.0 * gamma) / (2.0 * n)


def _moment(f: ZonalFunction, a: float, weight_exp: float, grid) -> float:
    vals = pushforward_values(f, a, weight_exp, grid.nodes)
    return f.geometry.boundary_volume * float(np.dot(grid.weights, vals * grid.nodes))


def center_of_mass(f: ZonalFunction, gamma: float | None = None, M: int | None = None) -> float:
    """Axis component of integral f(xi) xi dV; the other components vanish."""
    grid = make_grid(f.geometry, M or max(DEFAULT_M, 2 * f.L + 1))
    vals = synthesize(f, grid)
    if np.any(vals <= 0):
        raise NonPositiveValue("center of mass normalization needs f > 0")
    return f.geometry.boundary_volume * float(np.dot(grid.weights, vals * grid.nodes))


@dataclass
class Normalization:
    a_star: float
    f_norm: ZonalFunction
    residual: float
    sign_changes: int


def normalize_center_of_mass(f: ZonalFunction, gamma: float, L: int | None = None,
                             M: int | None = None, scan: int = 64) -> Normalization:
    """Find a with integral f_phi xi dV = 0 for f_phi = pushforward(f, a, (n-2g)/(2n))."""
    n = f.geometry.n
    beta = sobolev_weight(n, gamma)
    L = f.L if L is None else L
    grid = make_grid(f.geometry, M or max(DEFAULT_M, 2 * L + 1))
    if np.any(synthesize(f, grid) <= 0):
        raise NonPositiveValue("center of mass normalization needs f > 0")
    m0 = _moment(f, 0.0, beta, grid)
    scale = abs(f.mean()) * f.geometry.volume or 1.0
    if abs(m0) <= 1e-13 * scale:
        return Normalization(0.0, f.padded(L), m0, 0)
    # scan a grid in tanh-coordinates so the ends of (-1, 1) are sampled densely
    s = np.linspace(-1.0, 1.0, scan + 1)
    lim = np.arctanh(1.0 - A_EDGE)
    aa = np.tanh(s * lim)
    mm = np.array([_moment(f, a, beta, grid) for a in aa])
    changes = np.nonzero(np.sign(mm[:-1]) * np.sign(mm[1:]) < 0)[0]
    func = lambda a: _moment(f, a, beta, grid)
    if changes.size == 0:
        res = minimize_scalar(lambda a: abs(func(a)), bounds=(aa[0], aa[-1]), method="bounded",
                              options={"xatol": 1e-12})
        if abs(res.fun) > 1e-10 * scale:
            raise BracketingError(f"no sign change of the center of mass on (-1, 1); best |m| = {res.fun:.3e}")
        a_star = float(res.x)
    else:
        # prefer the bracket closest to the identity
        k = changes[np.argmin(np.minimum(abs(aa[changes]), abs(aa[changes + 1])))]
        a_star = brentq(func, aa[k], aa[k + 1], xtol=1e-14, rtol=1e-15, maxiter=200)
    f_norm = pushforward(f, a_star, beta, L=L, M=grid.order)
    return Normalization(a_star, f_norm, func(a_star), int(changes.size))
