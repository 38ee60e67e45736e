"""Zonal functions on S^n.

A zonal function depends only on the latitude t = <xi, e>.  It is stored by
its coefficients in the basis C_l^mu(t), mu = (n-1)/2 (cos(l theta) on the
circle).  Grids are Gauss rules for the weight (1-t^2)^(mu-1/2), so that

    integral over S^n of F(<xi, e>) dV = |S^{n-1}| * sum_i w_i F(t_i)

with the convention |S^0| = 2.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import GridMismatch, NonPositiveValue
from .specfun import QuadratureRule, gauss_gegenbauer_rule, gegenbauer_norm, gegenbauer_table

DEFAULT_L = 64
DEFAULT_M = 256


class AliasingWarning(UserWarning):
    """Samples carry energy above the requested truncation degree."""


def sphere_volume(n: int) -> float:
    return 2.0 * math.pi ** ((n + 1) / 2) / math.gamma((n + 1) / 2)


@dataclass(frozen=True)
class SphereGeometry:
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"sphere dimension must be a positive integer, got {self.n}")

    @property
    def mu(self) -> float:
        return (self.n - 1) / 2

    @property
    def volume(self) -> float:
        return sphere_volume(self.n)

    @property
    def boundary_volume(self) -> float:
        """|S^{n-1}|, equal to 2 when n = 1."""
        return 2.0 if self.n == 1 else sphere_volume(self.n - 1)

    def basis_norm(self, l: int) -> float:
        """Integral over S^n of B_l(<xi, e>)^2."""
        return self.boundary_volume * gegenbauer_norm(l, self.mu)

    def basis_norms(self, L: int) -> np.ndarray:
        return _basis_norms(self.n, L)

    def basis_at_one(self, L: int) -> np.ndarray:
        return gegenbauer_table(L, self.mu, [1.0])[:, 0]

    def laplacian_eigenvalues(self, L: int) -> np.ndarray:
        l = np.arange(L + 1)
        return -l * (l + self.n - 1.0)


@lru_cache(maxsize=256)
def _basis_norms(n: int, L: int) -> np.ndarray:
    g = SphereGeometry(n)
    out = np.array([g.basis_norm(l) for l in range(L + 1)])
    out.setflags(write=False)
    return out


@lru_cache(maxsize=64)
def _cached_rule(mu: float, M: int) -> QuadratureRule:
    return gauss_gegenbauer_rule(mu, M)


def make_grid(geometry: SphereGeometry, M: int = DEFAULT_M) -> QuadratureRule:
    """Gauss rule matched to the sphere; for n = 1 this is the uniform
    periodic grid of 2M points folded onto [0, pi]."""
    return _cached_rule(geometry.mu, int(M))


def _check_grid(grid: QuadratureRule, geometry: SphereGeometry) -> None:
    if not grid.symmetric or abs(grid.weight_exponent - (geometry.mu - 0.5)) > 1e-14:
        raise GridMismatch(
            f"grid weight exponent {grid.weight_exponent} does not match S^{geometry.n}"
        )


@dataclass
class ZonalFunction:
    geometry: SphereGeometry
    coeffs: np.ndarray
    tail_energy: float = field(default=0.0, compare=False)

    def __post_init__(self):
        self.coeffs = np.atleast_1d(np.asarray(self.coeffs, dtype=float)).copy()

    @classmethod
    def constant(cls, geometry: SphereGeometry, value: float, L: int = 0) -> "ZonalFunction":
        c = np.zeros(L + 1)
        c[0] = value
        return cls(geometry, c)

    @classmethod
    def mode(cls, geometry: SphereGeometry, l: int, amplitude: float = 1.0, L: int | None = None):
        c = np.zeros((l if L is None else L) + 1)
        c[l] = amplitude
        return cls(geometry, c)

    @property
    def n(self) -> int:
        return self.geometry.n

    @property
    def L(self) -> int:
        return self.coeffs.size - 1

    def padded(self, L: int) -> "ZonalFunction":
        if L < self.L:
            return ZonalFunction(self.geometry, self.coeffs[: L + 1])
        c = np.zeros(L + 1)
        c[: self.coeffs.size] = self.coeffs
        return ZonalFunction(self.geometry, c)

    def _aligned(self, other: "ZonalFunction"):
        if other.geometry != self.geometry:
            raise GridMismatch("zonal functions live on different spheres")
        L = max(self.L, other.L)
        return self.padded(L).coeffs, other.padded(L).coeffs

    def __add__(self, other):
        if isinstance(other, ZonalFunction):
            a, b = self._aligned(other)
            return ZonalFunction(self.geometry, a + b)
        c = self.coeffs.copy()
        c[0] += other
        return ZonalFunction(self.geometry, c)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-1.0) * other

    def __rsub__(self, other):
        return (-1.0) * self + other

    def __neg__(self):
        return (-1.0) * self

    def __mul__(self, scalar):
        return ZonalFunction(self.geometry, self.coeffs * float(scalar))

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return ZonalFunction(self.geometry, self.coeffs / float(scalar))

    def evaluate(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return self.coeffs @ gegenbauer_table(self.L, self.geometry.mu, t)

    def __call__(self, t):
        return self.evaluate(t)

    def mode_l2(self, l: int) -> float:
        """Squared L^2 norm of the degree-l component."""
        if l > self.L:
            return 0.0
        return float(self.coeffs[l] ** 2 * self.geometry.basis_norm(l))

    def mode_energies(self) -> np.ndarray:
        return self.coeffs ** 2 * self.geometry.basis_norms(self.L)

    def inner(self, other: "ZonalFunction") -> float:
        a, b = self._aligned(other)
        return float(np.sum(a * b * self.geometry.basis_norms(a.size - 1)))

    def mean(self) -> float:
        """Average over the sphere, i.e. the value of the l = 0 component."""
        return float(self.coeffs[0])

    def component(self, l: int) -> "ZonalFunction":
        return ZonalFunction.mode(self.geometry, l, self.coeffs[l] if l <= self.L else 0.0, self.L)

    def multiply_modes(self, multipliers) -> "ZonalFunction":
        m = np.asarray(multipliers, dtype=float)
        if m.size < self.coeffs.size:
            raise GridMismatch("multiplier sequence shorter than the spectral truncation")
        return ZonalFunction(self.geometry, self.coeffs * m[: self.coeffs.size])


def synthesize(f: ZonalFunction, grid: QuadratureRule) -> np.ndarray:
    _check_grid(grid, f.geometry)
    return f.evaluate(grid.nodes)


def analyze(values, grid: QuadratureRule, geometry: SphereGeometry, L: int,
            warn_tol: float = 1e-10) -> ZonalFunction:
    """Project grid samples onto degrees 0..L by quadrature.

    The energy of the samples not captured by the projection is stored in
    ``tail_energy`` (relative to the total); an AliasingWarning is issued when
    it exceeds ``warn_tol``.  With at most L + 1 distinct nodes every sample
    vector is fitted exactly, so the tail cannot be measured at all; that case
    warns too (tail_energy is then NaN).
    """
    _check_grid(grid, geometry)
    values = np.asarray(values, dtype=float)
    if values.shape != grid.nodes.shape:
        raise GridMismatch("values do not match the grid nodes")
    table = gegenbauer_table(L, geometry.mu, grid.nodes)
    h = np.array([gegenbauer_norm(l, geometry.mu) for l in range(L + 1)])
    coeffs = (table * grid.weights) @ values / h
    if grid.nodes.size <= L + 1:
        if np.isfinite(warn_tol):
            warnings.warn(f"{grid.nodes.size} nodes leave no room to measure energy above degree {L}",
                          AliasingWarning, stacklevel=2)
        return ZonalFunction(geometry, coeffs, tail_energy=math.nan)
    resid = values - coeffs @ table
    total = float(np.dot(grid.weights, values * values))
    tail = float(np.dot(grid.weights, resid * resid)) / total if total > 0 else 0.0
    if tail > warn_tol:
        warnings.warn(f"relative tail energy {tail:.3e} above degree {L}", AliasingWarning, stacklevel=2)
    return ZonalFunction(geometry, coeffs, tail_energy=tail)


def from_callable(func, geometry: SphereGeometry, L: int = DEFAULT_L, M: int | None = None,
                  warn_tol: float = 1e-10) -> ZonalFunction:
    grid = make_grid(geometry, M or max(DEFAULT_M, 2 * L + 1))
    return analyze(func(grid.nodes), grid, geometry, L, warn_tol=warn_tol)


def integrate(values, grid: QuadratureRule, geometry: SphereGeometry) -> float:
    _check_grid(grid, geometry)
    return geometry.boundary_volume * float(np.dot(grid.weights, values))


def lp_norm(values, grid: QuadratureRule, geometry: SphereGeometry, p: float) -> float:
    """(integral of F^p)^(1/p); negative or fractional p need F > 0."""
    if p == 0:
        raise ValueError("p must be nonzero")
    values = np.asarray(values, dtype=float)
    if p < 0 or not float(p).is_integer():
        if np.any(values <= 0):
            raise NonPositiveValue(f"L^{p} norm needs strictly positive samples (min {values.min():.3e})")
        base = values
    else:
        base = np.abs(values)
    # factor out the maximum to keep large |p| powers in range
    scale = float(np.max(base)) if p > 0 else float(np.min(base))
    if scale == 0.0:
        return 0.0
    integral = integrate((base / scale) ** p, grid, geometry)
    return scale * integral ** (1.0 / p)


def function_lp_norm(f: ZonalFunction, p: float, M: int = DEFAULT_M) -> float:
    grid = make_grid(f.geometry, M)
    return lp_norm(synthesize(f, grid), grid, f.geometry, p)


def lp_norm_refined(f: ZonalFunction, p: float, M: int = DEFAULT_M) -> tuple[float, float]:
    """Norm at M and 2M nodes; a large gap signals an unresolved or divergent integral."""
    return function_lp_norm(f, p, M), function_lp_norm(f, p, 2 * M)


def random_positive(geometry: SphereGeometry, L: int, rng: np.random.Generator,
                    decay: float = 0.7, margin: float = 0.2, M: int = DEFAULT_M) -> ZonalFunction:
    """Random band-limited function with minimum equal to ``margin`` on a fine grid."""
    c = rng.standard_normal(L + 1) * decay ** np.arange(L + 1)
    c[0] = 0.0
    f = ZonalFunction(geometry, c)
    grid = make_grid(geometry, max(M, 4 * L + 8))
    vals = synthesize(f, grid)
    f.coeffs[0] = margin - vals.min()
    scale = 1.0 / max(abs(f.coeffs).max(), 1e-300)
    return f * scale


def write_samples_csv(path, t, values) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "value"])
        for ti, vi in zip(np.asarray(t), np.asarray(values)):
            w.writerow([repr(float(ti)), repr(float(vi))])


def read_samples_csv(path) -> tuple[np.ndarray, np.ndarray]:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    body = rows[1:] if rows and rows[0][0] == "t" else rows
    arr = np.array([[float(x) for x in r[:2]] for r in body])
    return arr[:, 0], arr[:, 1]


def write_coeffs_csv(path, f: ZonalFunction) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", f.n])
        w.writerow(["l", "coefficient"])
        for l, c in enumerate(f.coeffs):
            w.writerow([l, repr(float(c))])


def read_coeffs_csv(path) -> ZonalFunction:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    n = int(rows[0][1])
    coeffs = [float(r[1]) for r in rows[2:]]
    return ZonalFunction(SphereGeometry(n), np.array(coeffs))
