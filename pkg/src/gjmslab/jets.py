"""Truncated two-branch boundary expansions in the geodesic defining function rho.

A RhoJet stores, mode by mode, the coefficients of

    sum_m rho^{alpha + 2m} u_m(t)  +  sum_m rho^{alpha + 2[gamma] + 2m} v_m(t)

for m = 0..order, where u_m and v_m are zonal functions given by their
coefficients in the basis B_l.  Since 2[gamma] is not an even integer, every
exponent belongs to exactly one branch.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import IntegerGamma, JetMisalignment
from .zonal import SphereGeometry, ZonalFunction

_ALIGN_TOL = 1e-9


def fractional_part(gamma: float) -> float:
    return gamma - math.floor(gamma)


def _near_int(x: float) -> int | None:
    k = round(x)
    return int(k) if abs(x - k) < _ALIGN_TOL else None


@dataclass
class RhoJet:
    geometry: SphereGeometry
    gamma: float
    alpha: float
    branch1: np.ndarray
    branch2: np.ndarray
    truncated: bool = field(default=False, compare=False)

    def __post_init__(self):
        if fractional_part(self.gamma) == 0.0:
            raise IntegerGamma(f"gamma = {self.gamma} is an integer; the two branches coincide")
        self.branch1 = np.atleast_2d(np.asarray(self.branch1, dtype=float)).copy()
        self.branch2 = np.atleast_2d(np.asarray(self.branch2, dtype=float)).copy()
        if self.branch1.shape != self.branch2.shape:
            raise JetMisalignment("branch arrays must share (order + 1, L + 1)")

    @classmethod
    def zeros(cls, geometry: SphereGeometry, gamma: float, alpha: float, order: int, L: int) -> "RhoJet":
        z = np.zeros((order + 1, L + 1))
        return cls(geometry, gamma, alpha, z, z)

    @property
    def order(self) -> int:
        return self.branch1.shape[0] - 1

    @property
    def L(self) -> int:
        return self.branch1.shape[1] - 1

    @property
    def offset(self) -> float:
        """Exponent gap 2[gamma] between the branches."""
        return 2.0 * fractional_part(self.gamma)

    def copy(self) -> "RhoJet":
        return RhoJet(self.geometry, self.gamma, self.alpha, self.branch1, self.branch2, self.truncated)

    def exponent(self, branch: int, level: int) -> float:
        return self.alpha + 2 * level + (self.offset if branch == 2 else 0.0)

    def locate(self, exponent: float) -> tuple[int, int]:
        """(branch, level) holding rho^exponent; JetMisalignment if neither lattice contains it."""
        e = exponent - self.alpha
        k = _near_int(e / 2)
        if k is not None:
            return 1, k
        k = _near_int((e - self.offset) / 2)
        if k is not None:
            return 2, k
        raise JetMisalignment(f"exponent {exponent} is off both lattices of the jet (alpha = {self.alpha})")

    def coefficient(self, exponent: float) -> np.ndarray:
        branch, level = self.locate(exponent)
        if level < 0:
            return np.zeros(self.L + 1)
        if level > self.order:
            raise JetMisalignment(f"exponent {exponent} lies beyond the jet order {self.order}")
        return (self.branch1 if branch == 1 else self.branch2)[level].copy()

    def coefficient_function(self, exponent: float) -> ZonalFunction:
        return ZonalFunction(self.geometry, self.coefficient(exponent))

    def add_term(self, exponent: float, coeffs) -> None:
        """In-place: add rho^exponent * sum_l coeffs[l] B_l; terms past the order are dropped."""
        branch, level = self.locate(exponent)
        if level < 0:
            raise JetMisalignment(f"exponent {exponent} is below the jet base {self.alpha}")
        if level > self.order:
            self.truncated = True
            return
        c = np.asarray(coeffs, dtype=float)
        if c.size > self.L + 1:
            if np.any(c[self.L + 1:] != 0):
                raise JetMisalignment("term has modes above the jet's spectral truncation")
            c = c[: self.L + 1]
        target = self.branch1 if branch == 1 else self.branch2
        target[level, : c.size] += c

    def _check(self, other: "RhoJet") -> None:
        if other.geometry != self.geometry or abs(other.gamma - self.gamma) > 1e-14:
            raise JetMisalignment("jets differ in sphere or gamma")
        if _near_int((other.alpha - self.alpha) / 2) is None:
            raise JetMisalignment("jet base exponents differ by a non-even amount")

    def rebase(self, alpha: float, order: int | None = None, L: int | None = None) -> "RhoJet":
        """Same jet written over base exponent ``alpha`` (alpha - self.alpha even, <= 0)."""
        shift = _near_int((self.alpha - alpha) / 2)
        if shift is None or shift < 0:
            raise JetMisalignment("rebase needs a lower base differing by an even integer")
        order = self.order + shift if order is None else order
        L = self.L if L is None else L
        out = RhoJet.zeros(self.geometry, self.gamma, alpha, order, L)
        out.truncated = self.truncated
        for m in range(self.order + 1):
            k = m + shift
            if k > order:
                if np.any(self.branch1[m] != 0) or np.any(self.branch2[m] != 0):
                    out.truncated = True
                continue
            w = min(L, self.L) + 1
            out.branch1[k, :w] = self.branch1[m, :w]
            out.branch2[k, :w] = self.branch2[m, :w]
        return out

    def _aligned(self, other: "RhoJet"):
        self._check(other)
        alpha = min(self.alpha, other.alpha)
        top = max(self.alpha + 2 * self.order, other.alpha + 2 * other.order)
        order = _near_int((top - alpha) / 2)
        L = max(self.L, other.L)
        return self.rebase(alpha, order, L), other.rebase(alpha, order, L)

    def __add__(self, other: "RhoJet") -> "RhoJet":
        a, b = self._aligned(other)
        return RhoJet(self.geometry, self.gamma, a.alpha, a.branch1 + b.branch1, a.branch2 + b.branch2,
                      self.truncated or other.truncated)

    def __sub__(self, other: "RhoJet") -> "RhoJet":
        return self + (-1.0) * other

    def __mul__(self, scalar: float) -> "RhoJet":
        return RhoJet(self.geometry, self.gamma, self.alpha, self.branch1 * float(scalar),
                      self.branch2 * float(scalar), self.truncated)

    __rmul__ = __mul__

    def __neg__(self):
        return (-1.0) * self

    def shifted(self, power: float) -> "RhoJet":
        """Multiply by rho^power."""
        out = self.copy()
        out.alpha = self.alpha + power
        return out

    def multiply_modes(self, multipliers) -> "RhoJet":
        m = np.asarray(multipliers, dtype=float)[: self.L + 1]
        return RhoJet(self.geometry, self.gamma, self.alpha, self.branch1 * m, self.branch2 * m, self.truncated)

    def max_abs(self) -> float:
        return float(max(np.abs(self.branch1).max(), np.abs(self.branch2).max()))

    def terms(self):
        """Iterate over (exponent, coefficient row) pairs, branch 1 first."""
        for m in range(self.order + 1):
            yield self.exponent(1, m), self.branch1[m]
        for m in range(self.order + 1):
            yield self.exponent(2, m), self.branch2[m]

    def evaluate(self, rho, t) -> np.ndarray:
        """Partial sum of the expansion at (rho, t)."""
        from .specfun import gegenbauer_table

        rho = np.asarray(rho, dtype=float)
        t = np.asarray(t, dtype=float)
        rho, t = np.broadcast_arrays(rho, t)
        table = gegenbauer_table(self.L, self.geometry.mu, t.ravel())
        out = np.zeros(rho.size)
        r = rho.ravel()
        for e, row in self.terms():
            if np.any(row != 0):
                out += r ** e * (row @ table)
        return out.reshape(rho.shape)


def jet_laplacian(U: RhoJet) -> RhoJet:
    """Exact truncated action of the shifted hyperbolic Laplacian Delta_+ + n^2/4.

    On rho^beta h with h = sum_m rho^{2m} h_m the coefficient of
    rho^{beta + 2m} in the image is

        (beta + 2m - n/2)^2 h_m
        + sum_{k=1..m} 4^{-(k-1)} [ -(beta + 2(m-k)) n/2 h_{m-k} + k Lap_S h_{m-k} ].
    """
    n = U.geometry.n
    lap = U.geometry.laplacian_eigenvalues(U.L)
    out = RhoJet.zeros(U.geometry, U.gamma, U.alpha, U.order, U.L)
    out.truncated = U.truncated
    for branch, src, dst in ((1, U.branch1, out.branch1), (2, U.branch2, out.branch2)):
        beta = U.exponent(branch, 0)
        for m in range(U.order + 1):
            acc = (beta + 2 * m - n / 2) ** 2 * src[m]
            for k in range(1, m + 1):
                h = src[m - k]
                acc = acc + 4.0 ** (-(k - 1)) * (-(beta + 2 * (m - k)) * (n / 2) * h + k * lap * h)
            dst[m] = acc
    return out


def shifted_factor(U: RhoJet, c2: float, sign: float = 1.0) -> RhoJet:
    """sign * (Delta~ - c2) U; sign = -1 gives the factor D = -Delta~ + c2."""
    lapU = jet_laplacian(U)
    return sign * (lapU - c2 * U)
