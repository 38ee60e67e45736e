"""Boundary operators, Dirichlet extension and the Dirichlet form on the Poincare ball.

All boundary operators act on RhoJet expansions of U in the geodesic defining
function rho.  Conventions used throughout, for non-integer gamma with
F = floor(gamma), [gamma] = gamma - F and h = floor(gamma/2):

* Delta~ = Delta_+ + n^2/4 acts on jets exactly (``jets.jet_laplacian``);
* small indices: B_{2j} for j = 0..h and B_{2j+2[gamma]} for j = 0..F-h-1;
* large indices: B_{2j} for j = h+1..F and B_{2j+2[gamma]} for j = F-h..F;
* Pi_J = (-1)^F prod_{i != J} (Delta~ - (gamma-2i)^2) and
  L+ = prod_{i=0..F} (-Delta~ + (gamma-2i)^2), so that
  L+ (rho^{n/2-gamma} U) = 0 characterises polyharmonic U.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import DomainError, IntegerGamma, JetMisalignment, NotPolyharmonic, UnimplementedCase
from .gjms import apply_gjms, conformal_energy
from .inequalities import DeficitReport, beckner_deficit, sobolev_deficit
from .jets import RhoJet, fractional_part, jet_laplacian, shifted_factor
from .scattering import branch_two_lead, c_gamma, c_gamma_inv, extension_jet, phi_mode
from .specfun import gamma_ratio_value, gauss_jacobi_rule, gegenbauer_table, hyp2f1
from .zonal import SphereGeometry, ZonalFunction, analyze, integrate, make_grid

__all__ = [
    "BoundaryCoefficients", "BoundaryData", "DirichletForm", "TraceDeficitReport", "EnergyCheck",
    "boundary_coeffs", "boundary_op_small", "boundary_op_large", "small_data", "peel_expansion",
    "dirichlet_extend", "default_order", "intrinsic_identity_residual", "dirichlet_form", "trace_deficit",
    "conformal_covariance_check", "energy_identity_check", "green_identity_check", "hardy_check",
    "jet_laplacian", "perturbation_jet", "lower_terms_residual",
]

INTEGER = "integer"
FRACTIONAL = "fractional"
_INT_TOL = 1e-12


def _parts(gamma: float) -> tuple[int, float, int]:
    F = math.floor(gamma)
    fr = gamma - F
    if fr == 0.0:
        raise IntegerGamma(f"gamma = {gamma} is an integer")
    if gamma <= 0:
        raise DomainError("gamma must be positive")
    return F, fr, math.floor(gamma / 2)


def default_order(gamma: float) -> int:
    return 2 * math.floor(gamma) + 6


# --------------------------------------------------------------------------
# coefficients

def _small_factors(gamma: float, j: int, family: str) -> list[float]:
    F, _, _ = _parts(gamma)
    top = j if family == INTEGER else j + 1
    c2 = [(gamma - 2 * l) ** 2 for l in range(top)]
    c2 += [(gamma + 2 * l - 2 * F) ** 2 for l in range(j)]
    return c2


def _small_exponent(n: int, gamma: float, j: int, family: str) -> float:
    e = n / 2 - gamma + 2 * j
    return e + 2 * fractional_part(gamma) if family == FRACTIONAL else e


def _lead_product(x: float, c2s) -> float:
    p = 1.0
    for c2 in c2s:
        p *= x * x - c2
    return p


def _b_small_product(gamma: float, j: int, family: str) -> float:
    # leading coefficient of the factor product on the extracted power; n drops out
    return _lead_product(_small_exponent(0, gamma, j, family), _small_factors(gamma, j, family))


def _b_large(gamma: float, J: int) -> float:
    F, _, _ = _parts(gamma)
    p = float((-1) ** F)
    for i in range(F + 1):
        if i != J:
            p *= (gamma - 2 * J) ** 2 - (gamma - 2 * i) ** 2
    return p


def _b_int_closed(gamma: float, j: int) -> float:
    F, fr, _ = _parts(gamma)
    return (4.0 ** (2 * j) * math.factorial(j) * gamma_ratio_value(j + 1 - fr, 1 - fr)
            * gamma_ratio_value(gamma + 1 - j, gamma + 1 - 2 * j) * gamma_ratio_value(F + 1 - j, F + 1 - 2 * j))


def _b_frac_closed(gamma: float, j: int) -> float:
    F, fr, _ = _parts(gamma)
    return (-(4.0 ** (2 * j)) * math.factorial(j) * gamma_ratio_value(j + 1 + fr, fr)
            * gamma_ratio_value(F + 1 - j, F - 2 * j) * gamma_ratio_value(F + 1 - j - fr, F + 1 - 2 * j - fr))


def _sigma_closed(gamma: float, j: int) -> float:
    F, fr, h = _parts(gamma)
    v = (2.0 ** (2 * F + 1) * math.factorial(j) * math.factorial(F - j)
         * gamma_ratio_value(gamma + 1 - j, gamma - 2 * j) * gamma_ratio_value(j + 1 - fr, 2 * j + 1 - gamma))
    return v if j <= h else -v


def _zeta_closed(gamma: float, j: int) -> float:
    F, fr, h = _parts(gamma)
    head = math.factorial(j) * math.factorial(F - j)
    if j <= h:
        return (2.0 ** (4 * j - 2 * fr + 1) * head * gamma_ratio_value(gamma + 1 - j, gamma + 1 - 2 * j)
                * gamma_ratio_value(j + 1 - fr, gamma - 2 * j))
    return (2.0 ** (4 * gamma - 2 * fr + 1) * head * gamma_ratio_value(gamma + 1 - j, 2 * j - gamma)
            * gamma_ratio_value(j + 1 - fr, 2 * j + 1 - gamma))


def _pairing_order(gamma: float, J: int) -> float:
    """Order g' of the operator P_{2g'} linking B_{2J} and B_{2gamma-2J}: |gamma - 2J|."""
    return abs(gamma - 2 * J)


@dataclass(frozen=True)
class BoundaryCoefficients:
    """b, sigma and zeta for one gamma.

    ``b_integer``/``b_fractional`` are the leading-coefficient products that
    normalise the small-index operators; ``*_closed`` are the Gamma-function
    displays kept for comparison.  ``b_large[J]`` normalises Pi_J.  ``zeta`` is
    -sigma_J / c_{|gamma-2J|}.
    """
    gamma: float
    b_integer: tuple
    b_fractional: tuple
    b_integer_closed: tuple
    b_fractional_closed: tuple
    b_large: tuple
    sigma: tuple
    sigma_closed: tuple
    zeta: tuple
    zeta_closed: tuple
    c_gammas: dict = field(compare=False)

    def table(self) -> dict:
        return {
            "gamma": self.gamma,
            "b_integer": list(self.b_integer),
            "b_fractional": list(self.b_fractional),
            "b_integer_closed": list(self.b_integer_closed),
            "b_fractional_closed": list(self.b_fractional_closed),
            "b_large": list(self.b_large),
            "sigma": list(self.sigma),
            "sigma_closed": list(self.sigma_closed),
            "zeta": list(self.zeta),
            "zeta_closed": list(self.zeta_closed),
            "c_gamma": {f"{k:.12g}": v for k, v in self.c_gammas.items()},
        }


@lru_cache(maxsize=128)
def boundary_coeffs(gamma: float) -> BoundaryCoefficients:
    F, fr, h = _parts(gamma)
    b_int = tuple(_b_small_product(gamma, j, INTEGER) for j in range(h + 1))
    b_frac = tuple(_b_small_product(gamma, j, FRACTIONAL) for j in range(F - h))
    b_large = tuple(_b_large(gamma, J) for J in range(F + 1))
    sigma = tuple(2 * abs(gamma - 2 * J) * b_large[J] for J in range(F + 1))
    cs = {}
    for J in range(F + 1):
        g = _pairing_order(gamma, J)
        cs[g] = c_gamma(g)
    zeta = tuple(-sigma[J] / cs[_pairing_order(gamma, J)] for J in range(F + 1))
    return BoundaryCoefficients(
        gamma=float(gamma),
        b_integer=b_int,
        b_fractional=b_frac,
        b_integer_closed=tuple(_b_int_closed(gamma, j) for j in range(h + 1)),
        b_fractional_closed=tuple(_b_frac_closed(gamma, j) for j in range(F - h)),
        b_large=b_large,
        sigma=sigma,
        sigma_closed=tuple(_sigma_closed(gamma, J) for J in range(F + 1)),
        zeta=zeta,
        zeta_closed=tuple(_zeta_closed(gamma, J) for J in range(F + 1)),
        c_gammas=cs,
    )


# --------------------------------------------------------------------------
# boundary data

@dataclass
class BoundaryData:
    """Small-index Dirichlet data: f^{(2j)}, j = 0..h, and phi^{(2m)}, m = 0..F-h-1."""
    gamma: float
    integer: list
    fractional: list

    def __post_init__(self):
        F, _, h = _parts(self.gamma)
        if len(self.integer) != h + 1 or len(self.fractional) != F - h:
            raise DomainError(
                f"gamma = {self.gamma} needs {h + 1} integer and {F - h} fractional data, "
                f"got {len(self.integer)} and {len(self.fractional)}")
        geos = {f.geometry for f in self.integer + self.fractional}
        if len(geos) != 1:
            raise DomainError("boundary data live on different spheres")

    @property
    def geometry(self) -> SphereGeometry:
        return self.integer[0].geometry

    @property
    def L(self) -> int:
        return max(f.L for f in self.integer + self.fractional)

    def items(self):
        """(order g', family, index, datum) for each component."""
        F, fr, _ = _parts(self.gamma)
        for j, f in enumerate(self.integer):
            yield self.gamma - 2 * j, INTEGER, j, f
        for m, f in enumerate(self.fractional):
            yield F - fr - 2 * m, FRACTIONAL, m, f

    @classmethod
    def random(cls, geometry: SphereGeometry, gamma: float, L: int, rng: np.random.Generator,
               decay: float = 0.6) -> "BoundaryData":
        F, _, h = _parts(gamma)

        def one():
            c = rng.standard_normal(L + 1) * decay ** np.arange(L + 1)
            return ZonalFunction(geometry, c)

        return cls(gamma, [one() for _ in range(h + 1)], [one() for _ in range(F - h)])


# --------------------------------------------------------------------------
# small-index operators

def _apply_factors(X: RhoJet, c2s, sign: float = 1.0) -> RhoJet:
    for c2 in c2s:
        X = shifted_factor(X, c2)
    return X * sign if sign != 1.0 else X


def lower_terms_residual(X: RhoJet, exponent: float) -> float:
    """Largest coefficient of X strictly below rho^exponent (in both branches)."""
    worst = 0.0
    for e, row in X.terms():
        if e < exponent - 1e-9:
            worst = max(worst, float(np.max(np.abs(row))) if row.size else 0.0)
    return worst


def _small_range(gamma: float, family: str) -> range:
    F, _, h = _parts(gamma)
    return range(h + 1) if family == INTEGER else range(F - h)


def _extract(X: RhoJet, exponent: float) -> np.ndarray:
    branch, level = X.locate(exponent)
    if level > X.order:
        raise JetMisalignment(f"jet order {X.order} too low to extract rho^{exponent:.6g}")
    return X.coefficient(exponent)


def _small_image(U: RhoJet, j: int, family: str) -> tuple[RhoJet, float]:
    n = U.geometry.n
    X = U.shifted(n / 2 - U.gamma)
    X = _apply_factors(X, _small_factors(U.gamma, j, family))
    return X, _small_exponent(n, U.gamma, j, family)


def boundary_op_small(U: RhoJet, j: int, family: str = INTEGER) -> ZonalFunction:
    """B_{2j}(U) (integer family) or B_{2j+2[gamma]}(U) (fractional family).

    The factor product is applied to the jet of rho^{n/2-gamma} U and the
    designated coefficient is divided by the product of leading factors, so
    that B(rho^{2j}) = 1 resp. B(rho^{2j+2[gamma]}) = 1.
    """
    if family not in (INTEGER, FRACTIONAL):
        raise DomainError(f"unknown family {family!r}")
    if j not in _small_range(U.gamma, family):
        raise DomainError(f"index {j} outside the small {family} range for gamma = {U.gamma}")
    X, e = _small_image(U, j, family)
    b = _b_small_product(U.gamma, j, family)
    return ZonalFunction(U.geometry, _extract(X, e) / b)


def small_data(U: RhoJet) -> BoundaryData:
    ints = [boundary_op_small(U, j, INTEGER) for j in _small_range(U.gamma, INTEGER)]
    fracs = [boundary_op_small(U, j, FRACTIONAL) for j in _small_range(U.gamma, FRACTIONAL)]
    return BoundaryData(U.gamma, ints, fracs)


def peel_expansion(U: RhoJet) -> list[tuple[float, ZonalFunction]]:
    """Small-index coefficients of U recovered one exponent at a time.

    Walking the exponents 2j and 2j+2[gamma] of the small ranges upwards, each
    coefficient is B applied to U minus the terms already peeled; returns
    [(exponent, coefficient)].
    """
    if abs(U.alpha) > 1e-12:
        raise JetMisalignment("peel-off expects a jet based at rho^0")
    gamma = U.gamma
    fr = fractional_part(gamma)
    slots = [(2.0 * j, INTEGER, j) for j in _small_range(gamma, INTEGER)]
    slots += [(2.0 * j + 2 * fr, FRACTIONAL, j) for j in _small_range(gamma, FRACTIONAL)]
    slots.sort()
    rest = U.copy()
    out = []
    for e, family, j in slots:
        c = boundary_op_small(rest, j, family)
        out.append((e, c))
        term = RhoJet.zeros(U.geometry, gamma, 0.0, U.order, U.L)
        term.add_term(e, c.coeffs)
        rest = rest - term
    return out


# --------------------------------------------------------------------------
# Dirichlet extension

def _add_extension(U: RhoJet, f: ZonalFunction, gprime: float, order: int) -> None:
    n = f.geometry.n
    shift = U.gamma - n / 2
    for l, a in enumerate(f.coeffs):
        if a == 0.0:
            continue
        ext = extension_jet(f.geometry, l, gprime, order, amplitude=float(a))
        for e, row in ext.terms():
            if np.any(row != 0):
                U.add_term(e + shift, row)


def dirichlet_extend(data: BoundaryData, order: int | None = None, L: int | None = None,
                     verify_tol: float | None = 1e-9) -> RhoJet:
    """Jet of the solution with the given small-index data.

    Sums rho^{-n/2+gamma} times the extension of each datum with order
    gamma - 2j (integer data) or F - [gamma] - 2m (fractional data).  The
    recovered data are checked against the input when ``verify_tol`` is set.
    """
    gamma = data.gamma
    order = default_order(gamma) if order is None else order
    L = data.L if L is None else L
    U = RhoJet.zeros(data.geometry, gamma, 0.0, order, L)
    for gprime, _, _, f in data.items():
        _add_extension(U, f, gprime, order)
    U.truncated = False
    if verify_tol is not None:
        back = small_data(U)
        for got, want in zip(back.integer + back.fractional, data.integer + data.fractional):
            d = got - want
            scale = max(1.0, float(np.max(np.abs(want.coeffs))))
            if np.max(np.abs(d.coeffs)) > verify_tol * scale:
                raise JetMisalignment("extension does not reproduce its boundary data")
    return U


# --------------------------------------------------------------------------
# large-index operators

def _large_setup(gamma: float, j: int, family: str):
    """(J, extraction exponent offset from n/2, partner small index, partner family, P order)."""
    F, fr, h = _parts(gamma)
    if family == INTEGER:
        if not h < j <= F:
            raise DomainError(f"B_{{2j}} with j = {j} is not a large index for gamma = {gamma}")
        return j, -gamma + 2 * j, F - j, FRACTIONAL, 2 * j - gamma
    if family == FRACTIONAL:
        if not F - h <= j <= F:
            raise DomainError(f"B_{{2j+2[gamma]}} with j = {j} is not a large index for gamma = {gamma}")
        J = F - j
        return J, -gamma + 2 * j + 2 * fr, J, INTEGER, gamma - 2 * J
    raise DomainError(f"unknown family {family!r}")


def _pi(X: RhoJet, J: int) -> RhoJet:
    F = math.floor(X.gamma)
    c2s = [(X.gamma - 2 * i) ** 2 for i in range(F + 1) if i != J]
    return _apply_factors(X, c2s, float((-1) ** F))


def boundary_op_large(U: RhoJet, j: int, family: str = INTEGER, Utilde: RhoJet | None = None) -> ZonalFunction:
    """Large-index B_{2j} (integer family) or B_{2j+2[gamma]} (fractional family).

    (1/b) times the designated coefficient of Pi_J(rho^{n/2-gamma}(U - Utilde)),
    plus c^{-1} P applied to the partner small-index value.
    """
    n = U.geometry.n
    J, off, partner, pfam, porder = _large_setup(U.gamma, j, family)
    if Utilde is None:
        Utilde = dirichlet_extend(small_data(U), order=U.order, L=U.L)
    W = (U - Utilde).shifted(n / 2 - U.gamma)
    X = _pi(W, J)
    coef = _extract(X, n / 2 + off) / _b_large(U.gamma, J)
    small = boundary_op_small(U, partner, pfam)
    return ZonalFunction(U.geometry, coef) + c_gamma_inv(porder) * apply_gjms(small, porder)


def intrinsic_identity_residual(U: RhoJet, j: int, family: str = INTEGER) -> float:
    """For polyharmonic U: max-norm gap between (1/b) Pi_J(rho^{n/2-gamma}U) at the large
    exponent and c^{-1} P applied to the partner small-index value."""
    n = U.geometry.n
    J, off, partner, pfam, porder = _large_setup(U.gamma, j, family)
    X = _pi(U.shifted(n / 2 - U.gamma), J)
    lhs = _extract(X, n / 2 + off) / _b_large(U.gamma, J)
    rhs = c_gamma_inv(porder) * apply_gjms(boundary_op_small(U, partner, pfam), porder).coeffs
    m = min(lhs.size, rhs.size)
    scale = max(1.0, float(np.max(np.abs(rhs))))
    return float(np.max(np.abs(lhs[:m] - rhs[:m]))) / scale


def _B_low(U: RhoJet, J: int, Ut: RhoJet) -> ZonalFunction:
    """B_{2J}(U) for J = 0..F."""
    h = math.floor(U.gamma / 2)
    return boundary_op_small(U, J, INTEGER) if J <= h else boundary_op_large(U, J, INTEGER, Ut)


def _B_high(U: RhoJet, J: int, Ut: RhoJet) -> ZonalFunction:
    """B_{2gamma-2J}(U) = B_{2(F-J)+2[gamma]}(U) for J = 0..F."""
    F, _, h = _parts(U.gamma)
    return boundary_op_large(U, F - J, FRACTIONAL, Ut) if J <= h else boundary_op_small(U, F - J, FRACTIONAL)


# --------------------------------------------------------------------------
# Dirichlet form

@dataclass
class DirichletForm:
    value: float
    interior: float
    boundary_terms: list
    zeta_form: float

    @property
    def identity_gap(self) -> float:
        """value - interior - zeta_form; zero exactly when the integral identity holds with A1 = interior."""
        return self.value - self.interior - self.zeta_form


def _is_polyharmonic(U: RhoJet, Ut: RhoJet, tol: float) -> bool:
    d = (U - Ut).max_abs()
    return d <= tol * max(1.0, U.max_abs())


def zeta_form(U: RhoJet, V: RhoJet) -> float:
    """Sum over J of zeta_J times the integral of B P B built from the small-index data."""
    gamma = U.gamma
    F, _, h = _parts(gamma)
    co = boundary_coeffs(gamma)
    du, dv = small_data(U), small_data(V)
    total = 0.0
    for J in range(F + 1):
        if J <= h:
            a, b = du.integer[J], dv.integer[J]
        else:
            a, b = du.fractional[F - J], dv.fractional[F - J]
        total += co.zeta[J] * a.inner(apply_gjms(b, _pairing_order(gamma, J)))
    return total


def dirichlet_form(U: RhoJet, V: RhoJet, interior: float | None = None, tol: float = 1e-10) -> DirichletForm:
    """Q(U, V) = interior - sum_{J<=h} sigma_J <B_{2J}U, B_{2g-2J}V> - sum_{J>h} sigma_J <B_{2J}V, B_{2g-2J}U>.

    ``interior`` is the weighted bulk integral; it vanishes for polyharmonic U
    and must be supplied otherwise (NotPolyharmonic).
    """
    if abs(U.gamma - V.gamma) > 1e-14 or U.geometry != V.geometry:
        raise JetMisalignment("U and V differ in gamma or sphere")
    gamma = U.gamma
    F, _, h = _parts(gamma)
    co = boundary_coeffs(gamma)
    Ut = dirichlet_extend(small_data(U), order=U.order, L=U.L)
    Vt = dirichlet_extend(small_data(V), order=V.order, L=V.L)
    if interior is None:
        if not (_is_polyharmonic(U, Ut, tol) and _is_polyharmonic(V, Vt, tol)):
            raise NotPolyharmonic("non-polyharmonic input needs the interior integral")
        interior = 0.0
    terms = []
    value = interior
    for J in range(F + 1):
        if J <= h:
            t = co.sigma[J] * _B_low(U, J, Ut).inner(_B_high(V, J, Vt))
        else:
            t = co.sigma[J] * _B_low(V, J, Vt).inner(_B_high(U, J, Ut))
        terms.append(-t)
        value -= t
    return DirichletForm(value, interior, terms, zeta_form(U, V))


# --------------------------------------------------------------------------
# trace inequalities

@dataclass
class TraceDeficitReport(DeficitReport):
    terms: list = field(default_factory=list)
    notes: list = field(default_factory=list)


def _term_rhs(f: ZonalFunction, order: float, zeta: float, tol: float) -> tuple[str, float]:
    n = f.geometry.n
    half = n / 2
    k = order - half
    if not np.any(f.coeffs):
        return "vanishing", 0.0
    if abs(k) < _INT_TOL:
        rep = beckner_deficit(f)
        return "beckner", zeta * 2 * math.factorial(n) * f.geometry.volume * rep.rhs
    if k < 0:
        return "sobolev", zeta * sobolev_deficit(f, order).rhs
    if abs(k - round(k)) < _INT_TOL:
        return "resonant", 0.0
    if k < 2:
        return "reverse-sobolev", zeta * sobolev_deficit(f, order).rhs
    if float(np.max(np.abs(f.coeffs))) > tol:
        raise UnimplementedCase(f"order {order:.6g} > n/2 + 2 needs vanishing data here")
    return "vanishing", 0.0


def trace_deficit(data: BoundaryData, tol: float = 1e-12, order: int | None = None) -> TraceDeficitReport:
    """Q(U,U) for the polyharmonic U with the given data, minus the sharp right-hand side.

    Each boundary pairing of order o = |gamma - 2J| contributes zeta_J times the
    sharp Sobolev term (o < n/2), the Beckner term (o = n/2) or the reverse
    Sobolev term (n/2 < o < n/2 + 2, positive data); resonant orders o - n/2 in N
    contribute nothing, and larger orders require the datum to vanish.  A zero
    datum contributes nothing at any order; when every term is resonant or
    vanishing the right-hand side is the empty sum 0 and a warning is issued.
    """
    gamma = data.gamma
    geo = data.geometry
    F, _, h = _parts(gamma)
    co = boundary_coeffs(gamma)
    U = dirichlet_extend(data, order=order)
    form = dirichlet_form(U, U)
    terms, notes = [], []
    rhs = 0.0
    for J in range(F + 1):
        f = data.integer[J] if J <= h else data.fractional[F - J]
        o = _pairing_order(gamma, J)
        kind, r = _term_rhs(f, o, co.zeta[J], tol)
        lhs_j = co.zeta[J] * f.inner(apply_gjms(f, o))
        terms.append({"J": J, "order": o, "kind": kind, "lhs": lhs_j, "rhs": r, "deficit": lhs_j - r})
        rhs += r
    if all(t["kind"] in ("resonant", "vanishing") for t in terms):
        notes.append("no sharp term applies; right-hand side is the empty sum 0")
        warnings.warn(notes[-1], stacklevel=2)
    return TraceDeficitReport(
        "trace", form.value, rhs, {"n": geo.n, "gamma": gamma, "L": data.L},
        None, {"zeta_form": form.zeta_form, "form_gap": form.value - form.zeta_form},
        terms, notes,
    )


# --------------------------------------------------------------------------
# conformal covariance for rho_hat = e^tau rho

def _zonal_product_rows(a: np.ndarray, b: np.ndarray, geo: SphereGeometry, grid, L_out: int) -> np.ndarray:
    ta = gegenbauer_table(a.size - 1, geo.mu, grid.nodes)
    tb = gegenbauer_table(b.size - 1, geo.mu, grid.nodes)
    return analyze((a @ ta) * (b @ tb), grid, geo, L_out, warn_tol=np.inf).coeffs


def _exp_jet(tau0: ZonalFunction, tau2: ZonalFunction | None, c: float, order: int, L: int, grid) -> list:
    """Levels of exp(c (tau0 + rho^2 tau2)) as coefficient rows of degree <= L."""
    geo = tau0.geometry
    base = np.exp(c * tau0.evaluate(grid.nodes))
    t2 = tau2.evaluate(grid.nodes) if tau2 is not None else np.zeros_like(base)
    rows = []
    for k in range(order + 1):
        vals = base * (c * t2) ** k / math.factorial(k)
        rows.append(analyze(vals, grid, geo, L, warn_tol=np.inf).coeffs)
    return rows


def _multiply_even(U: RhoJet, E: list, grid, L_out: int) -> RhoJet:
    out = RhoJet.zeros(U.geometry, U.gamma, U.alpha, U.order, L_out)
    for m in range(U.order + 1):
        for a in range(m + 1):
            e = E[m - a]
            for src, dst in ((U.branch1, out.branch1), (U.branch2, out.branch2)):
                if np.any(src[a] != 0):
                    dst[m] += _zonal_product_rows(src[a], e, U.geometry, grid, L_out)
    return out


@dataclass
class CovarianceCheck:
    hat: ZonalFunction
    transformed: ZonalFunction
    lower_residual: float

    @property
    def residual(self) -> float:
        d = float(np.max(np.abs((self.hat - self.transformed).coeffs)))
        return max(d, self.lower_residual)


def conformal_covariance_check(U: RhoJet, tau0: ZonalFunction, j: int, family: str = INTEGER,
                               tau2: ZonalFunction | None = None, L_out: int | None = None,
                               M: int = 256) -> CovarianceCheck:
    """Small-index B for rho_hat = e^tau rho, tau = tau0 + rho^2 tau2, two ways.

    hat route: apply the factor product to rho_hat^{n/2-gamma} U, check that every
    term below the extracted power vanishes, and read rho_hat^{-e} times the image at
    rho = 0.  transformed route: e^{-e tau0} B(e^{(n/2-gamma) tau} U) with B the
    operator built from rho.
    """
    if j not in _small_range(U.gamma, family):
        raise DomainError("covariance is checked for small indices only")
    geo = U.geometry
    n = geo.n
    gamma = U.gamma
    L_out = L_out or U.L + 12
    grid = make_grid(geo, M)
    E = _exp_jet(tau0, tau2, n / 2 - gamma, U.order, L_out, grid)
    EU = _multiply_even(U, E, grid, L_out)
    e = _small_exponent(n, gamma, j, family)
    b = _b_small_product(gamma, j, family)
    back = np.exp(-e * tau0.evaluate(grid.nodes))

    X = _apply_factors(EU.shifted(n / 2 - gamma), _small_factors(gamma, j, family))
    lower = lower_terms_residual(X, e)
    raw = ZonalFunction(geo, _extract(X, e))
    hat = analyze(back * raw.evaluate(grid.nodes), grid, geo, L_out, warn_tol=np.inf) / b

    Bv = boundary_op_small(EU, j, family)
    transformed = analyze(back * Bv.evaluate(grid.nodes), grid, geo, L_out, warn_tol=np.inf)
    return CovarianceCheck(hat, transformed, lower)


# --------------------------------------------------------------------------
# global radial profiles for the energy identity

def _sympy():
    import sympy as sp
    return sp


def _rational(x: float):
    sp = _sympy()
    return sp.nsimplify(x, rational=True, tolerance=1e-15)


def _tilde_laplacian_x(R, x, beta, n: int, l: int):
    """Delta~ on rho^beta R(rho^2) B_l, returned as the new R (x = rho^2)."""
    sp = _sympy()
    Rx = sp.diff(R, x)
    Rxx = sp.diff(Rx, x)
    y = 1 - x / 4
    drift = (1 - n) - sp.Rational(n, 2) * x / y
    out = (4 * x ** 2 * Rxx + 2 * x * Rx + 4 * beta * x * Rx + beta * (beta - 1) * R
           + drift * (beta * R + 2 * x * Rx) - l * (l + n - 1) * x / y ** 2 * R + sp.Rational(n * n, 4) * R)
    return sp.cancel(sp.together(out))


@lru_cache(maxsize=64)
def _lplus_profile(n: int, gamma: float, l: int, p: int, N: int):
    """L+(rho^beta (1-rho^2/4)^N B_l) = rho^{beta + 2k} R(rho^2) B_l with beta = n/2 - gamma + 2p.

    Returns (R as a numpy callable, beta, k); k is the exact order of vanishing
    at rho = 0 divided out of the profile.
    """
    sp = _sympy()
    x = sp.Symbol("x")
    g = _rational(gamma)
    beta = sp.Rational(n, 2) - g + 2 * p
    R = (1 - x / 4) ** N
    F = math.floor(gamma)
    for i in range(F + 1):
        c2 = (g - 2 * i) ** 2
        R = sp.cancel(-_tilde_laplacian_x(R, x, beta, n, l) + c2 * R)
    num, den = sp.fraction(sp.cancel(R))
    poly = sp.Poly(num, x)
    k = min(m[0] for m in poly.monoms()) if not poly.is_zero else 0
    R = sp.cancel(num / x ** k / den)
    return sp.lambdify(x, R, "numpy"), float(beta), int(k)


def _jacobi_on(b: float, power: float, M: int):
    """Nodes/weights for integral over (0, b) of rho^power g(rho)."""
    rule = gauss_jacobi_rule(0.0, power, M)
    rho = b * (1 + rule.nodes) / 2
    w = rule.weights * (b / 2) ** (power + 1)
    return rho, w


def _extension_pieces(n: int, gprime: float, l: int, rho: np.ndarray):
    """(A, B) with the extension of B_l equal to rho^{n/2-g'} A + rho^{n/2+g'} B for rho < 2."""
    z = rho * rho / 4
    damp = (1 - z) ** l
    A = np.array([hyp2f1(l + n / 2 - gprime, l + n / 2, 1 - gprime, float(v)) for v in z]) * damp
    B = np.array([hyp2f1(l + n / 2 + gprime, l + n / 2, 1 + gprime, float(v)) for v in z]) * damp
    return A, branch_two_lead(n, gprime, l) * B


def _extension_direct(n: int, gprime: float, l: int, rho: np.ndarray) -> np.ndarray:
    r = (2 - rho) / (2 + rho)
    rho0 = (1 - r * r) / 2
    phi = np.array([phi_mode(n, gprime, l, float(v)) for v in r * r])
    return rho0 ** (n / 2 - gprime) * phi * r ** l


@dataclass
class EnergyCheck:
    eps: float
    Q: float
    zeta_form: float
    A1: float
    interior: float

    @property
    def excess(self) -> float:
        """Q(U,U) minus the zeta-weighted boundary form."""
        return self.Q - self.zeta_form

    @property
    def identity_residual(self) -> float:
        return abs(self.excess - self.A1) / max(1.0, abs(self.Q))


def perturbation_jet(geometry: SphereGeometry, gamma: float, l: int, N: int, eps: float,
                     order: int, L: int) -> RhoJet:
    """Jet of eps rho^{2h+2} (1-rho^2/4)^N B_l, h = floor(gamma/2)."""
    h = math.floor(gamma / 2)
    jet = RhoJet.zeros(geometry, gamma, 0.0, order, L)
    row = np.zeros(l + 1)
    for k in range(N + 1):
        row[l] = eps * math.comb(N, k) * (-0.25) ** k
        jet.add_term(2 * h + 2 + 2 * k, row)
    jet.truncated = False
    return jet


def energy_identity_check(data: BoundaryData, l: int, eps: float, N: int | None = None,
                          M: int = 160, order: int | None = None) -> EnergyCheck:
    """Q(U,U) for U = Utilde + eps rho^{2h+2}(1-rho^2/4)^N B_l from its definition.

    The bulk integral of rho^{n/2-gamma} U L+(rho^{n/2-gamma}(U - Utilde)) is
    computed by radial quadrature on the exact profiles (branch-split near the
    boundary, hypergeometric series near the centre); the boundary pairings use
    the jets.  A1 is the bulk integral of W L+ W with W = rho^{n/2-gamma}(U - Utilde).
    """
    gamma = data.gamma
    geo = data.geometry
    n = geo.n
    F, fr, h = _parts(gamma)
    N = l + 2 * (F + 1) if N is None else N
    if N < l or (N - l) % 2:
        raise DomainError("N must satisfy N >= l and N = l mod 2 for a smooth perturbation")
    order = default_order(gamma) + N if order is None else order
    L = max(data.L, l)
    Rplus, beta, k = _lplus_profile(n, gamma, l, h + 1, N)
    norm = geo.basis_norm(l)
    measure_pow = -n - 1

    def lplus_w(rho):
        return eps * rho ** (beta + 2 * k) * Rplus(rho * rho)

    def vol(rho):
        return (1 - rho * rho / 4) ** n

    # A1 over (0, 2): integrand rho^{2 beta - n - 1} x smooth
    p1 = 2 * beta + 2 * k + measure_pow
    rho, w = _jacobi_on(2.0, p1, M)
    w_prof = eps * (1 - rho * rho / 4) ** N
    A1 = norm * float(np.sum(w * w_prof * eps * Rplus(rho * rho) * vol(rho)))

    # bulk pairing with Utilde on (0, 1]: per branch piece rho^{e} S(rho)
    base_pow = (n / 2 - gamma) + beta + 2 * k + measure_pow
    A2 = 0.0
    for gprime, _, _, f in data.items():
        a = float(f.coeffs[l]) if l <= f.L else 0.0
        if a == 0.0:
            continue
        for sgn in (-1, 1):
            e = gamma + sgn * gprime
            rr, ww = _jacobi_on(1.0, base_pow + e, M)
            A, B = _extension_pieces(n, gprime, l, rr)
            S = A if sgn < 0 else B
            A2 += a * float(np.sum(ww * S * eps * Rplus(rr * rr) * vol(rr)))
        x, wx = np.polynomial.legendre.leggauss(M)
        rr = 1.5 + 0.5 * x
        u = rr ** (gamma - n / 2) * _extension_direct(n, gprime, l, rr)
        A2 += a * 0.5 * float(np.sum(wx * rr ** (n / 2 - gamma) * u * lplus_w(rr) * rr ** measure_pow * vol(rr)))
    A2 *= norm
    interior = A1 + A2

    Ut = dirichlet_extend(data, order=order, L=L)
    U = Ut + perturbation_jet(geo, gamma, l, N, eps, order, L)
    form = dirichlet_form(U, U, interior=interior)
    return EnergyCheck(eps, form.value, form.zeta_form, A1, interior)


# --------------------------------------------------------------------------
# two-dimensional quadrature checks

def _tilde_laplacian_sym(expr, rho, t, n: int):
    sp = _sympy()
    y = 1 - rho ** 2 / 4
    lap_s = (1 - t ** 2) * sp.diff(expr, t, 2) - n * t * sp.diff(expr, t)
    return (rho ** 2 * sp.diff(expr, rho, 2) + ((1 - n) * rho - sp.Rational(n, 2) * rho ** 3 / y) * sp.diff(expr, rho)
            + rho ** 2 / y ** 2 * lap_s + sp.Rational(n * n, 4) * expr)


@dataclass
class GreenCheck:
    volume: float
    boundary: float

    @property
    def residual(self) -> float:
        return abs(self.volume - self.boundary)


def _leading_power(f, probe_t: float = 0.3141) -> float:
    """Exponent p with f(rho, t) ~ rho^p as rho -> 0, read off two small radii."""
    r1, r2 = 1e-4, 1e-3
    a, b = abs(float(f(r1, probe_t))), abs(float(f(r2, probe_t)))
    if a == 0.0 or b == 0.0:
        return 0.0
    p = math.log(b / a) / math.log(r2 / r1)
    return float(round(p)) if abs(p - round(p)) < 1e-4 else p


def green_identity_check(U, V, rho, t, n: int, rho_power: float | None = None, M: int = 120,
                         Mt: int | None = None) -> GreenCheck:
    """Both sides of the Green formula on the ball in (rho, t) for zonal sympy expressions.

    volume = integral of (U Delta~ V - V Delta~ U) dV_{g_B};
    boundary = -integral over S^n of lim_{rho->0} rho^{1-n}(U d_rho V - V d_rho U).
    ``rho_power`` is the integrand's leading power at rho = 0, absorbed by the radial
    Gauss-Jacobi rule; estimated from the integrand when omitted.
    """
    sp = _sympy()
    geo = SphereGeometry(n)
    integrand = (U * _tilde_laplacian_sym(V, rho, t, n) - V * _tilde_laplacian_sym(U, rho, t, n)) \
        * (1 - rho ** 2 / 4) ** n * rho ** (-n - 1)
    f = sp.lambdify((rho, t), integrand, "numpy")
    if rho_power is None:
        rho_power = max(_leading_power(f), -0.999)
    grid = make_grid(geo, Mt or 64)
    r, w = _jacobi_on(2.0, rho_power, M)
    rr, tt = np.meshgrid(r, grid.nodes, indexing="ij")
    vals = np.asarray(f(rr, tt), dtype=float) / rr ** rho_power
    radial = w @ vals
    volume = integrate(radial, grid, geo)
    flux = sp.simplify(rho ** (1 - n) * (U * sp.diff(V, rho) - V * sp.diff(U, rho)))
    edge = sp.limit(flux, rho, 0)
    g = sp.lambdify(t, edge, "numpy")
    edge_vals = np.broadcast_to(np.asarray(g(grid.nodes), dtype=float), grid.nodes.shape)
    return GreenCheck(volume, -integrate(edge_vals, grid, geo))


def hardy_check(V, r, t, n: int, edge_power: float = 0.0, M: int = 160, Mt: int = 64) -> DeficitReport:
    """integral |grad V|^2 dx against integral V^2 / (1-|x|^2)^2 dx on the unit ball in R^{n+1}.

    V is a sympy expression in (r, t); ``edge_power`` p declares integrands
    behaving like (1-r)^p at the sphere.
    """
    sp = _sympy()
    geo = SphereGeometry(n)
    grad2 = sp.diff(V, r) ** 2 + (1 - t ** 2) * sp.diff(V, t) ** 2 / r ** 2
    g1 = sp.lambdify((r, t), grad2 * r ** n, "numpy")
    g2 = sp.lambdify((r, t), V ** 2 / (1 - r ** 2) ** 2 * r ** n, "numpy")
    grid = make_grid(geo, Mt)
    rule = gauss_jacobi_rule(edge_power, 0.0, M)
    rad = (1 + rule.nodes) / 2
    w = rule.weights * 0.5 ** (edge_power + 1)
    rr, tt = np.meshgrid(rad, grid.nodes, indexing="ij")
    corr = (1 - rr) ** edge_power
    lhs = integrate(w @ (np.asarray(g1(rr, tt), dtype=float) * np.ones_like(rr) / corr), grid, geo)
    rhs = integrate(w @ (np.asarray(g2(rr, tt), dtype=float) * np.ones_like(rr) / corr), grid, geo)
    return DeficitReport("hardy", lhs, rhs, {"n": n, "M": M})
