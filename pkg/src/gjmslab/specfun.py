"""Gamma, Pochhammer, Gauss 2F1, Gegenbauer polynomials and Gaussian rules.

Everything here works in double precision.  Gamma values are carried as
(sign, log|value|) pairs so that ratios such as Gamma(l + a) / Gamma(l + b)
stay finite for large l, and 1/Gamma at a pole is an exact zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import AmbiguousPole, ConvergenceError, DomainError, PoleError

_LANCZOS_G = 7.0
_LANCZOS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
# Stirling tail coefficients B_{2k} / (2k (2k-1))
_STIRLING = (1 / 12, -1 / 360, 1 / 1260, -1 / 1680, 1 / 1188, -691 / 360360, 1 / 156)


def is_nonpositive_integer(x: float) -> bool:
    return x <= 0 and float(x).is_integer()


def _lgamma_pos(x: float) -> float:
    """log Gamma(x) for x >= 0.5."""
    if x >= 12.0:
        inv = 1.0 / x
        inv2 = inv * inv
        tail = 0.0
        p = inv
        for c in _STIRLING:
            tail += c * p
            p *= inv2
        return (x - 0.5) * math.log(x) - x + _HALF_LOG_2PI + tail
    # shift up so the Lanczos sum is evaluated where it is most accurate
    shift = 0.0
    while x < 1.5:
        shift -= math.log(x)
        x += 1.0
    xm = x - 1.0
    acc = _LANCZOS[0]
    for i in range(1, 9):
        acc += _LANCZOS[i] / (xm + i)
    t = xm + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (xm + 0.5) * math.log(t) - t + math.log(acc) + shift


def _sinpi(x: float) -> float:
    r = math.fmod(x, 2.0)
    if r < 0:
        r += 2.0
    if r == 0.0 or r == 1.0:
        return 0.0
    if r == 0.5:
        return 1.0
    if r == 1.5:
        return -1.0
    return math.sin(math.pi * r)


def lgamma_signed(x: float) -> tuple[int, float]:
    """(sign, log|Gamma(x)|); at a pole returns (0, inf)."""
    x = float(x)
    if not math.isfinite(x):
        raise DomainError(f"non-finite argument {x}")
    if is_nonpositive_integer(x):
        return 0, math.inf
    if x.is_integer() and x <= 30:
        return 1, math.log(math.factorial(int(x) - 1))
    if x >= 0.5:
        return 1, _lgamma_pos(x)
    s = _sinpi(x)
    sign = 1 if s > 0 else -1
    return sign, math.log(math.pi) - math.log(abs(s)) - _lgamma_pos(1.0 - x)


@dataclass(frozen=True)
class SignedLogValue:
    """A real number stored as sign * exp(log_mag); sign 0 means exactly zero.

    Values built from a float also keep the exact binary split |x| = m * 2^e,
    so the float round trip is exact and products of such values lose at most
    one rounding.
    """

    sign: int
    log_mag: float
    binary: tuple | None = field(default=None, compare=False, repr=False)

    @classmethod
    def from_real(cls, x: float) -> "SignedLogValue":
        if x == 0:
            return cls(0, -math.inf)
        return cls(1 if x > 0 else -1, math.log(abs(x)), math.frexp(abs(x)))

    def to_real(self) -> float:
        if self.sign == 0:
            return 0.0
        if self.binary is not None:
            return self.sign * math.ldexp(*self.binary)
        return self.sign * math.exp(self.log_mag)

    def __float__(self) -> float:
        return self.to_real()

    @property
    def is_zero(self) -> bool:
        return self.sign == 0

    @property
    def is_infinite(self) -> bool:
        return self.sign != 0 and self.log_mag == math.inf

    def reciprocal(self) -> "SignedLogValue":
        if self.sign == 0:
            raise ZeroDivisionError("reciprocal of exact zero")
        if self.log_mag == math.inf:
            return SignedLogValue(0, -math.inf)
        binary = None
        if self.binary is not None:
            m, e = math.frexp(1.0 / self.binary[0])
            binary = (m, e - self.binary[1])
        return SignedLogValue(self.sign, -self.log_mag, binary)

    def __mul__(self, other: "SignedLogValue") -> "SignedLogValue":
        if self.sign == 0 or other.sign == 0:
            return SignedLogValue(0, -math.inf)
        binary = None
        if self.binary is not None and other.binary is not None:
            m, e = math.frexp(self.binary[0] * other.binary[0])
            binary = (m, e + self.binary[1] + other.binary[1])
        return SignedLogValue(self.sign * other.sign, self.log_mag + other.log_mag, binary)

    def __truediv__(self, other: "SignedLogValue") -> "SignedLogValue":
        return self * other.reciprocal()


def gamma_signed(x: float) -> SignedLogValue:
    """Gamma(x).  At 0, -1, -2, ... the result is an unsigned infinity whose
    reciprocal is an exact zero."""
    sign, lg = lgamma_signed(x)
    if sign == 0:
        return SignedLogValue(1, math.inf)
    return SignedLogValue(sign, lg)


def reciprocal_gamma(x: float) -> SignedLogValue:
    return gamma_signed(x).reciprocal()


def gamma(x: float) -> float:
    if is_nonpositive_integer(x):
        raise PoleError(f"Gamma has a pole at {x}")
    return gamma_signed(x).to_real()


def rgamma(x: float) -> float:
    """1/Gamma(x) with exact zeros at the poles."""
    return reciprocal_gamma(x).to_real()


def pochhammer(a: float, k: int) -> float:
    """Rising factorial (a)_k."""
    if k < 0:
        raise DomainError("k must be nonnegative")
    out = 1.0
    for i in range(k):
        out *= a + i
        if out == 0.0:
            return 0.0
    return out


def gamma_ratio(num: float, den: float) -> SignedLogValue:
    """Gamma(num)/Gamma(den) with 1/Gamma(pole) = 0."""
    num_pole = is_nonpositive_integer(num)
    den_pole = is_nonpositive_integer(den)
    if num_pole and den_pole:
        raise AmbiguousPole(f"Gamma({num})/Gamma({den}) is 0/0")
    if den_pole:
        return SignedLogValue(0, -math.inf)
    if num_pole:
        raise PoleError(f"Gamma({num}) is infinite")
    diff = num - den
    if float(diff).is_integer() and abs(diff) <= 64:
        # exact finite product avoids cancellation between two log-gammas
        k = int(diff)
        if k >= 0:
            return SignedLogValue.from_real(pochhammer(den, k))
        return SignedLogValue.from_real(1.0 / pochhammer(num, -k))
    sn, ln = lgamma_signed(num)
    sd, ld = lgamma_signed(den)
    return SignedLogValue(sn * sd, ln - ld)


def gamma_ratio_value(num: float, den: float) -> float:
    return gamma_ratio(num, den).to_real()


def gamma_ratio_array(num, den) -> np.ndarray:
    num = np.broadcast_arrays(np.asarray(num, float), np.asarray(den, float))
    a, b = num
    out = np.empty(a.shape)
    for idx in np.ndindex(a.shape):
        out[idx] = gamma_ratio(a[idx], b[idx]).to_real()
    return out


# --------------------------------------------------------------------------
# Gauss hypergeometric function

_SERIES_TOL = 1e-17
_SERIES_MAX = 10_000
_SWITCH_Z = 0.75
_INTEGER_GAP = 1e-9
_PERTURB = 1e-6


def _terminates(a: float, b: float) -> int | None:
    degs = [int(-x) for x in (a, b) if is_nonpositive_integer(x)]
    return min(degs) if degs else None


def _series(a: float, b: float, c: float, z: float, max_terms: int) -> float:
    deg = _terminates(a, b)
    if is_nonpositive_integer(c) and (deg is None or deg > -c):
        raise PoleError(f"c = {c} is a pole of 2F1 and the series does not terminate first")
    total = 1.0
    term = 1.0
    quiet = 0
    for k in range(max_terms):
        term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z
        total += term
        if term == 0.0:
            return total
        if abs(term) <= _SERIES_TOL * abs(total):
            quiet += 1
            if quiet >= 2:
                return total
        else:
            quiet = 0
    raise ConvergenceError(f"2F1({a},{b};{c};{z}) series did not converge in {max_terms} terms")


def _gauss_sum(a: float, b: float, c: float) -> float:
    """F(a,b;c;1) = Gamma(c)Gamma(c-a-b)/(Gamma(c-a)Gamma(c-b)) when c-a-b > 0."""
    val = gamma_signed(c) * gamma_signed(c - a - b) * reciprocal_gamma(c - a) * reciprocal_gamma(c - b)
    return val.to_real()


def _connection(a: float, b: float, c: float, z: float) -> float:
    """1 - z transformation, valid when c - a - b is not an integer."""
    w = 1.0 - z
    d = c - a - b
    g1 = gamma_signed(c) * gamma_signed(d) * reciprocal_gamma(c - a) * reciprocal_gamma(c - b)
    g2 = gamma_signed(c) * gamma_signed(-d) * reciprocal_gamma(a) * reciprocal_gamma(b)
    t1 = g1.to_real() * _series(a, b, 1.0 - d, w, _SERIES_MAX) if not g1.is_zero else 0.0
    t2 = 0.0
    if not g2.is_zero:
        t2 = g2.to_real() * w ** d * _series(c - a, c - b, 1.0 + d, w, _SERIES_MAX)
    return t1 + t2


def hyp2f1(a: float, b: float, c: float, z: float) -> float:
    """Gauss hypergeometric function F(a, b; c; z) for real z in [0, 1]."""
    a, b, c, z = float(a), float(b), float(c), float(z)
    if not (0.0 <= z <= 1.0):
        raise DomainError(f"z = {z} outside [0, 1]")
    if z == 0.0:
        if is_nonpositive_integer(c) and _terminates(a, b) is None:
            raise PoleError(f"c = {c} is a pole of 2F1")
        return 1.0
    if _terminates(a, b) is not None:
        return _series(a, b, c, z, _SERIES_MAX)
    d = c - a - b
    if z == 1.0:
        if d <= 0:
            raise PoleError(f"F({a},{b};{c};1) diverges (c-a-b = {d})")
        return _gauss_sum(a, b, c)
    if z <= _SWITCH_Z:
        return _series(a, b, c, z, _SERIES_MAX)
    if abs(d - round(d)) > _INTEGER_GAP:
        return _connection(a, b, c, z)
    # c - a - b (nearly) an integer: the connection formula degenerates.
    if z <= 0.999:
        return _series(a, b, c, z, 400_000)
    if round(d) <= 0 and z == 1.0:
        raise PoleError("logarithmic singularity at z = 1")
    lo = _connection(a, b, c + _PERTURB, z)
    hi = _connection(a, b, c - _PERTURB, z)
    return 0.5 * (lo + hi)


def hyp2f1_taylor(a: float, b: float, c: float, order: int) -> np.ndarray:
    """Taylor coefficients of F(a,b;c;x) in powers of x, up to x**order."""
    out = np.empty(order + 1)
    out[0] = 1.0
    for k in range(order):
        out[k + 1] = out[k] * (a + k) * (b + k) / ((c + k) * (k + 1.0))
    return out


# --------------------------------------------------------------------------
# Gegenbauer polynomials

def gegenbauer_eval(l: int, mu: float, t):
    """C_l^mu(t) by the three-term recurrence.

    For mu = 0 the Chebyshev polynomial T_l(t) = cos(l theta) is returned,
    which is the basis used on the circle.
    """
    t = np.asarray(t, dtype=float)
    if l < 0:
        raise DomainError("degree must be nonnegative")
    if mu == 0:
        prev, cur = np.ones_like(t), t.copy()
        if l == 0:
            return prev
        for _ in range(1, l):
            prev, cur = cur, 2.0 * t * cur - prev
        return cur
    prev = np.ones_like(t)
    if l == 0:
        return prev
    cur = 2.0 * mu * t
    for k in range(1, l):
        prev, cur = cur, (2.0 * t * (k + mu) * cur - (k + 2.0 * mu - 1.0) * prev) / (k + 1.0)
    return cur


def gegenbauer_table(L: int, mu: float, t) -> np.ndarray:
    """Array of shape (L+1, len(t)) with rows C_0^mu .. C_L^mu."""
    t = np.atleast_1d(np.asarray(t))
    t = t.astype(np.result_type(t.dtype, np.float64))
    out = np.empty((L + 1, t.size), dtype=t.dtype)
    out[0] = 1.0
    if L == 0:
        return out
    if mu == 0:
        out[1] = t
        for k in range(1, L):
            out[k + 1] = 2.0 * t * out[k] - out[k - 1]
        return out
    out[1] = 2.0 * mu * t
    for k in range(1, L):
        out[k + 1] = (2.0 * t * (k + mu) * out[k] - (k + 2.0 * mu - 1.0) * out[k - 1]) / (k + 1.0)
    return out


def gegenbauer_norm(l: int, mu: float) -> float:
    """h_l = integral of C_l^mu(t)^2 (1-t^2)^(mu-1/2) over [-1, 1]."""
    if mu <= 0:
        if mu == 0:
            return math.pi if l == 0 else math.pi / 2
        raise DomainError("mu must be positive")
    lg = (
        math.log(math.pi)
        + (1.0 - 2.0 * mu) * math.log(2.0)
        + lgamma_signed(l + 2.0 * mu)[1]
        - math.lgamma(l + 1.0)
        - math.log(l + mu)
        - 2.0 * lgamma_signed(mu)[1]
    )
    return math.exp(lg)


# --------------------------------------------------------------------------
# Gaussian quadrature

@dataclass(frozen=True)
class QuadratureRule:
    """Nodes/weights for the weight (1-t)^alpha (1+t)^beta on [-1, 1].

    ``weight_exponent`` is alpha; for Gegenbauer rules alpha = beta = mu - 1/2.
    """

    nodes: np.ndarray
    weights: np.ndarray
    weight_exponent: float
    order: int
    beta_exponent: float | None = None

    @property
    def beta(self) -> float:
        return self.weight_exponent if self.beta_exponent is None else self.beta_exponent

    @property
    def symmetric(self) -> bool:
        return self.beta_exponent is None or self.beta_exponent == self.weight_exponent

    @property
    def mu(self) -> float:
        return self.weight_exponent + 0.5

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))


def _jacobi_recurrence(alpha: float, beta: float, M: int, dtype=float):
    """Monic recurrence coefficients (a_k, b_k) for the Jacobi weight."""
    alpha = dtype(alpha)
    beta = dtype(beta)
    k = np.arange(M, dtype=dtype)
    ab = alpha + beta
    a = np.empty(M, dtype=dtype)
    b = np.empty(M, dtype=dtype)
    a[0] = (beta - alpha) / (ab + 2)
    if M > 1:
        kk = k[1:]
        s = 2 * kk + ab
        a[1:] = (beta * beta - alpha * alpha) / (s * (s + 2))
    b[0] = dtype(2.0 ** (float(ab) + 1.0) * math.exp(
        math.lgamma(float(alpha) + 1.0) + math.lgamma(float(beta) + 1.0) - math.lgamma(float(ab) + 2.0)
    ))
    if M > 1:
        b[1] = 4 * (1 + alpha) * (1 + beta) / ((2 + ab) ** 2 * (3 + ab))
    if M > 2:
        kk = k[2:]
        s = 2 * kk + ab
        b[2:] = 4 * kk * (kk + alpha) * (kk + beta) * (kk + ab) / (s * s * (s + 1) * (s - 1))
    return a, b


def gauss_jacobi_rule(alpha: float, beta: float, M: int, extended: bool = False) -> QuadratureRule:
    """M-point Gauss rule for (1-t)^alpha (1+t)^beta, exact to degree 2M-1.

    Nodes come from the Jacobi matrix eigenvalues and are polished by Newton
    steps on the three-term recurrence; weights use the Christoffel formula.
    With ``extended`` the polishing and weights are carried in long double.
    """
    if M < 1:
        raise DomainError("M must be at least 1")
    if alpha <= -1 or beta <= -1:
        raise DomainError("Jacobi exponents must exceed -1")
    dtype = np.longdouble if extended else np.float64
    a_all, b_all = _jacobi_recurrence(alpha, beta, M + 1, dtype)
    a = a_all[:M].astype(float)
    b = b_all[:M].astype(float)
    if M == 1:
        x = np.array([a[0]])
    else:
        x = eigh_tridiagonal(a, np.sqrt(b[1:]), eigvals_only=True)
    x = np.sort(x).astype(dtype)
    sq = np.sqrt(b_all)
    for _ in range(4):
        p_prev = np.zeros_like(x)
        p = np.full_like(x, 1 / sq[0])
        d_prev = np.zeros_like(x)
        d = np.zeros_like(x)
        for k in range(M):
            back = sq[k] if k > 0 else 0
            pk = ((x - a_all[k]) * p - back * p_prev) / sq[k + 1]
            dk = (p + (x - a_all[k]) * d - back * d_prev) / sq[k + 1]
            p_prev, p = p, pk
            d_prev, d = d, dk
        step = p / d
        x = x - step
    if np.any(np.abs(step) > 1e-14 * np.maximum(1, np.abs(x))) or np.any(~np.isfinite(x)):
        raise ConvergenceError("Gauss node refinement failed to converge")
    p_prev = np.zeros_like(x)
    p = np.full_like(x, 1 / sq[0])
    sumsq = p * p
    for k in range(M - 1):
        back = sq[k] if k > 0 else 0
        pk = ((x - a_all[k]) * p - back * p_prev) / sq[k + 1]
        p_prev, p = p, pk
        sumsq += p * p
    w = 1 / sumsq
    if np.any(np.diff(x) <= 0) or np.any(np.abs(x) >= 1):
        raise ConvergenceError("Gauss nodes not strictly increasing inside (-1, 1)")
    return QuadratureRule(x, w, float(alpha), M, float(beta))


def gauss_gegenbauer_rule(mu: float, M: int) -> QuadratureRule:
    """M-point Gauss rule for the weight (1-t^2)^(mu-1/2).

    mu = 0 gives the Gauss-Chebyshev rule, which is the uniform periodic
    trapezoid rule in the angle theta = arccos t.
    """
    if M < 1:
        raise DomainError("M must be at least 1")
    if mu == 0:
        theta = (np.arange(M)[::-1] + 0.5) * math.pi / M
        return QuadratureRule(np.cos(theta), np.full(M, math.pi / M), -0.5, M)
    if mu <= -0.5:
        raise DomainError("mu must exceed -1/2")
    r = gauss_jacobi_rule(mu - 0.5, mu - 0.5, M)
    # symmetrize to remove roundoff asymmetry
    x = 0.5 * (r.nodes - r.nodes[::-1])
    w = 0.5 * (r.weights + r.weights[::-1])
    return QuadratureRule(x, w, mu - 0.5, M)


def gauss_legendre_unit(M: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights mapped to [0, 1]."""
    r = gauss_gegenbauer_rule(0.5, M)
    return 0.5 * (r.nodes + 1.0), 0.5 * r.weights
