import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from scipy import integrate

from gjmslab.errors import AmbiguousPole, DomainError, GJMSError
from gjmslab.specfun import (
    SignedLogValue,
    gamma_ratio,
    gamma_ratio_value,
    gamma_signed,
    gauss_gegenbauer_rule,
    gauss_jacobi_rule,
    gegenbauer_eval,
    gegenbauer_norm,
    gegenbauer_table,
    hyp2f1,
    lgamma_signed,
    pochhammer,
    reciprocal_gamma,
)

mp.mp.dps = 40


def gegenbauer_oracle(l, mu, t):
    """Explicit finite sum in high precision."""
    mu, t = mp.mpf(mu), mp.mpf(t)
    total = mp.mpf(0)
    for k in range(l // 2 + 1):
        total += (-1) ** k * mp.rf(mu, l - k) / (mp.factorial(k) * mp.factorial(l - 2 * k)) * (2 * t) ** (l - 2 * k)
    return total


def rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


# gamma ------------------------------------------------------------------

def test_gamma_half_and_factorial():
    assert rel(gamma_signed(0.5).to_real(), math.sqrt(math.pi)) < 1e-14
    assert rel(gamma_signed(5).to_real(), 24.0) < 1e-14


def test_reciprocal_gamma_pole_is_exact_zero():
    r = reciprocal_gamma(-2.0)
    assert r.sign == 0 and r.is_zero and r.to_real() == 0.0


@pytest.mark.parametrize("x", [0.1, 0.5, 1.7, 3.3, 10.25, 47.5, 120.3, 171.9, -0.5, -1.3, -4.7, -10.01, -33.5])
def test_lgamma_against_mpmath(x):
    s, lg = lgamma_signed(x)
    ref = mp.gamma(x)
    assert s == (1 if ref > 0 else -1)
    assert abs(lg - float(mp.log(abs(ref)))) < 1e-13 * max(1.0, abs(lg))


@given(st.floats(min_value=-40, max_value=150, allow_nan=False))
def test_gamma_sign_and_magnitude_property(x):
    assume(abs(x - round(x)) > 1e-6 or x > 0)
    v = gamma_signed(x)
    ref = mp.gamma(x)
    assert v.sign == (1 if ref > 0 else -1)
    assert abs(v.log_mag - float(mp.log(abs(ref)))) < 1e-12 * max(1.0, abs(v.log_mag))


@given(st.floats(min_value=1e-300, max_value=1e300), st.sampled_from([1.0, -1.0]))
def test_signed_log_roundtrip(x, s):
    assert rel(SignedLogValue.from_real(s * x).to_real(), s * x) < 1e-14


def test_duplication_formula_grid():
    worst = 0.0
    for z in np.linspace(0.05, 19.95, 400):
        lhs = gamma_signed(z).to_real() * gamma_signed(z + 0.5).to_real()
        g2 = gamma_signed(2 * z).to_real()
        rhs = 2 ** (1 - 2 * z) * math.sqrt(math.pi) * g2
        worst = max(worst, abs(lhs - rhs) / abs(g2))
    assert worst < 1e-12


# ratios and Pochhammer ----------------------------------------------------

def test_gamma_ratio_examples():
    assert rel(gamma_ratio_value(3.5, -0.5), -15 / 16) < 1e-14
    assert gamma_ratio_value(2.3, 2.3) == pytest.approx(1.0, abs=1e-15)
    z = gamma_ratio(4.5, -1.0)
    assert z.sign == 0 and z.to_real() == 0.0


def test_gamma_ratio_double_pole_raises():
    with pytest.raises(GJMSError):
        gamma_ratio(-1.0, -3.0)


@given(st.floats(min_value=-30, max_value=60), st.floats(min_value=-30, max_value=60))
def test_gamma_ratio_recurrence(x, y):
    for v in (x, y, x + 1, y + 1):
        assume(abs(v - round(v)) > 1e-4 or v > 0.5)
    assume(abs(y) > 1e-3)
    lhs = gamma_ratio_value(x + 1, y + 1)
    rhs = (x / y) * gamma_ratio_value(x, y)
    assert abs(lhs - rhs) <= 1e-11 * max(abs(lhs), abs(rhs), 1e-300)


@given(st.floats(min_value=0.2, max_value=80), st.floats(min_value=0.2, max_value=80))
def test_gamma_ratio_against_mpmath(x, y):
    ref = float(mp.gamma(x) / mp.gamma(y))
    assert rel(gamma_ratio_value(x, y), ref) < 1e-12


def test_pochhammer_examples():
    assert pochhammer(3, 4) == 360
    assert pochhammer(-7.3, 0) == 1
    assert pochhammer(-2, 4) == 0


@given(st.floats(min_value=-20, max_value=20), st.integers(min_value=0, max_value=30))
def test_pochhammer_against_mpmath(a, k):
    ref = float(mp.rf(a, k))
    assert abs(pochhammer(a, k) - ref) <= 1e-12 * max(abs(ref), 1.0)


# 2F1 ------------------------------------------------------------------------

def test_hyp2f1_examples():
    assert hyp2f1(0.3, 0.7, 1.9, 0.0) == 1.0
    assert rel(hyp2f1(1, 1, 3, 1.0), 2.0) < 1e-12
    a, b, c, z = 0.3, 0.7, 1.9, 0.4
    assert rel(hyp2f1(a, b, c, z), (1 - z) ** (c - a - b) * hyp2f1(c - a, c - b, c, z)) < 1e-11


def test_hyp2f1_domain():
    with pytest.raises(DomainError):
        hyp2f1(0.5, 0.5, 1.5, 1.2)


@given(st.floats(min_value=-3, max_value=3), st.floats(min_value=-3, max_value=3),
       st.floats(min_value=0.3, max_value=6), st.floats(min_value=0.0, max_value=0.999))
def test_hyp2f1_against_mpmath(a, b, c, z):
    ref = float(mp.hyp2f1(a, b, c, z))
    got = hyp2f1(a, b, c, z)
    scale = max(abs(ref), 1e-3 * float(mp.hyp2f1(abs(a), abs(b), c, z)), 1e-12)
    assert abs(got - ref) <= 1e-10 * scale


_NEAR_ONE = [(a, b, c, z) for a, b, c in [(0.5, 1.5, 2.0), (1.2, 0.3, 1.5), (2.0, 1.0, 3.0), (0.25, -0.75, 0.5)]
             for z in (0.8, 0.95, 0.999, 1.0) if z < 1.0 or c - a - b > 0]


@pytest.mark.parametrize("a,b,c,z", _NEAR_ONE)
def test_hyp2f1_near_one(a, b, c, z):
    ref = float(mp.hyp2f1(a, b, c, z))
    assert rel(hyp2f1(a, b, c, z), ref) < 1e-10


@given(st.floats(min_value=0.1, max_value=2.0), st.floats(min_value=0.6, max_value=3.0),
       st.floats(min_value=0.01, max_value=0.6))
def test_quadratic_transformation(a, b, z):
    lhs = hyp2f1(a, b, 2 * b, 4 * z / (1 + z) ** 2)
    rhs = (1 + z) ** (2 * a) * hyp2f1(a, a + 0.5 - b, b + 0.5, z * z)
    assert rel(lhs, rhs) < 1e-10


@pytest.mark.parametrize("a,b,c", [(0.3, 0.7, 1.9), (1.5, -0.5, 2.5), (0.8, 1.1, 0.6)])
@pytest.mark.parametrize("z", [0.2, 0.5, 0.85])
def test_hyp2f1_ode(a, b, c, z):
    h = 1e-4
    f0, fp, fm = hyp2f1(a, b, c, z), hyp2f1(a, b, c, z + h), hyp2f1(a, b, c, z - h)
    d1 = (fp - fm) / (2 * h)
    d2 = (fp - 2 * f0 + fm) / h ** 2
    res = z * (1 - z) * d2 + (c - (a + b + 1) * z) * d1 - a * b * f0
    assert abs(res) < 1e-6 * max(1.0, abs(f0))


# Gegenbauer -----------------------------------------------------------------

def test_gegenbauer_examples():
    t = np.linspace(-1, 1, 7)
    assert np.allclose(gegenbauer_eval(0, 0.7, t), 1.0)
    assert np.allclose(gegenbauer_eval(1, 0.7, t), 1.4 * t)
    assert abs(gegenbauer_eval(2, 1.0, 0.5)) < 1e-15
    assert rel(gegenbauer_eval(5, 1.5, 1.0), 21.0) < 1e-14


@given(st.integers(min_value=0, max_value=40), st.floats(min_value=0.05, max_value=4.0),
       st.floats(min_value=-1, max_value=1))
def test_gegenbauer_against_mpmath(l, mu, t):
    ref = float(gegenbauer_oracle(l, mu, t))
    scale = float(gegenbauer_oracle(l, mu, 1))
    assert abs(float(gegenbauer_eval(l, mu, t)) - ref) <= 1e-12 * max(abs(scale), 1.0)


def test_chebyshev_convention_n1():
    t = np.linspace(-1, 1, 11)
    for l in range(8):
        assert np.allclose(gegenbauer_eval(l, 0.0, t), np.cos(l * np.arccos(t)), atol=1e-14)


def test_gegenbauer_norm_examples():
    assert rel(gegenbauer_norm(0, 1.0), math.pi / 2) < 1e-14
    assert rel(gegenbauer_norm(0, 0.5), 2.0) < 1e-14


@pytest.mark.parametrize("mu", [0.5, 1.0, 1.5])
def test_gegenbauer_norm_brute_force(mu):
    for l in range(21):
        val, _ = integrate.quad(lambda t: float(gegenbauer_oracle(l, mu, t)) ** 2 * (1 - t * t) ** (mu - 0.5),
                                -1, 1, limit=200, epsabs=0, epsrel=1e-13)
        assert rel(gegenbauer_norm(l, mu), val) < 1e-10


def test_gegenbauer_table_matches_eval():
    t = np.linspace(-0.9, 0.9, 5)
    tab = gegenbauer_table(12, 1.25, t)
    for l in range(13):
        assert np.allclose(tab[l], gegenbauer_eval(l, 1.25, t), rtol=1e-13, atol=1e-13)


# quadrature -----------------------------------------------------------------

def test_gegenbauer_rule_polynomial_exactness_example():
    r = gauss_gegenbauer_rule(0.5, 3)
    assert abs(r.integrate(r.nodes ** 4) - 0.4) < 1e-13


@pytest.mark.parametrize("mu", [0.5, 1.0, 1.5, 2.0, 2.75])
def test_gegenbauer_rule_exact_degree(mu):
    M = 12
    r = gauss_gegenbauer_rule(mu, M)
    assert np.all(np.diff(r.nodes) > 0)
    w0 = float(mp.beta(0.5, mu + 0.5))
    assert rel(r.weights.sum(), w0) < 1e-13
    for k in range(0, 2 * M, 2):
        exact = float(mp.beta((k + 1) / 2, mu + 0.5))
        assert rel(r.integrate(r.nodes ** k), exact) < 1e-12
        assert abs(r.integrate(r.nodes ** (k + 1))) < 1e-13


@pytest.mark.parametrize("mu", [0.5, 1.0, 1.5, 2.0])
def test_weights_positive_up_to_200(mu):
    for M in (1, 7, 64, 200):
        assert np.all(gauss_gegenbauer_rule(mu, M).weights > 0)


def test_gradshteyn_integral_cross_check():
    mu, alpha, t = 1.5, 0.8, 0.3
    # substitute x = cos(theta): sin^{2 mu - 1} d theta = (1 - x^2)^{mu - 1} dx
    r = gauss_jacobi_rule(mu - 1, mu - 1, 80)
    lhs = r.integrate((1 - 2 * t * r.nodes + t * t) ** (-alpha))
    rhs = math.gamma(mu) * math.gamma(0.5) / math.gamma(mu + 0.5) * hyp2f1(alpha, alpha - mu + 0.5, mu + 0.5, t * t)
    assert rel(lhs, rhs) < 1e-12


@given(st.floats(min_value=-0.9, max_value=3.0), st.floats(min_value=-0.9, max_value=3.0),
       st.integers(min_value=1, max_value=30))
def test_jacobi_rule_moment(alpha, beta, M):
    r = gauss_jacobi_rule(alpha, beta, M)
    exact = 2 ** (alpha + beta + 1) * float(mp.beta(alpha + 1, beta + 1))
    assert rel(r.weights.sum(), exact) < 1e-12


def test_jacobi_rule_rejects_bad_exponent():
    with pytest.raises(GJMSError):
        gauss_jacobi_rule(-1.0, 0.0, 5)
