import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from gjmslab.conformal import conformal_factor, pushforward, sobolev_weight
from gjmslab.errors import BudgetExhausted, DomainError, NonPositiveValue, UnsupportedGamma
from gjmslab.gjms import inverse_spectral_apply
from gjmslab.inequalities import (
    beckner_deficit,
    counterexample_search,
    duality_gap,
    extremal_profile,
    hls_extremal,
    nonneg_energy_check,
    reverse_hls_constant,
    reverse_hls_ratio,
    sobolev_constant,
    sobolev_deficit,
    stability_bound,
)
from gjmslab.zonal import SphereGeometry, ZonalFunction, from_callable, random_positive

from oracles import basis, multiplier, sphere_integral, volume

seeds = st.integers(min_value=0, max_value=2 ** 32 - 1)


def energy_oracle(f, gamma):
    n = f.geometry.n
    return sum(multiplier(n, gamma, l) * sphere_integral(lambda t: (c * basis(l, n, t)) ** 2, n)
               for l, c in enumerate(f.coeffs))


def norm_oracle(f, p):
    n = f.geometry.n
    return sphere_integral(lambda t: float(f.evaluate(t).item()) ** p, n) ** (1 / p)


# Sobolev ----------------------------------------------------------------------

def test_constant_is_extremal():
    g = SphereGeometry(3)
    r = sobolev_deficit(ZonalFunction.constant(g, 1.0), 1.0)
    assert r.lhs == pytest.approx(0.75 * 2 * math.pi ** 2, rel=1e-14)
    assert r.rhs == pytest.approx(0.75 * (2 * math.pi ** 2) ** (2 / 3) * (2 * math.pi ** 2) ** (1 / 3), rel=1e-13)
    assert abs(r.relative) < 1e-13


@pytest.mark.parametrize("n,gamma", [(1, 0.3), (2, 0.6), (3, 1.3), (1, 1.3), (2, 1.7), (3, 2.2), (1, 2.2), (3, 3.3)])
def test_sobolev_against_oracle(n, gamma, rng):
    g = SphereGeometry(n)
    f = random_positive(g, 4, rng)
    r = sobolev_deficit(f, gamma)
    p = 2 * n / (n - 2 * gamma)
    assert r.lhs == pytest.approx(energy_oracle(f, gamma), rel=1e-10)
    rhs = multiplier(n, gamma, 0) * volume(n) ** (2 * gamma / n) * norm_oracle(f, p) ** 2
    assert r.rhs == pytest.approx(rhs, rel=1e-10)
    assert r.deficit >= -1e-8 * abs(r.lhs)


def test_extremal_reverse_example():
    g = SphereGeometry(1)
    r = sobolev_deficit(extremal_profile(0.5, 1.8, g, L=80), 1.8)
    assert abs(r.relative) < 1e-7
    assert r.refinement is not None and len(r.refinement) == 2


def test_n1_gamma_06_is_reverse_and_positive():
    g = SphereGeometry(1)
    f = ZonalFunction(g, [1.0, 0.0, 0.2])
    r = sobolev_deficit(f, 0.6)
    assert r.name == "reverse-sobolev" and r.deficit > 0
    r = sobolev_deficit(f, 0.3)
    assert r.name == "sobolev" and r.deficit > 0


def test_unsupported_gamma():
    g = SphereGeometry(1)
    f = ZonalFunction.constant(g, 1.0)
    for gamma in (0.5, 1.5, 2.0, 2.7):
        with pytest.raises(UnsupportedGamma):
            sobolev_deficit(f, gamma)


def test_reverse_needs_positive():
    with pytest.raises(NonPositiveValue):
        sobolev_deficit(ZonalFunction(SphereGeometry(1), [0.1, 1.0]), 1.3)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_extremal_profile_properties(n):
    g = SphereGeometry(n)
    gamma = n / 2 - 0.5 if n > 1 else 0.25
    assert np.allclose(extremal_profile(0.0, gamma, g, L=4).coeffs, [1, 0, 0, 0, 0], atol=1e-14)
    prof = extremal_profile(0.5, gamma, g, L=80)
    assert prof.evaluate(1.0) * prof.evaluate(-1.0) == pytest.approx(1.0, rel=1e-10)
    pf = pushforward(ZonalFunction.constant(g, 1.0), 0.5, sobolev_weight(n, gamma), L=80)
    assert np.max(np.abs(pf.coeffs - prof.coeffs)) < 1e-10


@given(st.integers(min_value=1, max_value=3), st.floats(min_value=0.05, max_value=0.95), seeds,
       st.floats(min_value=0.01, max_value=100))
def test_deficit_scaling(n, frac, seed, c):
    g = SphereGeometry(n)
    gamma = frac * n / 2
    f = random_positive(g, 5, np.random.default_rng(seed))
    d1 = sobolev_deficit(f, gamma, 64)
    d2 = sobolev_deficit(f * c, gamma, 64)
    assert d2.deficit == pytest.approx(c * c * d1.deficit, rel=1e-10, abs=1e-10 * c * c * abs(d1.lhs))


@given(st.integers(min_value=1, max_value=3), st.sampled_from([0.2, 0.45, 0.7, 1.2, 1.35, 1.8]), seeds)
def test_random_positive_sobolev(n, pos, seed):
    g = SphereGeometry(n)
    gamma = pos * n / 2 if pos < 1 else n / 2 + (pos - 1) * 2
    if abs(gamma - n / 2 - 1) < 1e-9 or float(gamma).is_integer():
        return
    f = random_positive(g, 6, np.random.default_rng(seed))
    r = sobolev_deficit(f, gamma, 128)
    assert r.deficit >= -1e-8 * max(abs(r.lhs), abs(r.rhs))


# Beckner ----------------------------------------------------------------------

def test_beckner_constant():
    r = beckner_deficit(ZonalFunction.constant(SphereGeometry(2), 3.0))
    assert r.lhs == 0.0 and r.rhs == pytest.approx(0.0, abs=1e-15)


def test_beckner_small_epsilon_quartic():
    g = SphereGeometry(1)
    ds = [beckner_deficit(ZonalFunction(g, [0.0, e])).deficit for e in (0.1, 0.05, 0.025)]
    assert all(d >= 0 for d in ds)
    # the quadratic terms cancel; the deficit vanishes at fourth order
    assert ds[0] / ds[1] == pytest.approx(16, rel=0.05)
    assert ds[1] / ds[2] == pytest.approx(16, rel=0.02)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_beckner_extremal(n):
    g = SphereGeometry(n)
    for a in (0.3, -0.6):
        f = from_callable(lambda t: 0.7 + n * np.log(conformal_factor(a, t)), g, L=80, warn_tol=np.inf)
        assert abs(beckner_deficit(f).relative) < 1e-7


def test_beckner_against_oracle(rng):
    n = 2
    g = SphereGeometry(n)
    f = ZonalFunction(g, rng.standard_normal(5))
    r = beckner_deficit(f)
    lhs = energy_oracle(f, 1.0) / (2 * math.factorial(n) * volume(n))
    mean = f.coeffs[0]
    rhs = math.log(sphere_integral(lambda t: math.exp(float(f.evaluate(t).item()) - mean), n) / volume(n))
    assert r.lhs == pytest.approx(lhs, rel=1e-10)
    assert r.rhs == pytest.approx(rhs, rel=1e-10)


@given(st.integers(min_value=1, max_value=3), seeds)
def test_beckner_random(n, seed):
    g = SphereGeometry(n)
    c = np.random.default_rng(seed).standard_normal(7) * 0.8 ** np.arange(7)
    r = beckner_deficit(ZonalFunction(g, c))
    assert r.deficit >= -1e-8 * max(abs(r.lhs), abs(r.rhs), 1.0)


# reverse HLS ------------------------------------------------------------------

@pytest.mark.parametrize("n", [1, 2, 3])
def test_hls_constants_equality(n):
    g = SphereGeometry(n)
    one = ZonalFunction.constant(g, 1.0)
    for lam in (0.5, 1.0, 2.0):
        r = reverse_hls_ratio(one, one, lam)
        assert r.extras["ratio"] == pytest.approx(1.0, abs=1e-9)
        f = hls_extremal(0.3, lam, g, L=64)
        assert reverse_hls_ratio(f, f, lam).extras["ratio"] == pytest.approx(1.0, abs=1e-7)
    g2 = ZonalFunction(g, [1.0, 0.0, 0.3])
    assert reverse_hls_ratio(one, g2, 1.0).deficit > 0


@pytest.mark.parametrize("n", [1, 2, 3])
def test_hls_lambda_two_closed_form(n, rng):
    """|xi - eta|^2 = 2 - 2 xi.eta makes the double integral a product of moments."""
    g = SphereGeometry(n)
    f, h = random_positive(g, 4, rng), random_positive(g, 4, rng)
    F = lambda t: float(f.evaluate(t).item())
    H = lambda t: float(h.evaluate(t).item())
    ref = 2 * sphere_integral(F, n) * sphere_integral(H, n) \
        - 2 * sphere_integral(lambda t: t * F(t), n) * sphere_integral(lambda t: t * H(t), n)
    assert reverse_hls_ratio(f, h, 2.0).lhs == pytest.approx(ref, rel=1e-11)


# the kernel has a kink on the diagonal, which trips QUADPACK's roundoff estimate
@pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
def test_hls_circle_double_integral(rng):
    g = SphereGeometry(1)
    f, h = random_positive(g, 3, rng), random_positive(g, 3, rng)
    lam = 1.0
    kern = lambda a, b: abs(2 * math.sin((a - b) / 2)) ** lam
    val, _ = integrate.dblquad(lambda b, a: float(f.evaluate(math.cos(a)).item()) * float(h.evaluate(math.cos(b)).item())
                               * kern(a, b), 0, 2 * math.pi, 0, 2 * math.pi, epsabs=1e-11, epsrel=1e-11)
    assert reverse_hls_ratio(f, h, lam).lhs == pytest.approx(val, rel=1e-8)


def test_hls_constant_formula():
    for n in (1, 2, 3):
        for lam in (0.5, 1.0, 2.0):
            # constants are extremal: the constant equals the ratio at f = g = 1
            one_int = volume(n) ** 2
            lhs = sphere_integral(lambda t: (2 - 2 * t) ** (lam / 2), n) * volume(n)
            p = 2 * n / (2 * n + lam)
            assert reverse_hls_constant(n, lam) == pytest.approx(lhs / (volume(n) ** (2 / p)), rel=1e-10)
            assert one_int > 0


@given(st.integers(min_value=1, max_value=3), st.sampled_from([0.5, 1.0, 2.0]), seeds)
def test_hls_random(n, lam, seed):
    r = np.random.default_rng(seed)
    g = SphereGeometry(n)
    f, h = random_positive(g, 5, r), random_positive(g, 5, r)
    assert reverse_hls_ratio(f, h, lam).extras["ratio"] >= 1 - 1e-8


# duality ----------------------------------------------------------------------

@pytest.mark.parametrize("n", [1, 2, 3])
def test_duality_equality_case(n, rng):
    g = SphereGeometry(n)
    for frac in (0.3, 0.7):
        gamma = n / 2 + frac
        h = random_positive(g, 5, rng)
        f = -2.5 * inverse_spectral_apply(h, gamma)
        r = duality_gap(f, h, gamma)
        assert abs(r.relative) < 1e-7
        assert r.extras["identity_residual"] < 1e-9


@pytest.mark.parametrize("n", [1, 2, 3])
def test_duality_examples(n):
    g = SphereGeometry(n)
    gamma = n / 2 + 0.5
    one = ZonalFunction.constant(g, 1.0)
    r = duality_gap(one, one, gamma)
    m0 = multiplier(n, gamma, 0)
    assert r.lhs == pytest.approx(volume(n) ** 2, rel=1e-13)
    assert r.rhs == pytest.approx((-m0 * volume(n)) * (-volume(n) / m0), rel=1e-13)
    r = duality_gap(one, ZonalFunction(g, [1.0, 0.1]), gamma)
    assert r.deficit > 0


def test_duality_domain():
    one = ZonalFunction.constant(SphereGeometry(2), 1.0)
    with pytest.raises(DomainError):
        duality_gap(one, one, 2.5)


@given(st.integers(min_value=1, max_value=3), st.floats(min_value=0.05, max_value=0.95), seeds)
def test_duality_random(n, frac, seed):
    r = np.random.default_rng(seed)
    g = SphereGeometry(n)
    f, h = random_positive(g, 6, r), random_positive(g, 6, r)
    rep = duality_gap(f, h, n / 2 + frac)
    assert rep.deficit >= -1e-8 * max(abs(rep.lhs), abs(rep.rhs))
    assert rep.extras["identity_residual"] < 1e-9


# stability ----------------------------------------------------------------------

def test_stability_example():
    g = SphereGeometry(1)
    r = stability_bound(ZonalFunction(g, [1.0, 0.0, 0.1]), 1.8)
    assert r.lower_bound > 0 and r.deficit >= r.lower_bound - 1e-8
    assert r.lower_bound_agreement < 1e-7


@pytest.mark.parametrize("gamma", [1.6, 2.2])
def test_stability_extremal(gamma):
    g = SphereGeometry(1)
    f = extremal_profile(0.4, gamma, g, L=64)
    r = stability_bound(f, gamma, L=64)
    scale = abs(r.sobolev.lhs)
    assert abs(r.deficit) < 1e-8 * scale and abs(r.lower_bound) < 1e-8 * scale


def test_stability_invariance(rng):
    g = SphereGeometry(1)
    gamma = 1.8
    f = random_positive(g, 4, rng)
    fp = pushforward(f, 0.3, sobolev_weight(1, gamma), L=128, M=512)
    a, b = stability_bound(f, gamma, L=64), stability_bound(fp, gamma, L=128)
    assert b.deficit == pytest.approx(a.deficit, rel=1e-7)


def test_stability_domain():
    with pytest.raises(DomainError):
        stability_bound(ZonalFunction.constant(SphereGeometry(1), 1.0), 1.4)


@given(st.sampled_from([1.6, 1.8, 2.2, 2.4]), seeds)
def test_stability_random(gamma, seed):
    f = random_positive(SphereGeometry(1), 6, np.random.default_rng(seed))
    r = stability_bound(f, gamma, L=64)
    assert r.deficit >= r.lower_bound - 1e-8 * abs(r.sobolev.lhs)
    assert r.lower_bound >= -1e-8 * abs(r.sobolev.lhs)
    assert r.lower_bound_agreement < 1e-7


# counterexample and nonnegative energy ------------------------------------------

def test_counterexample_found():
    r = counterexample_search(2.7, SphereGeometry(1), budget=400, seed=0)
    assert r.deficit < 0
    assert all(d < 0 for d in r.refinement)
    f = ZonalFunction(SphereGeometry(1), r.extras["coeffs"])
    assert f.evaluate(np.linspace(-1, 1, 2001)).min() > 0


def test_counterexample_validation():
    g = SphereGeometry(1)
    with pytest.raises(DomainError):
        counterexample_search(3.5, g)
    with pytest.raises(DomainError):
        counterexample_search(2.2, g)
    with pytest.raises(BudgetExhausted) as exc:
        counterexample_search(2.7, g, budget=0)
    assert exc.value.best is not None


@pytest.mark.parametrize("n,gamma", [(3, 2.2), (1, 1.3), (2, 1.6)])
def test_nonneg_energy(n, gamma):
    g = SphereGeometry(n)
    one_minus_t = ZonalFunction(g, [1.0, -1.0 / (2 * g.mu) if n > 1 else -1.0])
    assert nonneg_energy_check(one_minus_t, gamma).lhs >= 0
    assert nonneg_energy_check(ZonalFunction.constant(g, 0.0), gamma).lhs == 0.0
    e = (n - 2 * gamma) / 2
    mn = conformal_factor(0.5, 1.0) ** e if e < 0 else conformal_factor(0.5, -1.0) ** e
    f = from_callable(lambda t: np.maximum(0.0, conformal_factor(0.5, t) ** e - mn), g, L=120, warn_tol=np.inf)
    assert nonneg_energy_check(f, gamma).lhs >= -1e-8 * conformal_factor(0.5, 1.0) ** abs(e)
