import math
import warnings

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gjmslab.errors import DomainError, IntegerGamma
from gjmslab.scattering import (
    BallPoint,
    NearBoundaryWarning,
    PoissonSolution,
    branch_two_lead,
    boundary_trend,
    c_gamma,
    extension_jet,
    extension_jet_function,
    mode_ode_residual,
    origin_value_integral,
    origin_value_series,
    pde_residual,
    phi_mode,
    scattering_apply,
    scattering_multipliers,
    write_solution_csv,
)
from gjmslab.zonal import SphereGeometry, ZonalFunction

from oracles import basis, multiplier, sphere_integral, volume

CELLS = [(n, g) for n in (1, 2, 3) for g in (0.4, 1.3, 2.6)]


def poisson_oracle(n, gamma, coeffs, r, t):
    """Integral formula with Funk-Hecke eigenvalues from adaptive quadrature."""
    s = n / 2 + gamma
    pref = math.pi ** (-n / 2) * 2 ** (-s) * math.gamma(s) / math.gamma(gamma)
    kern = lambda tau: ((1 - r * r) / (1 + r * r - 2 * r * tau)) ** s
    total = 0.0
    for l, a in enumerate(coeffs):
        lam = sphere_integral(lambda tau: kern(tau) * basis(l, n, tau) / basis(l, n, 1.0), n)
        total += a * lam * basis(l, n, t)
    return pref * total


def c_gamma_oracle(g):
    return float(mp.mpf(2) ** (2 * g) * mp.gamma(g) / mp.gamma(-g))


def test_ball_point():
    p = BallPoint.from_rho(0.5, 0.2)
    assert p.r == pytest.approx(0.6)
    assert p.rho == pytest.approx(0.5)
    assert p.rho0 == pytest.approx(0.32)
    # rho0 = rho / (1 + rho/2)^2
    assert p.rho0 == pytest.approx(0.5 / 1.25 ** 2)
    with pytest.raises(DomainError):
        BallPoint(1.0, 0.0)
    with pytest.raises(DomainError):
        BallPoint(0.5, 1.5)


@pytest.mark.parametrize("g", [0.25, 0.5, 1.3, 2.6, 3.7])
def test_c_gamma(g):
    assert c_gamma(g) == pytest.approx(c_gamma_oracle(g), rel=1e-13)


def test_c_gamma_examples():
    assert c_gamma(0.5) == pytest.approx(-1.0, abs=1e-15)
    with pytest.raises(IntegerGamma):
        c_gamma(2.0)


def test_solution_rejects_integer():
    with pytest.raises(IntegerGamma):
        PoissonSolution(SphereGeometry(1), 1.0, ZonalFunction.constant(SphereGeometry(1), 1.0))


@pytest.mark.parametrize("n,g", CELLS)
def test_phi_normalization(n, g):
    for l in (0, 1, 5):
        assert phi_mode(n, g, l, 1.0) == 1.0
        assert phi_mode(n, g, l, 1 - 1e-12) == pytest.approx(1.0, abs=1e-5)


@pytest.mark.parametrize("n,g", CELLS)
def test_series_against_quadrature(n, g):
    geo = SphereGeometry(n)
    coeffs = [1.0, 0.4, -0.3, 0.1]
    sol = PoissonSolution(geo, g, ZonalFunction(geo, coeffs))
    for r in (0.1, 0.5, 0.9):
        for t in (-0.7, 0.0, 0.8):
            want = poisson_oracle(n, g, coeffs, r, t)
            assert sol.eval_series(r, t).item() == pytest.approx(want, rel=1e-8)
            assert sol.eval_integral(r, t).item() == pytest.approx(want, rel=1e-8)


@pytest.mark.parametrize("n,g", CELLS)
def test_origin_value(n, g):
    s = n / 2 + g
    ref = math.pi ** (-n / 2) * 2 ** (-s) * math.gamma(s) / math.gamma(g) * volume(n)
    assert origin_value_integral(n, g) == pytest.approx(ref, rel=1e-12)
    assert origin_value_series(n, g) == pytest.approx(ref, rel=1e-12)
    sol = PoissonSolution(SphereGeometry(n), g, ZonalFunction.constant(SphereGeometry(n), 1.0))
    assert sol.eval_series(0.0, 0.3).item() == pytest.approx(ref, rel=1e-12)


def _cartesian_residual(sol, x, h=2e-3):
    """-(Delta_+ + s(n-s)) u with Delta_+ written in Euclidean coordinates of R^{n+1}."""
    n = sol.geometry.n
    s = sol.s

    def u(p):
        r = float(np.linalg.norm(p))
        return sol.eval_series(r, p[-1] / r).item()

    x = np.asarray(x, dtype=float)
    lap = 0.0
    grad = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        f = [u(x + k * e) for k in (-2, -1, 0, 1, 2)]
        grad[i] = (f[0] - 8 * f[1] + 8 * f[3] - f[4]) / (12 * h)
        lap += (-f[0] + 16 * f[1] - 30 * f[2] + 16 * f[3] - f[4]) / (12 * h * h)
    q = (1 - x @ x) / 2
    val = u(x)
    hyp = q * q * lap + (n - 1) * q * (x @ grad)
    return abs(-hyp - s * (n - s) * val) / abs(val)


@pytest.mark.parametrize("n,g", CELLS)
def test_pde_cartesian(n, g):
    geo = SphereGeometry(n)
    sol = PoissonSolution(geo, g, ZonalFunction(geo, [1.0, 0.3, 0.2]))
    x = np.zeros(n + 1)
    x[0], x[-1] = 0.3, 0.4
    assert _cartesian_residual(sol, x) < 1e-6
    assert pde_residual(sol, 0.5, 0.3) < 1e-5


@pytest.mark.parametrize("n,g", CELLS)
def test_boundary_trend(n, g):
    geo = SphereGeometry(n)
    f = ZonalFunction(geo, [1.0, 0.3])
    sol = PoissonSolution(geo, g, f)
    tr = boundary_trend(sol, 0.2, ks=(3, 5, 7))
    err = np.abs(tr - f.evaluate(0.2).item())
    assert err[-1] < err[0] and err[-1] < 1e-3


def test_near_boundary_warning():
    geo = SphereGeometry(1)
    sol = PoissonSolution(geo, 0.4, ZonalFunction.constant(geo, 1.0))
    with pytest.warns(NearBoundaryWarning):
        sol.eval_integral(0.99, 0.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        sol.eval_series(0.99, 0.0)


def test_zero_datum():
    geo = SphereGeometry(2)
    sol = PoissonSolution(geo, 1.3, ZonalFunction(geo, np.zeros(4)))
    assert np.all(sol.eval_series(np.array([0.1, 0.8]), np.array([0.0, 0.5])) == 0)


@pytest.mark.parametrize("n,g", CELLS)
def test_mode_ode(n, g):
    for l in (0, 2, 6):
        assert mode_ode_residual(n, g, l, 0.4) < 1e-7


@pytest.mark.parametrize("n,g", CELLS)
def test_jet_matches_series(n, g):
    geo = SphereGeometry(n)
    rho = 0.5
    p = BallPoint.from_rho(rho, 0.3)
    for l in (0, 1, 3):
        jet = extension_jet(geo, l, g, 40)
        coeffs = np.zeros(l + 1)
        coeffs[l] = 1.0
        sol = PoissonSolution(geo, g, ZonalFunction(geo, coeffs))
        assert jet.evaluate(rho, 0.3).item() == pytest.approx(sol.eval_series(p.r, 0.3).item(), rel=1e-10)


@pytest.mark.parametrize("n,g", CELLS)
def test_jet_leading_terms(n, g):
    geo = SphereGeometry(n)
    jet = extension_jet(geo, 2, g, 4)
    assert jet.coefficient(n / 2 - g)[2] == pytest.approx(1.0)
    assert jet.coefficient(n / 2 + g)[2] == pytest.approx(branch_two_lead(n, g, 2))


@pytest.mark.parametrize("n,g", CELLS)
def test_scattering_equals_branch_two(n, g):
    ms = scattering_multipliers(n, g, 20)
    for l in range(21):
        ref = multiplier(n, g, l) / c_gamma_oracle(g)
        assert ms[l] == pytest.approx(ref, rel=1e-12, abs=1e-300)
        assert branch_two_lead(n, g, l) == pytest.approx(ref, rel=1e-10)


def test_scattering_examples():
    g1 = SphereGeometry(1)
    f = ZonalFunction(g1, [2.0, 0.0, 1.0])
    # on the circle with gamma = 1/2 the multipliers are -l
    assert np.allclose(scattering_apply(f, 0.5).coeffs, [0.0, 0.0, -2.0], atol=1e-14)
    g2 = SphereGeometry(2)
    assert scattering_apply(ZonalFunction.constant(g2, 1.0), 0.5).coeffs[0] == pytest.approx(-0.5, abs=1e-15)


def test_jet_function_linear():
    geo = SphereGeometry(2)
    f = ZonalFunction(geo, [0.5, -0.2, 0.1])
    J = extension_jet_function(f, 1.3, 6)
    assert np.allclose(J.coefficient(1 - 1.3), f.coeffs)


@given(st.sampled_from([1, 2, 3]), st.floats(min_value=0.05, max_value=3.9).filter(lambda g: abs(g - round(g)) > 1e-3),
       st.floats(min_value=0.05, max_value=0.95), st.floats(min_value=-1, max_value=1))
def test_series_integral_random(n, g, r, t):
    geo = SphereGeometry(n)
    sol = PoissonSolution(geo, g, ZonalFunction(geo, [1.0, -0.2, 0.3, 0.05]))
    a, b = sol.eval_series(r, t).item(), sol.eval_integral(r, t).item()
    assert a == pytest.approx(b, rel=1e-8, abs=1e-10 * max(1.0, abs(origin_value_series(n, g))))


def test_csv(tmp_path):
    geo = SphereGeometry(1)
    sol = PoissonSolution(geo, 0.4, ZonalFunction(geo, [1.0, 0.5]))
    p = tmp_path / "u.csv"
    write_solution_csv(p, sol, [0.2, 0.4], [0.0, 1.0])
    lines = p.read_text().splitlines()
    assert lines[0] == "r,t,u" and len(lines) == 5
    r, t, u = map(float, lines[2].split(","))
    assert u == pytest.approx(sol.eval_series(r, t).item(), rel=1e-15)
