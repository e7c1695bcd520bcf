import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from radplasma.exact import (
    EI_SWITCH,
    default_catalog,
    expint_ei,
    focusing_m1,
    focusing_uinf,
    positive_window,
    scaling_separated,
    separated_exp,
    separated_heat_flux,
    uniform,
)
from radplasma.model import (
    DomainError,
    Scenario,
    constant,
    exp_u,
    exponential,
    monomial,
    pde_residual,
    power,
)

CATALOG = default_catalog()


@pytest.mark.parametrize("sol", CATALOG, ids=lambda s: f"{s.id}-{s.params}")
def test_catalog_residual(sol):
    t, x = sol.samples(1024, seed=2)
    assert t.size == 1024
    assert np.max(np.abs(sol.residual(t, x))) < 1e-10


@pytest.mark.parametrize("sol", CATALOG, ids=lambda s: f"{s.id}-{s.params}")
def test_catalog_derivatives_match_finite_differences(sol):
    t, x = sol.samples(64, seed=5)
    h = 1e-5
    s = sol.solution
    ok = sol.valid(t, x + h) & sol.valid(t, x - h) & sol.valid(t + h, x) & sol.valid(t - h, x)
    t, x = t[ok], x[ok]
    ux = (s.u(t, x + h) - s.u(t, x - h)) / (2 * h)
    ut = (s.u(t + h, x) - s.u(t - h, x)) / (2 * h)
    uxx = (s.u_x(t, x + h) - s.u_x(t, x - h)) / (2 * h)
    for a, b in ((ux, s.u_x(t, x)), (ut, s.u_t(t, x)), (uxx, s.u_xx(t, x))):
        assert np.max(np.abs(a - b) / np.maximum(1, np.abs(b))) < 1e-6


def test_separated_heat_flux_is_uniform_in_x():
    sol = separated_exp(Scenario(exponential(1.0), exp_u(), constant(1.0), (0, 1), (0, 1)), 0.5, 0.3)
    G = sol.scenario.G
    for t in (0.0, 0.4, 0.9):
        x = np.linspace(0, 1, 11)
        q = -G(x) * np.exp(sol(t, x)) * sol.solution.u_x(t, x)
        assert np.allclose(q, separated_heat_flux(sol, t), rtol=1e-13)


def test_separated_requires_exponential_A_and_positive_log():
    with pytest.raises(ValueError):
        separated_exp(Scenario(constant(1.0), monomial(2.0), constant(1.0)), 1.0)
    with pytest.raises(DomainError):
        separated_exp(Scenario(constant(1.0), exp_u(), constant(1.0), (0, 1)), -0.5)


def test_scaling_separated_with_variable_G_uses_quadrature():
    sc = Scenario(power(1.0, 2.0).rescaled(arg_offset=1.0), exp_u(), constant(0.5), (0, 1), (0, 1))
    sol = scaling_separated(sc, c1=0.5, c0=1.0)
    t, x = sol.samples(256, seed=1)
    assert np.max(np.abs(sol.residual(t, x))) < 1e-10


def test_uniform_is_a_solution_for_any_coefficients():
    from radplasma.fixtures import row_fixtures

    for sc in row_fixtures().values():
        sol = uniform(sc, 1.3)
        t, x = sol.samples(64)
        assert np.max(np.abs(sol.residual(t, x))) < 1e-12


def test_focusing_closed_form_through_pde_residual():
    sol = focusing_m1(1.0, 1.0)
    t, x = sol.samples(256)
    assert np.max(np.abs(pde_residual(sol.scenario, sol.solution, t, x))) < 1e-10


def test_focusing_uinf_variable_v_solves_sign_flipped_equation():
    sol = focusing_uinf(2.0, 2.0, 1.0)
    t, x = sol.samples(256)
    assert np.max(np.abs(pde_residual(sol.v_scenario, sol.v_solution, t, x))) < 1e-10
    with pytest.raises(DomainError):
        focusing_uinf(c6=-1.0)


def test_positive_window():
    w = positive_window(lambda x: np.sin(x), 0.5, 7.0)
    assert len(w) == 2
    assert w[0][1] == pytest.approx(math.pi, abs=1e-12)
    assert w[1][0] == pytest.approx(2 * math.pi, abs=1e-12)


# Ei --------------------------------------------------------------------------


def _series_oracle(x):
    with mpmath.workdps(60):
        x = mpmath.mpf(x)
        return float(mpmath.euler + mpmath.log(x) + mpmath.nsum(lambda k: x**k / (k * mpmath.factorial(k)), [1, mpmath.inf]))


@pytest.mark.parametrize("x", [1e-8, 1e-3, 0.1, 0.5, 1.0, 2.5, 5.0, 7.5, 10.0, 12.5, 15.0])
def test_ei_matches_series_oracle(x):
    assert math.isclose(expint_ei(x), _series_oracle(x), rel_tol=1e-12)


@given(st.floats(1e-6, 700.0))
def test_ei_matches_arbitrary_precision(x):
    assert math.isclose(expint_ei(x), float(mpmath.ei(x)), rel_tol=1e-12)


def test_ei_continuity_at_switch():
    lo, hi = expint_ei(np.nextafter(EI_SWITCH, 0)), expint_ei(np.nextafter(EI_SWITCH, 100))
    assert math.isclose(lo, hi, rel_tol=1e-13)


def test_ei_vectorized_and_domain():
    xs = np.array([[0.5, 20.0], [45.0, 700.0]])
    out = expint_ei(xs)
    assert out.shape == (2, 2)
    with pytest.raises(DomainError):
        expint_ei(0.0)
    with pytest.raises(DomainError):
        expint_ei(-1.0)
    with pytest.raises(DomainError):
        expint_ei(710.0)
