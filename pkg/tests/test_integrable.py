import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from radplasma.integrable import (
    ColeHopfError,
    HodographError,
    burgers_defect,
    burgers_fd,
    burgers_solve,
    constant_flux_scenario,
    from_potential,
    heat_convolve,
    hodograph,
    hodograph_path,
    integrable_scenario,
    inverse_hodograph,
    kink,
    potential_defect,
    roundtrip_compare,
    to_potential,
)
from radplasma.model import Field, Grid


def test_kink_oracle():
    c = 1.0
    psi = np.linspace(-40, 40, 8001)
    phi = np.linspace(-5, 5, 201)
    sol = burgers_solve(kink(c, psi, 0.0), psi, [0.5, 1.0], phi)
    for i, t in enumerate(sol.times):
        assert np.max(np.abs(sol.x[i] - kink(c, phi, t))) < 1e-6


@settings(max_examples=10)
@given(st.floats(0.5, 2.0), st.floats(0.1, 1.0))
def test_kink_property(c, t):
    psi = np.linspace(-40, 40, 8001)
    phi = np.linspace(-3, 3, 61)
    sol = burgers_solve(kink(c, psi, 0.0), psi, [t], phi)
    assert np.max(np.abs(sol.x[0] - kink(c, phi, t))) < 1e-6


def test_cole_hopf_matches_finite_differences():
    psi = np.linspace(-20, 20, 4001)
    x0 = 1.0 + 0.5 * np.exp(-psi**2)
    core = np.abs(psi) < 8
    ch = burgers_solve(x0, psi, [0.3], psi[core])
    fd = burgers_fd(x0, psi, 0.3)
    assert np.max(np.abs(ch.x[0] - fd[core])) < 1e-6


def test_burgers_defect_of_kink():
    phi = np.linspace(-5, 5, 401)
    times = np.linspace(0.0, 1.0, 201)
    X = np.array([kink(1.0, phi, t) for t in times])
    assert np.max(np.abs(burgers_defect(phi, times, X))) < 1e-3


def test_cole_hopf_guards():
    psi = np.linspace(-5, 5, 101)
    with pytest.raises(ColeHopfError):
        burgers_solve(np.ones_like(psi), psi, [1e-6])
    with pytest.raises(ColeHopfError):
        burgers_solve(np.ones_like(psi), psi, [5.0])


def test_heat_convolve_conserves_mass():
    th = np.exp(-np.linspace(-3, 3, 301) ** 2)
    out = heat_convolve(th, 0.02, 0.05)
    assert abs(out.sum() - th.sum()) < 1e-12 * th.sum()
    assert np.array_equal(heat_convolve(th, 0.02, 0.0), th)


@given(st.floats(-3, 3))
def test_potential_round_trip(gauge):
    g = Grid(0.0, 1.0, 64)
    u = Field(g, 0.0, 1.5 + 0.3 * np.sin(np.pi * g.centers))
    p = to_potential(u, gauge)
    assert p.values[0] == gauge
    assert np.allclose(from_potential(p).values, u.values, atol=1e-12)


def test_potential_requires_one_sign():
    g = Grid(0.0, 1.0, 16)
    with pytest.raises(HodographError):
        to_potential(Field(g, 0.0, np.sin(2 * np.pi * g.centers)))


def test_potential_equation_defect_of_uniform_solution():
    # u = c + t gives phi = (c + t) x, which solves phi_t = phi_xx / phi_x^2 + x
    x = np.linspace(0, 1, 41)
    t = np.linspace(0, 0.1, 11)
    phi = (1.0 + t[:, None]) * x[None, :]
    assert np.max(np.abs(potential_defect(t, x, phi))) < 1e-12


def test_hodograph_round_trip_and_monotone_guard():
    x = np.linspace(0, 1, 201)
    phi = x + 0.1 * np.sin(np.pi * x)
    st_ = hodograph(x, phi, n=401)
    assert st_.monotone and st_.sign == 1
    assert np.allclose(inverse_hodograph(st_, x), phi, atol=1e-8)
    with pytest.raises(HodographError):
        hodograph(x, np.sin(3 * x))
    dec = hodograph(x, -phi)
    assert dec.sign == -1


def test_scenarios():
    sc = integrable_scenario()
    assert sc.A.kind == "monomial" and sc.bc_left.value == 0
    assert integrable_scenario(b=3.0).A.kind == "shifted_inv_square"
    assert constant_flux_scenario(0.5).bc_right.value == -0.5


def test_roundtrip_smooth_positive():
    rep = roundtrip_compare(lambda x: 1.0 + 0.1 * np.sin(np.pi * x), 0.1, 256)
    assert rep.discrepancy < 1e-3
    # the direct mean carries the midpoint sampling error of the initial data
    assert rep.mean_hodograph == pytest.approx(1.1 + 0.2 / np.pi, abs=1e-12)
    assert rep.mean_direct == pytest.approx(rep.mean_hodograph, abs=1e-6)
    assert abs(rep.gauge) < 1e-8 and rep.certificate > 0


def test_roundtrip_uniform_is_exact():
    rep = roundtrip_compare(lambda x: 2.0 + 0 * x, 0.1, 64, steps=20)
    assert rep.discrepancy < 1e-12


def test_roundtrip_shifted_variant():
    b = 3.0
    rep = roundtrip_compare(lambda x: b - (1.0 + 0.1 * np.cos(np.pi * x)), 0.1, 128, b=b)
    assert rep.discrepancy < 1e-3


def test_hodograph_path_negative_u():
    x = np.linspace(0.05, 0.95, 7)
    u, mean, gauge, cert = hodograph_path(lambda z: -1.0 + 0 * z, 0.05, x)
    assert np.allclose(u, -1.0 + 0.05, atol=1e-10)
