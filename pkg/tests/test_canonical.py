import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from radplasma.canonical import (
    CaseId,
    Classification,
    EquivTransform,
    Unclassified,
    apply_equivalence,
    classify,
    compose,
    invert,
    normal_form,
)
from radplasma.exact import default_catalog
from radplasma.fixtures import row_fixtures
from radplasma.model import (
    Analytic,
    Profile,
    Scenario,
    constant,
    exp_t,
    exp_u,
    monomial,
    neumann,
    power,
    power_t,
    tabulated,
)

nonzero = st.one_of(st.floats(-3, -0.3), st.floats(0.3, 3))
shift = st.floats(-2, 2)
transforms = st.builds(lambda a, b: EquivTransform(tuple(a) + tuple(b)),
                       st.tuples(shift, shift, shift), st.tuples(nonzero, nonzero, nonzero, nonzero))


def _close(e, f, tol=1e-12):
    return np.allclose(e.eps, f.eps, rtol=tol, atol=tol)


def test_identity_leaves_scenario_unchanged():
    sc = row_fixtures()[(3, 6)]
    out = apply_equivalence(EquivTransform.identity(), sc)
    assert out.G == sc.G and out.A == sc.A and out.W == sc.W
    assert out.x_domain == sc.x_domain and out.t_domain == sc.t_domain


def test_time_and_u_scaling_example():
    sc = Scenario(power(1.0, 2.0), monomial(2.0), power_t(2.0), (0.5, 1.5), (0.5, 1.5))
    out = apply_equivalence(EquivTransform((0, 0, 0, 2.0, 1.0, 3.0, 1.0)), sc)
    s = np.linspace(0.6, 1.4, 9)
    # tilde W(tilde t) = 1.5 W(t) at tilde t = 2 t, tilde G = 0.5 G
    assert np.allclose(out.W(2 * s), 1.5 * sc.W(s), rtol=1e-14)
    assert np.allclose(out.G(s), 0.5 * sc.G(s), rtol=1e-14)
    assert np.allclose(out.A(3 * s), sc.A(s), rtol=1e-14)


@given(transforms)
def test_apply_then_invert_recovers_scenario(e):
    sc = row_fixtures()[(3, 2)]
    back = apply_equivalence(invert(e), apply_equivalence(e, sc))
    s = np.linspace(0.6, 1.4, 7)
    for f, g in ((back.G, sc.G), (back.A, sc.A), (back.W, sc.W)):
        assert np.allclose(f(s), g(s), rtol=1e-13, atol=1e-14)
    assert np.allclose(back.x_domain, sc.x_domain, atol=1e-14)
    assert np.allclose(back.t_domain, sc.t_domain, atol=1e-14)


def test_group_inverse_and_identity():
    ident = EquivTransform.identity()
    assert invert(ident) == ident


@given(transforms)
def test_compose_with_inverse_is_identity(e):
    assert _close(compose(e, invert(e)), EquivTransform.identity(), 1e-12)


def test_compose_is_associative_on_random_triples():
    rng = np.random.default_rng(7)

    def rand():
        return EquivTransform(tuple(rng.uniform(-2, 2, 3)) + tuple(rng.choice([-1, 1], 4) * rng.uniform(0.3, 3, 4)))

    for _ in range(100):
        a, b, c = rand(), rand(), rand()
        lhs, rhs = compose(compose(a, b), c), compose(a, compose(b, c))
        assert np.allclose(lhs.eps, rhs.eps, rtol=1e-14, atol=1e-14)


@given(transforms)
def test_compose_matches_sequential_application(e):
    f = EquivTransform((0.3, -0.2, 0.1, 1.5, -0.7, 2.0, 0.4))
    pt = (0.4, 0.9, 1.3)
    seq = f.map_point(*e.map_point(*pt))
    assert np.allclose(compose(e, f).map_point(*pt), seq, rtol=1e-13, atol=1e-13)


def test_invalid_transform_rejected():
    with pytest.raises(ValueError):
        EquivTransform((0, 0, 0, 1, 0, 1, 1))


def test_equivalence_maps_solutions_to_solutions():
    rng = np.random.default_rng(11)
    for sol in default_catalog():
        for _ in range(3):
            e = EquivTransform(tuple(rng.uniform(-1, 1, 3)) + tuple(rng.choice([-1, 1], 4) * rng.uniform(0.5, 2, 4)))
            e1, e2, e3, e4, e5, e6, _ = e.eps
            sc = apply_equivalence(e, sol.scenario)
            s = sol.solution
            new = Analytic(
                lambda T, X: e6 * s.u((T - e1) / e4, (X - e2) / e5) + e3,
                lambda T, X: e6 / e4 * s.u_t((T - e1) / e4, (X - e2) / e5),
                lambda T, X: e6 / e5 * s.u_x((T - e1) / e4, (X - e2) / e5),
                lambda T, X: e6 / e5**2 * s.u_xx((T - e1) / e4, (X - e2) / e5),
            )
            t, x = sol.samples(64, seed=1)
            T, X = e4 * t + e1, e5 * x + e2
            from radplasma.model import residual_from_derivatives

            r = residual_from_derivatives(sc, T, X, new.u(T, X), new.u_t(T, X), new.u_x(T, X), new.u_xx(T, X))
            scale = np.maximum(1.0, np.abs(new.u_t(T, X)))
            assert np.max(np.abs(r) / scale) < 1e-9, sol.id


def test_neumann_data_scales_and_swaps():
    sc = Scenario(constant(1.0), monomial(2.0), power_t(2.0), (0.0, 1.0), (0.5, 1.0),
                  neumann(0.5), neumann(-1.0))
    out = apply_equivalence(EquivTransform((0, 0, 0, 2.0, -1.0, 3.0, 1.0)), sc)
    # flux factor e5 e6 / e4 = -1.5, and the sides swap because e5 < 0
    assert out.bc_left.value == pytest.approx(1.5)
    assert out.bc_right.value == pytest.approx(-0.75)
    assert out.x_domain == (-1.0, 0.0)


def test_normal_forms():
    assert normal_form(constant(3.0)).family == "const"
    assert normal_form(power(2.0, 3.0).rescaled(1.0, 1.0, 0.5)).family == "power"
    assert normal_form(exp_t(2.0).rescaled(1.0, 3.0)).family == "exp"
    xs = np.linspace(0, 1, 8)
    assert normal_form(tabulated(xs, 1 + xs**2)).family == "other"


# classification ------------------------------------------------------------


def test_classify_examples():
    c = classify(Scenario(power(1, 2), monomial(2), power_t(-1.5), (0.5, 1.5), (1.0, 2.0)))
    assert (c.case.table, c.case.row) == (3, 6)
    assert c.generators == ("x*Dx", "m*t*Dt - u*Du")
    xs = np.linspace(0, 1, 9)
    c = classify(Scenario(tabulated(xs, 1 + xs + xs**2 / 3), exp_u(), power_t(2.0)))
    assert (c.case.table, c.case.row) == (2, 1)
    c = classify(Scenario(power(1, 3), monomial(1), exp_t(1.0), (0.5, 1.5)))
    assert (c.case.table, c.case.row) == (3, 3)
    assert c.case.parameters == {"k": 3.0, "m": 1.0, "g": 1.0, "w": 1.0}


def test_classification_json_shape():
    d = classify(row_fixtures()[(3, 6)]).to_dict()
    assert d["table"] == 3 and d["row"] == 6
    assert set(d) >= {"table", "row", "params", "generators"}


@pytest.mark.parametrize("key", sorted(row_fixtures()), ids=lambda k: f"T{k[0]}R{k[1]}")
def test_golden_fixture_rows(key):
    c = classify(row_fixtures()[key])
    assert isinstance(c, Classification)
    assert (c.case.table, c.case.row) == key


@pytest.mark.parametrize("key", sorted(row_fixtures()), ids=lambda k: f"T{k[0]}R{k[1]}")
def test_classification_invariant_under_equivalence(key):
    sc = row_fixtures()[key]
    rng = np.random.default_rng(hash(key) % 2**32)
    for _ in range(50):
        e = EquivTransform(tuple(rng.uniform(-1, 1, 3)) + tuple(rng.choice([-1, 1], 4) * rng.uniform(0.5, 2, 4)))
        c = classify(apply_equivalence(e, sc))
        assert isinstance(c, Classification) and (c.case.table, c.case.row) == key, e


def test_canonical_form_is_reached():
    sc = row_fixtures()[(3, 2)]
    c = classify(sc)
    can = apply_equivalence(c.transform, sc)
    s = np.linspace(0.7, 1.3, 5)
    k, n, m = c.case.parameters["k"], c.case.parameters["n"], c.case.parameters["m"]
    assert np.allclose(can.G(s), c.case.parameters["g"] * s**k, rtol=1e-12)
    assert np.allclose(can.W(s), s**n, rtol=1e-12)
    assert np.allclose(can.A(s), s**m, rtol=1e-12)


def test_shadowed_rows_recorded():
    c = classify(row_fixtures()[(3, 6)])
    assert (3, 1) in c.shadowed and (3, 2) in c.shadowed


def test_unclassified_for_constant_forcing_or_linear_diffusion():
    r = classify(Scenario(power(1, 2), monomial(2), constant(1.0)))
    assert isinstance(r, Unclassified) and "W" in r.reason
    r = classify(Scenario(power(1, 2), constant(2.0), power_t(2.0)))
    assert isinstance(r, Unclassified)
    assert r.to_dict()["table"] is None


def test_generic_scenario_unclassified():
    xs = np.linspace(0, 4, 9)
    ts = np.linspace(0, 4, 9)
    r = classify(Scenario(tabulated(xs, 1 + xs + np.sin(xs)), tabulated(np.linspace(-4, 4, 9), 1 + np.linspace(-4, 4, 9) ** 2),
                          tabulated(ts, 1 + ts**2 + np.cos(ts))))
    assert isinstance(r, Unclassified)


def test_inverse_second_derivative_row_needs_explicit_Z():
    Z = power(1.0, 3.0)   # Z'' = 6x, so G = 1/(6x)
    G = power(1.0 / 6.0, -1.0)
    sc = Scenario(G, exp_u(), power_t(2.0), (0.5, 1.5), (0.5, 1.5))
    assert (classify(sc).case.table, classify(sc).case.row) == (2, 1)
    c = classify(sc, Z=Z)
    assert (c.case.table, c.case.row) == (2, 2)


def test_case_constraints():
    with pytest.raises(ValueError):
        CaseId(3, 6, {"m": -1.0})
    with pytest.raises(ValueError):
        CaseId(3, 2, {"m": 0.0, "k": 3.0, "n": 1.0})
    with pytest.raises(ValueError):
        CaseId(3, 3, {"m": 1.0, "k": 3.0, "g": 2.0, "w": 1.0})
