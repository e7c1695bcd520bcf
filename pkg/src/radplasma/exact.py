"""Closed-form solutions of the transport equation and the exponential integral."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .model import (
    Analytic,
    DomainError,
    Scenario,
    constant,
    inv_g_antiderivative,
    monomial,
    power,
    residual_from_derivatives,
    shifted_inverse,
)

EULER_GAMMA = 0.57721566490153286061
EI_SWITCH = 40.0


def _ei_series(x: float) -> float:
    term, total, k = x, x, 1
    # positive terms: once k > x the tail is below term * x / (k + 1 - x)
    while k < 4000:
        k += 1
        term *= x * (k - 1) / (k * k)
        total += term
        if k > x and term * x < 1e-17 * total * (k + 1 - x):
            break
    return EULER_GAMMA + math.log(x) + total


EI_ROOT = 0.3725074107813666
EI_ROOT_LO = 1.3140183414386028e-17     # root - EI_ROOT, for a correctly rounded offset
EI_ROOT_RADIUS = 0.05


def _ei_near_root(x: float) -> float:
    # Taylor series about the root; Ei^(n) = (e^x / x)^(n - 1) keeps full relative accuracy
    h = (x - EI_ROOT) - EI_ROOT_LO
    ex = math.exp(EI_ROOT)
    total, hn, fact = 0.0, 1.0, 1.0
    for n in range(1, 40):
        hn *= h
        fact *= n
        j_sum = sum(math.comb(n - 1, j) * (-1) ** j * math.factorial(j) / EI_ROOT ** (j + 1)
                    for j in range(n))
        term = ex * j_sum * hn / fact
        total += term
        if abs(term) < 1e-18 * abs(total):
            break
    return total


def _ei_asymptotic(x: float) -> float:
    term = 1.0
    terms = [term]
    k = 0
    while True:
        k += 1
        nxt = term * k / x
        if nxt >= term:
            break
        term = nxt
        terms.append(term)
        if term < 1e-18:
            break
    return math.exp(x) / x * math.fsum(terms)


def expint_ei(x):
    """Exponential integral ``Ei(x)`` for ``x > 0``.

    Positive-term power series below ``EI_SWITCH`` (no cancellation, so it is
    accurate well past the classical switch point), optimally truncated
    asymptotic series above it.  Near the positive root the series sum
    cancels against ``gamma + log x``, so a Taylor expansion about the root
    is used there instead.
    """
    arr = np.asarray(x, dtype=float)
    if np.any(arr <= 0):
        raise DomainError("Ei is only implemented for x > 0")
    if np.any(arr > 709.0):
        raise DomainError("Ei overflows double precision for x > 709")
    flat = [_ei_near_root(v) if abs(v - EI_ROOT) < EI_ROOT_RADIUS else
            _ei_series(v) if v <= EI_SWITCH else _ei_asymptotic(v) for v in arr.ravel()]
    out = np.array(flat).reshape(arr.shape)
    return float(out) if out.ndim == 0 else out


@dataclass
class ExactSolution:
    """A catalog solution: its scenario, closed form and validity region."""

    id: str
    params: dict
    scenario: Scenario
    solution: Analytic
    patch: tuple  # ((x_lo, x_hi), (t_lo, t_hi)) where the formula is regular
    validity: Callable | None = field(default=None, repr=False)

    def __call__(self, t, x):
        return self.solution.u(t, x)

    def residual(self, t, x):
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        s = self.solution
        return residual_from_derivatives(self.scenario, t, x, s.u(t, x), s.u_t(t, x),
                                         s.u_x(t, x), s.u_xx(t, x))

    def valid(self, t, x):
        t, x = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(x, dtype=float))
        if self.validity is None:
            return np.ones(t.shape, dtype=bool)
        return self.validity(t, x)

    def samples(self, n: int = 1024, seed: int = 0):
        """``n`` pseudo-random (t, x) points inside the patch and validity region."""
        rng = np.random.default_rng(seed)
        (xl, xr), (tl, tr) = self.patch
        ts, xs = [], []
        while sum(len(a) for a in ts) < n:
            t = rng.uniform(tl, tr, 2 * n)
            x = rng.uniform(xl, xr, 2 * n)
            ok = self.valid(t, x)
            ts.append(t[ok])
            xs.append(x[ok])
        return np.concatenate(ts)[:n], np.concatenate(xs)[:n]


def base_point(f, domain) -> float:
    """Quadrature base: 0 when ``f`` is finite and positive-safe there, else the domain start."""
    try:
        v = f(0.0)
    except (DomainError, ZeroDivisionError):
        return float(domain[0])
    return 0.0 if np.isfinite(v) and v != 0 else float(domain[0])


def _w_integral(sc: Scenario, t0=None):
    t0 = base_point(sc.W, sc.t_domain) if t0 is None else t0
    return lambda t: sc.W.antiderivative(t, t0)


def separated_exp(sc: Scenario, c4: float, c3: float = 0.0) -> ExactSolution:
    """Additively separated solution for ``A = e^u``.

    ``u = int W dt + log(int dx/G + c4) + c3``; quadratures start at 0 when
    the coefficient is regular there, else at the domain start.
    """
    if sc.A.kind != "expu" or sc.A.scale != 1 or sc.A.arg_scale != 1 or sc.A.arg_shift != 0:
        raise ValueError("separated_exp needs A = e^u")
    x0 = base_point(sc.G, sc.x_domain)
    I = _w_integral(sc)
    phi = lambda x: inv_g_antiderivative(sc.G, x, x0) + c4
    xs = np.linspace(*sc.x_domain, 1024)
    if np.min(phi(xs)) <= 0:
        raise DomainError("int dx/G + c4 must be positive on the domain")
    G = sc.G

    def u(t, x):
        return I(t) + np.log(phi(x)) + c3

    def u_t(t, x):
        return sc.W(t) + 0 * x

    def u_x(t, x):
        return 1.0 / (G(x) * phi(x)) + 0 * t

    def u_xx(t, x):
        p = phi(x)
        return -G.derivative(x) / (G(x) ** 2 * p) - 1.0 / (G(x) * p) ** 2 + 0 * t

    return ExactSolution(
        "SeparatedExp", {"c4": c4, "c3": c3}, sc, Analytic(u, u_t, u_x, u_xx),
        (sc.x_domain, sc.t_domain),
    )


def separated_heat_flux(sol: ExactSolution, t):
    """Heat flux ``-G mu_x`` of the separated solution, ``-e^{c3} e^{int W}``."""
    sc = sol.scenario
    return -math.exp(sol.params["c3"]) * np.exp(_w_integral(sc)(t))


def _exp_w_quadrature(sc: Scenario):
    """``t -> int_{t0}^t exp(int_{t0}^s W) ds``."""
    t0 = base_point(sc.W, sc.t_domain)
    W = sc.W
    if W.is_constant:
        c = float(W(t0))
        if c == 0:
            return lambda t: np.asarray(t, dtype=float) - t0
        return lambda t: np.expm1(c * (np.asarray(t, dtype=float) - t0)) / c

    def tau(t):
        t = np.asarray(t, dtype=float)
        out = np.array([quad(lambda s: math.exp(W.antiderivative(s, t0)), t0, ti,
                             epsabs=1e-14, epsrel=1e-14, limit=200)[0] for ti in t.ravel()])
        out = out.reshape(t.shape)
        return float(out) if out.ndim == 0 else out

    return tau


def scaling_separated(sc: Scenario, c1: float = 0.0, c0: float = 1.0, tau0: float = 1.0):
    """Scaling-invariant separated solution for ``A = e^u``.

    ``u = -log tau + log F(x) + int W dt`` with ``tau = tau0 + int e^{int W} dt``
    and ``[G F']' = -1``, i.e.
    ``F = c0 + c1 int dx/G - int (s - x0)/G(s) ds``.
    """
    if sc.A.kind != "expu" or sc.A.scale != 1 or sc.A.arg_scale != 1 or sc.A.arg_shift != 0:
        raise ValueError("scaling_separated needs A = e^u")
    x0 = base_point(sc.G, sc.x_domain)
    G = sc.G
    I = _w_integral(sc)
    P = _exp_w_quadrature(sc)

    if G.is_constant:
        gc = float(G(x0))
        second = lambda x: (np.asarray(x, dtype=float) - x0) ** 2 / (2 * gc)
    else:
        def second(x):
            x = np.asarray(x, dtype=float)
            out = np.array([quad(lambda s: (s - x0) / G(s), x0, xi, epsabs=1e-14,
                                 epsrel=1e-14, limit=200)[0] for xi in x.ravel()])
            out = out.reshape(x.shape)
            return float(out) if out.ndim == 0 else out

    def F(x):
        return c0 + c1 * inv_g_antiderivative(G, x, x0) - second(x)

    def dF(x):
        return (c1 - (np.asarray(x) - x0)) / G(x)

    def d2F(x):
        return -1.0 / G(x) - (c1 - (np.asarray(x) - x0)) * G.derivative(x) / G(x) ** 2

    tau = lambda t: tau0 + P(t)

    def u(t, x):
        return -np.log(tau(t)) + np.log(F(x)) + I(t)

    def u_t(t, x):
        return -np.exp(I(t)) / tau(t) + sc.W(t) + 0 * np.asarray(x)

    def u_x(t, x):
        return dF(x) / F(x) + 0 * np.asarray(t)

    def u_xx(t, x):
        f, f1 = F(x), dF(x)
        return d2F(x) / f - (f1 / f) ** 2 + 0 * np.asarray(t)

    def validity(t, x):
        return (F(x) > 1e-8) & (tau(t) > 0)

    sol = ExactSolution("ScalingSeparated", {"c1": c1, "c0": c0, "tau0": tau0}, sc,
                        Analytic(u, u_t, u_x, u_xx), (sc.x_domain, sc.t_domain), validity)
    sol.F = F
    sol.tau = tau
    return sol


def positive_window(F: Callable, lo: float, hi: float, n: int = 1024):
    """Subintervals of ``[lo, hi]`` where ``F > 0``, by sampling and bracketing."""
    xs = np.linspace(lo, hi, n)
    vals = np.asarray(F(xs))
    edges = []
    for i in range(n - 1):
        if vals[i] == 0 or vals[i] * vals[i + 1] < 0:
            edges.append(brentq(F, xs[i], xs[i + 1], xtol=1e-14))
    pts = [lo] + edges + [hi]
    out = []
    for a, b in zip(pts[:-1], pts[1:]):
        if F(0.5 * (a + b)) > 0:
            out.append((a, b))
    return out


def focusing_scenario(x_domain=(0.5, 1.0), t_domain=(0.5, 1.0)) -> Scenario:
    """``u_t = (x^2 u^-1 u_x)_x + 1``, the m = -1 member of the quadratic-density class."""
    return Scenario(power(1.0, 2.0), monomial(-1.0), constant(1.0), x_domain, t_domain)


def focusing_m1(c5: float = 1.0, c6: float = 1.0, x_domain=(0.5, 1.0), t_domain=(0.5, 1.0)):
    """``u = t f(x t)`` with ``f(phi) = c5 / (-phi + c6 phi e^{c5/phi})``."""
    sc = focusing_scenario(x_domain, t_domain)

    def parts(p):
        e = np.exp(c5 / p)
        D = -p + c6 * p * e
        D1 = -1.0 + c6 * e * (1.0 - c5 / p)
        D2 = c6 * e * c5**2 / p**3
        f = c5 / D
        f1 = -c5 * D1 / D**2
        f2 = -c5 * (D2 / D**2 - 2 * D1**2 / D**3)
        return D, f, f1, f2

    def u(t, x):
        return t * parts(x * t)[1]

    def u_t(t, x):
        _, f, f1, _ = parts(x * t)
        return f + x * t * f1

    def u_x(t, x):
        return t**2 * parts(x * t)[2]

    def u_xx(t, x):
        return t**3 * parts(x * t)[3]

    def validity(t, x):
        p = np.asarray(x) * np.asarray(t)
        with np.errstate(all="ignore"):
            D, f, _, _ = parts(p)
        return (p > 0) & (np.abs(D) > 1e-8) & (f > 0)

    sol = ExactSolution("FocusingM1", {"c5": c5, "c6": c6}, sc, Analytic(u, u_t, u_x, u_xx),
                        (x_domain, t_domain), validity)
    sol.profile = lambda p: parts(np.asarray(p, dtype=float))[1]
    sol.profile_derivative = lambda p: parts(np.asarray(p, dtype=float))[2]
    sol.denominator = lambda p: parts(np.asarray(p, dtype=float))[0]
    return sol


def focusing_uinf(u_inf: float = 2.0, c5: float = 2.0, c6: float = 1.0,
                  x_domain=(0.5, 1.0), t_domain=(0.5, 1.0)):
    """``u = u_inf - t f(x t)`` for the bounded-energy model ``A = (u_inf - u)^-1``.

    ``f(phi) = 1 / (-1 + (c6/phi) e^{-c6/phi} Ei(c6/phi) + (c5/phi) e^{-c6/phi})``;
    ``v = u_inf - u`` solves ``v_t = (x^2 v^-1 v_x)_x - 1``.
    """
    if c6 <= 0:
        raise DomainError("c6 must be positive so that Ei is evaluated at positive arguments")
    sc = Scenario(power(1.0, 2.0), shifted_inverse(u_inf), constant(1.0), x_domain, t_domain)

    def parts(p):
        p = np.asarray(p, dtype=float)
        q = c6 / p
        h = np.exp(-q)
        ei = expint_ei(q)
        E = -1.0 + q * h * ei + (c5 / p) * h
        K = h * (c6 * ei + c5)
        r = (c6 - p) / p**3
        r1 = (2 * p - 3 * c6) / p**4
        K1 = (c6 / p**2) * K - c6 / p
        E1 = K * r - c6 / p**2
        E2 = K1 * r + K * r1 + 2 * c6 / p**3
        f = 1.0 / E
        f1 = -E1 / E**2
        f2 = -E2 / E**2 + 2 * E1**2 / E**3
        return E, f, f1, f2

    def u(t, x):
        return u_inf - t * parts(x * t)[1]

    def u_t(t, x):
        _, f, f1, _ = parts(x * t)
        return -(f + x * t * f1)

    def u_x(t, x):
        return -(t**2) * parts(x * t)[2]

    def u_xx(t, x):
        return -(t**3) * parts(x * t)[3]

    def validity(t, x):
        p = np.asarray(x) * np.asarray(t)
        out = p > 0
        if np.any(out):
            E, f, _, _ = parts(np.where(out, p, 1.0))
            out &= (np.abs(E) > 1e-8) & (f > 0)
        return out

    sol = ExactSolution("FocusingUInf", {"u_inf": u_inf, "c5": c5, "c6": c6}, sc,
                        Analytic(u, u_t, u_x, u_xx), (x_domain, t_domain), validity)
    sol.profile = lambda p: parts(p)[1]
    sol.denominator = lambda p: parts(p)[0]
    sol.v_scenario = Scenario(power(1.0, 2.0), monomial(-1.0), constant(-1.0), x_domain, t_domain)
    sol.v_solution = Analytic(
        lambda t, x: u_inf - u(t, x),
        lambda t, x: -u_t(t, x),
        lambda t, x: -u_x(t, x),
        lambda t, x: -u_xx(t, x),
    )
    return sol


def uniform(sc: Scenario, Y0: float) -> ExactSolution:
    """Spatially uniform solution ``u = Y0 + int_{t0}^t W``; valid for every (G, A, W)."""
    I = _w_integral(sc, sc.t_domain[0])
    zero = lambda t, x: 0.0 * np.asarray(t) * np.asarray(x)
    return ExactSolution(
        "Uniform", {"Y0": Y0}, sc,
        Analytic(lambda t, x: Y0 + I(t) + 0 * np.asarray(x),
                 lambda t, x: sc.W(t) + 0 * np.asarray(x), zero, zero),
        (sc.x_domain, sc.t_domain),
    )


CATALOG_IDS = ("SeparatedExp", "ScalingSeparated", "FocusingM1", "FocusingUInf", "Uniform")


def default_catalog() -> list[ExactSolution]:
    """Representative instance of every catalog member (used by CLI and acceptance)."""
    from .model import exp_u, exponential, power_t

    sep_sc = Scenario(constant(1.0), exp_u(), constant(1.0), (0.0, 1.0), (0.0, 1.0))
    sep_sc2 = Scenario(exponential(1.0), exp_u(), constant(1.0), (0.0, 1.0), (0.0, 1.0))
    sep_sc3 = Scenario(power(1.0, 2.0).rescaled(arg_offset=1.0), exp_u(), power_t(1.0),
                       (0.0, 1.0), (0.5, 1.5))
    return [
        separated_exp(sep_sc, c4=2.0, c3=0.0),
        separated_exp(sep_sc2, c4=0.5, c3=0.3),
        separated_exp(sep_sc3, c4=1.0, c3=-0.2),
        scaling_separated(sep_sc, c1=0.5, c0=1.0),
        scaling_separated(sep_sc2, c1=1.0, c0=0.5, tau0=2.0),
        focusing_m1(1.0, 1.0),
        focusing_m1(2.0, 0.5, x_domain=(0.8, 1.6), t_domain=(0.6, 1.2)),
        focusing_uinf(2.0, 2.0, 1.0),
        uniform(Scenario(power(1.0, 2.0), monomial(2.0), power_t(2.0), (1.0, 2.0), (0.1, 1.0)), 1.5),
        uniform(sep_sc, 0.0),
    ]
