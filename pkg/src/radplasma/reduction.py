"""Similarity reductions for the power-law diffusivity ``A = u^m``.

Every reduced equation is written as ``(P(w) phi^m phi')' + Q(w, phi, phi') = 0``
and the ansatz is ``u = S(t) phi(w)`` with an explicit similarity variable
``w(t, x)``.  Substituting the ansatz into the PDE gives
``residual = factor(t) * ODE residual``; :func:`verify_reduction` checks that
identity numerically on random cubic profiles.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from .canonical import CaseId
from .model import (
    Analytic,
    CoefficientFn,
    Scenario,
    exp_t,
    exponential,
    monomial,
    power,
    power_t,
    residual_from_derivatives,
)


@dataclass(frozen=True)
class ReducedODE:
    row: int
    params: dict
    P: Callable            # w -> (P, P')
    Q: Callable            # (w, phi, psi) -> Q
    S: Callable            # t -> (S, S')
    omega: Callable        # (t, x) -> (w, w_t, w_x, w_xx)
    factor: Callable       # t -> proportionality factor
    scenario: Scenario = field(compare=False)
    omega_zero_singular: bool = False

    @property
    def m(self) -> float:
        return self.params["m"]

    def leading(self, w, phi):
        return self.P(w)[0] * np.power(phi, self.m)

    def lhs(self, w, phi, psi, dpsi):
        """``(P phi^m phi')' + Q`` for given ``phi, phi', phi''``."""
        P, dP = self.P(w)
        m = self.m
        pm = np.power(phi, m)
        d = dP * pm * psi + m * P * np.power(phi, m - 1) * psi**2 + P * pm * dpsi
        return d + self.Q(w, phi, psi)

    def second_derivative(self, w, phi, psi):
        P, dP = self.P(w)
        m = self.m
        pm = np.power(phi, m)
        return -(self.Q(w, phi, psi) + dP * pm * psi + m * P * np.power(phi, m - 1) * psi**2) / (P * pm)

    def rhs(self, w, y):
        return np.array([y[1], self.second_derivative(w, y[0], y[1])])

    def corrupted(self) -> "ReducedODE":
        """Copy with the sign of the non-diffusive part flipped (negative control)."""
        Q = self.Q
        return replace(self, Q=lambda w, phi, psi: -Q(w, phi, psi))


def build_reduced(case: CaseId | int, eps: float = 0.0, G: CoefficientFn | None = None,
                  **params) -> ReducedODE:
    """Reduced ODE for an ``A = u^m`` case.

    ``case`` is a :class:`CaseId` of the power table (rows 1 to 8; rows 7 and 8
    reduce through the rows 2 and 3 formulas with ``k = 0``) or a bare row
    number with parameters given as keywords.  ``eps`` selects the row-6
    subalgebra ``m t Dt - u Du + eps x Dx``; ``G`` is the free density of row 1.
    """
    if isinstance(case, CaseId):
        if case.table != 3:
            raise ValueError("reductions are catalogued for the power-law table only")
        row = case.row
        p = dict(case.parameters)
        p.update(params)
        if row == 7:
            row, p["k"] = 2, 0.0
        elif row == 8:
            row, p["k"] = 3, 0.0
    else:
        row, p = int(case), dict(params)
    if row not in range(1, 7):
        raise ValueError(f"no reduction for row {row}")
    m = float(p.get("m", 1.0))
    if m == 0:
        raise ValueError("m = 0 makes A constant")
    g = float(p.get("g", 1.0))
    w_ = float(p.get("w", 1.0))
    n = float(p.get("n", 0.0))
    k = float(p.get("k", 0.0))
    if row in (2, 3) and k == 2:
        raise ValueError("rows 2 and 3 require k != 2")
    if row == 6 and eps not in (0.0, 1.0, -1.0):
        warnings.warn("eps outside {0, +-1}; scaling equivalence absorbs |eps|", stacklevel=2)
    if row in (1, 6) and m == -1:
        warnings.warn("m = -1 gives constant W; outside the classification but kept for the "
                      "focusing family", stacklevel=2)
    q = m * n + m + 1
    out = {"m": m}

    ones = lambda t: (t ** (-1 / m), -(1 / m) * t ** (-1 / m - 1))
    tn1 = lambda t: (t ** (n + 1), (n + 1) * t**n)
    et = lambda t: (np.exp(t), np.exp(t))
    powP = lambda kk: (lambda w: (g * np.power(w, kk), g * kk * np.power(w, kk - 1)))
    expP = lambda w: (g * np.exp(w), g * np.exp(w))
    Wm = power_t(-(m + 1) / m)

    if row == 1:
        G = G or exponential(1.0)
        P = lambda w: (m * G(w), m * G.derivative(w))
        Q = lambda w, f, s: f + m
        S, factor = ones, lambda t: -(1 / m) * t ** (-1 - 1 / m)
        omega = lambda t, x: (x + 0 * t, 0 * x + 0 * t, 1 + 0 * x + 0 * t, 0 * x + 0 * t)
        sc = Scenario(G, monomial(m), Wm)
    elif row == 2:
        a = q / (k - 2)
        P, S = powP(k), tn1
        Q = lambda w, f, s: 1 - (n + 1) * f - a * w * s
        factor = lambda t: -(t**n)

        def omega(t, x):
            ta = t**a
            return x * ta, a * x * ta / t, ta + 0 * x, 0 * x * t
        sc = Scenario(power(g, k), monomial(m), power_t(n))
        out.update(k=k, n=n, g=g)
    elif row == 3:
        b = m / (k - 2)
        P, S = powP(k), et
        Q = lambda w, f, s: w_ - f - b * w * s
        factor = lambda t: -np.exp(t)

        def omega(t, x):
            e = np.exp(b * t)
            return x * e, b * x * e, e + 0 * x, 0 * x * t
        sc = Scenario(power(g, k), monomial(m), exp_t(w_))
        out.update(k=k, g=g, w=w_)
    elif row == 4:
        P, S = expP, tn1
        Q = lambda w, f, s: 1 - (n + 1) * f - q * s
        factor = lambda t: -(t**n)
        omega = lambda t, x: (x + q * np.log(t), q / t + 0 * x, 1 + 0 * x * t, 0 * x * t)
        sc = Scenario(exponential(g), monomial(m), power_t(n))
        out.update(n=n, g=g)
    elif row == 5:
        P, S = expP, et
        Q = lambda w, f, s: w_ - m * s - f
        factor = lambda t: -np.exp(t)
        omega = lambda t, x: (x + m * t, m + 0 * x * t, 1 + 0 * x * t, 0 * x * t)
        sc = Scenario(exponential(g), monomial(m), exp_t(w_))
        out.update(g=g, w=w_)
    else:
        P, S = powP(2.0), ones
        Q = lambda w, f, s: 1 + f / m + (eps / m) * w * s
        factor = lambda t: -(t ** (-1 - 1 / m))
        c = -eps / m

        def omega(t, x):
            tc = t**c
            return x * tc, c * x * tc / t, tc + 0 * x, 0 * x * t
        sc = Scenario(power(g, 2.0), monomial(m), Wm)
        out.update(g=g, eps=eps)
    return ReducedODE(row, out, P, Q, S, omega, factor, sc, row in (2, 3, 6))


# ---------------------------------------------------------------------------
# integration


@dataclass
class Trajectory:
    """Dense solution of a reduced ODE on one or two half-spans around ``w0``."""

    ode: ReducedODE
    w0: float
    pieces: list           # list of (lo, hi, OdeSolution)
    status: str = "ok"
    singular_at: float | None = None
    message: str = ""

    @property
    def span(self) -> tuple:
        return min(p[0] for p in self.pieces), max(p[1] for p in self.pieces)

    def __call__(self, w):
        """``(phi, phi')`` at ``w``."""
        w = np.asarray(w, dtype=float)
        lo, hi = self.span
        tol = 1e-12 * max(1.0, abs(lo), abs(hi))
        if np.any(w < lo - tol) or np.any(w > hi + tol):
            raise ValueError(f"w outside the integrated range [{lo}, {hi}]")
        phi = np.empty(w.shape)
        psi = np.empty(w.shape)
        for a, b, sol in self.pieces:
            sel = (w >= min(a, b) - tol) & (w <= max(a, b) + tol)
            if np.any(sel):
                y = sol(w[sel])
                phi[sel], psi[sel] = y[0], y[1]
        return phi, psi


def _integrate(r: ReducedODE, w0, y0, w1, rtol, atol):
    def phi_zero(w, y):
        return y[0]
    phi_zero.terminal = True

    def lead_zero(w, y):
        return r.P(w)[0]
    lead_zero.terminal = True

    sol = solve_ivp(r.rhs, (w0, w1), y0, method="DOP853", rtol=rtol, atol=atol,
                    dense_output=True, events=[phi_zero, lead_zero])
    hit = None
    if sol.status == 1:
        for ev in sol.t_events:
            if ev.size:
                hit = float(ev[0])
    return sol, hit


def integrate_ode(r: ReducedODE, iv, span=None, rtol: float = 1e-10, atol: float = 1e-12) -> Trajectory:
    """Integrate from ``iv = (w0, phi0, psi0)`` over ``span``.

    A span that contains ``w0`` in its interior is covered by two half-line
    integrations.  Reaching ``phi = 0`` or a zero of ``P`` stops the piece and
    is reported as a singularity; step-size failure is reported, not raised.
    """
    w0, phi0, psi0 = (float(v) for v in iv)
    if r.P(w0)[0] == 0 or phi0 == 0:
        raise ValueError("leading coefficient vanishes at the initial point")
    if span is None:
        raise ValueError("span is required")
    lo, hi = float(min(span)), float(max(span))
    if r.omega_zero_singular and lo < 0 < hi:
        raise ValueError("span crosses the singular point w = 0")
    targets = [b for b in (lo, hi) if b != w0]
    if not targets:
        raise ValueError("empty span")
    traj = Trajectory(r, w0, [])
    for w1 in targets:
        sol, hit = _integrate(r, w0, [phi0, psi0], w1, rtol, atol)
        end = float(sol.t[-1])
        traj.pieces.append((min(w0, end), max(w0, end), sol.sol))
        if hit is not None:
            traj.status, traj.singular_at = "singular", hit
            traj.message = f"leading coefficient vanished at w = {hit:.12g}"
        elif sol.status == -1:
            # step collapse onto a zero of P phi^m is a front, not a solver fault
            lead0 = abs(float(r.leading(w0, phi0)))
            if abs(float(r.leading(end, sol.y[0, -1]))) < 1e-4 * lead0:
                traj.status, traj.singular_at = "singular", end
                traj.message = f"leading coefficient collapsed near w = {end:.12g}"
            else:
                traj.status, traj.message = "failed", sol.message
    return traj


# ---------------------------------------------------------------------------
# reconstruction and verification


def ansatz(r: ReducedODE, phi: Callable, dphi: Callable, d2phi: Callable) -> Analytic:
    """``u = S(t) phi(w(t, x))`` with exact derivatives from those of ``phi``."""

    def parts(t, x):
        t, x = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(x, dtype=float))
        w, wt, wx, wxx = r.omega(t, x)
        S, dS = r.S(t)
        return w, wt, wx, wxx, S, dS

    def u(t, x):
        w, *_, S, _ = parts(t, x)
        return S * phi(w)

    def u_t(t, x):
        w, wt, _, _, S, dS = parts(t, x)
        return dS * phi(w) + S * dphi(w) * wt

    def u_x(t, x):
        w, _, wx, _, S, _ = parts(t, x)
        return S * dphi(w) * wx

    def u_xx(t, x):
        w, _, wx, wxx, S, _ = parts(t, x)
        return S * (d2phi(w) * wx**2 + dphi(w) * wxx)

    return Analytic(u, u_t, u_x, u_xx)


@dataclass
class Reconstruction:
    solution: Analytic
    scenario: Scenario
    trajectory: Trajectory

    def __call__(self, t, x):
        return self.solution.u(t, x)

    def residual(self, t, x):
        s = self.solution
        t, x = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(x, dtype=float))
        return residual_from_derivatives(self.scenario, t, x, s.u(t, x), s.u_t(t, x),
                                         s.u_x(t, x), s.u_xx(t, x))


def reconstruct(r: ReducedODE, traj: Trajectory, scenario: Scenario | None = None) -> Reconstruction:
    phi = lambda w: traj(w)[0]
    dphi = lambda w: traj(w)[1]

    def d2phi(w):
        f, s = traj(w)
        return r.second_derivative(w, f, s)

    return Reconstruction(ansatz(r, phi, dphi, d2phi), scenario or r.scenario, traj)


@dataclass
class VerificationReport:
    row: int
    trials: int
    discrepancy: float
    scale: float

    @property
    def passed(self) -> bool:
        return self.discrepancy < 1e-8

    def to_dict(self) -> dict:
        return {"row": self.row, "trials": self.trials, "discrepancy": self.discrepancy,
                "scale": self.scale, "passed": self.passed}


def verify_reduction(r: ReducedODE, sc: Scenario | None = None, trials: int = 20,
                     seed: int = 0, points: int = 64) -> VerificationReport:
    """Compare the PDE residual of ``ansatz(phi)`` with ``factor * ODE(phi)`` on random cubics."""
    sc = sc or r.scenario
    rng = np.random.default_rng(seed)
    worst, scale = 0.0, 0.0
    for _ in range(trials):
        t = rng.uniform(1.0, 2.0, points)
        x = rng.uniform(0.5, 1.5, points)
        w = r.omega(t, x)[0]
        lo, hi = float(np.min(w)), float(np.max(w))
        L = max(hi - lo, 1e-12)
        c0 = rng.uniform(1.0, 2.0)
        c1, c2, c3 = rng.uniform(-0.25, 0.25, 3)
        s = lambda ww: (ww - lo) / L
        phi = lambda ww: c0 + c1 * s(ww) + c2 * s(ww) ** 2 + c3 * s(ww) ** 3
        dphi = lambda ww: (c1 + 2 * c2 * s(ww) + 3 * c3 * s(ww) ** 2) / L
        d2phi = lambda ww: (2 * c2 + 6 * c3 * s(ww)) / L**2
        sol = ansatz(r, phi, dphi, d2phi)
        pde = residual_from_derivatives(sc, t, x, sol.u(t, x), sol.u_t(t, x),
                                        sol.u_x(t, x), sol.u_xx(t, x))
        ode = r.lhs(w, phi(w), dphi(w), d2phi(w))
        gap = np.abs(pde - r.factor(t) * ode) / np.maximum(1.0, np.abs(pde))
        worst = max(worst, float(np.max(gap)))
        scale = max(scale, float(np.max(np.abs(pde))))
    return VerificationReport(r.row, trials, worst, scale)


def focusing_reduced(c5: float = 1.0, c6: float = 1.0) -> ReducedODE:
    """Row-6 equation with ``m = -1``, ``eps = 1``, ``g = 1``; its ansatz is ``u = t f(x t)``."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return build_reduced(6, eps=1.0, m=-1.0, g=1.0)


def constant_profile(r: ReducedODE) -> float | None:
    """Constant solution of the reduced ODE when one exists (``Q(w, c, 0) = 0``)."""
    p = r.params
    if r.row == 1:
        return -p["m"]
    if r.row in (2, 4):
        return 1.0 / (p["n"] + 1) if p["n"] != -1 else None
    if r.row in (3, 5):
        return p["w"]
    return -p["m"]
