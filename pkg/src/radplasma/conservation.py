"""Conserved pairs, discrete balance monitoring, potentials and the S equation."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from .exact import base_point
from .model import (
    CoefficientFn,
    FieldSeries,
    Scenario,
    constant,
    inv_g_antiderivative,
    monomial,
    tabulated,
)
from .solver import SolveReport


class NotASolution(ValueError):
    """The potential's time equation fails beyond its discretization estimate."""


@dataclass(frozen=True)
class ConservedPair:
    """Density ``T(t, x, u)`` and flux ``X(t, x, u, u_x)`` with ``D_t T + D_x X = 0``."""

    id: str
    T: Callable
    X: Callable
    weight: Callable       # x -> multiplier of u - int W in T (1 or int dx/G)
    scenario: Scenario = field(compare=False)


def _I(sc: Scenario):
    t0 = base_point(sc.W, sc.t_domain)
    return lambda t: sc.W.antiderivative(t, t0)


def _Phi(sc: Scenario):
    x0 = base_point(sc.G, sc.x_domain)
    return lambda x: inv_g_antiderivative(sc.G, x, x0)


def conserved_pairs(sc: Scenario) -> tuple[ConservedPair, ConservedPair]:
    """``T1 = u - int W``, ``X1 = -G A u_x`` and ``T2 = T1 * int dx/G``, ``X2 = X1 * int dx/G + int A du``."""
    I, Phi, G, A = _I(sc), _Phi(sc), sc.G, sc.A
    one = lambda x: np.ones_like(np.asarray(x, dtype=float))
    cl1 = ConservedPair(
        "CL1",
        lambda t, x, u: u - I(t),
        lambda t, x, u, u_x: -G(x) * A(u) * u_x,
        one, sc,
    )
    cl2 = ConservedPair(
        "CL2",
        lambda t, x, u: (u - I(t)) * Phi(x),
        lambda t, x, u, u_x: -G(x) * A(u) * u_x * Phi(x) + A.primitive(u),
        Phi, sc,
    )
    return cl1, cl2


def _boundary_value(u, side):
    """Third-order extrapolation of cell-centre values to the boundary face."""
    if side == "left":
        return (15 * u[..., 0] - 10 * u[..., 1] + 3 * u[..., 2]) / 8
    return (15 * u[..., -1] - 10 * u[..., -2] + 3 * u[..., -3]) / 8


@dataclass
class Balance:
    pair: str
    times: np.ndarray      # step end times
    defect: np.ndarray     # rate form: d/dt int T dx + [X]

    def max(self) -> float:
        return float(np.max(np.abs(self.defect))) if self.defect.size else 0.0


def discrete_balance(pair: ConservedPair, report: SolveReport) -> Balance:
    """Balance defect of a solver run using its own theta-averaged face fluxes."""
    sc = report.scenario
    if not report.steps or report.steps[0].values is None:
        raise ValueError("the run did not store its steps")
    grid = report.grid
    dx, x, faces = grid.dx, grid.centers, grid.faces
    I = _I(sc)
    w = pair.weight(x)
    wL, wR = pair.weight(faces[0]), pair.weight(faces[-1])
    A = sc.A
    times, out = [], []
    prev = report.initial

    def ub(u, t, side):
        bc = sc.bc_left if side == "left" else sc.bc_right
        return bc.at(t) if bc.kind == "dirichlet" else _boundary_value(u, side)

    for s in report.steps:
        t1 = s.t + s.dt
        cur = s.values
        dT = dx * np.sum(w * ((cur - I(t1)) - (prev - I(s.t))))
        if s.source is not None:
            dT -= dx * np.sum(w * s.source)
        # -X at a face is F * weight - int A du (second term only for CL2)
        mXL, mXR = s.flux[0] * wL, s.flux[-1] * wR
        if pair.id == "CL2":
            th = s.theta
            aL = th * A.primitive(ub(cur, t1, "left")) + (1 - th) * A.primitive(ub(prev, s.t, "left"))
            aR = th * A.primitive(ub(cur, t1, "right")) + (1 - th) * A.primitive(ub(prev, s.t, "right"))
            mXL, mXR = mXL - aL, mXR - aR
        out.append((dT - s.dt * (mXR - mXL)) / s.dt)
        times.append(t1)
        prev = cur
    return Balance(pair.id, np.array(times), np.array(out))


# ---------------------------------------------------------------------------
# potentials


@dataclass
class PotentialField:
    kind: str              # 'v' (from CL1) or 'z' (from CL2)
    times: np.ndarray
    faces: np.ndarray
    values: np.ndarray     # shape (len(times), len(faces))
    gauge: float
    time_defect: np.ndarray  # per interval and face: difference quotient minus averaged -X
    estimate: float

    def max_defect(self) -> float:
        return float(np.max(np.abs(self.time_defect)))


def _face_values(sc, u, t):
    f = np.concatenate([[_boundary_value(u, "left")], 0.5 * (u[:-1] + u[1:]),
                        [_boundary_value(u, "right")]])
    if sc.bc_left.kind == "dirichlet":
        f[0] = sc.bc_left.at(t)
    if sc.bc_right.kind == "dirichlet":
        f[-1] = sc.bc_right.at(t)
    return f


def _face_flux(sc, faces, u, t, dx):
    """``G A u_x`` at every face of a cell-centred field, one-sided at Dirichlet ends."""
    Gf, A = sc.G(faces), sc.A
    F = np.empty(u.size + 1)
    F[1:-1] = Gf[1:-1] * 0.5 * (A(u[:-1]) + A(u[1:])) * (u[1:] - u[:-1]) / dx
    for bc, j, sgn, c0, c1 in ((sc.bc_left, 0, 1, 0, 1), (sc.bc_right, -1, -1, -1, -2)):
        if bc.kind == "neumann":
            F[j] = bc.at(t)
        else:
            b = bc.at(t)
            F[j] = sgn * Gf[j] * A(b) * (-8 * b + 9 * u[c0] - u[c1]) / (3 * dx)
    return F


def _minus_X(kind, sc, wf, F, u, t):
    m = F * wf
    if kind == "z":
        m = m - sc.A.primitive(_face_values(sc, u, t))
    return m


def _integrate(kind, sc, times, x, vals, avg, gauge):
    """Spatial quadrature of the density plus the left-boundary gauge track."""
    dx = x[1] - x[0]
    pair = conserved_pairs(sc)[0 if kind == "v" else 1]
    dens = (vals - _I(sc)(times)[:, None]) * pair.weight(x)[None, :]
    dt = np.diff(times)
    left = gauge + np.concatenate([[0.0], np.cumsum(dt * avg[:, 0])])
    values = left[:, None] + dx * np.concatenate(
        [np.zeros((times.size, 1)), np.cumsum(dens, axis=1)], axis=1)
    defect = np.diff(values, axis=0) / dt[:, None] - avg
    return values, defect


def potential(kind: str, sol, sc: Scenario | None = None, gauge: float = 0.0,
              check: bool = True, floor: float = 1e-9) -> PotentialField:
    """Potential ``v`` (``v_x = u - int W``, ``v_t = G A u_x``) or ``z`` (weighted by ``int dx/G``).

    ``sol`` is either a :class:`SolveReport`, whose own face fluxes make the
    ``v`` time equation hold to Newton tolerance (``z`` to second order,
    since ``int A du`` is not a scheme flux), or a :class:`FieldSeries` of
    cell-centre values.  In the second case fluxes are rebuilt by differences
    and a half-resolution copy gives a Richardson estimate of the
    discretization error; :class:`NotASolution` is raised when the defect
    exceeds ten times that estimate (plus ``floor``).

    ``v`` starts at ``gauge`` on the left boundary and follows the boundary
    flux there, which keeps it constant under zero-flux conditions.
    """
    if kind not in ("v", "z"):
        raise ValueError("kind must be 'v' or 'z'")
    if isinstance(sol, SolveReport):
        sc = sol.scenario
        series = sol.step_series()
        times, x, vals = series.times, series.x, series.values
        faces = sol.grid.faces
        pair = conserved_pairs(sc)[0 if kind == "v" else 1]
        wf = pair.weight(faces)
        avg = []
        for j, s in enumerate(sol.steps):
            m = s.flux * wf
            if kind == "z":
                th = s.theta
                m = m - (th * sc.A.primitive(_face_values(sc, vals[j + 1], times[j + 1]))
                         + (1 - th) * sc.A.primitive(_face_values(sc, vals[j], times[j])))
            avg.append(m)
        values, defect = _integrate(kind, sc, times, x, vals, np.array(avg), gauge)
        return PotentialField(kind, times, faces, values, gauge, defect, float("nan"))

    if sc is None:
        raise ValueError("a scenario is required for a FieldSeries")
    times, x, vals = sol.times, sol.x, sol.values

    def run(tt, xx, vv):
        d = xx[1] - xx[0]
        fcs = np.concatenate([[xx[0] - d / 2], xx + d / 2])
        wf = conserved_pairs(sc)[0 if kind == "v" else 1].weight(fcs)
        mX = np.array([_minus_X(kind, sc, wf, _face_flux(sc, fcs, vv[j], tt[j], d), vv[j], tt[j])
                       for j in range(tt.size)])
        values, defect = _integrate(kind, sc, tt, xx, vv, 0.5 * (mX[1:] + mX[:-1]), gauge)
        return fcs, values, defect

    faces, values, defect = run(times, x, vals)
    est = float("nan")
    if check:
        if x.size % 2 or times.size < 3 or times.size % 2 == 0:
            raise ValueError("the check needs an even cell count and an odd number (>= 3) of times")
        _, _, dc = run(times[::2], 0.5 * (x[::2] + x[1::2]), 0.5 * (vals[::2, ::2] + vals[::2, 1::2]))
        fine = float(np.max(np.abs(defect)))
        est = abs(float(np.max(np.abs(dc))) - fine) / 3.0
        if fine > 10.0 * est + floor:
            raise NotASolution(f"time equation defect {fine:.3e} exceeds 10x its "
                               f"discretization estimate {est:.3e}")
    return PotentialField(kind, times, faces, values, gauge, defect, est)


# ---------------------------------------------------------------------------
# the S equation S''(S^2 + a2) = a1 S'^2


def s_ode_invariant(a1: float, a2: float, S, Sp):
    """``S' exp(-a1 K(S))`` with ``K = int dS / (S^2 + a2)``; constant along solutions."""
    S = np.asarray(S, dtype=float)
    if a2 == 0:
        K = -1.0 / S
    elif a2 == 1:
        K = np.arctan(S)
    elif a2 == -1:
        K = 0.5 * np.log(np.abs((S - 1) / (S + 1)))
    else:
        raise ValueError("a2 must be 0 or +-1")
    return np.asarray(Sp) * np.exp(-a1 * K)


class SingularCrossing(ValueError):
    """``S^2 + a2`` reached zero inside the requested span."""


@dataclass
class SOdeResult:
    a1: float
    a2: float
    t: np.ndarray
    S: np.ndarray
    Sp: np.ndarray
    W: CoefficientFn
    drift: float
    scenario: Scenario
    potential_symmetric: bool = True


def integrate_S_ode(a1: float, a2: float, iv, span, samples: int = 401) -> SOdeResult:
    """Integrate ``S''(S^2 + a2) = a1 S'^2`` and return ``W = S'``.

    The admissible equation is ``A = u^-2``, ``G = 1``, ``W = S'``.  ``a1 = 0``
    is handled analytically (``W`` constant).
    """
    if a2 not in (0, 1, -1, 0.0, 1.0, -1.0):
        raise ValueError("a2 must be 0 or +-1")
    S0, Sp0 = (float(v) for v in iv)
    t0, t1 = (float(v) for v in span)
    if S0 * S0 + a2 == 0:
        raise SingularCrossing("S^2 + a2 vanishes at the initial point")
    t = np.linspace(t0, t1, samples)
    if a1 == 0:
        S = S0 + Sp0 * (t - t0)
        Sp = np.full_like(t, Sp0)
        W = constant(Sp0)
        drift = 0.0
    else:
        def rhs(_, y):
            with np.errstate(divide="ignore", invalid="ignore"):
                return [y[1], a1 * y[1] ** 2 / (y[0] ** 2 + a2)]

        def hit(_, y):
            return y[0] ** 2 + a2
        hit.terminal = True

        sol = solve_ivp(rhs, (t0, t1), [S0, Sp0], method="DOP853", rtol=1e-13, atol=1e-14,
                        dense_output=True, events=hit)
        if sol.status == 1:
            raise SingularCrossing(f"S^2 + a2 reaches zero at t = {sol.t_events[0][0]:.12g}")
        if not sol.success:
            gap = sol.y[0, -1] ** 2 + a2
            if abs(gap) < 1e-4 * abs(S0 * S0 + a2):
                # S' blew up on the way into the singular set
                raise SingularCrossing(f"S^2 + a2 reaches zero near t = {sol.t[-1]:.12g}")
            raise RuntimeError(sol.message)
        S, Sp = sol.sol(t)
        inv = s_ode_invariant(a1, a2, S, Sp)
        drift = float(np.max(np.abs(inv - inv[0])) / max(1.0, abs(inv[0])))
        W = tabulated(t, Sp)
    sc = Scenario(constant(1.0), monomial(-2.0), W, (0.0, 1.0), (min(t0, t1), max(t0, t1)))
    return SOdeResult(float(a1), float(a2), t, S, Sp, W, drift, sc)
