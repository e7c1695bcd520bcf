"""Generator catalog, finite flows and transport of discrete solutions.

Generators are stored in canonical coordinates together with the
equivalence transform that maps the user's scenario to canonical form.
Since that transform is affine and diagonal, a flow in user coordinates is
the canonical flow conjugated by the transform.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.interpolate import CubicSpline

from .canonical import CaseId, Classification, EquivTransform, invert
from .model import CoefficientFn, DomainError, FieldSeries, Scenario


class FlowError(RuntimeError):
    """The flow left the coefficient domain or failed to integrate."""


Affine = tuple  # ((alpha_t, beta_t), (alpha_x, beta_x), (alpha_u, beta_u))


@dataclass(frozen=True)
class Generator:
    """``tau d_t + xi d_x + eta d_u`` in user coordinates.

    ``affine`` holds canonical coefficients ``alpha s + beta`` for diagonal
    scaling/translation fields (closed-form flow); otherwise ``numeric`` is
    one of ``'X1'`` or ``'X2'``, the two exponential-table fields, whose flow
    is integrated.
    """

    name: str
    transform: EquivTransform
    affine: Affine | None = None
    numeric: str | None = None
    W: CoefficientFn | None = field(default=None, compare=False)
    P: Callable | None = field(default=None, compare=False)

    @property
    def flow_kind(self) -> str:
        return "ClosedForm" if self.affine is not None else "NumericODE"

    # canonical field -----------------------------------------------------

    def _canonical_field(self, t, x, u, P=None):
        t, x, u = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (t, x, u)))
        if self.affine is not None:
            (at, bt), (ax, bx), (au, bu) = self.affine
            return at * t + bt, ax * x + bx, au * u + bu
        I = self.W.primitive(t)
        e = np.exp(-I)
        if self.numeric == "X1":
            return e, np.zeros_like(x), e * self.W(t)
        P = self.P(t) if P is None else P
        return e * P, np.zeros_like(x), self.W(t) * e * P - 1.0

    # user-coordinate field -------------------------------------------------

    def _scales(self):
        e = self.transform.eps
        return e[3], e[4], e[5]

    def tau(self, t, x, u):
        tt, xx, uu = self.transform.map_point(t, x, u)
        return self._canonical_field(tt, xx, uu)[0] / self._scales()[0]

    def xi(self, t, x, u):
        tt, xx, uu = self.transform.map_point(t, x, u)
        return self._canonical_field(tt, xx, uu)[1] / self._scales()[1]

    def eta(self, t, x, u):
        tt, xx, uu = self.transform.map_point(t, x, u)
        return self._canonical_field(tt, xx, uu)[2] / self._scales()[2]

    def __call__(self, t, x, u):
        tt, xx, uu = self.transform.map_point(t, x, u)
        a, b, c = self._canonical_field(tt, xx, uu)
        s4, s5, s6 = self._scales()
        return a / s4, b / s5, c / s6

    def to_dict(self) -> dict:
        return {"name": self.name, "flow_kind": self.flow_kind}


# ---------------------------------------------------------------------------
# catalog


def _affine_table(table: int, row: int, p: dict):
    m = p.get("m", 0.0)
    n = p.get("n", 0.0)
    k = p.get("k", 0.0)
    a = p.get("a", 0.0)
    q = m * n + m + 1
    z = (0.0, 0.0)
    dx = (z, (0.0, 1.0), z)
    xdx = (z, (1.0, 0.0), z)
    T = {
        (3, 1): [("m*t*Dt - u*Du", ((m, 0.0), z, (-1.0, 0.0)))],
        (3, 2): [("(k-2)*t*Dt - (m*n+m+1)*x*Dx + (k-2)*(n+1)*u*Du",
                  ((k - 2, 0.0), (-q, 0.0), ((k - 2) * (n + 1), 0.0)))],
        (3, 3): [("(k-2)*Dt - m*x*Dx + (k-2)*u*Du", ((0.0, k - 2), (-m, 0.0), (k - 2, 0.0)))],
        (3, 4): [("t*Dt - (m*n+m+1)*Dx + (n+1)*u*Du", ((1.0, 0.0), (0.0, -q), (n + 1, 0.0)))],
        (3, 5): [("Dt - m*Dx + u*Du", ((0.0, 1.0), (0.0, -m), (1.0, 0.0)))],
        (3, 6): [("x*Dx", xdx), ("m*t*Dt - u*Du", ((m, 0.0), z, (-1.0, 0.0)))],
        (3, 7): [("Dx", dx), ("2*t*Dt + (m*n+m+1)*x*Dx + 2*(n+1)*u*Du",
                              ((2.0, 0.0), (q, 0.0), (2 * (n + 1), 0.0)))],
        (3, 8): [("Dx", dx), ("2*Dt + m*x*Dx + 2*u*Du", ((0.0, 2.0), (m, 0.0), (2.0, 0.0)))],
        (1, 1): [("(a-2)*t*Dt - x*Dx", ((a - 2, 0.0), (-1.0, 0.0), z))],
        (1, 2): [("t*Dt - Dx", ((1.0, 0.0), (0.0, -1.0), z))],
        (1, 3): [("x*Dx", xdx)],
        (1, 4): [("Dx", dx)],
        (1, 5): [("Dx", dx), ("2*t*Dt + x*Dx", ((2.0, 0.0), (1.0, 0.0), z))],
        (2, 3): [("Dx", dx), ("x*Dx + 2*Du", (z, (1.0, 0.0), (0.0, 2.0)))],
    }
    return T.get((table, row), [])


def exp_w_primitive(W: CoefficientFn, t_base: float) -> Callable:
    """``P(t) = int e^{I}`` with ``I`` the natural primitive of ``W``.

    Constant ``W = c`` gives the closed form ``e^{ct}/c``; otherwise ``P`` is a
    quadrature from ``t_base``.
    """
    if W.is_constant:
        c = float(W(t_base))
        if c == 0:
            return lambda t: np.asarray(t, dtype=float) * W.scale ** 0
        return lambda t: np.exp(c * np.asarray(t, dtype=float)) / c

    def P(t):
        t = np.asarray(t, dtype=float)
        out = np.empty(t.size)
        for i, ti in enumerate(t.ravel()):
            val, _ = quad(lambda s: math.exp(W.primitive(s)), t_base, ti,
                          epsabs=1e-15, epsrel=1e-13, limit=200)
            out[i] = val
        out = out.reshape(t.shape)
        return float(out) if out.ndim == 0 else out

    return P


def catalog(case: CaseId | Classification, sc: Scenario,
            transform: EquivTransform | None = None) -> list[Generator]:
    """Generators of the case, instantiated for ``sc``.

    With a :class:`Classification` the transform is taken from it; with a bare
    :class:`CaseId` the scenario is assumed canonical unless ``transform`` is given.
    """
    if isinstance(case, Classification):
        transform = case.transform
        case = case.case
    transform = transform or EquivTransform.identity()
    out = [Generator(name, transform, affine=aff)
           for name, aff in _affine_table(case.table, case.row, case.parameters)]
    if case.table == 2 and case.row in (1, 3):
        e = transform.eps
        Wc = sc.W.rescaled(e[5] / e[3], 1 / e[3], -e[0] / e[3])
        lo, hi = sorted((e[3] * sc.t_domain[0] + e[0], e[3] * sc.t_domain[1] + e[0]))
        P = exp_w_primitive(Wc, lo)
        X1 = Generator("exp(-I)*(Dt + W*Du)", transform, numeric="X1", W=Wc, P=P)
        X2 = Generator("exp(-I)*(P*Dt + (W*P - exp(I))*Du)", transform, numeric="X2", W=Wc, P=P)
        out = [X1] + out + [X2]
    return out


# ---------------------------------------------------------------------------
# flows


def _affine_flow(coef, s, eps):
    alpha, beta = coef
    if alpha == 0:
        return s + beta * eps
    g = math.exp(alpha * eps)
    return s * g + beta * math.expm1(alpha * eps) / alpha


def _numeric_canonical_flow(gen: Generator, eps: float, t, x, u, rtol=1e-12, atol=1e-12):
    t = np.atleast_1d(np.asarray(t, dtype=float))
    u = np.atleast_1d(np.asarray(u, dtype=float))
    n = t.size
    if eps == 0:
        return t, u
    use_P = gen.numeric == "X2"
    y0 = np.concatenate([t, u] + ([np.atleast_1d(gen.P(t))] if use_P else []))

    def rhs(_, y):
        tt, uu = y[:n], y[n:2 * n]
        P = y[2 * n:] if use_P else None
        try:
            a, _, c = gen._canonical_field(tt, 0.0 * tt, uu, P)
            dP = [np.exp(gen.W.primitive(tt)) * a] if use_P else []
        except DomainError as exc:
            raise FlowError(str(exc)) from exc
        return np.concatenate([a, c] + dP)

    sol = solve_ivp(rhs, (0.0, eps), y0, method="DOP853", rtol=rtol, atol=atol)
    if not sol.success or not np.all(np.isfinite(sol.y[:, -1])):
        raise FlowError(f"flow integration failed: {sol.message}")
    y = sol.y[:, -1]
    return y[:n], y[n:2 * n]


def flow(gen: Generator, eps: float, point, numeric: bool = False):
    """Image of ``point = (t, x, u)`` (arrays allowed) under ``exp(eps X)``.

    ``numeric=True`` forces ODE integration of the user-coordinate field, which
    is how the closed forms are cross-checked.
    """
    t, x, u = (np.asarray(a, dtype=float) for a in point)
    shape = np.broadcast(t, x, u).shape
    t, x, u = (np.broadcast_to(a, shape).astype(float) for a in (t, x, u))
    if numeric:
        return _generic_numeric_flow(gen, eps, t, x, u)
    T = gen.transform
    tt, xx, uu = T.map_point(t, x, u)
    if gen.affine is not None:
        ct, cx, cu = gen.affine
        tt, xx, uu = _affine_flow(ct, tt, eps), _affine_flow(cx, xx, eps), _affine_flow(cu, uu, eps)
    else:
        tt_f, uu_f = _numeric_canonical_flow(gen, eps, tt.ravel(), xx.ravel(), uu.ravel())
        tt, uu = tt_f.reshape(shape), uu_f.reshape(shape)
    out = invert(T).map_point(tt, xx, uu)
    if shape == ():
        return tuple(float(v) for v in out)
    return out


def _generic_numeric_flow(gen, eps, t, x, u):
    shape = t.shape
    n = t.size
    y0 = np.concatenate([t.ravel(), x.ravel(), u.ravel()])

    def rhs(_, y):
        try:
            a, b, c = gen(y[:n], y[n:2 * n], y[2 * n:])
        except DomainError as exc:
            raise FlowError(str(exc)) from exc
        return np.concatenate([np.broadcast_to(a, (n,)), np.broadcast_to(b, (n,)),
                               np.broadcast_to(c, (n,))])

    sol = solve_ivp(rhs, (0.0, eps), y0, method="DOP853", rtol=1e-11, atol=1e-12)
    if not sol.success:
        raise FlowError(sol.message)
    y = sol.y[:, -1]
    out = tuple(y[i * n:(i + 1) * n].reshape(shape) for i in range(3))
    if shape == ():
        return tuple(float(v) for v in out)
    return out


# ---------------------------------------------------------------------------
# transport of discrete solutions


@dataclass
class FlowedSolution:
    source: FieldSeries
    eps: float
    points: tuple          # transported (T, X, U), each shaped like source.values
    resampled: FieldSeries
    interp_error: float


def _spline_error(xs, us, grid):
    """Cubic resampling error estimate from a half-density spline."""
    if xs.size < 12:
        return float("inf")
    full = CubicSpline(xs, us)(grid)
    half = CubicSpline(xs[::2], us[::2])(grid)
    return float(np.max(np.abs(full - half))) / 16.0


def act_on_solution(gen: Generator, eps: float, sol: FieldSeries,
                    sc: Scenario | None = None, n_out: int | None = None) -> FlowedSolution:
    """Transport every sample of ``sol`` along the flow and rebuild time slices.

    Every catalogued field has ``tau = tau(t)``, so a time slice maps to a
    time slice and is resampled by a per-slice cubic spline on the window
    covered by all transported slices.
    """
    nt, nx = sol.values.shape
    T0 = np.broadcast_to(sol.times[:, None], (nt, nx))
    X0 = np.broadcast_to(sol.x[None, :], (nt, nx))
    T, X, U = flow(gen, eps, (T0, X0, sol.values))
    spread = np.max(np.ptp(T, axis=1))
    if spread > 1e-9 * max(1.0, float(np.max(np.abs(T)))):
        raise ValueError("generator mixes time slices; per-slice resampling does not apply")
    times = T[:, 0]
    order = np.argsort(times)
    lo = max(float(np.min(X[j])) for j in range(nt))
    hi = min(float(np.max(X[j])) for j in range(nt))
    if not hi > lo:
        raise ValueError("transported cloud too sparse: no common spatial window")
    n_out = n_out or nx
    grid = np.linspace(lo, hi, n_out)
    vals = np.empty((nt, n_out))
    err = 0.0
    for a, j in enumerate(order):
        xs, us = X[j], U[j]
        if xs[0] > xs[-1]:
            xs, us = xs[::-1], us[::-1]
        if np.sum((xs >= lo) & (xs <= hi)) < 8:
            raise ValueError("transported cloud too sparse for resampling")
        vals[a] = CubicSpline(xs, us)(grid)
        err = max(err, _spline_error(xs, us, grid))
    res = FieldSeries(times[order], grid, vals)
    if sc is not None:
        # evaluate coefficients on the new window early so domain problems surface here
        sc.G(grid)
        sc.A(vals)
    return FlowedSolution(sol, eps, (T, X, U), res, err)


def roundtrip_error(gen: Generator, eps: float, sol: FieldSeries) -> float:
    """L-infinity gap after flowing by ``eps`` and back, on the common window."""
    back = act_on_solution(gen, -eps, act_on_solution(gen, eps, sol).resampled).resampled
    out = 0.0
    for j in range(back.times.size):
        k = int(np.argmin(np.abs(sol.times - back.times[j])))
        inside = (back.x >= sol.x[0]) & (back.x <= sol.x[-1])
        ref = CubicSpline(sol.x, sol.values[k])(back.x[inside])
        out = max(out, float(np.max(np.abs(ref - back.values[j][inside]))))
    return out
