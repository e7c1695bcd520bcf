"""Conservative implicit finite-volume solver.

Cell-centred unknowns on a uniform grid, face flux
``F = G(x_f) * (A_i + A_{i+1}) / 2 * (u_{i+1} - u_i) / dx`` and a theta scheme
in time.  Each step solves the nonlinear update by Newton's method with the
exact tridiagonal Jacobian.  The source ``W`` enters through its exact
integral over the step, so a spatially uniform state advances exactly.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import solve_banded
from scipy.optimize import brentq
from scipy.integrate import quad

from .model import (
    Analytic,
    DomainError,
    Field,
    FieldSeries,
    Grid,
    Scenario,
    dirichlet,
    residual_from_derivatives,
)


class NewtonFailure(RuntimeError):
    """Newton iteration did not reach the tolerance."""


class StepFailure(RuntimeError):
    """A step failed even after the allowed number of time-step halvings."""


@dataclass(frozen=True)
class SolverParams:
    N: int = 256
    dt: float = 1e-3
    control: str = "fixed"          # or "adaptive"
    target_error: float = 1e-8
    newton_tol: float = 1e-12
    newton_max_iter: int = 30
    theta: float = 0.5
    max_halvings: int = 10
    store_steps: bool = True
    rannacher: int = 0              # leading steps replaced by two implicit-Euler half steps

    def __post_init__(self):
        if self.N < 8:
            raise ValueError("N must be at least 8")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not 0.5 <= self.theta <= 1.0:
            raise ValueError("theta must lie in [0.5, 1]")
        if self.control not in ("fixed", "adaptive"):
            raise ValueError("control must be 'fixed' or 'adaptive'")
        if self.rannacher < 0:
            raise ValueError("rannacher must be non-negative")

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class StepRecord:
    t: float                 # start of the step
    dt: float
    flux: np.ndarray         # theta-averaged face fluxes, length N + 1
    w_integral: float
    source: np.ndarray | None
    iterations: int
    residual: float
    values: np.ndarray | None = None   # state at t + dt
    theta: float = 0.5

    def increment(self, dx: float) -> np.ndarray:
        """Replay the update ``u_{n+1} - u_n`` from the stored fluxes."""
        inc = self.dt / dx * np.diff(self.flux) + self.w_integral
        if self.source is not None:
            inc = inc + self.source
        return inc


@dataclass
class SolveReport:
    scenario: Scenario
    params: SolverParams
    grid: Grid
    fields: list
    steps: list
    wall_time: float = 0.0
    rejected: int = 0
    halvings: int = 0
    initial: np.ndarray | None = None

    @property
    def newton_iterations(self) -> list:
        return [s.iterations for s in self.steps]

    @property
    def cl1_defects(self) -> np.ndarray:
        """Per-step defect of the discrete energy balance."""
        dx = self.grid.dx
        out = []
        prev = self.initial
        for s in self.steps:
            if s.values is None or prev is None:
                break
            gain = dx * np.sum(s.values - prev - s.w_integral - (0 if s.source is None else s.source))
            out.append(gain - s.dt * (s.flux[-1] - s.flux[0]))
            prev = s.values
        return np.asarray(out)

    @property
    def final(self) -> Field:
        return self.fields[-1]

    def series(self) -> FieldSeries:
        return FieldSeries.from_fields(self.fields)

    def step_series(self) -> FieldSeries:
        """Every stored step, starting with the initial state."""
        if not self.steps or self.steps[0].values is None:
            raise ValueError("steps were not stored")
        times = [self.steps[0].t] + [s.t + s.dt for s in self.steps]
        vals = [self.initial] + [s.values for s in self.steps]
        return FieldSeries(np.array(times), self.grid.centers, np.array(vals))

    def diagnostics(self) -> dict:
        d = self.cl1_defects
        return {
            "N": self.grid.n,
            "steps": len(self.steps),
            "rejected": self.rejected,
            "halvings": self.halvings,
            "newton_iterations_max": int(max(self.newton_iterations, default=0)),
            "newton_iterations_mean": float(np.mean(self.newton_iterations)) if self.steps else 0.0,
            "cl1_defect_max": float(np.max(np.abs(d))) if d.size else 0.0,
            "wall_time": self.wall_time,
            "params": self.params.to_dict(),
        }


class _Discretization:
    def __init__(self, sc: Scenario, grid: Grid):
        self.sc = sc
        self.grid = grid
        self.dx = grid.dx
        self.x = grid.centers
        faces = grid.faces
        self.G_face = np.asarray(sc.G(faces), dtype=float)
        if np.any(self.G_face <= 0):
            raise ValueError("G must be positive on the grid")

    def fluxes(self, u, t):
        """Face fluxes plus their derivatives for the Jacobian.

        Returns ``F, dl, dr, e0, eN`` where ``dl[j]``/``dr[j]`` differentiate
        face ``j`` with respect to its left/right cell and ``e0``/``eN`` are
        the second-cell couplings of the one-sided Dirichlet fluxes.
        """
        sc, dx, Gf = self.sc, self.dx, self.G_face
        n = u.size
        A = sc.A(u)
        dA = sc.A.derivative(u)
        F = np.empty(n + 1)
        dl = np.zeros(n + 1)
        dr = np.zeros(n + 1)
        du = u[1:] - u[:-1]
        Abar = 0.5 * (A[:-1] + A[1:])
        F[1:-1] = Gf[1:-1] * Abar * du / dx
        dl[1:-1] = Gf[1:-1] * (0.5 * dA[:-1] * du - Abar) / dx
        dr[1:-1] = Gf[1:-1] * (0.5 * dA[1:] * du + Abar) / dx
        e0 = eN = 0.0
        left, right = sc.bc_left, sc.bc_right
        if left.kind == "neumann":
            F[0] = left.at(t)
        else:
            ub = left.at(t)
            c = Gf[0] * sc.A(ub) / (3 * dx)
            F[0] = c * (-8 * ub + 9 * u[0] - u[1])
            dr[0], e0 = 9 * c, -c
        if right.kind == "neumann":
            F[-1] = right.at(t)
        else:
            ub = right.at(t)
            c = Gf[-1] * sc.A(ub) / (3 * dx)
            F[-1] = c * (8 * ub - 9 * u[-1] + u[-2])
            dl[-1], eN = -9 * c, c
        return F, dl, dr, e0, eN


def _step(disc: _Discretization, u_n, t_n, dt, p: SolverParams):
    sc, dx, th = disc.sc, disc.dx, p.theta
    t1 = t_n + dt
    c = dt / dx
    F_old = disc.fluxes(u_n, t_n)[0]
    w_int = float(sc.W.antiderivative(t1, t_n))
    src = None
    if sc.source is not None:
        src = dt * (th * np.asarray(sc.source(t1, disc.x)) + (1 - th) * np.asarray(sc.source(t_n, disc.x)))
    base = u_n + (1 - th) * c * np.diff(F_old) + w_int + (0 if src is None else src)
    scale = max(1.0, float(np.max(np.abs(u_n))))

    def residual(v):
        return v - base - th * c * np.diff(disc.fluxes(v, t1)[0])

    # predictor: frozen state or explicit rate, whichever fits better
    u = u_n + w_int
    explicit = base + th * c * np.diff(F_old)
    try:
        if np.max(np.abs(residual(explicit))) < np.max(np.abs(residual(u))):
            u = explicit
    except DomainError:
        pass
    ab = np.zeros((3, u.size))
    res = math.inf
    for it in range(1, p.newton_max_iter + 1):
        F, dl, dr, e0, eN = disc.fluxes(u, t1)
        R = u - base - th * c * np.diff(F)
        ab[1] = 1.0 - th * c * (dl[1:] - dr[:-1])
        ab[0, 1:] = -th * c * dr[1:-1]
        ab[2, :-1] = th * c * dl[1:-1]
        ab[0, 1] += th * c * e0
        ab[2, -2] -= th * c * eN
        delta = solve_banded((1, 1), ab, -R)
        u = u + delta
        if not np.all(np.isfinite(u)):
            raise NewtonFailure("non-finite Newton iterate")
        F = disc.fluxes(u, t1)[0]
        R = u - base - th * c * np.diff(F)
        res = float(np.max(np.abs(R))) / scale
        if res < p.newton_tol:
            flux = th * F + (1 - th) * F_old
            return u, StepRecord(t_n, dt, flux, w_int, src, it, res, theta=th)
    raise NewtonFailure(f"Newton stalled at scaled residual {res:.3e} after {p.newton_max_iter} iterations")


def step(u_n: Field, t_n: float, dt: float, sc: Scenario, p: SolverParams) -> Field:
    """Advance one theta step (halving ``dt`` automatically on failure)."""
    disc = _Discretization(sc, u_n.grid)
    u, _, _ = _robust_step(disc, u_n.values, t_n, dt, p, 0)
    return Field(u_n.grid, t_n + dt, u)


def _robust_step(disc, u, t, dt, p, depth):
    """Returns ``(u, records, halvings)``; splits the step in two on failure."""
    try:
        u1, rec = _step(disc, u, t, dt, p)
        rec.values = u1 if p.store_steps else None
        return u1, [rec], 0
    except (NewtonFailure, DomainError, FloatingPointError) as exc:
        if depth >= p.max_halvings:
            raise StepFailure(f"step at t={t:.6g} failed after {depth} halvings: {exc}") from exc
    h = 0.5 * dt
    um, r1, n1 = _robust_step(disc, u, t, h, p, depth + 1)
    u2, r2, n2 = _robust_step(disc, um, t + h, h, p, depth + 1)
    return u2, r1 + r2, 1 + n1 + n2


def solve(sc: Scenario, p: SolverParams, output_times=None, grid: Grid | None = None) -> SolveReport:
    """Integrate from the start of ``sc.t_domain`` through ``output_times``."""
    start = time.perf_counter()
    grid = grid or Grid.for_scenario(sc, p.N)
    if grid.n != p.N:
        p = replace(p, N=grid.n)
    disc = _Discretization(sc, grid)
    t0 = sc.t_domain[0]
    outs = sorted(set(float(v) for v in (output_times if output_times is not None else [t0, sc.t_domain[1]])))
    if outs[0] < t0 - 1e-14:
        raise ValueError("output times precede the initial time")
    if sc.ic is None:
        raise ValueError("scenario has no initial condition")
    u = np.asarray(sc.initial(grid.centers), dtype=float)
    sc.A(u)
    report = SolveReport(sc, p, grid, [], [], initial=u.copy())
    implicit = replace(p, theta=1.0)
    t = t0
    dt = min(p.dt, sc.t_domain[1] - t0) if p.control == "adaptive" else p.dt
    err_prev = p.target_error
    for target in outs:
        if p.control == "fixed":
            span = target - t
            if span > 1e-14 * max(1.0, abs(target)):
                nsteps = max(1, math.ceil(span / p.dt - 1e-9))
                h = span / nsteps
                for k in range(nsteps):
                    tk = t + k * h if k < nsteps - 1 else target - h
                    if len(report.steps) < 2 * p.rannacher:
                        u, recs, nh = _robust_step(disc, u, tk, 0.5 * h, implicit, 0)
                        u, recs2, nh2 = _robust_step(disc, u, tk + 0.5 * h, 0.5 * h, implicit, 0)
                        recs, nh = recs + recs2, nh + nh2
                    else:
                        u, recs, nh = _robust_step(disc, u, tk, h, p, 0)
                    report.steps += recs
                    report.halvings += nh
                t = target
        else:
            while target - t > 1e-14 * max(1.0, abs(target)):
                h = min(dt, target - t)
                ub, _, _ = _robust_step(disc, u, t, h, p, 0)
                um, r1, n1 = _robust_step(disc, u, t, 0.5 * h, p, 0)
                us, r2, n2 = _robust_step(disc, um, t + 0.5 * h, 0.5 * h, p, 0)
                err = float(np.max(np.abs(ub - us))) / 3.0
                if err <= p.target_error:
                    u = us
                    report.steps += r1 + r2
                    report.halvings += n1 + n2
                    t = t + h if h < target - t else target
                    fac = 0.9 * (p.target_error / max(err, 1e-300)) ** (0.7 / 3) \
                        * (max(err_prev, 1e-300) / p.target_error) ** (0.4 / 3)
                    err_prev = max(err, 1e-4 * p.target_error)
                    if h == dt or fac < 1:
                        dt = h * min(5.0, max(0.2, fac))
                else:
                    report.rejected += 1
                    dt = h * max(0.2, 0.9 * (p.target_error / err) ** (1 / 3))
                    if dt < 1e-14 * max(1.0, abs(t)):
                        raise StepFailure("adaptive step size underflow")
        report.fields.append(Field(grid, target, u.copy()))
    report.wall_time = time.perf_counter() - start
    return report


# ---------------------------------------------------------------------------
# manufactured solutions and convergence


def manufactured_source(sc: Scenario, u_m: Analytic) -> Scenario:
    """Scenario whose extra source makes ``u_m`` an exact solution."""
    base = replace(sc, source=None)

    def S(t, x):
        t, x = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(x, dtype=float))
        return residual_from_derivatives(base, t, x, u_m.u(t, x), u_m.u_t(t, x),
                                         u_m.u_x(t, x), u_m.u_xx(t, x))

    return replace(sc, source=S)


def manufactured_scenario(sc: Scenario, u_m: Analytic) -> Scenario:
    """Manufactured source plus Dirichlet data and initial state taken from ``u_m``."""
    xl, xr = sc.x_domain
    t0 = sc.t_domain[0]
    out = manufactured_source(sc, u_m)
    return replace(
        out,
        bc_left=dirichlet(lambda t: float(u_m.u(t, xl))),
        bc_right=dirichlet(lambda t: float(u_m.u(t, xr))),
        ic=lambda x: u_m.u(t0, np.asarray(x)),
    )


def standard_manufactured(t_end: float = 0.5):
    """``u = 2 + sin(pi x) e^{-t}`` with ``G = 1 + x^2``, ``A = u^2``, ``W = 1`` on [0, 1]."""
    from .model import constant, monomial, tabulated

    xs = np.linspace(0.0, 1.0, 9)
    G = tabulated(xs, 1 + xs**2, slopes=(0.0, 2.0))
    pi = math.pi
    u_m = Analytic(
        lambda t, x: 2 + np.sin(pi * x) * np.exp(-t),
        lambda t, x: -np.sin(pi * x) * np.exp(-t),
        lambda t, x: pi * np.cos(pi * x) * np.exp(-t),
        lambda t, x: -pi * pi * np.sin(pi * x) * np.exp(-t),
    )
    sc = Scenario(G, monomial(2.0), constant(1.0), (0.0, 1.0), (0.0, t_end))
    return manufactured_scenario(sc, u_m), u_m


@dataclass
class ConvergenceReport:
    label: str
    sizes: list            # N values or dt values
    errors: list
    orders: list = field(default_factory=list)

    def __post_init__(self):
        e = self.errors
        r = self.sizes
        self.orders = [math.log(e[i] / e[i + 1]) / math.log(abs(r[i] / r[i + 1]) if r[i] > r[i + 1]
                                                              else r[i + 1] / r[i])
                       for i in range(len(e) - 1)]

    def to_dict(self) -> dict:
        return {"label": self.label, "sizes": list(self.sizes), "errors": list(self.errors),
                "orders": list(self.orders)}


def _run_final(sc, N, dt, theta=0.5, rannacher=2):
    p = SolverParams(N=N, dt=dt, theta=theta, store_steps=False, rannacher=rannacher)
    rep = solve(sc, p, [sc.t_domain[1]])
    return rep.grid.centers, rep.final.values


def convergence_study(sc: Scenario, u_exact, Ns=(64, 128, 256, 512), courant: float = 1.0,
                      theta: float = 0.5, rannacher: int = 2) -> ConvergenceReport:
    """Joint refinement with ``dt = courant * dx``; L-infinity error at the final time.

    Two Rannacher startup steps damp the undamped stiff modes of the
    trapezoidal rule, which otherwise leave a dt-independent error floor.
    """
    L = sc.x_domain[1] - sc.x_domain[0]
    t1 = sc.t_domain[1]
    errs = []
    for N in Ns:
        x, u = _run_final(sc, N, courant * L / N, theta, rannacher)
        errs.append(float(np.max(np.abs(u - u_exact(t1, x)))))
    return ConvergenceReport("dx and dt jointly", [L / N for N in Ns], errs)


def spatial_study(sc: Scenario, u_exact, Ns=(64, 128, 256, 512), courant: float = 1.0) -> ConvergenceReport:
    """Spatial error after removing the O(dt^2) term by Richardson extrapolation in time."""
    L = sc.x_domain[1] - sc.x_domain[0]
    t1 = sc.t_domain[1]
    errs = []
    for N in Ns:
        dt = courant * L / N
        x, ua = _run_final(sc, N, dt)
        _, ub = _run_final(sc, N, dt / 2)
        errs.append(float(np.max(np.abs((4 * ub - ua) / 3 - u_exact(t1, x)))))
    return ConvergenceReport("dx (time-extrapolated)", [L / N for N in Ns], errs)


def temporal_study(sc: Scenario, N: int = 64, steps=(20, 40, 80, 160, 320)) -> ConvergenceReport:
    """Temporal self-convergence at fixed ``N``: successive differences between step counts."""
    span = sc.t_domain[1] - sc.t_domain[0]
    dts = [span / k for k in steps]
    sols = [_run_final(sc, N, dt)[1] for dt in dts]
    diffs = [float(np.max(np.abs(sols[i] - sols[i + 1]))) for i in range(len(dts) - 1)]
    return ConvergenceReport("dt (self-convergence)", dts[:-1], diffs)


# ---------------------------------------------------------------------------
# stability of the uniform state


@dataclass
class StabilityReport:
    times: np.ndarray
    tau: np.ndarray
    norms: np.ndarray
    predicted: np.ndarray | None
    mean_error: float
    perturbation_mean: float
    monotone_after: int

    @property
    def monotone(self) -> bool:
        n = self.norms[self.monotone_after:]
        return bool(np.all(np.diff(n) <= 1e-15 * max(1.0, float(n[0]) if n.size else 1.0)))

    @property
    def max_rel_deviation(self) -> float:
        if self.predicted is None:
            return float("nan")
        ok = self.predicted > 0
        return float(np.max(np.abs(self.norms[ok] / self.norms[0] / self.predicted[ok] - 1)))

    def to_dict(self) -> dict:
        return {
            "tau_final": float(self.tau[-1]),
            "norm_ratio_final": float(self.norms[-1] / self.norms[0]) if self.norms[0] > 0 else 0.0,
            "max_rel_deviation": self.max_rel_deviation,
            "monotone": self.monotone,
            "mean_error": self.mean_error,
            "perturbation_mean": self.perturbation_mean,
        }


class StabilityError(RuntimeError):
    """The perturbation did not decay."""


def stability_experiment(sc: Scenario, eps0: float = 1e-3, modes=(1,), Y0: float = 0.0,
                         tau_end: float = 1.0, N: int = 128, steps: int = 400,
                         theta: float = 0.5) -> StabilityReport:
    """Perturb the uniform state ``Y(t)`` by cosine modes and follow the decay.

    With ``G = 1`` the linearized perturbation obeys ``v_tau = v_xx`` in
    ``tau = int A(Y) dt``, so mode ``k`` decays like ``exp(-(k pi / L)^2 tau)``.
    """
    if sc.bc_left.kind != "neumann" or sc.bc_right.kind != "neumann" \
            or sc.bc_left.at(sc.t_domain[0]) != 0 or sc.bc_right.at(sc.t_domain[0]) != 0:
        raise ValueError("the stability experiment needs Neumann-zero boundaries")
    if sc.g_min() <= 0:
        raise ValueError("G must have a positive minimum")
    xl, xr = sc.x_domain
    L = xr - xl
    t0 = sc.t_domain[0]
    Y = lambda t: Y0 + sc.W.antiderivative(t, t0)
    tau_of = lambda t: quad(lambda s: float(sc.A(Y(s))), t0, t, epsabs=1e-13, epsrel=1e-12)[0]
    hi = t0 + 1.0
    while tau_of(hi) < tau_end:
        hi = t0 + 2 * (hi - t0)
        if hi - t0 > 1e6:
            raise ValueError("tau never reaches tau_end")
    t_end = brentq(lambda t: tau_of(t) - tau_end, t0, hi, xtol=1e-14)

    def ic(x):
        s = (np.asarray(x) - xl) / L
        return Y0 + eps0 * sum(np.cos(k * math.pi * s) for k in modes)

    run_sc = replace(sc, ic=ic, t_domain=(t0, t_end))
    p = SolverParams(N=N, dt=(t_end - t0) / steps, theta=theta)
    rep = solve(run_sc, p, [t_end])
    series = rep.step_series()
    dx = rep.grid.dx
    means = series.values.mean(axis=1)
    v = series.values - means[:, None]
    norms = np.sqrt(dx * np.sum(v**2, axis=1))
    taus = np.array([tau_of(t) for t in series.times])
    mean_err = float(np.max(np.abs(means - np.array([Y(t) for t in series.times]))))
    predicted = None
    if sc.G.is_constant and len(modes) == 1:
        k = modes[0]
        g = float(sc.G(xl))
        predicted = np.exp(-g * (k * math.pi / L) ** 2 * taus)
    out = StabilityReport(series.times, taus, norms, predicted, mean_err,
                          float(np.max(np.abs(v.mean(axis=1)))), 3)
    if eps0 > 0 and norms[-1] >= norms[0]:
        raise StabilityError("perturbation norm did not decay")
    return out
