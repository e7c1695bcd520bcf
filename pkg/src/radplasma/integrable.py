"""The linearizable model ``u_t = (u^-2 u_x)_x + 1``.

With ``u = phi_x`` the potential obeys ``phi_t = phi_xx / phi_x^2 + x`` and
the hodograph exchange ``x <-> phi`` turns that into Burgers' equation
``x_t = x_phiphi - x x_phi``.  Cole-Hopf ``x = -2 theta_phi / theta`` then
reduces it to the heat equation ``theta_t = theta_phiphi``.

A closed box ``[0, 1]`` (zero flux at both ends) is handled on the whole
line by even reflection about ``0`` and ``1``: the extended ``u`` is
2-periodic and even, so its potential is odd with ``phi(x + 2) = phi(x) + M``
where ``M`` is the mass of one period.  The heat kernel is integrated by
trapezoid sums in log form, which is exact to rounding for the Gaussian
weights involved once the grid resolves the kernel width.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline
from scipy.sparse import diags

from .model import (
    Field,
    Grid,
    Profile,
    Scenario,
    constant,
    monomial,
    neumann,
    shifted_inv_square,
)
from .solver import SolverParams, solve


class HodographError(ValueError):
    """The potential stopped being strictly monotone."""


class ColeHopfError(ValueError):
    """The heat-kernel quadrature cannot be trusted (unresolved kernel or support)."""


def integrable_scenario(b: float | None = None, ic=None, t_end: float = 0.1,
                        x_domain=(0.0, 1.0), bc_left=None, bc_right=None) -> Scenario:
    """``u_t = (u^-2 u_x)_x + 1``, or with ``b`` the shifted form ``A = (b - v)^-2``."""
    A = monomial(-2.0) if b is None else shifted_inv_square(b)
    return Scenario(constant(1.0), A, constant(1.0), x_domain, (0.0, t_end),
                    bc_left or neumann(0.0), bc_right or neumann(0.0), ic=ic)


def constant_flux_scenario(R: float, ic=None, t_end: float = 0.1) -> Scenario:
    """Zero flux at ``x = 0`` and a constant outward leak ``R`` at ``x = 1``."""
    return integrable_scenario(ic=ic, t_end=t_end, bc_right=neumann(-R))


# ---------------------------------------------------------------------------
# potential


@dataclass(frozen=True)
class Potential:
    faces: np.ndarray
    values: np.ndarray
    gauge: float


def _sign(u) -> int:
    u = np.asarray(u, dtype=float)
    if np.all(u > 0):
        return 1
    if np.all(u < 0):
        return -1
    raise HodographError("u must keep one strict sign for the potential to be invertible")


def to_potential(u: Field, gauge: float = 0.0) -> Potential:
    """Face values of ``phi`` with ``phi_x = u`` and ``phi(x_left) = gauge``."""
    _sign(u.values)
    vals = gauge + u.grid.dx * np.concatenate([[0.0], np.cumsum(u.values)])
    return Potential(u.grid.faces, vals, gauge)


def from_potential(p: Potential) -> Field:
    grid = Grid(float(p.faces[0]), float(p.faces[-1]), p.faces.size - 1)
    return Field(grid, 0.0, np.diff(p.values) / grid.dx)


def potential_defect(times, x, phi) -> np.ndarray:
    """Centred-difference defect of ``phi_t - phi_xx / phi_x^2 - x`` at interior nodes.

    ``phi`` has shape ``(len(times), len(x))``; time differences are centred
    between consecutive stamps and space differences are averaged onto them.
    """
    t, x, phi = (np.asarray(a, dtype=float) for a in (times, x, phi))
    dx = x[1] - x[0]
    mid = 0.5 * (phi[1:] + phi[:-1])
    p_t = np.diff(phi, axis=0) / np.diff(t)[:, None]
    p_x = (mid[:, 2:] - mid[:, :-2]) / (2 * dx)
    p_xx = (mid[:, 2:] - 2 * mid[:, 1:-1] + mid[:, :-2]) / dx ** 2
    return p_t[:, 1:-1] - p_xx / p_x ** 2 - x[None, 1:-1]


# ---------------------------------------------------------------------------
# hodograph


@dataclass(frozen=True)
class HodographState:
    phi: np.ndarray          # uniform grid
    x: np.ndarray            # x(phi)
    sign: int                # +1 when x increases with phi
    b: float | None = None   # shift of the v = u + b variant
    certificate: float = field(default=0.0)   # min of sign * x_phi on the grid

    @property
    def monotone(self) -> bool:
        return self.certificate > 0


def hodograph(x, phi, n: int | None = None, b: float | None = None) -> HodographState:
    """Resample ``x`` as a function of ``phi`` on a uniform ``phi`` grid."""
    x, phi = np.asarray(x, dtype=float), np.asarray(phi, dtype=float)
    d = np.diff(phi)
    if not (np.all(d > 0) or np.all(d < 0)):
        raise HodographError("phi is not strictly monotone in x")
    sign = 1 if d[0] > 0 else -1
    order = np.argsort(phi)
    spl = CubicSpline(phi[order], x[order])
    grid = np.linspace(phi.min(), phi.max(), n or phi.size)
    slope = spl.derivative()(grid)
    cert = float(np.min(sign * slope))
    if cert <= 0:
        raise HodographError("interpolated x(phi) is not monotone")
    return HodographState(grid, spl(grid), sign, b, cert)


def inverse_hodograph(state: HodographState, x_out) -> np.ndarray:
    """``phi`` at the requested ``x`` from a hodograph state."""
    if not state.monotone:
        raise HodographError("monotonicity certificate failed")
    order = np.argsort(state.x)
    return CubicSpline(state.x[order], state.phi[order])(np.asarray(x_out, dtype=float))


def burgers_defect(phi, times, x) -> np.ndarray:
    """Centred-difference defect of ``x_t - x_phiphi + x x_phi`` (interior nodes)."""
    phi, t, x = (np.asarray(a, dtype=float) for a in (phi, times, x))
    h = phi[1] - phi[0]
    mid = 0.5 * (x[1:] + x[:-1])
    x_t = np.diff(x, axis=0) / np.diff(t)[:, None]
    x_p = (mid[:, 2:] - mid[:, :-2]) / (2 * h)
    x_pp = (mid[:, 2:] - 2 * mid[:, 1:-1] + mid[:, :-2]) / h ** 2
    return x_t[:, 1:-1] - x_pp + mid[:, 1:-1] * x_p


# ---------------------------------------------------------------------------
# heat kernel and Burgers


def heat_convolve(theta, dphi: float, t: float) -> np.ndarray:
    """Advance sampled heat data by a discrete Gaussian with unit column sums.

    Every source sample spreads its full mass over the grid, so the discrete
    mass ``sum(theta) * dphi`` is preserved to rounding.
    """
    theta = np.asarray(theta, dtype=float)
    if t == 0:
        return theta.copy()
    n = theta.size
    s = np.arange(n) * dphi
    K = np.exp(-(s[:, None] - s[None, :]) ** 2 / (4 * t))
    K /= K.sum(axis=0, keepdims=True)
    return K @ theta


@dataclass
class BurgersSolution:
    phi: np.ndarray          # output abscissae
    times: np.ndarray
    x: np.ndarray            # shape (len(times), len(phi))
    x_phi: np.ndarray


def kink(c: float, phi, t):
    """Travelling front ``c (1 - tanh(c (phi - c t) / 2))`` of ``x_t + x x_phi = x_phiphi``."""
    return c * (1.0 - np.tanh(c * (np.asarray(phi) - c * t) / 2.0))


def burgers_solve(x0, psi, times, phi_out=None, x0_prime=None, tail: float = 36.0,
                  chunk: int = 256) -> BurgersSolution:
    """Burgers' equation ``x_t = x_phiphi - x x_phi`` by Cole-Hopf.

    ``x0`` holds initial samples on the uniform grid ``psi``.  With
    ``theta0 = exp(-1/2 int x0)`` and Gaussian weights
    ``w = K(phi - psi, t) theta0(psi)`` the solution is the weighted mean
    ``<x0>`` and its slope is ``<x0'> - (<x0^2> - <x0>^2) / 2``.

    Raises :class:`ColeHopfError` if a weight within ``exp(-tail)`` of the
    peak reaches the end of the ``psi`` grid (truncated support) or if the
    kernel width is below four grid spacings.
    """
    psi = np.asarray(psi, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    h = psi[1] - psi[0]
    spl = CubicSpline(psi, x0)
    S = spl.antiderivative()(psi)
    dx0 = spl.derivative()(psi) if x0_prime is None else np.asarray(x0_prime, dtype=float)
    log_theta0 = -0.5 * S
    trap = np.full(psi.size, np.log(h))
    trap[[0, -1]] += np.log(0.5)
    phi_out = psi if phi_out is None else np.asarray(phi_out, dtype=float)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    X = np.empty((times.size, phi_out.size))
    XP = np.empty_like(X)
    for i, t in enumerate(times):
        if t == 0:
            X[i] = spl(phi_out)
            XP[i] = spl.derivative()(phi_out) if x0_prime is None else \
                CubicSpline(psi, dx0)(phi_out)
            continue
        if np.sqrt(2 * t) < 4 * h:
            raise ColeHopfError(f"kernel width {np.sqrt(2 * t):.3e} is under four grid spacings")
        for a in range(0, phi_out.size, chunk):
            p = phi_out[a:a + chunk, None]
            lw = -(p - psi[None, :]) ** 2 / (4 * t) + log_theta0[None, :] + trap[None, :]
            top = lw.max(axis=1, keepdims=True)
            if np.any(lw[:, [0, -1]] > top - tail):
                raise ColeHopfError("heat-kernel support reaches the end of the psi grid")
            w = np.exp(lw - top)
            w /= w.sum(axis=1, keepdims=True)
            m1 = w @ x0
            X[i, a:a + chunk] = m1
            XP[i, a:a + chunk] = w @ dx0 - 0.5 * (w @ (x0 * x0) - m1 * m1)
    return BurgersSolution(phi_out, times, X, XP)


def burgers_fd(x0, phi, t_end: float, rtol: float = 1e-10, atol: float = 1e-12):
    """Method-of-lines Burgers integration with fourth-order centred differences.

    End values are held fixed, so the data should be flat near both ends.
    Returns the state at ``t_end`` on ``phi``.
    """
    phi = np.asarray(phi, dtype=float)
    y0 = np.asarray(x0, dtype=float)
    h = phi[1] - phi[0]
    n = phi.size
    left, right = y0[:2].copy(), y0[-2:].copy()

    def full(y):
        return np.concatenate([left, y, right])

    def rhs(_, y):
        z = full(y)
        zp = (-z[4:] + 8 * z[3:-1] - 8 * z[1:-3] + z[:-4]) / (12 * h)
        zpp = (-z[4:] + 16 * z[3:-1] - 30 * z[2:-2] + 16 * z[1:-3] - z[:-4]) / (12 * h * h)
        return zpp - z[2:-2] * zp

    m = n - 4
    sparsity = diags([1] * 5, [-2, -1, 0, 1, 2], shape=(m, m))
    sol = solve_ivp(rhs, (0.0, t_end), y0[2:-2], method="BDF", rtol=rtol, atol=atol,
                    jac_sparsity=sparsity)
    if not sol.success:
        raise RuntimeError(sol.message)
    return full(sol.y[:, -1])


# ---------------------------------------------------------------------------
# round trip on the closed unit box


@dataclass
class RoundTripReport:
    t_final: float
    x: np.ndarray
    u_direct: np.ndarray
    u_hodograph: np.ndarray
    discrepancy: float
    mean_direct: float
    mean_hodograph: float
    gauge: float             # phi where x(phi) = 0 at t_final; 0 for this gauge
    certificate: float
    b: float | None = None

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("t_final", "discrepancy", "mean_direct",
                                               "mean_hodograph", "gauge", "certificate", "b")}


def _even_periodic(f):
    def g(x):
        r = np.mod(np.asarray(x, dtype=float), 2.0)
        return f(np.where(r > 1.0, 2.0 - r, r))
    return g


def hodograph_path(ic, t_final: float, x_out, n_fine: int = 4000, n_out: int = 2001):
    """Solve the closed-box problem at ``t_final`` through Burgers and Cole-Hopf.

    ``ic`` is the initial ``u`` on ``[0, 1]`` (one strict sign).  Returns
    ``(u at x_out, mean, gauge, certificate)``.
    """
    u_ext = _even_periodic(ic)
    xs = np.linspace(0.0, 1.0, n_fine + 1)
    u_s = ic(xs)
    sign = _sign(u_s)
    half = float(CubicSpline(xs, u_s).integrate(0.0, 1.0))    # M / 2
    sigma = np.sqrt(2 * t_final)
    h = min(sigma / 20.0, abs(half) / n_fine) if t_final > 0 else abs(half) / n_fine
    reach = 12.0 * sigma + 1.0
    end = half + t_final
    while True:
        lo, hi = min(0.0, half, end) - reach, max(0.0, half, end) + reach
        periods = int(np.ceil(reach / abs(half))) + 1
        xe = np.linspace(-periods, periods + 1, (2 * periods + 1) * n_fine + 1)
        pe = CubicSpline(xs, u_s).antiderivative()
        # phi on [0, 1] then odd/periodic continuation
        base = lambda z: pe(z) - pe(0.0)
        r = np.mod(xe, 2.0)
        k = np.floor_divide(xe, 2.0)
        phi_e = k * 2 * half + np.where(r > 1.0, 2 * half - base(2.0 - r), base(r))
        psi = np.arange(lo, hi + h / 2, h)
        x_of_psi = CubicSpline(phi_e * sign, xe)(psi * sign)
        # at time t the box spans phi in [0, M(t)/2] with M(t)/2 = half + t
        targets = np.linspace(min(0.0, end), max(0.0, end), n_out)
        pad = 0.02 * abs(end)
        targets = np.concatenate([[targets[0] - pad], targets, [targets[-1] + pad]])
        try:
            sol = burgers_solve(x_of_psi, psi, [t_final], targets,
                                x0_prime=1.0 / u_ext(x_of_psi))
            break
        except ColeHopfError as e:
            if "support" not in str(e) or reach > 200:
                raise
            reach *= 1.5
    xb, xp = sol.x[0], sol.x_phi[0]
    cert = float(np.min(sign * xp))
    if cert <= 0 or np.any(sign * np.diff(xb) <= 0):
        raise HodographError("x(phi) lost monotonicity")
    order = np.argsort(xb)
    u_b = CubicSpline(xb[order], (1.0 / xp)[order])(x_out)
    gauge = float(CubicSpline(xb[order], targets[order])(0.0))
    return u_b, end, gauge, cert


def roundtrip_compare(ic, t_final: float = 0.1, N: int = 256, b: float | None = None,
                      steps: int = 400, n_fine: int = 4000) -> RoundTripReport:
    """Direct finite-volume solve against the hodograph/Cole-Hopf path.

    ``ic`` is the initial profile of the solved variable: ``u`` for the
    plain model or ``v = u + b`` for the shifted one.  The comparison uses
    every cell centre of the direct grid.
    """
    sc = integrable_scenario(b, ic=ic, t_end=t_final)
    rep = solve(sc, SolverParams(N=N, dt=t_final / steps, rannacher=2))
    fa = rep.final
    shift = 0.0 if b is None else b
    u_ic = (lambda x: ic(x) - shift) if not isinstance(ic, Profile) else \
        (lambda x: ic(x, (0.0, 1.0)) - shift)
    x = fa.grid.centers
    u_b, mean_b, gauge, cert = hodograph_path(u_ic, t_final, x, n_fine=n_fine)
    u_a = fa.values - shift
    return RoundTripReport(
        t_final, x, fa.values, u_b + shift, float(np.max(np.abs(u_a - u_b))),
        float(np.mean(u_a)) + shift, mean_b + shift, gauge, cert, b,
    )
