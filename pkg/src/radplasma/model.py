"""Coefficient algebra, scenarios, grids/fields and PDE residuals.

The equation family is

    u_t = [G(x) A(u) u_x]_x + W(t)

with G the mass density, A the nonlinear diffusivity factor and W the
source power.  Every coefficient is a :class:`CoefficientFn`: a tagged
parametric form with exact derivative and antiderivative rules, optionally
wrapped by an affine change of argument and a value scale so that the
scaling/translation equivalence group acts on it without leaving the family.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline


class DomainError(ValueError):
    """Coefficient evaluated outside its domain of definition."""


KINDS = (
    "constant",
    "power",
    "exponential",
    "monomial",
    "expu",
    "power_t",
    "exp_t",
    "inv_t",
    "shifted_inv_square",
    "tabulated",
)


def _is_int(p: float) -> bool:
    return float(p).is_integer()


@dataclass(frozen=True)
class CoefficientFn:
    """Parametric coefficient ``scale * base(arg_scale * s + arg_shift)``.

    The base forms are

    ==================  =====================
    constant(c)         c
    power(g, k)         g s^k
    exponential(g)      g e^s
    monomial(m)         s^m
    expu                e^s
    power_t(n)          s^n
    exp_t(w)            w e^s
    inv_t               1/s
    shifted_inv_square  (u_inf - s)^-2
    tabulated           cubic spline (natural or clamped ends)
    ==================  =====================
    """

    kind: str
    c: float = 0.0
    g: float = 1.0
    k: float = 0.0
    m: float = 1.0
    n: float = 0.0
    w: float = 1.0
    u_inf: float = 0.0
    xs: tuple = ()
    ys: tuple = ()
    slopes: tuple = ()
    scale: float = 1.0
    arg_scale: float = 1.0
    arg_shift: float = 0.0
    _spline: object = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown coefficient kind {self.kind!r}")
        if self.kind in ("power", "exponential") and self.g == 0:
            raise ValueError(f"{self.kind} requires g != 0")
        if self.arg_scale == 0 or self.scale == 0:
            raise ValueError("affine wrapper requires nonzero scale and arg_scale")
        if self.kind == "tabulated":
            xs = np.asarray(self.xs, dtype=float)
            ys = np.asarray(self.ys, dtype=float)
            if xs.ndim != 1 or xs.size < 4 or xs.size != ys.size:
                raise ValueError("tabulated needs >= 4 matching samples")
            if np.any(np.diff(xs) <= 0):
                raise ValueError("tabulated abscissae must be strictly increasing")
            object.__setattr__(self, "xs", tuple(xs.tolist()))
            object.__setattr__(self, "ys", tuple(ys.tolist()))
            bc = "natural"
            if self.slopes:
                if len(self.slopes) != 2:
                    raise ValueError("slopes must be a (left, right) pair")
                bc = ((1, float(self.slopes[0])), (1, float(self.slopes[1])))
                object.__setattr__(self, "slopes", tuple(float(v) for v in self.slopes))
            object.__setattr__(self, "_spline", CubicSpline(xs, ys, bc_type=bc))

    # -- base form -------------------------------------------------------

    def _check(self, z):
        kind = self.kind
        if kind in ("power", "monomial", "power_t", "inv_t"):
            p = {"power": self.k, "monomial": self.m, "power_t": self.n, "inv_t": -1.0}[kind]
            if kind == "inv_t" or not _is_int(p):
                bad = z <= 0
            elif p < 0:
                bad = z == 0
            else:
                bad = np.zeros_like(z, dtype=bool)
            if kind == "monomial" and p < 0:
                bad = z <= 0
            if np.any(bad):
                raise DomainError(f"{kind} evaluated at non-positive argument {np.min(z):.6g}")
        elif kind == "shifted_inv_square":
            if np.any(z >= self.u_inf):
                raise DomainError(f"argument reached u_inf={self.u_inf}")
        elif kind == "tabulated":
            lo, hi = self.xs[0], self.xs[-1]
            tol = 1e-12 * max(1.0, abs(lo), abs(hi))
            if np.any(z < lo - tol) or np.any(z > hi + tol):
                raise DomainError(f"tabulated coefficient evaluated outside [{lo}, {hi}]")

    def _base(self, z, order: int):
        """Base value (order 0), derivatives (1, 2) or antiderivative (-1)."""
        kind = self.kind
        if kind == "constant":
            return (self.c * np.ones_like(z), np.zeros_like(z), np.zeros_like(z), self.c * z)[order]
        if kind in ("power", "monomial", "power_t", "inv_t"):
            coef = self.g if kind == "power" else 1.0
            p = {"power": self.k, "monomial": self.m, "power_t": self.n, "inv_t": -1.0}[kind]
            if order == 0:
                return coef * z**p
            if order == 1:
                return coef * p * z ** (p - 1) if p != 0 else np.zeros_like(z)
            if order == 2:
                return coef * p * (p - 1) * z ** (p - 2) if p not in (0, 1) else np.zeros_like(z)
            if p == -1:
                if np.any(z <= 0):
                    raise DomainError("logarithmic antiderivative needs positive argument")
                return coef * np.log(z)
            return coef * z ** (p + 1) / (p + 1)
        if kind in ("exponential", "expu", "exp_t"):
            coef = {"exponential": self.g, "expu": 1.0, "exp_t": self.w}[kind]
            return coef * np.exp(z)
        if kind == "shifted_inv_square":
            d = self.u_inf - z
            return (d**-2, 2 * d**-3, 6 * d**-4, 1.0 / d)[order]
        spline = self._spline
        if order == -1:
            return spline.antiderivative()(z)
        return spline(z, order)

    def _apply(self, s, order: int):
        s_arr = np.asarray(s, dtype=float)
        z = self.arg_scale * s_arr + self.arg_shift
        self._check(z)
        out = self._base(z, order)
        if order == -1:
            out = out * (self.scale / self.arg_scale)
        else:
            out = out * self.scale * self.arg_scale**order
        if not np.all(np.isfinite(out)):
            raise DomainError(f"non-finite {self.kind} value")
        return float(out) if np.ndim(out) == 0 else out

    # -- public API ------------------------------------------------------

    def __call__(self, s):
        return self._apply(s, 0)

    def derivative(self, s, order: int = 1):
        return self._apply(s, order)

    def primitive(self, s):
        """Antiderivative with the base form's natural constant (``c s``, ``e^s``, ...)."""
        return self._apply(s, -1)

    def antiderivative(self, s, s0):
        """Definite integral from ``s0`` to ``s``."""
        return self._apply(s, -1) - self._apply(s0, -1)

    @property
    def is_constant(self) -> bool:
        if self.kind == "constant":
            return True
        if self.kind in ("power", "monomial", "power_t"):
            return {"power": self.k, "monomial": self.m, "power_t": self.n}[self.kind] == 0
        return False

    def rescaled(self, value_factor: float = 1.0, arg_factor: float = 1.0, arg_offset: float = 0.0):
        """Return ``s -> value_factor * f(arg_factor * s + arg_offset)`` in closed form."""
        return replace(
            self,
            scale=self.scale * value_factor,
            arg_scale=self.arg_scale * arg_factor,
            arg_shift=self.arg_scale * arg_offset + self.arg_shift,
        )

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        d.update(
            {
                "constant": {"c": self.c},
                "power": {"g": self.g, "k": self.k},
                "exponential": {"g": self.g},
                "monomial": {"m": self.m},
                "expu": {},
                "power_t": {"n": self.n},
                "exp_t": {"w": self.w},
                "inv_t": {},
                "shifted_inv_square": {"u_inf": self.u_inf},
                "tabulated": {"x": list(self.xs), "y": list(self.ys)},
            }[self.kind]
        )
        if self.slopes:
            d["slopes"] = list(self.slopes)
        if self.scale != 1.0:
            d["scale"] = self.scale
        if self.arg_scale != 1.0:
            d["arg_scale"] = self.arg_scale
        if self.arg_shift != 0.0:
            d["arg_shift"] = self.arg_shift
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CoefficientFn":
        d = dict(d)
        kind = d.pop("kind")
        if kind == "tabulated":
            d["xs"] = tuple(d.pop("x"))
            d["ys"] = tuple(d.pop("y"))
            if "slopes" in d:
                d["slopes"] = tuple(d["slopes"])
        return cls(kind=kind, **d)


def constant(c: float) -> CoefficientFn:
    return CoefficientFn("constant", c=float(c))


def power(g: float, k: float) -> CoefficientFn:
    return CoefficientFn("power", g=float(g), k=float(k))


def exponential(g: float = 1.0) -> CoefficientFn:
    return CoefficientFn("exponential", g=float(g))


def monomial(m: float) -> CoefficientFn:
    return CoefficientFn("monomial", m=float(m))


def exp_u() -> CoefficientFn:
    return CoefficientFn("expu")


def power_t(n: float) -> CoefficientFn:
    return CoefficientFn("power_t", n=float(n))


def exp_t(w: float = 1.0) -> CoefficientFn:
    return CoefficientFn("exp_t", w=float(w))


def inv_t() -> CoefficientFn:
    return CoefficientFn("inv_t")


def shifted_inv_square(u_inf: float) -> CoefficientFn:
    return CoefficientFn("shifted_inv_square", u_inf=float(u_inf))


def shifted_inverse(u_inf: float) -> CoefficientFn:
    """``(u_inf - u)^-1``, a reflected and shifted ``monomial(-1)``."""
    return monomial(-1.0).rescaled(arg_factor=-1.0, arg_offset=u_inf)


def tabulated(xs: Sequence[float], ys: Sequence[float], slopes: Sequence[float] = ()) -> CoefficientFn:
    """Cubic spline through samples; natural ends unless clamped ``slopes`` are given.

    Clamped ends reproduce cubic polynomials exactly.
    """
    return CoefficientFn("tabulated", xs=tuple(xs), ys=tuple(ys), slopes=tuple(slopes))


def evaluate(f: CoefficientFn, s):
    return f(s)


def differentiate(f: CoefficientFn, s):
    return f.derivative(s)


def antiderivative(f: CoefficientFn, s, s0):
    return f.antiderivative(s, s0)


def inv_g_antiderivative(G: CoefficientFn, x, x0):
    """``int_{x0}^{x} ds / G(s)`` in closed form where the family allows it."""
    x = np.asarray(x, dtype=float)
    if G.kind in ("constant", "power", "exponential"):
        if G.kind == "constant":
            base = constant(1.0 / G.c)
        elif G.kind == "power":
            base = power(1.0 / G.g, -G.k)
        else:
            base = CoefficientFn("exponential", g=1.0 / G.g, arg_scale=-1.0)
        # (scale * b(a s + c))^-1 = scale^-1 * b^-1(a s + c)
        recip = replace(
            base,
            scale=base.scale / G.scale,
            arg_scale=base.arg_scale * G.arg_scale,
            arg_shift=base.arg_scale * G.arg_shift + base.arg_shift,
        )
        return recip.antiderivative(x, x0)
    return _quad_vec(lambda s: 1.0 / G(s), x, x0)


def _quad_vec(fun, s, s0, tol=1e-13):
    from scipy.integrate import quad

    s = np.asarray(s, dtype=float)
    out = np.empty_like(s)
    for idx, val in np.ndenumerate(s):
        out[idx] = quad(fun, s0, val, epsabs=tol, epsrel=tol, limit=200)[0]
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# boundary/initial data


@dataclass(frozen=True)
class BoundaryCondition:
    """``neumann``: prescribed face value of G A u_x; ``dirichlet``: prescribed u.

    ``func`` (callable of t) overrides ``value`` and makes the condition time
    dependent.  For a physical outward heat flux ``J`` at the right boundary
    use ``neumann(-J)``.
    """

    kind: str = "neumann"
    value: float = 0.0
    func: Callable[[float], float] | None = field(default=None, compare=False)
    samples: tuple = ()

    def __post_init__(self):
        if self.kind not in ("neumann", "dirichlet"):
            raise ValueError(f"unknown boundary kind {self.kind!r}")
        if self.samples and self.func is None:
            ts, vs = (np.asarray(a, dtype=float) for a in self.samples)
            object.__setattr__(self, "func", CubicSpline(ts, vs))

    def at(self, t: float) -> float:
        return float(self.func(t)) if self.func is not None else self.value

    def to_dict(self) -> dict:
        if self.samples:
            return {"kind": "timeseries", "type": self.kind, "t": list(self.samples[0]),
                    "values": list(self.samples[1])}
        if self.func is not None:
            raise ValueError("callable boundary data is not serializable")
        return {"kind": self.kind, "value": self.value}

    @classmethod
    def from_dict(cls, d: dict) -> "BoundaryCondition":
        if d["kind"] == "timeseries":
            return cls(d.get("type", "dirichlet"), samples=(tuple(d["t"]), tuple(d["values"])))
        return cls(d["kind"], float(d.get("value", 0.0)))


def neumann(value: float = 0.0) -> BoundaryCondition:
    return BoundaryCondition("neumann", float(value))


def dirichlet(value=0.0) -> BoundaryCondition:
    if callable(value):
        return BoundaryCondition("dirichlet", func=value)
    return BoundaryCondition("dirichlet", float(value))


@dataclass(frozen=True)
class Profile:
    """Serializable initial profile on a domain ``[x_left, x_right]``."""

    kind: str
    mean: float = 1.0
    amplitude: float = 0.0
    mode: int = 1
    xs: tuple = ()
    us: tuple = ()

    def __call__(self, x, domain=(0.0, 1.0)):
        x = np.asarray(x, dtype=float)
        xl, xr = domain
        s = (x - xl) / (xr - xl)
        if self.kind == "constant":
            return self.mean * np.ones_like(x)
        if self.kind == "cosine":
            return self.mean + self.amplitude * np.cos(self.mode * np.pi * s)
        if self.kind == "sine":
            return self.mean + self.amplitude * np.sin(self.mode * np.pi * s)
        if self.kind == "tabulated":
            return CubicSpline(self.xs, self.us, bc_type="natural")(x)
        raise ValueError(f"unknown profile kind {self.kind!r}")

    def to_dict(self) -> dict:
        if self.kind == "tabulated":
            return {"kind": "tabulated", "x": list(self.xs), "u": list(self.us)}
        return {"kind": self.kind, "mean": self.mean, "amplitude": self.amplitude, "mode": self.mode}

    @classmethod
    def from_dict(cls, d: dict) -> "Profile":
        if d["kind"] == "tabulated":
            return cls("tabulated", xs=tuple(d["x"]), us=tuple(d["u"]))
        return cls(d["kind"], float(d.get("mean", 1.0)), float(d.get("amplitude", 0.0)),
                   int(d.get("mode", 1)))


@dataclass(frozen=True)
class Scenario:
    """A concrete equation instance with domain, boundary and initial data.

    ``source`` is an optional extra forcing ``S(t, x)`` added to the right-hand
    side; it is only used for manufactured-solution studies.
    """

    G: CoefficientFn
    A: CoefficientFn
    W: CoefficientFn
    x_domain: tuple = (0.0, 1.0)
    t_domain: tuple = (0.0, 1.0)
    bc_left: BoundaryCondition = neumann(0.0)
    bc_right: BoundaryCondition = neumann(0.0)
    ic: Callable | Profile | None = field(default=None, compare=False)
    source: Callable | None = field(default=None, compare=False)

    def __post_init__(self):
        xl, xr = self.x_domain
        if not xr > xl:
            raise ValueError("x_domain must be a nondegenerate interval")
        t0, t1 = self.t_domain
        if not t1 > t0:
            raise ValueError("t_domain must be a nondegenerate interval")
        object.__setattr__(self, "x_domain", (float(xl), float(xr)))
        object.__setattr__(self, "t_domain", (float(t0), float(t1)))

    def g_min(self, samples: int = 513) -> float:
        x = np.linspace(*self.x_domain, samples)
        return float(np.min(self.G(x)))

    def validate(self) -> "Scenario":
        """Check the physical invariants; returns self for chaining."""
        if self.g_min() <= 0:
            raise ValueError("G must be positive on the spatial domain")
        if self.W.kind == "inv_t" or (self.W.kind == "power_t" and self.W.n < 0):
            self.W(self.t_domain[0])
        if self.ic is not None:
            x = np.linspace(*self.x_domain, 257)
            u0 = self.initial(x)
            self.A(u0)
        return self

    def initial(self, x):
        if isinstance(self.ic, Profile):
            return self.ic(x, self.x_domain)
        return np.asarray(self.ic(x), dtype=float)

    def flux(self, x, u, u_x):
        return self.G(x) * self.A(u) * u_x

    def w_integral(self, t, t0=None):
        t0 = self.t_domain[0] if t0 is None else t0
        return self.W.antiderivative(t, t0)

    def to_dict(self) -> dict:
        d = {
            "G": self.G.to_dict(),
            "A": self.A.to_dict(),
            "W": self.W.to_dict(),
            "x": list(self.x_domain),
            "t": list(self.t_domain),
            "bc": {"left": self.bc_left.to_dict(), "right": self.bc_right.to_dict()},
        }
        if isinstance(self.ic, Profile):
            d["ic"] = self.ic.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        bc = d.get("bc", {})
        ic = d.get("ic")
        return cls(
            G=CoefficientFn.from_dict(d["G"]),
            A=CoefficientFn.from_dict(d["A"]),
            W=CoefficientFn.from_dict(d["W"]),
            x_domain=tuple(d.get("x", (0.0, 1.0))),
            t_domain=tuple(d.get("t", (0.0, 1.0))),
            bc_left=BoundaryCondition.from_dict(bc.get("left", {"kind": "neumann"})),
            bc_right=BoundaryCondition.from_dict(bc.get("right", {"kind": "neumann"})),
            ic=Profile.from_dict(ic) if ic else None,
        )


# ---------------------------------------------------------------------------
# grids and fields


@dataclass(frozen=True)
class Grid:
    x_left: float
    x_right: float
    n: int

    def __post_init__(self):
        if self.n < 8:
            raise ValueError("grid needs at least 8 cells")
        if not self.x_right > self.x_left:
            raise ValueError("degenerate grid")

    @classmethod
    def for_scenario(cls, sc: Scenario, n: int) -> "Grid":
        return cls(sc.x_domain[0], sc.x_domain[1], n)

    @property
    def dx(self) -> float:
        return (self.x_right - self.x_left) / self.n

    @property
    def centers(self) -> np.ndarray:
        return self.x_left + (np.arange(self.n) + 0.5) * self.dx

    @property
    def faces(self) -> np.ndarray:
        return self.x_left + np.arange(self.n + 1) * self.dx


@dataclass(frozen=True)
class Field:
    grid: Grid
    t: float
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n,):
            raise ValueError("field length must equal the grid cell count")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", v)

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))


@dataclass(frozen=True)
class FieldSeries:
    """Point values at sample abscissae ``x`` for a sequence of times."""

    times: np.ndarray
    x: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        x = np.asarray(self.x, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if v.shape != (t.size, x.size):
            raise ValueError("values must have shape (len(times), len(x))")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_fields(cls, fields: Sequence[Field]) -> "FieldSeries":
        return cls(np.array([f.t for f in fields]), fields[0].grid.centers,
                   np.array([f.values for f in fields]))

    def field(self, j: int, grid: Grid) -> Field:
        return Field(grid, float(self.times[j]), self.values[j])


# ---------------------------------------------------------------------------
# residuals


def fd_weights(x0: float, xs: np.ndarray, order: int) -> np.ndarray:
    """Finite-difference weights for derivative ``order`` at ``x0`` (Fornberg)."""
    xs = np.asarray(xs, dtype=float)
    n = xs.size
    c = np.zeros((n, order + 1))
    c1, c4 = 1.0, xs[0] - x0
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, order)
        c2, c5, c4 = 1.0, c4, xs[i] - x0
        for j in range(i):
            c3 = xs[i] - xs[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, order]


@dataclass(frozen=True)
class Analytic:
    """A function of (t, x) bundled with its exact partial derivatives."""

    u: Callable
    u_t: Callable
    u_x: Callable
    u_xx: Callable

    def __call__(self, t, x):
        return self.u(t, x)


def residual_from_derivatives(sc: Scenario, t, x, u, u_t, u_x, u_xx):
    G, A = sc.G, sc.A
    r = (u_t - G.derivative(x) * A(u) * u_x - G(x) * A.derivative(u) * u_x**2
         - G(x) * A(u) * u_xx - sc.W(t))
    if sc.source is not None:
        r = r - sc.source(t, x)
    return r


def pde_residual(sc: Scenario, sol, t=None, x=None):
    """Residual ``u_t - [G A u_x]_x - W`` (minus any extra source).

    ``sol`` is either an :class:`Analytic` (exact derivatives, evaluated at the
    given ``t``, ``x``) or a :class:`FieldSeries`, in which case fourth-order
    stencils are used on the interior and ``(times, x, residual)`` is returned.
    """
    if isinstance(sol, FieldSeries):
        return field_residual(sc, sol)
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    return residual_from_derivatives(
        sc, t, x, sol.u(t, x), sol.u_t(t, x), sol.u_x(t, x), sol.u_xx(t, x)
    )


def field_derivatives(series: FieldSeries):
    """Interior u, u_t, u_x, u_xx from five-point stencils (x uniform or not)."""
    t, x, v = series.times, series.x, series.values
    if t.size < 5 or x.size < 5:
        raise ValueError("need at least 5 samples in t and x")
    ti = np.arange(2, t.size - 2)
    xi = np.arange(2, x.size - 2)
    u_t = np.zeros((ti.size, xi.size))
    for a, j in enumerate(ti):
        wts = fd_weights(t[j], t[j - 2:j + 3], 1)
        u_t[a] = wts @ v[j - 2:j + 3][:, xi]
    dx = np.diff(x)
    inner = v[ti]
    if np.allclose(dx, dx[0], rtol=1e-10, atol=0):
        h = dx[0]
        w1 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / (12 * h)
        w2 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / (12 * h * h)
        u_x = sum(w1[s] * inner[:, xi - 2 + s] for s in range(5))
        u_xx = sum(w2[s] * inner[:, xi - 2 + s] for s in range(5))
    else:
        u_x = np.zeros_like(u_t)
        u_xx = np.zeros_like(u_t)
        for b, i in enumerate(xi):
            u_x[:, b] = inner[:, i - 2:i + 3] @ fd_weights(x[i], x[i - 2:i + 3], 1)
            u_xx[:, b] = inner[:, i - 2:i + 3] @ fd_weights(x[i], x[i - 2:i + 3], 2)
    return t[ti], x[xi], inner[:, xi], u_t, u_x, u_xx


def field_residual(sc: Scenario, series: FieldSeries):
    tt, xx, u, u_t, u_x, u_xx = field_derivatives(series)
    T, X = np.meshgrid(tt, xx, indexing="ij")
    return tt, xx, residual_from_derivatives(sc, T, X, u, u_t, u_x, u_xx)


def sample_points(domain_x, domain_t, nx: int, nt: int):
    """Tensor grid of (t, x) points, both flattened, for residual sweeps."""
    xs = np.linspace(*domain_x, nx)
    ts = np.linspace(*domain_t, nt)
    T, X = np.meshgrid(ts, xs, indexing="ij")
    return T.ravel(), X.ravel()

