"""Point equivalence group and classification onto canonical symmetry cases.

The group acts by

    t~ = e4 t + e1,  x~ = e5 x + e2,  u~ = e6 u + e3,
    A~ = e7 A,  G~ = e5^2 / (e4 e7) G,  W~ = e6 / e4 W.

Classification brings each coefficient to a normal form (constant, shifted
power, exponential or opaque), then for every table row solves the linear
system in the log-magnitudes of (e4, e5, e6, e7) that makes the transformed
coefficients canonical, enumerating the sign choices.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .model import CoefficientFn, Scenario, _is_int

TOL = 1e-12


@dataclass(frozen=True)
class EquivTransform:
    eps: tuple = (0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0)

    def __post_init__(self):
        eps = tuple(float(e) for e in self.eps)
        if len(eps) != 7:
            raise ValueError("an equivalence transform has seven parameters")
        if any(e == 0 for e in eps[3:]):
            raise ValueError("e4..e7 must be nonzero")
        object.__setattr__(self, "eps", eps)

    @classmethod
    def identity(cls) -> "EquivTransform":
        return cls()

    def map_point(self, t, x, u):
        e1, e2, e3, e4, e5, e6, _ = self.eps
        return e4 * np.asarray(t) + e1, e5 * np.asarray(x) + e2, e6 * np.asarray(u) + e3


def invert(e: EquivTransform) -> EquivTransform:
    e1, e2, e3, e4, e5, e6, e7 = e.eps
    return EquivTransform((-e1 / e4, -e2 / e5, -e3 / e6, 1 / e4, 1 / e5, 1 / e6, 1 / e7))


def compose(first: EquivTransform, second: EquivTransform) -> EquivTransform:
    """The transform that applies ``first`` and then ``second``."""
    a1, a2, a3, a4, a5, a6, a7 = first.eps
    b1, b2, b3, b4, b5, b6, b7 = second.eps
    return EquivTransform((b4 * a1 + b1, b5 * a2 + b2, b6 * a3 + b3, a4 * b4, a5 * b5, a6 * b6, a7 * b7))


def _map_interval(lo, hi, scale, shift):
    a, b = scale * lo + shift, scale * hi + shift
    return (a, b) if a < b else (b, a)


def _map_bc(bc, e):
    e1, _, e3, e4, e5, e6, _ = e.eps
    # Neumann data is G A u_x, which scales by e5 e6 / e4.
    factor = e6 if bc.kind == "dirichlet" else e5 * e6 / e4
    offset = e3 if bc.kind == "dirichlet" else 0.0
    if bc.samples:
        ts, vs = bc.samples
        pairs = sorted(zip((e4 * np.asarray(ts) + e1).tolist(), (factor * np.asarray(vs) + offset).tolist()))
        return replace(bc, func=None, samples=(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs)))
    if bc.func is not None:
        f = bc.func
        return replace(bc, func=lambda tt: factor * f((tt - e1) / e4) + offset)
    return replace(bc, value=factor * bc.value + offset)


def apply_equivalence(e: EquivTransform, sc: Scenario) -> Scenario:
    """Transform a scenario; coefficient families are preserved exactly."""
    e1, e2, e3, e4, e5, e6, e7 = e.eps
    G = sc.G.rescaled(e5**2 / (e4 * e7), 1 / e5, -e2 / e5)
    A = sc.A.rescaled(e7, 1 / e6, -e3 / e6)
    W = sc.W.rescaled(e6 / e4, 1 / e4, -e1 / e4)
    left, right = _map_bc(sc.bc_left, e), _map_bc(sc.bc_right, e)
    if e5 < 0:
        left, right = right, left
    ic = None
    if sc.ic is not None:
        old = sc

        def ic(xx):
            return e6 * old.initial((np.asarray(xx) - e2) / e5) + e3

    source = None
    if sc.source is not None:
        s = sc.source
        source = lambda tt, xx: (e6 / e4) * s((tt - e1) / e4, (xx - e2) / e5)
    return Scenario(
        G, A, W,
        _map_interval(*sc.x_domain, e5, e2),
        _map_interval(*sc.t_domain, e4, e1),
        left, right, ic, source,
    )


# ---------------------------------------------------------------------------
# normal forms


@dataclass(frozen=True)
class _Form:
    """``const``: C; ``power``: C (sigma (s - s0))^p; ``exp``: C e^{alpha s}; ``other``."""

    family: str
    C: float = 1.0
    p: float = 0.0
    sigma: float = 1.0
    s0: float = 0.0
    alpha: float = 0.0


_POWER_EXP = {"power": "k", "monomial": "m", "power_t": "n"}


def normal_form(f: CoefficientFn) -> _Form:
    S, a, b = f.scale, f.arg_scale, f.arg_shift
    kind = f.kind
    if kind == "constant":
        return _Form("const", S * f.c)
    if kind in _POWER_EXP or kind == "inv_t":
        p = getattr(f, _POWER_EXP[kind]) if kind in _POWER_EXP else -1.0
        coef = f.g if kind == "power" else 1.0
        if p == 0:
            return _Form("const", S * coef)
        # S coef (a s + b)^p = S coef |a|^p (sign(a) (s + b/a))^p
        return _Form("power", S * coef * abs(a) ** p, p, math.copysign(1.0, a), -b / a)
    if kind == "shifted_inv_square":
        # (u_inf - a s - b)^-2 = |a|^-2 (-sign(a) (s - (u_inf - b)/a))^-2
        return _Form("power", S * abs(a) ** -2, -2.0, -math.copysign(1.0, a), (f.u_inf - b) / a)
    if kind in ("exponential", "expu", "exp_t"):
        coef = {"exponential": f.g, "expu": 1.0, "exp_t": f.w}[kind]
        return _Form("exp", S * coef * math.exp(b), alpha=a)
    if kind == "tabulated" and np.ptp(f.ys) == 0:
        return _Form("const", S * f.ys[0])
    return _Form("other")


# ---------------------------------------------------------------------------
# table rows

# Each slot is (family, target, exponent) where family is 'free', 'const',
# 'power' or 'exp'; target is 'one' (coefficient exactly 1), 'pm' (+-1,
# reported) or None; exponent is a callable of the resolved params giving the
# required power, or None when the power is itself a parameter.


@dataclass(frozen=True)
class _Row:
    table: int
    row: int
    G: tuple
    A: tuple
    W: tuple
    generators: tuple
    dim: int


T3 = [
    _Row(3, 6, ("power", "pm", lambda p: 2.0), ("power", "one", None), ("power", "one", lambda p: -(p["m"] + 1) / p["m"]),
         ("x*Dx", "m*t*Dt - u*Du"), 2),
    _Row(3, 7, ("const", "pm", None), ("power", "one", None), ("power", "one", None),
         ("Dx", "2*t*Dt + (m*n+m+1)*x*Dx + 2*(n+1)*u*Du"), 2),
    _Row(3, 8, ("const", "pm", None), ("power", "one", None), ("exp", "pm", None),
         ("Dx", "2*Dt + m*x*Dx + 2*u*Du"), 2),
    _Row(3, 1, ("free", None, None), ("power", "one", None), ("power", "one", lambda p: -(p["m"] + 1) / p["m"]),
         ("m*t*Dt - u*Du",), 1),
    _Row(3, 2, ("power", "pm", None), ("power", "one", None), ("power", "one", None),
         ("(k-2)*t*Dt - (m*n+m+1)*x*Dx + (k-2)*(n+1)*u*Du",), 1),
    _Row(3, 3, ("power", "pm", None), ("power", "one", None), ("exp", "pm", None),
         ("(k-2)*Dt - m*x*Dx + (k-2)*u*Du",), 1),
    _Row(3, 4, ("exp", "pm", None), ("power", "one", None), ("power", "one", None),
         ("t*Dt - (m*n+m+1)*Dx + (n+1)*u*Du",), 1),
    _Row(3, 5, ("exp", "pm", None), ("power", "one", None), ("exp", "pm", None),
         ("Dt - m*Dx + u*Du",), 1),
]

_T2_GENS = (
    "exp(-I)*(Dt + W*Du)",
    "exp(-I)*(P*Dt + (W*P - exp(I))*Du)",
)
T2 = [
    _Row(2, 3, ("const", "one", None), ("exp", "one", None), ("free", None, None),
         (_T2_GENS[0], "Dx", "x*Dx + 2*Du", _T2_GENS[1]), 4),
    _Row(2, 1, ("free", None, None), ("exp", "one", None), ("free", None, None), _T2_GENS, 2),
]

T1 = [
    _Row(1, 5, ("const", "one", None), ("free", None, None), ("power", "one", lambda p: -1.0),
         ("Dx", "2*t*Dt + x*Dx"), 2),
    _Row(1, 1, ("power", "one", None), ("free", None, None), ("power", "one", lambda p: -1.0),
         ("(a-2)*t*Dt - x*Dx",), 1),
    _Row(1, 2, ("exp", "one", None), ("free", None, None), ("power", "one", lambda p: -1.0),
         ("t*Dt - Dx",), 1),
    _Row(1, 3, ("power", "one", lambda p: 2.0), ("free", None, None), ("free", None, None), ("x*Dx",), 1),
    _Row(1, 4, ("const", "one", None), ("free", None, None), ("free", None, None), ("Dx",), 1),
]

ROWS = T3 + T2 + T1


@dataclass(frozen=True)
class CaseId:
    table: int
    row: int
    parameters: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        p = self.parameters
        if self.table == 3 and self.row in (1, 6) and abs(p.get("m", 0.0) + 1) < TOL:
            raise ValueError("this case requires m != -1")
        if self.table == 3 and abs(p.get("m", 1.0)) < TOL:
            raise ValueError("A = u^m requires m != 0")
        for s in ("g", "w"):
            if s in p and p[s] not in (1.0, -1.0):
                raise ValueError(f"{s} must be +-1")

    def to_dict(self) -> dict:
        return {"table": self.table, "row": self.row, "params": dict(self.parameters)}


@dataclass(frozen=True)
class Classification:
    """Successful match: the canonical case, its generators and the map to canonical form."""

    case: CaseId
    generators: tuple
    transform: EquivTransform
    canonical: Scenario
    shadowed: tuple = ()

    def to_dict(self) -> dict:
        d = self.case.to_dict()
        d["generators"] = list(self.generators)
        d["transform"] = list(self.transform.eps)
        d["shadowed"] = [{"table": t, "row": r} for t, r in self.shadowed]
        return d


@dataclass(frozen=True)
class Unclassified:
    reason: str

    def to_dict(self) -> dict:
        return {"table": None, "row": None, "reason": self.reason}


def _close(a, b):
    return abs(a - b) <= TOL * max(1.0, abs(a), abs(b))


def _slot_ok(slot, form: _Form, params) -> bool:
    fam, _, expo = slot
    if fam == "free":
        return True
    if form.family != fam:
        return False
    if fam == "power" and expo is not None:
        try:
            want = expo(params)
        except ZeroDivisionError:
            return False
        return _close(form.p, want)
    if fam == "exp":
        return form.alpha != 0
    return True


# column of each log-magnitude unknown
_LT, _LX, _LU, _L7 = range(4)
# value factor of each coefficient: (exponent vector over (Lt, Lx, Lu, L7), sign indices)
_FACTOR = {
    "G": (np.array([-1.0, 2.0, 0.0, -1.0]), (0, 3)),
    "A": (np.array([0.0, 0.0, 0.0, 1.0]), (3,)),
    "W": (np.array([-1.0, 0.0, 1.0, 0.0]), (2, 0)),
}
_VAR = {"G": _LX, "A": _LU, "W": _LT}
# sign slot (into (s4, s5, s6, s7)) of the coefficient's own variable
_VSIGN = {"G": 1, "A": 2, "W": 0}


def _solve_row(row: _Row, forms: dict, params: dict):
    """Find an equivalence transform to the row's canonical form, or ``None``."""
    best = None
    for signs in itertools.product((1.0, -1.0), repeat=4):
        rows, rhs, out_signs, ok = [], [], {}, True
        for name in ("G", "A", "W"):
            fam, target, _ = getattr(row, name)
            form = forms[name]
            vec, sidx = _FACTOR[name]
            fsign = math.prod(signs[i] for i in sidx)
            var = _VAR[name]
            vsign = signs[_VSIGN[name]]
            if fam == "free":
                continue
            if fam == "const":
                rows.append(vec.copy())
                rhs.append(-math.log(abs(form.C)))
                sgn = fsign * math.copysign(1.0, form.C)
            elif fam == "power":
                if vsign == form.sigma:
                    extra = 1.0
                elif _is_int(form.p):
                    extra = (-1.0) ** int(form.p)
                else:
                    ok = False
                    break
                v = vec.copy()
                v[var] -= form.p
                rows.append(v)
                rhs.append(-math.log(abs(form.C)))
                sgn = fsign * extra * math.copysign(1.0, form.C)
            else:  # exp: variable scale equals alpha, magnitude absorbed by the shift
                if vsign != math.copysign(1.0, form.alpha):
                    ok = False
                    break
                v = np.zeros(4)
                v[var] = 1.0
                rows.append(v)
                rhs.append(math.log(abs(form.alpha)))
                sgn = fsign * math.copysign(1.0, form.C)
            if target == "one" and sgn < 0:
                ok = False
                break
            out_signs[name] = sgn
        if not ok:
            continue
        if rows:
            M, b = np.array(rows), np.array(rhs)
            L, *_ = np.linalg.lstsq(M, b, rcond=None)
            if np.max(np.abs(M @ L - b), initial=0.0) > 1e-9 * max(1.0, np.max(np.abs(b))):
                continue
        else:
            L = np.zeros(4)
        score = sum(s < 0 for s in out_signs.values())
        if best is None or score < best[0]:
            best = (score, signs, L, out_signs)
            if score == 0:
                break
    if best is None:
        return None
    _, signs, L, out_signs = best
    s4, s5, s6, s7 = signs
    e4, e5, e6, e7 = s4 * math.exp(L[_LT]), s5 * math.exp(L[_LX]), s6 * math.exp(L[_LU]), s7 * math.exp(L[_L7])
    shifts = {}
    scal = {"G": e5**2 / (e4 * e7), "A": e7, "W": e6 / e4}
    var_eps = {"G": e5, "A": e6, "W": e4}
    for name in ("G", "A", "W"):
        fam, target, _ = getattr(row, name)
        form = forms[name]
        if fam == "power":
            shifts[name] = -var_eps[name] * form.s0
        elif fam == "exp":
            target_val = 1.0 if target == "one" else out_signs[name]
            shifts[name] = math.log(scal[name] * form.C / target_val)
        else:
            shifts[name] = 0.0
    e = EquivTransform((shifts["W"], shifts["G"], shifts["A"], e4, e5, e6, e7))
    return e, out_signs


def _row_params(row: _Row, forms: dict) -> dict:
    p = {}
    if forms["A"].family == "power":
        p["m"] = forms["A"].p
    if row.table == 3:
        if row.G[0] == "power" and row.G[2] is None:
            p["k"] = forms["G"].p
        if row.W[0] == "power" and row.W[2] is None:
            p["n"] = forms["W"].p
    if row.table == 1 and row.row == 1:
        p["a"] = forms["G"].p
    return p


def _check_canonical(row: _Row, can: Scenario, params: dict) -> bool:
    """Sample the transformed coefficients against the row's closed form."""
    def grid(dom, positive):
        lo, hi = dom
        if positive:
            lo = max(lo, 1e-3 * max(abs(hi), 1.0))
            if hi <= lo:
                return None
        return np.linspace(lo, hi, 7)

    for name, var_dom in (("G", can.x_domain), ("A", None), ("W", can.t_domain)):
        fam, target, _ = getattr(row, name)
        if fam == "free":
            continue
        coef = getattr(can, name)
        c = params.get({"G": "g", "W": "w"}.get(name, ""), 1.0) if target == "pm" else 1.0
        if name == "A":
            s = np.linspace(0.5, 2.0, 7)
        else:
            s = grid(var_dom, fam == "power")
            if s is None:
                continue
        if fam == "const":
            want = c * np.ones_like(s)
        elif fam == "power":
            p = {"G": params.get("k", params.get("a", 2.0)), "A": params.get("m"),
                 "W": params.get("n", -1.0)}[name]
            if name == "G" and row.G[2] is not None:
                p = row.G[2](params)
            if name == "W" and row.W[2] is not None:
                p = row.W[2](params)
            want = c * s**p
        else:
            want = c * np.exp(s)
        try:
            got = coef(s)
        except ValueError:
            continue
        if not np.allclose(got, want, rtol=1e-9, atol=1e-12):
            return False
    return True


def _match(row: _Row, forms: dict):
    if not (_slot_ok(row.A, forms["A"], {}) and forms["A"].family in ("power", "exp", "other")):
        return None
    params = _row_params(row, forms)
    if "m" in params and row.table == 3 and abs(params["m"] + 1) < TOL and row.row in (1, 6):
        return None
    if not (_slot_ok(row.G, forms["G"], params) and _slot_ok(row.W, forms["W"], params)):
        return None
    sol = _solve_row(row, forms, params)
    if sol is None:
        return None
    e, signs = sol
    if row.G[1] == "pm":
        params["g"] = signs["G"]
    if row.W[1] == "pm":
        params["w"] = signs["W"]
    return e, params


def classify(sc: Scenario, Z: CoefficientFn | None = None):
    """Match a scenario against the canonical tables, most specific row first.

    Returns :class:`Classification` or :class:`Unclassified`.  Passing ``Z``
    tests the explicit ``G = 1/Z''`` family of the exponential table, which
    is reported without generators.
    """
    forms = {name: normal_form(getattr(sc, name)) for name in ("G", "A", "W")}
    if forms["W"].family == "const":
        return Unclassified("W is constant; the classification assumes W_t != 0")
    if forms["A"].family == "const":
        return Unclassified("A is constant; the classification assumes A_u != 0")
    if forms["A"].family == "power" and forms["A"].p == 0:
        return Unclassified("A is constant; the classification assumes A_u != 0")

    if Z is not None:
        x = np.linspace(*sc.x_domain, 33)
        if forms["A"].family == "exp" and np.allclose(sc.G(x) * Z.derivative(x, 2), 1.0, rtol=1e-9):
            return Classification(CaseId(2, 2, {}), (), EquivTransform.identity(), sc)

    hits = []
    for row in ROWS:
        if row.table == 3 and forms["A"].family != "power":
            continue
        if row.table == 2 and forms["A"].family != "exp":
            continue
        m = _match(row, forms)
        if m is None:
            continue
        e, params = m
        can = apply_equivalence(e, sc)
        if not _check_canonical(row, can, params):
            continue
        hits.append((row, e, params, can))
    if not hits:
        return Unclassified("no canonical row matches these coefficient families")
    row, e, params, can = hits[0]
    return Classification(
        CaseId(row.table, row.row, params), row.generators, e, can,
        tuple((r.table, r.row) for r, *_ in hits[1:]),
    )


def row_info(table: int, row: int) -> _Row:
    for r in ROWS:
        if r.table == table and r.row == row:
            return r
    raise KeyError(f"no catalogued row {table}.{row}")
