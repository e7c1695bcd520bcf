"""Batch front door: ``python -m radplasma <subcommand> ...``.

Every run writes its artifacts plus ``manifest.json`` into ``--out``.
Exit codes: 0 success, 1 configuration error, 2 numerical failure,
3 verification failure (a declared tolerance was exceeded).
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import platform
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
import scipy
from scipy.integrate import quad

from . import __version__
from .canonical import CaseId, Unclassified, classify
from .conservation import conserved_pairs, discrete_balance
from .exact import CATALOG_IDS, DomainError, default_catalog
from .fixtures import row_fixtures
from .integrable import ColeHopfError, HodographError, roundtrip_compare
from .model import FieldSeries, Profile, Scenario, field_residual
from .reduction import build_reduced, integrate_ode, verify_reduction
from .solver import (
    NewtonFailure,
    SolverParams,
    StepFailure,
    solve,
    spatial_study,
    standard_manufactured,
    temporal_study,
)
from .symmetry import FlowError, act_on_solution, catalog, roundtrip_error

SUBCOMMANDS = ("classify", "solve", "reduce", "transport", "conserve", "exact",
               "integrable", "convergence", "sweep")


class ConfigError(ValueError):
    pass


class VerificationFailure(RuntimeError):
    pass


NUMERICAL = (NewtonFailure, StepFailure, FlowError, DomainError, HodographError,
             ColeHopfError, ArithmeticError, np.linalg.LinAlgError)


@dataclass
class RunConfig:
    subcommand: str
    scenario: str | None = None
    options: dict = field(default_factory=dict)
    out: str = "out"
    seed: int = 0

    def __post_init__(self):
        if self.subcommand not in SUBCOMMANDS:
            raise ConfigError(f"unknown subcommand {self.subcommand!r}")


# ---------------------------------------------------------------------------
# output helpers


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def _jsonable(o):
    if isinstance(o, dict):
        return {str(k): _jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_jsonable(v) for v in o]
    if isinstance(o, np.ndarray):
        return [_jsonable(v) for v in o.tolist()]
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    return o


def write_json(path: Path, obj):
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_scenario(cfg: RunConfig) -> Scenario:
    fx = cfg.options.get("fixture")
    if fx is not None:
        key = tuple(int(v) for v in str(fx).split(","))
        fixtures = row_fixtures()
        if key not in fixtures:
            raise ConfigError(f"no fixture for table/row {key}")
        sc = fixtures[key]
    elif cfg.scenario:
        try:
            with open(cfg.scenario) as fh:
                sc = Scenario.from_dict(json.load(fh))
        except (OSError, KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"cannot load scenario {cfg.scenario!r}: {e}") from e
    else:
        raise ConfigError("a scenario file or a fixture is required")
    if sc.ic is None and "ic" in cfg.options:
        sc = replace(sc, ic=Profile.from_dict(cfg.options["ic"]))
    return sc


def _params(o: dict) -> SolverParams:
    return SolverParams(
        N=int(o.get("N", 256)), dt=float(o.get("dt", 1e-3)), control=o.get("control", "fixed"),
        target_error=float(o.get("target_error", 1e-8)), theta=float(o.get("theta", 0.5)),
        rannacher=int(o.get("rannacher", 2)),
    )


def _times(sc: Scenario, o: dict):
    return np.linspace(*sc.t_domain, int(o.get("outputs", 11)))


# ---------------------------------------------------------------------------
# subcommands; each returns (artifacts, tolerances, verdict dict)


def _classify(cfg, out):
    sc = load_scenario(cfg)
    c = classify(sc)
    write_json(out / "classification.json", c.to_dict())
    return ["classification.json"], {}, {"classified": not isinstance(c, Unclassified)}


def _solve(cfg, out):
    o = cfg.options
    sc = load_scenario(cfg)
    rep = solve(sc, _params(o), _times(sc, o))
    tol = float(o.get("tol", 1e-8))
    rows = [(f.t, x, u) for f in rep.fields for x, u in zip(f.grid.centers, f.values)]
    write_csv(out / "solution.csv", ("t", "x", "u"), rows)
    # closed-box mean follows mean(u0) + int W + boundary flux; rebuilt from the BC data
    L = sc.x_domain[1] - sc.x_domain[0]
    t0 = sc.t_domain[0]
    m0 = float(np.mean(rep.initial))
    summ, worst = [], 0.0
    for f in rep.fields:
        bflux = 0.0
        if sc.bc_left.kind == sc.bc_right.kind == "neumann" and f.t > t0:
            bflux = quad(lambda s: sc.bc_right.at(s) - sc.bc_left.at(s), t0, f.t, epsabs=1e-14)[0] / L
        expected = m0 + sc.W.antiderivative(f.t, t0) + bflux
        summ.append((f.t, f.mean, expected))
        if sc.bc_left.kind == sc.bc_right.kind == "neumann" and sc.source is None:
            worst = max(worst, abs(f.mean - expected))
    write_csv(out / "summary.csv", ("t", "mean", "expected_mean"), summ)
    write_json(out / "diagnostics.json", rep.diagnostics())
    if worst > tol:
        raise VerificationFailure(f"mean drifts from the energy balance by {worst:.3e}")
    return ["solution.csv", "summary.csv", "diagnostics.json"], {"mean_balance": tol}, \
        {"mean_balance_error": worst}


def _reduce(cfg, out):
    o = cfg.options
    table, row = int(o.get("table", 3)), int(o["row"]) if "row" in o else None
    if row is None:
        raise ConfigError("reduce needs --row")
    params = {k: float(v) for k, v in o.get("params", {}).items()}
    try:
        r = build_reduced(CaseId(table, row, params), eps=float(o.get("eps", 0.0)))
    except (KeyError, ValueError) as e:
        raise ConfigError(str(e)) from e
    rep = verify_reduction(r, trials=int(o.get("trials", 20)), seed=cfg.seed)
    files = ["verification.json"]
    write_json(out / "verification.json", {**rep.to_dict(), "params": r.params})
    if "iv" in o:
        w0, p0, d0 = (float(v) for v in o["iv"])
        span = tuple(float(v) for v in o.get("span", (w0, w0 + 1.0)))
        traj = integrate_ode(r, (w0, p0, d0), span)
        ws = np.linspace(*traj.span, int(o.get("samples", 201)))
        phi, dphi = traj(ws)
        write_csv(out / "trajectory.csv", ("omega", "phi", "dphi"), zip(ws, phi, dphi))
        files.append("trajectory.csv")
    if not rep.passed:
        raise VerificationFailure(f"reduction discrepancy {rep.discrepancy:.3e}")
    return files, {"discrepancy": 1e-8}, rep.to_dict()


def _transport_series(sc, o):
    N = int(o.get("N", 512))
    nt = int(o.get("outputs", 201))
    rep = solve(sc, SolverParams(N=N, dt=float(o.get("dt", 1.0 / (4 * N))), rannacher=2),
                np.linspace(*sc.t_domain, nt))
    ser = rep.series()
    skip = int(round(float(o.get("skip", 0.1)) * (nt - 1)))
    return FieldSeries(ser.times[skip:], ser.x, ser.values[skip:])


def _transport(cfg, out):
    o = cfg.options
    sc = load_scenario(cfg)
    c = classify(sc)
    if isinstance(c, Unclassified):
        raise ConfigError(f"scenario is unclassified: {c.reason}")
    gens = catalog(c, sc)
    sel = o.get("generator", 0)
    gen = gens[int(sel)] if str(sel).isdigit() else next((g for g in gens if g.name == sel), None)
    if gen is None:
        raise ConfigError(f"no generator {sel!r}; available: {[g.name for g in gens]}")
    eps = float(o.get("eps", 0.1))
    ser = _transport_series(sc, o)
    fl = act_on_solution(gen, eps, ser, sc)
    _, _, r = field_residual(sc, fl.resampled)
    res = float(np.max(np.abs(r)))
    rt = roundtrip_error(gen, eps, ser)
    s = fl.resampled
    write_csv(out / "flowed.csv", ("t", "x", "u"),
              ((t, x, u) for j, t in enumerate(s.times) for x, u in zip(s.x, s.values[j])))
    tol_r, tol_rt = float(o.get("tol", 1e-5)), 1e-6
    verdict = {"generator": gen.name, "eps": eps, "flowed_residual": res, "roundtrip": rt,
               "interp_error": fl.interp_error}
    write_json(out / "transport.json", verdict)
    if res > tol_r or rt > tol_rt:
        raise VerificationFailure(f"flowed residual {res:.3e} or round trip {rt:.3e} above tolerance")
    return ["flowed.csv", "transport.json"], {"residual": tol_r, "roundtrip": tol_rt}, verdict


def _conserve(cfg, out):
    o = cfg.options
    sc = load_scenario(cfg)
    rep = solve(sc, _params(o), [sc.t_domain[1]])
    c1, c2 = conserved_pairs(sc)
    b1, b2 = discrete_balance(c1, rep), discrete_balance(c2, rep)
    write_csv(out / "conserve.csv", ("t", "defect_CL1", "defect_CL2"),
              zip(b1.times, b1.defect, b2.defect))
    tol = float(o.get("tol", 1e-8))
    if b1.max() > tol:
        raise VerificationFailure(f"CL1 defect {b1.max():.3e} exceeds {tol:g}")
    return ["conserve.csv"], {"cl1": tol}, {"cl1_max": b1.max(), "cl2_max": b2.max()}


def _exact(cfg, out):
    o = cfg.options
    members = default_catalog()
    sid = o.get("id")
    if o.get("action") == "dump" and sid is None:
        raise ConfigError("exact dump needs --id")
    if sid is None:
        listing = [{"id": m.id, "index": sum(p.id == m.id for p in members[:i]), "params": m.params,
                    "patch": m.patch} for i, m in enumerate(members)]
        write_json(out / "catalog.json", listing)
        return ["catalog.json"], {}, {"members": len(members)}
    same = [m for m in members if m.id == sid]
    k = int(o.get("index", 0))
    if not same or not 0 <= k < len(same):
        raise ConfigError(f"no catalog member {sid!r} #{k}; ids are {list(CATALOG_IDS)}")
    sol = same[k]
    (xl, xr), (tl, tr) = sol.patch
    nx, nt = int(o.get("nx", 33)), int(o.get("nt", 5))
    T, X = np.meshgrid(np.linspace(tl, tr, nt), np.linspace(xl, xr, nx), indexing="ij")
    U = sol.solution(T, X)
    write_csv(out / f"{sid}.csv", ("t", "x", "u"), zip(T.ravel(), X.ravel(), U.ravel()))
    t, x = sol.samples(int(o.get("samples", 1024)), cfg.seed)
    res = float(np.max(np.abs(sol.residual(t, x))))
    tol = float(o.get("tol", 1e-10))
    if res > tol:
        raise VerificationFailure(f"residual {res:.3e} above {tol:g}")
    return [f"{sid}.csv"], {"residual": tol}, {"residual": res}


def _integrable(cfg, out):
    o = cfg.options
    amp = float(o.get("amplitude", 0.1))
    b = o.get("b")
    b = None if b is None else float(b)
    shift = 0.0 if b is None else b
    sign = 1.0 if b is None else -1.0
    ic = lambda x: shift + sign * (1.0 + amp * np.sin(np.pi * np.asarray(x)))
    rep = roundtrip_compare(ic, float(o.get("t_final", 0.1)), int(o.get("N", 256)), b=b)
    write_csv(out / "roundtrip.csv", ("x", "u_A", "u_B", "abs_diff"),
              zip(rep.x, rep.u_direct, rep.u_hodograph, np.abs(rep.u_direct - rep.u_hodograph)))
    write_json(out / "roundtrip.json", rep.to_dict())
    tol = float(o.get("tol", 1e-3))
    if rep.discrepancy > tol:
        raise VerificationFailure(f"round-trip discrepancy {rep.discrepancy:.3e}")
    return ["roundtrip.csv", "roundtrip.json"], {"discrepancy": tol}, rep.to_dict()


def _convergence(cfg, out):
    o = cfg.options
    sc, um = standard_manufactured(float(o.get("t_end", 0.5)))
    Ns = tuple(int(v) for v in o.get("Ns", (64, 128, 256, 512)))
    sp = spatial_study(sc, um.u, Ns)
    tp = temporal_study(sc, N=int(o.get("N_time", 64)))
    lo, hi = (float(v) for v in o.get("band", (1.8, 2.2)))
    res = {"spatial": sp.to_dict(), "temporal": tp.to_dict(), "band": [lo, hi]}
    write_json(out / "convergence.json", res)
    orders = sp.orders + tp.orders
    if not all(lo <= q <= hi for q in orders):
        raise VerificationFailure(f"observed orders {orders} outside [{lo}, {hi}]")
    return ["convergence.json"], {"order_band": [lo, hi]}, {"orders": orders}


def _sweep(cfg, out):
    o = cfg.options
    runs = o.get("runs")
    if runs is None and cfg.scenario:
        with open(cfg.scenario) as fh:
            runs = json.load(fh).get("runs")
    if not runs:
        raise ConfigError("sweep needs a list of runs")
    subs = []
    for i, r in enumerate(runs):
        if r.get("subcommand") == "sweep":
            raise ConfigError("sweeps do not nest")
        d = dict(r)
        d.setdefault("seed", cfg.seed)
        d["out"] = str(out / f"run_{i:03d}")
        subs.append(RunConfig(**d))
    with ThreadPoolExecutor(max_workers=int(o.get("workers", 4))) as pool:
        codes = list(pool.map(run, subs))
    rows = [(i, s.subcommand, c) for i, (s, c) in enumerate(zip(subs, codes))]
    write_csv(out / "sweep.csv", ("run", "subcommand", "exit_code"), rows)
    worst = max(codes)
    if worst:
        raise {1: ConfigError, 2: ArithmeticError, 3: VerificationFailure}[worst](
            f"run(s) {[i for i, _, c in rows if c == worst]} exited with {worst}")
    return ["sweep.csv"], {}, {"exit_codes": codes}


_DISPATCH = {
    "classify": _classify, "solve": _solve, "reduce": _reduce, "transport": _transport,
    "conserve": _conserve, "exact": _exact, "integrable": _integrable,
    "convergence": _convergence, "sweep": _sweep,
}


def run(cfg: RunConfig) -> int:
    """Execute one configuration and write its manifest; returns the exit status."""
    env_seed = os.environ.get("PLASMA_SEED")
    if env_seed is not None:
        cfg.seed = int(env_seed)
    out = Path(cfg.out)
    start = time.perf_counter()
    status, message, artifacts, tolerances, verdict = 0, "", [], {}, {}
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_test"
        probe.write_text("")
        probe.unlink()
    except OSError as e:
        print(f"error: output directory not writable: {e}", file=sys.stderr)
        return 1
    try:
        artifacts, tolerances, verdict = _DISPATCH[cfg.subcommand](cfg, out)
    except (ConfigError, FileNotFoundError) as e:
        status, message = 1, str(e)
    except VerificationFailure as e:
        status, message = 3, str(e)
    except NUMERICAL as e:
        status, message = 2, f"{type(e).__name__}: {e}"
    except (ValueError, KeyError, TypeError) as e:
        status, message = 1, f"{type(e).__name__}: {e}"
    manifest = {
        "config": asdict(cfg),
        "status": status,
        "message": message,
        "artifacts": artifacts,
        "tolerances": tolerances,
        "result": verdict,
        "versions": {"radplasma": __version__, "python": platform.python_version(),
                     "numpy": np.__version__, "scipy": scipy.__version__},
        "wall_time": time.perf_counter() - start,
    }
    write_json(out / "manifest.json", manifest)
    if message:
        print(f"error: {message}", file=sys.stderr)
    return status


def _kv(items):
    d = {}
    for it in items or ():
        k, _, v = it.partition("=")
        d[k] = v
    return d


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="radplasma", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="subcommand", required=True)

    def common(sp, scenario=True):
        if scenario:
            sp.add_argument("scenario", nargs="?", help="scenario JSON file")
            sp.add_argument("--fixture", help="built-in row fixture as 'table,row'")
        sp.add_argument("--out", default="out")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--tol", type=float)

    def solver_opts(sp):
        sp.add_argument("--N", type=int)
        sp.add_argument("--dt", type=float)
        sp.add_argument("--control", choices=("fixed", "adaptive"))
        sp.add_argument("--target-error", type=float)
        sp.add_argument("--theta", type=float)
        sp.add_argument("--rannacher", type=int)
        sp.add_argument("--outputs", type=int)

    common(sub.add_parser("classify", help="match a scenario to a symmetry-table row"))
    s = sub.add_parser("solve", help="finite-volume solve; writes long-format CSV")
    common(s), solver_opts(s)
    s = sub.add_parser("reduce", help="build and verify a reduced ODE")
    common(s, scenario=False)
    s.add_argument("--table", type=int, default=3)
    s.add_argument("--row", type=int, required=True)
    s.add_argument("--param", action="append", metavar="NAME=VALUE")
    s.add_argument("--eps", type=float)
    s.add_argument("--iv", type=float, nargs=3, metavar=("W0", "PHI0", "DPHI0"))
    s.add_argument("--span", type=float, nargs=2)
    s.add_argument("--trials", type=int)
    s = sub.add_parser("transport", help="flow a numerical solution along a generator")
    common(s), solver_opts(s)
    s.add_argument("--generator", default="0", help="index or name")
    s.add_argument("--eps", type=float)
    s = sub.add_parser("conserve", help="CL1/CL2 defect time series")
    common(s), solver_opts(s)
    s = sub.add_parser("exact", help="dump or list catalogued exact solutions")
    common(s, scenario=False)
    s.add_argument("action", choices=("dump", "list"))
    s.add_argument("--id", choices=CATALOG_IDS, help="catalog id (required for dump)")
    s.add_argument("--index", type=int, help="which instance of that id")
    s.add_argument("--nx", type=int)
    s.add_argument("--nt", type=int)
    s = sub.add_parser("integrable", help="hodograph/Cole-Hopf round trip")
    common(s, scenario=False)
    s.add_argument("action", choices=("roundtrip",))
    s.add_argument("--amplitude", type=float)
    s.add_argument("--t-final", type=float)
    s.add_argument("--N", type=int)
    s.add_argument("--b", type=float)
    s = sub.add_parser("convergence", help="manufactured-solution order study")
    common(s, scenario=False)
    s.add_argument("--Ns", type=int, nargs="+")
    s = sub.add_parser("sweep", help="run a JSON list of configurations concurrently")
    common(s, scenario=False)
    s.add_argument("config", help="JSON file with a 'runs' list")
    s.add_argument("--workers", type=int)
    return p


_SKIP = {"subcommand", "scenario", "out", "seed", "param", "config"}


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    opts = {k: v for k, v in vars(ns).items() if k not in _SKIP and v is not None}
    if ns.subcommand == "reduce":
        opts["params"] = _kv(ns.param)
    scenario = getattr(ns, "scenario", None)
    if ns.subcommand == "sweep":
        scenario = ns.config
    return RunConfig(ns.subcommand, scenario, opts, ns.out, ns.seed)


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(ns)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return run(cfg)
