import json
import subprocess
import sys

import pytest

from radplasma.cli import RunConfig, build_parser, main, run
from radplasma.fixtures import row_fixtures
from radplasma.model import Profile, Scenario, constant, monomial, neumann, power_t


def _manifest(d):
    return json.loads((d / "manifest.json").read_text())


def test_classify_fixture(tmp_path):
    assert main(["classify", "--fixture", "3,6", "--out", str(tmp_path)]) == 0
    c = json.loads((tmp_path / "classification.json").read_text())
    assert (c["table"], c["row"]) == (3, 6)
    m = _manifest(tmp_path)
    assert m["status"] == 0 and "classification.json" in m["artifacts"]
    assert set(m["versions"]) >= {"radplasma", "numpy", "scipy", "python"}


def test_classify_scenario_file(tmp_path):
    sc = row_fixtures()[(2, 1)]
    f = tmp_path / "sc.json"
    f.write_text(json.dumps(sc.to_dict()))
    assert main(["classify", str(f), "--out", str(tmp_path / "o")]) == 0
    c = json.loads((tmp_path / "o" / "classification.json").read_text())
    assert (c["table"], c["row"]) == (2, 1)


def test_config_errors_exit_1(tmp_path):
    assert main(["classify", "--out", str(tmp_path / "a")]) == 1
    assert main(["classify", str(tmp_path / "missing.json"), "--out", str(tmp_path / "b")]) == 1
    assert main(["classify", "--fixture", "9,9", "--out", str(tmp_path / "c")]) == 1
    assert main(["exact", "dump", "--out", str(tmp_path / "d")]) == 1
    assert _manifest(tmp_path / "d")["status"] == 1


def test_unknown_subcommand_is_rejected():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["nope"])
    with pytest.raises(ValueError):
        RunConfig("nope")


def test_solve_outputs_and_bitwise_reproducibility(tmp_path):
    args = ["solve", "--fixture", "3,6", "--N", "32", "--dt", "0.05", "--outputs", "3"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    for name in ("solution.csv", "summary.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    head = (tmp_path / "a" / "solution.csv").read_text().splitlines()
    assert head[0] == "t,x,u" and len(head) == 1 + 3 * 32


def test_solve_numerical_failure_exits_2(tmp_path):
    sc = Scenario(constant(1.0), monomial(-2.0), power_t(1.0), (0.0, 1.0), (0.0, 1.0),
                  neumann(0.0), neumann(0.0), ic=Profile("cosine", 0.5, 1.0, 1))
    f = tmp_path / "bad.json"
    f.write_text(json.dumps(sc.to_dict()))
    assert main(["solve", str(f), "--N", "16", "--out", str(tmp_path / "o")]) == 2


def test_reduce(tmp_path):
    out = tmp_path / "r"
    args = ["reduce", "--row", "2", "--param", "m=2", "--param", "k=3", "--param", "n=1",
            "--iv", "1.0", "1.0", "0.0", "--span", "0.5", "1.5", "--out", str(out)]
    assert main(args) == 0
    v = json.loads((out / "verification.json").read_text())
    assert v["passed"] and v["discrepancy"] < 1e-8
    assert (out / "trajectory.csv").read_text().startswith("omega,phi,dphi")
    assert main(["reduce", "--row", "2", "--param", "m=1", "--param", "k=2", "--out", str(tmp_path / "x")]) == 1


def test_transport_failure_is_verification_exit(tmp_path):
    args = ["transport", "--fixture", "3,6", "--N", "64", "--out", str(tmp_path)]
    assert main(args) == 3
    assert (tmp_path / "transport.json").exists()


def test_conserve(tmp_path):
    assert main(["conserve", "--fixture", "3,6", "--N", "32", "--dt", "0.05", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "conserve.csv").read_text().splitlines()
    assert lines[0] == "t,defect_CL1,defect_CL2" and len(lines) > 2


def test_exact_list_and_dump(tmp_path):
    assert main(["exact", "list", "--out", str(tmp_path / "l")]) == 0
    cat = json.loads((tmp_path / "l" / "catalog.json").read_text())
    assert {c["id"] for c in cat} == {"SeparatedExp", "ScalingSeparated", "FocusingM1",
                                      "FocusingUInf", "Uniform"}
    assert main(["exact", "dump", "--id", "FocusingM1", "--index", "1", "--out", str(tmp_path / "d")]) == 0
    assert (tmp_path / "d" / "FocusingM1.csv").exists()
    assert main(["exact", "dump", "--id", "FocusingM1", "--index", "7", "--out", str(tmp_path / "e")]) == 1


def test_integrable_roundtrip(tmp_path):
    assert main(["integrable", "roundtrip", "--N", "128", "--out", str(tmp_path)]) == 0
    r = json.loads((tmp_path / "roundtrip.json").read_text())
    assert r["discrepancy"] < 1e-3
    assert (tmp_path / "roundtrip.csv").read_text().startswith("x,u_A,u_B,abs_diff")


def test_convergence_small(tmp_path):
    assert main(["convergence", "--Ns", "32", "64", "128", "--out", str(tmp_path)]) == 0
    c = json.loads((tmp_path / "convergence.json").read_text())
    assert all(1.8 <= q <= 2.2 for q in c["spatial"]["orders"])


def test_seed_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("PLASMA_SEED", "17")
    assert main(["exact", "list", "--seed", "3", "--out", str(tmp_path)]) == 0
    assert _manifest(tmp_path)["config"]["seed"] == 17


def test_sweep_runs_in_input_order(tmp_path):
    cfg = {"runs": [
        {"subcommand": "classify", "options": {"fixture": "3,6"}},
        {"subcommand": "classify", "options": {}},
        {"subcommand": "exact", "options": {"action": "list"}},
    ]}
    f = tmp_path / "sweep.json"
    f.write_text(json.dumps(cfg))
    assert main(["sweep", str(f), "--out", str(tmp_path / "s")]) == 1
    rows = (tmp_path / "s" / "sweep.csv").read_text().splitlines()
    assert rows[1:] == ["0,classify,0", "1,classify,1", "2,exact,0"]
    assert (tmp_path / "s" / "run_002" / "catalog.json").exists()


def test_nested_sweep_rejected(tmp_path):
    code = run(RunConfig("sweep", None, {"runs": [{"subcommand": "sweep"}]}, str(tmp_path)))
    assert code == 1


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "radplasma", "exact", "list", "--out", str(tmp_path)],
                       capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
