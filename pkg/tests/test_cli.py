from __future__ import annotations

import json
import re

import pytest

from atrplan.cli import main, read_samples_csv, write_samples_csv
from atrplan.milp.model import parse_lp
from atrplan.solvers import solve
from atrplan.trajectory import plan_from_arrays, read_plan, shifted_in_time, write_plan

from conftest import HIGHS_CMD, highs_config, scenario_path


def _oracle_line(out: str) -> float:
    return float(re.search(r"oracle_atr: ([-0-9.e+]+)", out).group(1))


@pytest.fixture(scope="module")
def uav_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("uav")
    code = main(["plan", "--scenario", str(scenario_path("uav")), "--out", str(out)])
    return code, out


def test_plan_writes_artifacts(uav_run):
    code, out = uav_run
    assert code == 0
    for name in ("plan.json", "samples.csv", "plan.svg", "report.json"):
        assert (out / name).is_file()
    report = json.loads((out / "report.json").read_text())
    assert report["status"] == "optimal"
    assert report["theta_phi"] == pytest.approx(23.333, abs=0.05)
    assert report["qualitative_sat"] is True
    assert report["oracle_atr"] >= report["theta_phi"] - report["tolerance"]
    assert report["model"]["binaries"] > 0 and report["solver"]["nodes"] >= 1
    assert (out / "samples.csv").read_text().splitlines()[0] == "t,agent,dim0"
    assert (out / "plan.svg").read_text().lstrip().startswith("<")


def test_samples_csv_roundtrip(uav_run, tmp_path):
    _, out = uav_run
    sig = read_samples_csv(out / "samples.csv")
    write_samples_csv(sig, tmp_path / "again.csv")
    assert (tmp_path / "again.csv").read_text() == (out / "samples.csv").read_text()
    assert sig.values.shape[0] == 1 and sig.times[0] == 0.0 and sig.times[-1] == pytest.approx(100.0)


def test_monitor_accepts_planned(uav_run, capsys):
    _, out = uav_run
    report = json.loads((out / "report.json").read_text())
    capsys.readouterr()
    code = main(["monitor", "--plan", str(out / "plan.json"), "--scenario", str(scenario_path("uav"))])
    text = capsys.readouterr().out
    assert code == 0
    assert "qualitative_sat: True" in text
    assert _oracle_line(text) >= report["theta_phi"] - 0.15


def test_monitor_rejects_violating_plan(tmp_path, capsys):
    # the vehicle stays at the origin: valid dynamics, but never climbs above 20
    r = [[[[0.0]] * 5 for _ in range(4)]]
    h = [[[25 * i + 25 * b / 4 for b in range(5)] for i in range(4)]]
    write_plan(plan_from_arrays(r, h, 0.0, 100.0), tmp_path / "idle.json")
    code = main(["monitor", "--plan", str(tmp_path / "idle.json"), "--scenario", str(scenario_path("uav"))])
    assert code == 2
    assert "qualitative_sat: False" in capsys.readouterr().out


def test_monitor_rejects_shifted_plan(uav_run, tmp_path):
    _, out = uav_run
    plan = shifted_in_time(read_plan(out / "plan.json"), 0, 1.0)
    write_plan(plan, tmp_path / "shifted.json")
    code = main(["monitor", "--plan", str(tmp_path / "shifted.json"), "--scenario", str(scenario_path("uav"))])
    assert code == 1


def test_monitor_constant_plan_horizon_limited(tmp_path, capsys):
    sc = {"dim": 1, "tf": 100, "n_segments": 1, "degree": 2, "workspace": [[-10], [10]],
          "agents": [{"x0": 3, "v0": 0, "vmin": -1, "vmax": 1}], "spec": "G[10,20] hs(1,[1],-1)",
          "robustness": "atr"}
    (tmp_path / "sc.json").write_text(json.dumps(sc))
    write_plan(plan_from_arrays([[[[3.0]] * 3]], [[[0.0, 50.0, 100.0]]], 0.0, 100.0), tmp_path / "p.json")
    code = main(["monitor", "--plan", str(tmp_path / "p.json"), "--scenario", str(tmp_path / "sc.json")])
    assert code == 0
    # shifted states clamp to the endpoints, so no shift violates; the search stops at the horizon length
    assert _oracle_line(capsys.readouterr().out) == pytest.approx(100.0)


def test_bad_scenario_exit_code(tmp_path, capsys):
    doc = json.loads(scenario_path("uav").read_text())
    doc["spec"] = "G[30,20] hs(1,[1],-20)"
    (tmp_path / "bad.json").write_text(json.dumps(doc))
    assert main(["plan", "--scenario", str(tmp_path / "bad.json"), "--out", str(tmp_path / "o")]) == 1
    assert "lo > hi" in capsys.readouterr().err


def test_infeasible_exit_code(tmp_path):
    doc = json.loads(scenario_path("uav").read_text())
    doc["n_segments"] = 2
    (tmp_path / "n2.json").write_text(json.dumps(doc))
    out = tmp_path / "o"
    assert main(["plan", "--scenario", str(tmp_path / "n2.json"), "--out", str(out)]) == 2
    report = json.loads((out / "report.json").read_text())
    assert report["status"] == "infeasible" and report["theta_phi"] is None
    assert not (out / "plan.json").exists()


def test_external_backend_requires_command(tmp_path):
    assert main(["plan", "--scenario", str(scenario_path("uav")), "--backend", "external",
                 "--out", str(tmp_path)]) == 1


def test_plan_external_backend(tmp_path):
    code = main(["plan", "--scenario", str(scenario_path("uav")), "--backend", "external",
                 "--solver-cmd", HIGHS_CMD, "--out", str(tmp_path)])
    assert code == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["theta_phi"] == pytest.approx(23.333, abs=0.05)


def test_emit_lp_deterministic_and_solvable(uav_run, tmp_path):
    a, b = tmp_path / "a.lp", tmp_path / "b.lp"
    for path in (a, b):
        assert main(["emit-lp", "--scenario", str(scenario_path("uav")), "--out", str(path)]) == 0
    assert a.read_bytes() == b.read_bytes()
    model = parse_lp(a.read_text())
    sol = solve(model, highs_config())
    report = json.loads((uav_run[1] / "report.json").read_text())
    assert sol.objective == pytest.approx(report["theta_phi"], abs=1e-4)
