"""Command-line front end: ``atrplan plan | monitor | emit-lp``."""
from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .encoder import encode
from .milp.model import emit_lp
from .monitor import DEFAULT_DK, DEFAULT_DT, DEFAULT_TOL, MODES, MonitorError, oracle_formula_atr
from .planner import certify, plan_scenario
from .scenario import Scenario, ScenarioError, load_scenario
from .solvers import BACKENDS, ExternalSolverError, SolverConfig
from .stl import qualitative_sat
from .trajectory import PlanError, SampledSignal, read_plan, sample, validate, write_plan

EXIT_CODES = {"optimal": 0, "infeasible": 2, "unknown": 3}
EXIT_ERROR = 1


@dataclass
class RunReport:
    status: str
    theta_phi: float | None
    oracle_atr: float | None
    tolerance: float  # oracle must reach theta_phi - tolerance
    qualitative_sat: bool | None
    solver: dict = field(default_factory=dict)
    model: dict = field(default_factory=dict)
    artifacts: dict = field(default_factory=dict)


def write_samples_csv(signal: SampledSignal, path) -> None:
    dim = signal.values.shape[2]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "agent"] + [f"dim{c}" for c in range(dim)])
        for k in range(signal.n_agents):
            for j, t in enumerate(signal.times):
                w.writerow([repr(float(t)), k + 1] + [repr(float(x)) for x in signal.values[k, j]])


def read_samples_csv(path) -> SampledSignal:
    import numpy as np

    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    head, body = rows[0], rows[1:]
    dim = len(head) - 2
    agents = sorted({int(r[1]) for r in body})
    times = np.array([float(r[0]) for r in body if int(r[1]) == agents[0]])
    vals = np.array([[[float(x) for x in r[2:2 + dim]] for r in body if int(r[1]) == k] for k in agents])
    return SampledSignal(times, vals)


def _load(path) -> Scenario:
    return load_scenario(path)


def cmd_plan(args) -> int:
    sc = _load(args.scenario)
    if args.robustness:
        sc = sc.with_overrides(robustness=args.robustness)
    if args.backend == "external" and not args.solver_cmd:
        raise ScenarioError("--solver-cmd", "required with --backend external")
    config = SolverConfig(backend=args.backend, command=args.solver_cmd)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    res = plan_scenario(sc, config)
    tol = 2 * args.samples_dt + DEFAULT_DK
    report = RunReport(res.status, res.theta, None, tol, None,
                       solver={k: res.solver_stats.get(k) for k in ("backend", "nodes", "gap", "wall_time")},
                       model=res.model_stats)
    if res.plan is not None:
        plan_path, csv_path, svg_path = out / "plan.json", out / "samples.csv", out / "plan.svg"
        write_plan(res.plan, plan_path)
        sig = sample(res.plan, args.samples_dt)
        write_samples_csv(sig, csv_path)
        from .plotting import plot_plan

        plot_plan(sig, sc, svg_path, title=f"theta = {res.theta:.3f} s ({sc.robustness})")
        cert = certify(res.plan, sc, sc.robustness, dt=args.samples_dt)
        report.qualitative_sat = cert.satisfied
        report.oracle_atr = cert.oracle
        report.artifacts = {"plan": str(plan_path), "samples": str(csv_path), "svg": str(svg_path)}
    report_path = out / "report.json"
    report.artifacts["report"] = str(report_path)
    report_path.write_text(json.dumps(asdict(report), indent=2) + "\n")
    print(f"status: {res.status}")
    if res.theta is not None:
        print(f"theta_phi: {res.theta:.6f}")
        print(f"oracle_atr: {report.oracle_atr}")
        print(f"qualitative_sat: {report.qualitative_sat}")
    print(f"nodes: {report.solver.get('nodes')}  wall_time: {res.wall_time:.3f} s")
    for path in report.artifacts.values():
        print(f"wrote {path}")
    return EXIT_CODES.get(res.status, 3)


def cmd_monitor(args) -> int:
    sc = _load(args.scenario)
    mode = args.robustness or sc.robustness
    plan = read_plan(args.plan)
    bad = validate(plan, sc)
    if bad:
        raise PlanError("plan does not validate against the scenario: " + "; ".join(map(str, bad)))
    formula = sc.formula()
    sig = sample(plan, args.grid_dt)
    sat = qualitative_sat(formula, sig)
    print(f"qualitative_sat: {sat}")
    print(f"grid_dt: {args.grid_dt}  kappa_dk: {args.kappa_dk}  bisection_tol: {DEFAULT_TOL}  mode: {mode}")
    if not sat:
        return 2
    rob = oracle_formula_atr(sig, formula, mode, args.kappa_dk, DEFAULT_TOL, check=False)
    print(f"oracle_atr: {rob:.6f}")
    return 0


def cmd_emit_lp(args) -> int:
    sc = _load(args.scenario)
    model, _ = encode(sc)
    text = emit_lp(model)
    with open(args.out, "w", newline="\n") as fh:
        fh.write(text)
    print(f"wrote {args.out} ({len(model.variables)} variables, {len(model.constraints)} constraints)")
    return 0


def _positive(x: str) -> float:
    v = float(x)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="atrplan", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    pl = sub.add_parser("plan", help="solve a scenario and write plan, samples, SVG and report")
    pl.add_argument("--scenario", required=True)
    pl.add_argument("--backend", choices=BACKENDS, default="embedded")
    pl.add_argument("--solver-cmd", help="external command template with {lp} and {sol}")
    pl.add_argument("--robustness", choices=MODES)
    pl.add_argument("--out", default="out")
    pl.add_argument("--samples-dt", type=_positive, default=DEFAULT_DT)
    pl.set_defaults(func=cmd_plan)
    mo = sub.add_parser("monitor", help="check a plan file against a scenario's STL formula")
    mo.add_argument("--plan", required=True)
    mo.add_argument("--scenario", required=True)
    mo.add_argument("--grid-dt", type=_positive, default=DEFAULT_DT)
    mo.add_argument("--kappa-dk", type=_positive, default=DEFAULT_DK)
    mo.add_argument("--robustness", choices=MODES)
    mo.set_defaults(func=cmd_monitor)
    lp = sub.add_parser("emit-lp", help="write the scenario's MILP in LP format")
    lp.add_argument("--scenario", required=True)
    lp.add_argument("--out", required=True)
    lp.set_defaults(func=cmd_emit_lp)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, PlanError, MonitorError, ExternalSolverError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
