"""Encode, solve, extract and certify: the full planning pipeline."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

from .encoder import EncodingIndex, encode, extract_plan_and_stats, model_statistics
from .milp.model import MilpModel, MilpSolution
from .monitor import DEFAULT_DK, DEFAULT_DT, DEFAULT_TOL, MonitorError, oracle_formula_atr
from .scenario import Scenario
from .solvers import SolverConfig, solve
from .stl import qualitative_sat
from .trajectory import MultiAgentPlan, sample


@dataclass
class PlanResult:
    status: str
    theta: float | None
    plan: MultiAgentPlan | None
    model: MilpModel
    index: EncodingIndex
    solution: MilpSolution
    model_stats: dict = field(default_factory=dict)
    solver_stats: dict = field(default_factory=dict)
    wall_time: float = 0.0


def plan_scenario(scenario: Scenario, config: SolverConfig | None = None, mode: str | None = None) -> PlanResult:
    start = time.monotonic()
    model, index = encode(scenario, mode=mode)
    sol = solve(model, config)
    plan = theta = None
    if sol.status == "optimal":
        plan, theta, _ = extract_plan_and_stats(sol, index, model)
    return PlanResult(sol.status, theta, plan, model, index, sol, model_statistics(model, index),
                      dict(sol.stats), time.monotonic() - start)


@dataclass
class Certificate:
    satisfied: bool
    oracle: float | None
    dt: float
    dk: float
    tol: float


def certify(plan: MultiAgentPlan, scenario: Scenario, mode: str | None = None, dt: float = DEFAULT_DT,
            dk: float = DEFAULT_DK, tol: float = DEFAULT_TOL) -> Certificate:
    """Qualitative satisfaction and brute-force robustness of a plan on a sampled grid."""
    formula = scenario.formula()
    sig = sample(plan, dt)
    if not qualitative_sat(formula, sig):
        return Certificate(False, None, dt, dk, tol)
    try:
        rob = oracle_formula_atr(sig, formula, mode or scenario.robustness, dk, tol, check=False)
    except MonitorError:
        rob = None
    return Certificate(True, rob, dt, dk, tol)
