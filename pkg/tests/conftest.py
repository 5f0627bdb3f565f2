from __future__ import annotations

import sys
from pathlib import Path

import pytest

from atrplan.planner import plan_scenario
from atrplan.scenario import load_scenario
from atrplan.solvers import SolverConfig

ROOT = Path(__file__).resolve().parents[1]
SCENARIO_DIR = ROOT / "scenarios"

# reference adapter: our own LP reader feeding scipy's HiGHS
HIGHS_CMD = f"{sys.executable} -m atrplan.adapters.highs {{lp}} {{sol}}"

# the two-agent regression models are too large for the dense embedded backend
EXTERNAL_SCENARIOS = {"offset", "multi_agent"}
REGRESSION = ["uav", "offset", "rendezvous", "eventually_or", "detour", "sweep", "multi_agent"]


def scenario_path(name: str) -> Path:
    return SCENARIO_DIR / f"{name}.json"


def load(name: str):
    return load_scenario(scenario_path(name))


def highs_config(**kw) -> SolverConfig:
    return SolverConfig(backend="external", command=HIGHS_CMD, **kw)


def config_for(name: str) -> SolverConfig:
    return highs_config() if name in EXTERNAL_SCENARIOS else SolverConfig(time_limit=120.0)


_SOLVED: dict = {}


def solve_named(name: str):
    """Solve a bundled scenario once per session."""
    if name not in _SOLVED:
        _SOLVED[name] = plan_scenario(load(name), config_for(name))
    return _SOLVED[name]


@pytest.fixture(scope="session")
def uav_result():
    return solve_named("uav")


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
