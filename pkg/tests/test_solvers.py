from __future__ import annotations

import itertools
import math
import sys

import numpy as np
import pytest
from scipy.optimize import linprog

from atrplan.milp.model import BINARY, MilpModel, format_solution
from atrplan.solvers import (
    ExternalSolverError,
    SolverConfig,
    StandardForm,
    solve,
    solve_lp,
    solve_lp_relaxation,
    solve_milp_embedded,
    solve_milp_external,
)

from conftest import highs_config


def random_milp(seed: int, n_bin: int | None = None, n_cont: int | None = None) -> MilpModel:
    """Feasible, bounded random MILP built around a hidden feasible point."""
    rng = np.random.default_rng(seed)
    n_bin = int(rng.integers(1, 11)) if n_bin is None else n_bin
    n_cont = int(rng.integers(1, 11)) if n_cont is None else n_cont
    m = MilpModel(f"rand{seed}")
    xs = [m.continuous(f"x{i}", float(rng.integers(-3, 1)), float(rng.integers(1, 6))) for i in range(n_cont)]
    zs = [m.binary(f"z{i}") for i in range(n_bin)]
    vs = xs + zs
    point = np.array([rng.uniform(v.lb, v.ub) for v in xs] + [float(rng.integers(0, 2)) for _ in zs])
    for _ in range(int(rng.integers(2, 9))):
        a = rng.normal(size=len(vs)) * (rng.random(len(vs)) < 0.6)
        if not a.any():
            continue
        lhs = float(a @ point)
        expr = sum((float(c) * v for c, v in zip(a, vs) if c), 0.0)
        if rng.random() < 0.5:
            m.le(expr, lhs + float(rng.uniform(0, 2)))
        else:
            m.ge(expr, lhs - float(rng.uniform(0, 2)))
    if rng.random() < 0.3:
        a = rng.normal(size=len(vs))
        m.eq(sum((float(c) * v for c, v in zip(a, vs)), 0.0), float(a @ point))
    c = rng.normal(size=len(vs))
    m.set_objective(sum((float(ci) * v for ci, v in zip(c, vs)), 0.0), maximize=bool(rng.integers(2)))
    return m


def _scipy_lp(model: MilpModel, fixed: dict) -> float | None:
    """Independent LP oracle: scipy's HiGHS with binaries fixed."""
    sf = StandardForm.from_model(model)
    lb, ub = sf.lb.copy(), sf.ub.copy()
    for v, val in fixed.items():
        lb[v] = ub[v] = val
    A_ub, b_ub, A_eq, b_eq = [], [], [], []
    for row, rhs, s in zip(sf.A, sf.b, sf.senses):
        if s < 0:
            A_ub.append(row), b_ub.append(rhs)
        elif s > 0:
            A_ub.append(-row), b_ub.append(-rhs)
        else:
            A_eq.append(row), b_eq.append(rhs)
    res = linprog(-sf.c, A_ub=A_ub or None, b_ub=b_ub or None, A_eq=A_eq or None, b_eq=b_eq or None,
                  bounds=list(zip(lb, ub)), method="highs")
    if res.status != 0:
        return None
    return float(sf.obj_sign * (sf.c @ res.x))


def enumerate_optimum(model: MilpModel) -> float | None:
    bins = [v.id for v in model.variables if v.kind == BINARY]
    best = None
    for bits in itertools.product((0.0, 1.0), repeat=len(bins)):
        val = _scipy_lp(model, dict(zip(bins, bits)))
        if val is None:
            continue
        if best is None or (val > best if model.maximize else val < best):
            best = val
    return best


# -- LP ---------------------------------------------------------------------------

def test_lp_simple():
    m = MilpModel()
    x = m.continuous("x", 0, 10)
    m.le(x, 3)
    m.set_objective(x)
    sol = solve_lp_relaxation(m)
    assert sol.status == "optimal" and sol.objective == pytest.approx(3.0)


def test_lp_infeasible():
    m = MilpModel()
    x = m.continuous("x", -5, 5)
    m.ge(x, 1)
    m.le(x, 0)
    m.set_objective(x)
    assert solve_lp_relaxation(m).status == "infeasible"


def _vertex_optimum(A, b, senses, c, lb, ub):
    # enumerate basic solutions: pick n tight rows among constraints and bounds
    n = A.shape[1]
    rows = [(A[i], b[i]) for i in range(len(b))]
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1
        rows += [(e, lb[j]), (e, ub[j])]
    best = -math.inf
    for combo in itertools.combinations(range(len(rows)), n):
        M = np.array([rows[i][0] for i in combo])
        if abs(np.linalg.det(M)) < 1e-9:
            continue
        x = np.linalg.solve(M, np.array([rows[i][1] for i in combo]))
        r = A @ x - b
        ok = np.all(np.where(senses < 0, r <= 1e-9, np.where(senses > 0, r >= -1e-9, np.abs(r) <= 1e-9)))
        if ok and np.all(x >= lb - 1e-9) and np.all(x <= ub + 1e-9):
            best = max(best, float(c @ x))
    return best


def test_degenerate_lp_with_redundant_equalities():
    rng = np.random.default_rng(11)
    for trial in range(25):
        m = MilpModel()
        xs = [m.continuous(f"x{i}", 0, 4) for i in range(3)]
        a = rng.integers(-2, 3, 3).astype(float)
        a[0] = a[0] or 1.0
        m.eq(sum(float(c) * x for c, x in zip(a, xs)), 2.0)
        m.eq(sum(float(2 * c) * x for c, x in zip(a, xs)), 4.0)  # redundant copy
        m.eq(sum(float(-c) * x for c, x in zip(a, xs)), -2.0)
        for _ in range(4):  # many constraints through one vertex
            m.le(xs[0] + xs[1] + xs[2], 6.0)
            m.le(xs[0] + xs[1], 4.0)
        m.set_objective(sum(float(c) * x for c, x in zip(rng.integers(-3, 4, 3), xs)))
        sf = StandardForm.from_model(m)
        res = solve_lp(sf)
        best = _vertex_optimum(sf.A, sf.b, sf.senses, sf.c, sf.lb, sf.ub)
        if best == -math.inf:
            assert res.status == "infeasible"
        else:
            assert res.status == "optimal"
            assert res.objective == pytest.approx(best, abs=1e-7)


def test_lp_solution_feasible_and_consistent():
    for seed in range(20):
        m = random_milp(seed, n_bin=0)
        sol = solve_lp_relaxation(m)
        assert sol.status == "optimal"
        assert m.check_solution(sol.values, tol=1e-7) == []
        assert sol.objective == pytest.approx(m.objective.value(sol.values), abs=1e-9)


# -- branch and bound ------------------------------------------------------------------

def test_bnb_small_example():
    m = MilpModel()
    x, y = m.binary("x"), m.binary("y")
    m.le(x + y, 1.5)
    m.set_objective(x + y)
    sol = solve_milp_embedded(m)
    assert sol.status == "optimal" and sol.objective == pytest.approx(1.0)


@pytest.mark.parametrize("seed", range(20))
def test_bnb_matches_enumeration(seed):
    m = random_milp(1000 + seed)
    sol = solve_milp_embedded(m)
    oracle = enumerate_optimum(m)
    assert oracle is not None
    assert sol.status == "optimal"
    assert sol.objective == pytest.approx(oracle, abs=1e-6)
    assert m.check_solution(sol.values) == []


def test_bnb_twelve_binaries():
    m = random_milp(77, n_bin=12, n_cont=4)
    assert solve_milp_embedded(m).objective == pytest.approx(enumerate_optimum(m), abs=1e-6)


def test_bnb_infeasible():
    m = MilpModel()
    z = m.binary("z")
    m.ge(z, 0.3)
    m.le(z, 0.7)
    m.set_objective(z)
    assert solve_milp_embedded(m).status == "infeasible"


def test_bnb_deterministic():
    m = random_milp(5, n_bin=10, n_cont=6)
    a, b = solve_milp_embedded(m), solve_milp_embedded(m)
    assert a.objective == b.objective and a.values == b.values


def test_node_limit_reports_unknown():
    m = random_milp(9, n_bin=10, n_cont=2)
    sol = solve_milp_embedded(m, SolverConfig(node_limit=1))
    assert sol.status in ("unknown", "optimal")
    if sol.stats["nodes"] == 1 and sol.status == "optimal":
        # root LP was integral; nothing left to search
        assert sol.stats["gap"] == pytest.approx(0.0, abs=1e-6)


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(feas_tol=0)
    with pytest.raises(ValueError):
        SolverConfig(backend="gurobi")


# -- external bridge -----------------------------------------------------------------------

def _mock_script(tmp_path, text):
    canned = tmp_path / "canned.sol"
    canned.write_text(text)
    script = tmp_path / "mock_solver.py"
    script.write_text("import shutil, sys\nshutil.copy(sys.argv[1], sys.argv[3])\n")
    return f"{sys.executable} {script} {canned} {{lp}} {{sol}}"


def test_external_mock_parsed_verbatim(tmp_path):
    m = MilpModel()
    x = m.continuous("x", 0, 10)
    z = m.binary("z")
    m.le(x + z, 3)
    m.set_objective(x)
    cmd = _mock_script(tmp_path, "status OPTIMAL\nobjective 2.5\nvar x 2.5\nvar z 0\n")
    sol = solve_milp_external(m, SolverConfig(backend="external", command=cmd))
    assert sol.status == "optimal" and sol.objective == 2.5 and sol.values == {x.id: 2.5, z.id: 0.0}


def test_external_mock_backed_by_embedded(tmp_path):
    m = random_milp(3)
    emb = solve_milp_embedded(m)
    cmd = _mock_script(tmp_path, format_solution(emb, m))
    ext = solve_milp_external(m, SolverConfig(backend="external", command=cmd))
    assert ext.objective == emb.objective and ext.values == emb.values


def test_external_errors(tmp_path):
    m = random_milp(4)
    with pytest.raises(ExternalSolverError):
        solve_milp_external(m, SolverConfig(backend="external", command="false {lp} {sol}"))
    with pytest.raises(ExternalSolverError, match="did not write"):
        solve_milp_external(m, SolverConfig(backend="external", command="true {lp} {sol}"))
    cmd = _mock_script(tmp_path, "status OPTIMAL\nobjective 1\nvar nosuch 1\n")
    with pytest.raises(ExternalSolverError, match="unparsable"):
        solve_milp_external(m, SolverConfig(backend="external", command=cmd))
    with pytest.raises(ExternalSolverError):
        solve_milp_external(m, SolverConfig(backend="external", command="true"))


@pytest.mark.parametrize("seed", range(20))
def test_embedded_vs_highs(seed):
    m = random_milp(1000 + seed)
    emb = solve_milp_embedded(m)
    ext = solve(m, highs_config())
    assert ext.status == emb.status == "optimal"
    assert ext.objective == pytest.approx(emb.objective, abs=1e-5)


def test_polish_keeps_external_solution_feasible():
    m = random_milp(42, n_bin=6, n_cont=8)
    sol = solve(m, highs_config())
    assert m.check_solution(sol.values, tol=1e-7) == []


def test_infeasible_through_highs():
    m = MilpModel()
    z = m.binary("z")
    m.ge(z, 0.3)
    m.le(z, 0.7)
    m.set_objective(z)
    assert solve(m, highs_config()).status == "infeasible"
