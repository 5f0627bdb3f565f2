from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from atrplan.milp.model import (
    MilpModel,
    MilpSolution,
    ModelError,
    emit_lp,
    format_solution,
    models_equal,
    parse_lp,
    parse_solution,
)


def _toy():
    m = MilpModel()
    x = m.continuous("x", 0, 10)
    m.le(x, 3)
    m.set_objective(x)
    return m, x


def test_variable_ids_and_errors():
    m = MilpModel()
    assert m.continuous("theta_phi", 0, 1).id == 0
    with pytest.raises(ModelError):
        m.continuous("theta_phi", 0, 1)
    with pytest.raises(ModelError):
        m.add_variable("b", "binary", 0, 2)
    with pytest.raises(ModelError):
        m.continuous("y", 2, 1)
    with pytest.raises(ModelError):
        m.continuous("1bad", 0, 1)


def test_constraints_and_objective():
    m, x = _toy()
    c = m.constraints[0]
    assert (c.expr.terms, c.sense, c.rhs) == ({0: 1.0}, "<=", 3.0)
    y = m.continuous("y", 0, 1)
    m.set_objective(y, maximize=False)
    assert m.objective.terms == {1: 1.0} and not m.maximize
    from atrplan.milp.model import LinExpr

    with pytest.raises(ModelError):
        m.add_constraint(LinExpr({7: 1.0}), "<=", 1)
    with pytest.raises(ModelError):
        m.add_constraint(x, "<", 1)


def test_emit_lp_exact_text():
    m, _ = _toy()
    assert emit_lp(m) == "Maximize\n obj: x\nSubject To\n c0: x <= 3\nBounds\n 0 <= x <= 10\nEnd\n"


def test_emit_lp_binaries_section_and_signs():
    m = MilpModel()
    x = m.continuous("x", -1.5, 2)
    z = m.binary("z")
    m.ge(2 * x - 0.1 * z, -1)
    m.set_objective(-x + z)
    text = emit_lp(m)
    assert " obj: - x + z" in text
    assert " c0: 2 x - 0.1 z >= -1" in text
    assert "Binaries\n z\nEnd\n" in text
    assert " -1.5 <= x <= 2" in text


def test_emit_requires_objective():
    with pytest.raises(ModelError):
        emit_lp(MilpModel())


def test_reify_examples():
    for val, allowed in ((0.5, {1}), (-0.5, {0})):
        m = MilpModel()
        x = m.continuous("x", val, val)
        z = m.reify_geq(x, 2.0, 1e-6, "z")
        ok = {b for b in (0, 1) if not m.check_solution({x.id: val, z.id: b})}
        assert ok == allowed
    with pytest.raises(ModelError):
        MilpModel().reify_geq(0, 0.0, 1e-6, "z")


def test_reify_truth_table_exhaustive():
    rng = np.random.default_rng(0)
    for _ in range(30):
        vals = rng.uniform(-1, 1, 3)
        m = MilpModel()
        xs = [m.continuous(f"x{i}", v, v) for i, v in enumerate(vals)]
        zs = [m.reify_geq(x, 2.0, 1e-6, f"z{i}") for i, x in enumerate(xs)]
        conj = m.reify_and(zs, "all")
        feasible = []
        for bits in itertools.product((0, 1), repeat=4):
            point = {x.id: v for x, v in zip(xs, vals)}
            point.update({z.id: b for z, b in zip(zs + [conj], bits)})
            if not m.check_solution(point):
                feasible.append(bits)
        truth = tuple(int(v >= 0) for v in vals)
        assert feasible == [truth + (int(all(truth)),)]


def test_implies_ge_skips_redundant_rows():
    m = MilpModel()
    x = m.continuous("x", 1, 2)
    z = m.binary("z")
    assert m.implies_ge(x, on=[z]) is None
    assert m.implies_ge(x - 1.5, on=[z]) is not None


def test_solution_parse_examples():
    m, x = _toy()
    sol = parse_solution("status OPTIMAL\nobjective 3\nvar x 3\n", m)
    assert sol.status == "optimal" and sol.objective == 3 and sol[x] == 3
    sol = parse_solution("status INFEASIBLE\n", m)
    assert sol.status == "infeasible" and sol.values == {}
    with pytest.raises(ModelError, match="unknown variable"):
        parse_solution("status OPTIMAL\nobjective 1\nvar y 1\n", m)
    with pytest.raises(ModelError, match="line 2"):
        parse_solution("status OPTIMAL\nvar x 1\n", m)
    with pytest.raises(ModelError, match="line 3"):
        parse_solution("status OPTIMAL\nobjective 1\nvar x\n", m)


def test_missing_values_default_to_lower_bound():
    m, x = _toy()
    y = m.continuous("y", 2, 5)
    sol = parse_solution("status OPTIMAL\nobjective 3\nvar x 3\n", m)
    assert sol[y] == 2


def test_solution_format_roundtrip():
    m, x = _toy()
    sol = MilpSolution("optimal", 3.0, {x.id: 3.0})
    back = parse_solution(format_solution(sol, m), m)
    assert back.values == sol.values and back.objective == 3.0


def _random_model(seed):
    rng = np.random.default_rng(seed)
    m = MilpModel()
    vs = []
    for i in range(rng.integers(1, 6)):
        vs.append(m.continuous(f"x{i}", float(rng.integers(-5, 0)), float(rng.uniform(0, 7))))
    for i in range(rng.integers(0, 4)):
        vs.append(m.binary(f"z{i}"))
    for _ in range(rng.integers(1, 6)):
        coefs = rng.normal(size=len(vs)).round(rng.integers(0, 6))
        expr = sum((float(c) * v for c, v in zip(coefs, vs)), 0.0)
        m.add_constraint(expr, ["<=", "=", ">="][rng.integers(3)], float(rng.normal()))
    m.set_objective(sum((float(c) * v for c, v in zip(rng.normal(size=len(vs)), vs)), 0.0),
                    maximize=bool(rng.integers(2)))
    return m


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_lp_roundtrip_structural(seed):
    m = _random_model(seed)
    text = emit_lp(m)
    back = parse_lp(text)
    assert models_equal(m, back)
    assert emit_lp(back) == text


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_emission_deterministic(seed):
    assert emit_lp(_random_model(seed)) == emit_lp(_random_model(seed))
