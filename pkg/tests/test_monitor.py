from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from atrplan.bezier import evaluate
from atrplan.monitor import (
    MonitorError,
    _box_min,
    brute_force_box_min,
    lemma_check,
    oracle_formula_atr,
    oracle_pred_atr,
    segment_char,
    shift_grid,
    shifted_predicate_value,
)
from atrplan.stl import LinearAtom, Predicate, make_predicate, parse, predicate_values
from atrplan.trajectory import SampledSignal, plan_from_arrays, sample

TOL = 0.02


def _signal(fns, t0=0.0, tf=100.0, dt=0.01):
    times = np.linspace(t0, tf, int(round((tf - t0) / dt)) + 1)
    return SampledSignal(times, np.stack([f(times)[:, None] for f in fns]))


def _step_signal():
    return _signal([lambda t: np.where(t <= 50, 25.0, 5.0)])


def _offset_signal():
    return _signal([lambda t: t, lambda t: t + 5])


OFFSET_PRED = Predicate((LinearAtom.make({0: [-1.0], 1: [1.0]}, 0.0),), ("offset",))


def test_shifted_value_analytic():
    sig = _offset_signal()
    for t in (10.0, 42.5, 80.0):
        assert shifted_predicate_value(sig, OFFSET_PRED, t, {0: 1.0, 1: 0.0}) == pytest.approx(4.0, abs=1e-9)


def test_shifted_value_clamps():
    sig = _offset_signal()
    # agent 1 pushed past tf reads its final state 100
    assert shifted_predicate_value(sig, OFFSET_PRED, 99.0, {0: 10.0}) == pytest.approx(104.0 - 100.0)


def test_step_signal_oracle():
    sig = _step_signal()
    pred = make_predicate(("hs", 0, (1.0,), -20.0), {}, 1)
    for mode in ("atr", "right"):
        assert oracle_pred_atr(sig, pred, 30.0, mode) == pytest.approx(20.0, abs=TOL)


def test_offset_oracle_atr():
    assert oracle_pred_atr(_offset_signal(), OFFSET_PRED, 50.0, "atr") == pytest.approx(2.5, abs=TOL)


def test_offset_oracle_single_direction():
    tau = oracle_pred_atr(_offset_signal(), OFFSET_PRED, 50.0, "right", agents={0})
    assert tau == pytest.approx(5.0, abs=TOL)


def test_oracle_requires_satisfaction():
    pred = make_predicate(("hs", 0, (1.0,), -20.0), {}, 1)
    with pytest.raises(MonitorError):
        oracle_pred_atr(_step_signal(), pred, 60.0)


def test_and_or_are_min_max():
    sig = _signal([lambda t: t])
    f_and = parse("G[13,20] hs(1,[1],-10) && G[15,20] hs(1,[1],-10)")
    f_or = parse("G[13,20] hs(1,[1],-10) || G[15,20] hs(1,[1],-10)")
    assert oracle_formula_atr(sig, f_and.left) == pytest.approx(3.0, abs=TOL)
    assert oracle_formula_atr(sig, f_and.right) == pytest.approx(5.0, abs=TOL)
    assert oracle_formula_atr(sig, f_and) == pytest.approx(3.0, abs=TOL)
    assert oracle_formula_atr(sig, f_or) == pytest.approx(5.0, abs=TOL)


def test_eventually_takes_best_time():
    sig = _signal([lambda t: t])
    # at t=40 the state has 30 s of slack below, the best point in the window
    assert oracle_formula_atr(sig, parse("F[12,40] hs(1,[1],-10)")) == pytest.approx(30.0, abs=TOL)


def test_unsatisfied_formula_rejected():
    with pytest.raises(MonitorError):
        oracle_formula_atr(_signal([lambda t: t]), parse("G[0,20] hs(1,[1],-10)"))


def test_constant_plan_is_horizon_limited():
    sig = _signal([lambda t: np.full_like(t, 3.0)])
    assert oracle_formula_atr(sig, parse("G[10,20] hs(1,[1],-1)")) == pytest.approx(100.0)


def test_box_min_matches_brute_force():
    rng = np.random.default_rng(0)
    sig = _signal([lambda t: np.sin(t / 7), lambda t: np.cos(t / 5)], dt=0.1)
    pred = make_predicate(("close", 0, 1, 1.5), {}, 1)
    for _ in range(20):
        t, tau = rng.uniform(0, 100), rng.uniform(0, 3)
        for mode in ("atr", "right", "left"):
            fast = _box_min(sig, pred, t, mode, tau, 0.25, frozenset({0, 1}))
            assert fast == pytest.approx(brute_force_box_min(sig, pred, t, mode, tau, 0.25), abs=1e-9)


def test_shift_grid_contains_endpoints():
    g = shift_grid("atr", 0.12, 0.05)
    assert g[0] == -0.12 and g[-1] == 0.12 and 0.0 in g
    assert shift_grid("right", 0.1, 0.05).min() == 0.0
    assert shift_grid("left", 0.1, 0.05).max() == 0.0


def _random_smooth(seed):
    rng = np.random.default_rng(seed)
    freqs = rng.uniform(0.05, 0.3, 3)
    phases = rng.uniform(0, 2 * np.pi, 3)
    return lambda t: sum(np.sin(f * t + p) for f, p in zip(freqs, phases)) + 1.5


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000))
def test_mode_dominance(seed):
    sig = _signal([_random_smooth(seed)], tf=40.0, dt=0.05)
    pred = make_predicate(("hs", 0, (1.0,), 0.0), {}, 1)
    vals = predicate_values(sig, pred, sig.times)
    t = float(sig.times[np.argmax(vals)])
    atr = oracle_pred_atr(sig, pred, t, "atr")
    right = oracle_pred_atr(sig, pred, t, "right")
    left = oracle_pred_atr(sig, pred, t, "left")
    assert atr <= min(right, left) + 0.01


def test_lemma_shifts_preserve_satisfaction():
    sig = _signal([lambda t: 10 + 8 * np.sin(t / 10)], dt=0.05)
    f = parse("G[10,20] hs(1,[1],-12) && F[30,60] hs(1,[-1],5)")
    tau = oracle_formula_atr(sig, f, dk=0.05)
    assert tau > 0.5
    assert lemma_check(sig, f, tau - 0.05, 0.05)


def test_grid_refinement():
    plan = plan_from_arrays([[[[0.0], [12.0], [30.0], [25.0]]]], [[[0.0, 30.0, 60.0, 100.0]]], 0.0, 100.0)
    f = parse("G[60,70] hs(1,[1],-20)")
    dt = 0.1
    coarse = oracle_formula_atr(sample(plan, dt), f, dk=dt)
    fine = oracle_formula_atr(sample(plan, dt / 2), f, dk=dt / 2)
    assert abs(coarse - fine) < 2 * dt
    assert fine <= coarse + 2 * (dt + dt)


def test_segment_char_conservative():
    inside = make_predicate(("hs", 0, (1.0,), -1.0), {}, 1)
    # curve dips to 1.25 but the middle control point sits at 0.5
    plan = plan_from_arrays([[[[2.0], [0.5], [2.0]]]], [[[0.0, 5.0, 10.0]]], 0.0, 10.0)
    assert segment_char(plan, inside, 0, 0) == -1
    assert predicate_values(sample(plan, 0.01), inside, np.linspace(0, 10, 101)).min() >= 0
    plan = plan_from_arrays([[[[2.0], [1.5], [2.0]]]], [[[0.0, 5.0, 10.0]]], 0.0, 10.0)
    assert segment_char(plan, inside, 0, 0) == 1


def test_segment_char_soundness_by_sampling():
    rng = np.random.default_rng(7)
    pred = make_predicate(("close", 0, 1, 2.0), {}, 1)
    hits = 0
    for _ in range(60):
        r = rng.uniform(-1.5, 1.5, size=(2, 2, 3, 1))
        r[:, 1, 0] = r[:, 0, 2]  # C0 joins
        r[:, 1, 1] = 2 * r[:, 0, 2] - r[:, 0, 1]
        split = rng.uniform(3, 7, 2)
        h = [[[0.0, s / 2, s], [s, (s + 10) / 2, 10.0]] for s in split]
        plan = plan_from_arrays(r, h, 0.0, 10.0)
        for k in range(2):
            for i in range(2):
                if segment_char(plan, pred, k, i) != 1:
                    continue
                hits += 1
                seg = plan.agents[k].segments[i]
                ts = evaluate(seg.h, np.linspace(0, 1, 200))[:, 0]
                sig = sample(plan, 0.01)
                assert predicate_values(sig, pred, ts).min() >= -1e-9
    assert hits > 10
