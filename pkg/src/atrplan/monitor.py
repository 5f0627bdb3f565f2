"""Brute-force asynchronous temporal robustness on sampled signals.

Shifted states are ``x_k(clamp(t + kappa_k))``: outside the horizon an agent
holds its boundary state.  Shifts are enumerated on a ``dk`` grid of the mode's
box (plus its exact corners) and the largest admissible box size is bisected.
"""
from __future__ import annotations

from typing import Mapping

import numpy as np

from .stl import (SAT_TOL, Always, And, Eventually, Formula, Or, Pred, Predicate, interval_times,
                  qualitative_sat, relevant_agents)
from .trajectory import MultiAgentPlan, SampledSignal

MODES = ("atr", "right", "left")
DEFAULT_DT = 0.05
DEFAULT_DK = 0.05
DEFAULT_TOL = 0.01


class MonitorError(ValueError):
    pass


def shift_range(mode: str, tau: float) -> tuple[float, float]:
    if mode == "atr":
        return -tau, tau
    if mode == "right":
        return 0.0, tau
    if mode == "left":
        return -tau, 0.0
    raise ValueError(f"unknown robustness mode {mode!r}")


def shift_grid(mode: str, tau: float, dk: float) -> np.ndarray:
    """Multiples of ``dk`` inside the mode's interval, plus its endpoints."""
    lo, hi = shift_range(mode, tau)
    ks = dk * np.arange(np.ceil(lo / dk - 1e-9), np.floor(hi / dk + 1e-9) + 1)
    return np.unique(np.concatenate([[lo, hi], ks]))


def shifted_predicate_value(signal: SampledSignal, pred: Predicate, t: float,
                            kappa: Mapping[int, float]) -> float:
    if signal.times.size == 0:
        raise MonitorError("empty signal")
    val = np.inf
    for atom in pred.atoms:
        mu = atom.offset
        for k, a in atom.coeffs:
            mu += float(signal.at(k, t + kappa.get(k, 0.0)) @ np.asarray(a))
        val = min(val, mu)
    return float(val)


def _box_min(signal, pred, t, mode, tau, dk, agents) -> float:
    """Minimum predicate value over every grid shift in the box.

    Each atom is linear and separable across agents, so the minimum over the
    product grid is the sum of per-agent minima; this is exact for the grid.
    """
    ks = shift_grid(mode, tau, dk)
    worst = np.inf
    for atom in pred.atoms:
        total = atom.offset
        for k, a in atom.coeffs:
            a = np.asarray(a)
            if k in agents:
                total += float(np.min(signal.at(k, t + ks) @ a))
            else:
                total += float(signal.at(k, t) @ a)
        worst = min(worst, total)
    return worst


def brute_force_box_min(signal, pred, t, mode, tau, dk, agents=None) -> float:
    """Literal enumeration of the shift grid (exponential in agents; for checks)."""
    import itertools

    agents = sorted(relevant_agents(pred) if agents is None else agents)
    ks = shift_grid(mode, tau, dk)
    best = np.inf
    for combo in itertools.product(ks, repeat=len(agents)):
        best = min(best, shifted_predicate_value(signal, pred, t, dict(zip(agents, combo))))
    return best


def oracle_pred_atr(signal: SampledSignal, pred: Predicate, t: float, mode: str = "atr",
                    dk: float = DEFAULT_DK, tol: float = DEFAULT_TOL, agents=None,
                    tau_max: float | None = None) -> float:
    """Largest box size whose grid shifts all keep the predicate satisfied at ``t``."""
    agents = frozenset(relevant_agents(pred) if agents is None else agents)
    if dk <= 0 or tol <= 0:
        raise ValueError("dk and tol must be positive")
    if shifted_predicate_value(signal, pred, t, {}) < -SAT_TOL:
        raise MonitorError(f"predicate is violated at t={t}; robustness is only defined for satisfied points")
    if tau_max is None:
        tau_max = signal.tf - signal.t0
    if _box_min(signal, pred, t, mode, tau_max, dk, agents) >= -SAT_TOL:
        return float(tau_max)
    lo, hi = 0.0, tau_max
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _box_min(signal, pred, t, mode, mid, dk, agents) >= -SAT_TOL:
            lo = mid
        else:
            hi = mid
    return lo


def oracle_formula_atr(signal: SampledSignal, formula: Formula, mode: str = "atr",
                       dk: float = DEFAULT_DK, tol: float = DEFAULT_TOL, check: bool = True) -> float:
    """Recursive robustness: min/max over grid times for Always/Eventually, min/max for And/Or."""
    if check and not qualitative_sat(formula, signal):
        raise MonitorError("signal does not satisfy the formula")
    return _formula_atr(signal, formula, mode, dk, tol)


def _pred_atr_or_neg(signal, pred, t, mode, dk, tol):
    try:
        return oracle_pred_atr(signal, pred, t, mode, dk, tol)
    except MonitorError:
        return -np.inf


def _formula_atr(signal, f, mode, dk, tol) -> float:
    if isinstance(f, And):
        return min(_formula_atr(signal, f.left, mode, dk, tol), _formula_atr(signal, f.right, mode, dk, tol))
    if isinstance(f, Or):
        return max(_formula_atr(signal, f.left, mode, dk, tol), _formula_atr(signal, f.right, mode, dk, tol))
    if isinstance(f, Pred):
        return _pred_atr_or_neg(signal, f.pred, signal.t0, mode, dk, tol)
    vals = [_pred_atr_or_neg(signal, f.pred, t, mode, dk, tol) for t in interval_times(signal, f.interval)]
    return float(min(vals) if isinstance(f, Always) else max(vals))


def lemma_check(signal: SampledSignal, formula: Formula, tau: float, dk: float, mode: str = "atr",
                corners_only: bool = False) -> bool:
    """Every grid shift with max|kappa| <= tau keeps the whole formula satisfied."""
    import itertools

    n = signal.n_agents
    ks = shift_grid(mode, tau, dk)
    if corners_only:
        ks = np.unique([ks[0], 0.0, ks[-1]])
    for combo in itertools.product(ks, repeat=n):
        if not qualitative_sat(formula, shift_signal(signal, combo)):
            return False
    return True


def shift_signal(signal: SampledSignal, kappa) -> SampledSignal:
    """Resample each agent at ``t + kappa_k`` on the same grid (with clamping)."""
    vals = np.stack([signal.at(k, signal.times + kappa[k]) for k in range(signal.n_agents)])
    return SampledSignal(signal.times, vals)


# -- conservative segment characteristic --------------------------------------

def segment_char(plan: MultiAgentPlan, pred: Predicate, k: int, i: int) -> int:
    """+1 when every control-point combination over temporally intersecting segments satisfies ``pred``."""
    seg = plan.agents[k].segments[i]
    s0, s1 = seg.span
    for atom in pred.atoms:
        total = atom.offset
        for l, a in atom.coeffs:
            a = np.asarray(a)
            if l == k:
                total += float(np.min(seg.r.control_points @ a))
                continue
            lows = []
            for other in plan.agents[l].segments:
                o0, o1 = other.span
                if o0 <= s1 and o1 >= s0:
                    lows.append(float(np.min(other.r.control_points @ a)))
            total += min(lows)
        if total < -SAT_TOL:
            return -1
    return 1
