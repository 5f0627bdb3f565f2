"""Best-bound branch-and-bound over the dense simplex."""
from __future__ import annotations

import heapq
import math
import time

import numpy as np

from ..milp.model import BINARY, MilpModel, MilpSolution
from .config import SolverConfig
from .simplex import StandardForm, solve_lp


def solve_lp_relaxation(model: MilpModel, config: SolverConfig | None = None) -> MilpSolution:
    """LP relaxation of ``model`` (integrality dropped)."""
    config = config or SolverConfig()
    sf = StandardForm.from_model(model)
    res = solve_lp(sf, feas_tol=config.feas_tol, time_limit=config.time_limit)
    if res.status != "optimal":
        return MilpSolution(res.status, stats={"lp_iterations": res.iterations})
    values = {i: float(v) for i, v in enumerate(res.x)}
    return MilpSolution("optimal", model.objective.value(values), values, {"lp_iterations": res.iterations})


def solve_milp_embedded(model: MilpModel, config: SolverConfig | None = None) -> MilpSolution:
    config = config or SolverConfig()
    start = time.monotonic()
    sf = StandardForm.from_model(model)
    bins = np.array([v.id for v in model.variables if v.kind == BINARY], dtype=int)
    inc_x = None
    inc_val = -math.inf  # max-sense
    heap = [(-math.inf, 0, sf.lb.copy(), sf.ub.copy())]
    next_id = 1
    nodes = lp_iters = 0
    lost = False  # a subtree was dropped because its LP did not finish
    limit_hit = False

    def prunable(bound):
        return bound <= inc_val + config.gap * abs(inc_val) + 1e-9

    while heap:
        key, nid, lb, ub = heap[0]
        if inc_x is not None and prunable(-key):
            heapq.heappop(heap)
            continue
        if nodes >= config.node_limit or time.monotonic() - start > config.time_limit:
            limit_hit = True
            break
        heapq.heappop(heap)
        nodes += 1
        remaining = max(1e-3, config.time_limit - (time.monotonic() - start))
        res = solve_lp(sf, lb, ub, feas_tol=config.feas_tol, time_limit=remaining)
        lp_iters += res.iterations
        if res.status == "infeasible":
            continue
        if res.status != "optimal":
            lost = True
            continue
        x = res.x
        val = float(sf.c @ x)
        if inc_x is not None and prunable(val):
            continue
        frac = np.abs(x[bins] - np.round(x[bins])) if bins.size else np.zeros(0)
        if frac.size == 0 or frac.max() <= config.int_tol:
            x = x.copy()
            x[bins] = np.round(x[bins])
            if val > inc_val:
                inc_val, inc_x = val, x
            continue
        pos = int(np.argmax(frac))  # first maximum, i.e. lowest variable id
        j = bins[pos]
        down_ub = ub.copy()
        down_ub[j] = 0.0
        up_lb = lb.copy()
        up_lb[j] = 1.0
        heapq.heappush(heap, (-val, next_id, lb, down_ub))
        heapq.heappush(heap, (-val, next_id + 1, up_lb, ub))
        next_id += 2

    best_bound = max([-h[0] for h in heap], default=-math.inf)
    if inc_x is not None:
        best_bound = max(best_bound, inc_val)
    gap = 0.0 if inc_x is None or not heap else (best_bound - inc_val) / max(1.0, abs(inc_val))
    stats = {"nodes": nodes, "lp_iterations": lp_iters, "gap": gap,
             "wall_time": time.monotonic() - start, "backend": "embedded"}
    if inc_x is None:
        status = "unknown" if (limit_hit or lost) else "infeasible"
        return MilpSolution(status, stats=stats)
    status = "optimal"
    if lost or (limit_hit and gap > config.gap):
        status = "unknown"
    values = {i: float(v) for i, v in enumerate(inc_x)}
    return MilpSolution(status, model.objective.value(values), values, stats)


def polish(model: MilpModel, sol: MilpSolution, config: SolverConfig | None = None) -> MilpSolution:
    """Re-solve the continuous part with the binaries fixed at their rounded values.

    External solvers report values at their own feasibility tolerance; polishing
    gives a vertex that satisfies every row to simplex precision.
    """
    if sol.status != "optimal":
        return sol
    config = config or SolverConfig()
    sf = StandardForm.from_model(model)
    lb, ub = sf.lb.copy(), sf.ub.copy()
    for v in model.variables:
        if v.kind == BINARY:
            lb[v.id] = ub[v.id] = float(round(sol.values[v.id]))
    res = solve_lp(sf, lb, ub, feas_tol=config.feas_tol, time_limit=config.time_limit)
    if res.status != "optimal":
        return sol
    values = {i: float(x) for i, x in enumerate(res.x)}
    stats = dict(sol.stats, polished=True)
    return MilpSolution("optimal", model.objective.value(values), values, stats)
