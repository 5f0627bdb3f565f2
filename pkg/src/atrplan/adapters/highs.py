"""Reference adapter: ``python -m atrplan.adapters.highs MODEL.lp OUT.sol``.

Reads the LP layout, solves it with HiGHS through ``scipy.optimize.milp`` and
writes the plain solution format.  Other solvers need an equivalent script
that maps their native output onto ``status/objective/var`` lines.
"""
from __future__ import annotations

import sys

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp

from ..milp.model import BINARY, MilpSolution, format_solution, parse_lp


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 2:
        print("usage: python -m atrplan.adapters.highs MODEL.lp OUT.sol", file=sys.stderr)
        return 2
    with open(argv[0]) as fh:
        model = parse_lp(fh.read())
    n, m = len(model.variables), len(model.constraints)
    c = np.zeros(n)
    for v, a in model.objective.terms.items():
        c[v] = a
    sign = -1.0 if model.maximize else 1.0
    A = np.zeros((m, n))
    lo = np.full(m, -np.inf)
    hi = np.full(m, np.inf)
    for i, con in enumerate(model.constraints):
        for v, a in con.expr.terms.items():
            A[i, v] = a
        if con.sense in ("<=", "="):
            hi[i] = con.rhs
        if con.sense in (">=", "="):
            lo[i] = con.rhs
    integrality = np.array([v.kind == BINARY for v in model.variables], dtype=int)
    bounds = Bounds([v.lb for v in model.variables], [v.ub for v in model.variables])
    cons = [LinearConstraint(A, lo, hi)] if m else []
    res = milp(sign * c, constraints=cons, integrality=integrality, bounds=bounds,
               options={"mip_rel_gap": 1e-9})
    if res.status == 0:
        values = {i: float(x) for i, x in enumerate(res.x)}
        for v in model.variables:
            if v.kind == BINARY:
                values[v.id] = float(round(values[v.id]))
        sol = MilpSolution("optimal", model.objective.value(values), values)
    elif res.status == 2:
        sol = MilpSolution("infeasible")
    else:
        sol = MilpSolution("unknown")
    with open(argv[1], "w") as fh:
        fh.write(format_solution(sol, model))
    return 0


if __name__ == "__main__":
    sys.exit(main())
