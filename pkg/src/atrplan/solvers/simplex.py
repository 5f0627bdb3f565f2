"""Two-phase bounded-variable primal simplex on a dense tableau.

Nonbasic variables sit at one of their bounds; each row gets a slack (for
inequalities) or an artificial (when no slack can start basic).  Pricing is
Dantzig's rule, switching to Bland's rule after a run of degenerate pivots so
cycling cannot occur.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from ..milp.model import MilpModel

PIVOT_TOL = 1e-9
DEGENERATE_RUN = 30
REFACTOR_EVERY = 100


@dataclass
class StandardForm:
    """Dense arrays for ``A x (sense) b``, ``lb <= x <= ub`` with a max-sense objective."""

    A: np.ndarray
    b: np.ndarray
    senses: np.ndarray  # -1 for <=, 0 for =, +1 for >=
    c: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    obj_sign: float

    @staticmethod
    def from_model(model: MilpModel) -> "StandardForm":
        n, m = len(model.variables), len(model.constraints)
        A = np.zeros((m, n))
        b = np.zeros(m)
        senses = np.zeros(m, dtype=int)
        for i, con in enumerate(model.constraints):
            for v, coef in con.expr.terms.items():
                A[i, v] = coef
            b[i] = con.rhs
            senses[i] = {"<=": -1, "=": 0, ">=": 1}[con.sense]
        c = np.zeros(n)
        if model.objective is not None:
            for v, coef in model.objective.terms.items():
                c[v] = coef
        sign = 1.0 if model.maximize else -1.0
        lb = np.array([v.lb for v in model.variables], dtype=float)
        ub = np.array([v.ub for v in model.variables], dtype=float)
        return StandardForm(A, b, senses, sign * c, lb, ub, sign)


@dataclass
class LPResult:
    status: str  # optimal | infeasible | unbounded | unknown
    x: np.ndarray | None = None
    objective: float = math.nan  # in the model's own sense
    iterations: int = 0


class _Tableau:
    def __init__(self, sf: StandardForm, lb: np.ndarray, ub: np.ndarray, tol: float):
        m, n = sf.A.shape
        self.m, self.n = m, n
        self.tol = tol
        ineq = np.flatnonzero(sf.senses != 0)
        ns = ineq.size
        N = n + ns
        self.N = N
        Af = np.zeros((m, N))
        Af[:, :n] = sf.A
        # <= rows: a x + s = b ; >= rows: a x - s = b ; s >= 0
        Af[ineq, n + np.arange(ns)] = -sf.senses[ineq]
        self.Af = Af
        self.b = sf.b.copy()
        self.l = np.concatenate([lb, np.zeros(ns)])
        self.u = np.concatenate([ub, np.full(ns, np.inf)])
        x = np.where(np.isfinite(self.l), self.l, np.where(np.isfinite(self.u), self.u, 0.0))
        self.x = x  # values of nonbasic columns (basic entries are stale)
        r = self.b - Af @ x
        self.basis = np.empty(m, dtype=int)
        sigma = np.ones(m)
        slack_of_row = np.full(m, -1)
        slack_of_row[ineq] = n + np.arange(ns)
        for i in range(m):
            s = slack_of_row[i]
            if s >= 0 and r[i] * Af[i, s] >= 0:
                self.basis[i] = s
                sigma[i] = Af[i, s]
            else:
                self.basis[i] = -1 - i  # artificial of row i
                sigma[i] = 1.0 if r[i] >= 0 else -1.0
        self.sigma = sigma
        self.T = Af / sigma[:, None]
        self.xB = np.abs(r)
        self.is_basic = np.zeros(N, dtype=bool)
        self.is_basic[self.basis[self.basis >= 0]] = True
        self.iterations = 0

    # bounds of the basic variable in row i
    def basic_bounds(self, phase: int):
        lo = np.empty(self.m)
        hi = np.empty(self.m)
        art = self.basis < 0
        real = ~art
        lo[real] = self.l[self.basis[real]]
        hi[real] = self.u[self.basis[real]]
        lo[art] = 0.0
        hi[art] = np.inf if phase == 1 else 0.0
        return lo, hi

    def pivot(self, r: int, j: int):
        T = self.T
        piv = T[r, j]
        T[r] /= piv
        col = T[:, j].copy()
        col[r] = 0.0
        T -= np.outer(col, T[r])
        T[:, j] = 0.0
        T[r, j] = 1.0
        self.d -= self.d[j] * T[r]
        self.d[j] = 0.0

    def refactor(self):
        """Recompute the tableau, basic values and reduced costs from the original data."""
        cols = []
        for i, bj in enumerate(self.basis):
            if bj >= 0:
                cols.append(self.Af[:, bj])
            else:
                e = np.zeros(self.m)
                e[-1 - bj] = self.sigma[-1 - bj]
                cols.append(e)
        B = np.column_stack(cols) if cols else np.zeros((0, 0))
        try:
            self.T = np.linalg.solve(B, self.Af)
            xN = np.where(self.is_basic, 0.0, self.x)
            self.xB = np.linalg.solve(B, self.b - self.Af @ xN)
        except np.linalg.LinAlgError:
            return False
        self.T[:, self.is_basic] = 0.0
        for i, bj in enumerate(self.basis):
            if bj >= 0:
                self.T[i, bj] = 1.0
        self._reset_costs()
        return True

    def set_costs(self, c_full: np.ndarray, c_art: float):
        self.c_full = c_full
        self.c_art = c_art
        self._reset_costs()

    def _reset_costs(self):
        cB = np.where(self.basis >= 0, self.c_full[np.maximum(self.basis, 0)], self.c_art)
        self.d = self.c_full - cB @ self.T
        self.d[self.is_basic] = 0.0

    def objective(self) -> float:
        xfull = self.values()
        val = float(self.c_full @ xfull)
        if self.c_art:
            val += self.c_art * float(self.xB[self.basis < 0].sum())
        return val

    def values(self) -> np.ndarray:
        x = self.x.copy()
        real = self.basis >= 0
        x[self.basis[real]] = self.xB[real]
        return x

    def run(self, phase: int, max_iter: int, deadline: float) -> str:
        tol = self.tol
        degenerate = 0
        bland = False
        blocked = np.zeros(self.N, dtype=bool)
        while True:
            if self.iterations >= max_iter or time.monotonic() > deadline:
                return "unknown"
            if self.iterations and self.iterations % REFACTOR_EVERY == 0:
                self.refactor()
            d = self.d
            can_up = (d > tol) & (self.x < self.u - tol) & ~self.is_basic & ~blocked
            can_dn = (d < -tol) & (self.x > self.l + tol) & ~self.is_basic & ~blocked
            cand = can_up | can_dn
            if not cand.any():
                return "optimal"
            if bland:
                j = int(np.flatnonzero(cand)[0])
            else:
                score = np.where(cand, np.abs(d), -1.0)
                j = int(np.argmax(score))
            direction = 1.0 if can_up[j] else -1.0
            col = self.T[:, j] * direction
            lo, hi = self.basic_bounds(phase)
            ratios = np.full(self.m, np.inf)
            dec = col > PIVOT_TOL
            inc = col < -PIVOT_TOL
            ratios[dec] = (self.xB[dec] - lo[dec]) / col[dec]
            ratios[inc] = (hi[inc] - self.xB[inc]) / (-col[inc])
            ratios = np.maximum(ratios, 0.0)
            flip = self.u[j] - self.l[j]
            rmin = ratios.min() if self.m else np.inf
            if not math.isfinite(rmin) and not math.isfinite(flip):
                if not np.isfinite(self.u[j] if direction > 0 else self.l[j]):
                    return "unbounded"
            self.iterations += 1
            if flip <= rmin:
                theta = flip
                self.xB -= theta * col
                self.x[j] = self.u[j] if direction > 0 else self.l[j]
                degenerate = 0
                bland = False
                continue
            theta = rmin
            ties = np.flatnonzero(ratios <= rmin + 1e-12)
            if bland:
                # smallest basic column index among tied rows (artificials first)
                keys = np.where(self.basis[ties] < 0, -1, self.basis[ties])
                r = int(ties[np.argmin(keys)])
            else:
                r = int(ties[np.argmax(np.abs(col[ties]))])
            if abs(self.T[r, j]) < 1e-11:
                blocked[j] = True
                continue
            blocked[:] = False
            if theta <= 1e-12:
                degenerate += 1
                if degenerate > DEGENERATE_RUN:
                    bland = True
            else:
                degenerate = 0
                bland = False
            enter_val = self.x[j] + direction * theta
            self.xB -= theta * col
            leaving = self.basis[r]
            if leaving >= 0:
                self.x[leaving] = lo[r] if col[r] > 0 else hi[r]
                self.is_basic[leaving] = False
            self.pivot(r, j)
            self.basis[r] = j
            self.is_basic[j] = True
            self.xB[r] = enter_val

    def drive_out_artificials(self):
        for r in np.flatnonzero(self.basis < 0):
            row = np.abs(self.T[r]) * ~self.is_basic
            j = int(np.argmax(row))
            if row[j] > 1e-7:
                enter_val = self.x[j]
                self.pivot(r, j)
                self.basis[r] = j
                self.is_basic[j] = True
                self.xB[r] = enter_val


def solve_lp(sf: StandardForm, lb: np.ndarray | None = None, ub: np.ndarray | None = None,
             feas_tol: float = 1e-7, max_iter: int = 200000, time_limit: float = 300.0) -> LPResult:
    lb = sf.lb if lb is None else lb
    ub = sf.ub if ub is None else ub
    if np.any(lb > ub + feas_tol):
        return LPResult("infeasible")
    deadline = time.monotonic() + time_limit
    tab = _Tableau(sf, lb, ub, tol=1e-9)
    n = sf.A.shape[1]
    zero = np.zeros(tab.N)
    if np.any(tab.basis < 0):
        tab.set_costs(zero, -1.0)
        status = tab.run(1, max_iter, deadline)
        if status == "unknown":
            return LPResult("unknown", iterations=tab.iterations)
        tab.refactor()
        infeas = float(tab.xB[tab.basis < 0].sum())
        if infeas > feas_tol * max(1.0, np.abs(sf.b).max(initial=0.0)):
            return LPResult("infeasible", iterations=tab.iterations)
        tab.drive_out_artificials()
    c_full = np.concatenate([sf.c, np.zeros(tab.N - n)])
    tab.set_costs(c_full, 0.0)
    status = tab.run(2, max_iter, deadline)
    if status != "optimal":
        return LPResult(status, iterations=tab.iterations)
    tab.refactor()
    x = tab.values()[:n]
    x = np.clip(x, lb, ub)
    resid = sf.A @ x - sf.b
    scale = 1.0 + np.abs(sf.b)
    viol = np.where(sf.senses < 0, resid, np.where(sf.senses > 0, -resid, np.abs(resid)))
    if np.any(viol > 1e-6 * scale):
        return LPResult("unknown", x=x, iterations=tab.iterations)
    return LPResult("optimal", x=x, objective=float(sf.obj_sign * (sf.c @ x)), iterations=tab.iterations)
