"""MILP encoding of the planning problem and extraction of the resulting plan.

Variable creation order is fixed: trajectory variables, obstacle selectors,
then one block per predicate leaf (formula order), then operators bottom-up,
and finally the objective variable.  Names are deterministic, e.g.
``r_k0_i2_b3_c0`` or ``p1_z_k0_i2``.

Predicate robustness per segment is built from three ingredients:

* ``z(k, i)``: the segment's control points (jointly with every temporally
  overlapping segment of the other agent) satisfy the predicate;
* ``theta0``: how far the other agent may slide before one of its violating
  segments reaches segment ``i`` of agent ``k``;
* a chain over the neighbouring segments of ``k`` that slide into the
  operator window as ``k`` itself is shifted.

Indicators are one-sided by default (``z = 1`` implies satisfaction, never the
converse), which is all that maximization needs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .milp.model import LinExpr, MilpModel, MilpSolution, Variable, quicksum
from .scenario import Scenario
from .stl import Always, And, Eventually, Formula, Or, Pred, Predicate, leaves, relevant_agents
from .trajectory import MultiAgentPlan, plan_from_arrays, validate

JOIN_SNAP_TOL = 1e-6


class EncodingError(ValueError):
    pass


@dataclass
class PredicateIndex:
    leaf: int
    pred: Predicate
    window: tuple[float, float]
    agents: tuple[int, ...]
    group: str
    z: dict = field(default_factory=dict)  # (k, i) -> binary
    theta: dict = field(default_factory=dict)  # (k, i) -> theta_p
    theta0: dict = field(default_factory=dict)  # (sign, k, i) -> continuous
    pair: dict = field(default_factory=dict)  # (i, j) -> binary, i for agents[0], j for agents[1]
    after: dict = field(default_factory=dict)  # (i, j) -> segment j of agents[1] strictly after segment i of agents[0]
    before: dict = field(default_factory=dict)  # (i, j) -> segment j of agents[1] strictly before segment i
    selectors: dict = field(default_factory=dict)  # (sign, k, i, m) -> binary
    caps: dict = field(default_factory=dict)  # (sign, k, i) -> continuous
    point: dict = field(default_factory=dict)  # (k, i) -> certified time (Eventually only)


@dataclass
class EncodingIndex:
    scenario: Scenario
    formula: Formula
    mode: str
    r: dict = field(default_factory=dict)  # (k, i, b, c) -> Variable
    h: dict = field(default_factory=dict)  # (k, i, b) -> Variable
    beta: dict = field(default_factory=dict)  # (k, i, obstacle, face) -> binary
    predicates: list = field(default_factory=list)
    operators: list = field(default_factory=list)  # (label, Variable)
    theta_phi: Variable | None = None

    def r_point(self, k: int, i: int, b: int) -> list[Variable]:
        return [self.r[k, i, b, c] for c in range(self.scenario.dim)]


class _Encoder:
    def __init__(self, model: MilpModel, sc: Scenario, index: EncodingIndex, exact: bool = False):
        self.m = model
        self.sc = sc
        self.ix = index
        self.exact = exact
        self.N = sc.n_segments
        self.d = sc.degree
        self.H = sc.horizon
        self.m_time = sc.big_m.get("time")
        self.m_space = sc.big_m.get("space")
        self.sep = min(1e-4, sc.eps_time)  # strict separation used by ordering binaries

    # -- small helpers ----------------------------------------------------------

    def s(self, k, i) -> Variable:
        return self.ix.h[k, i, 0]

    def e(self, k, i) -> Variable:
        return self.ix.h[k, i, self.d]

    def dot(self, a, k, i, b) -> LinExpr:
        return quicksum(float(a[c]) * v for c, v in enumerate(self.ix.r_point(k, i, b)) if a[c] != 0.0)

    def imp_t(self, expr, on=(), off=()):
        """Implication on a time-valued expression (uses the time big-M override)."""
        return self.m.implies_ge(expr, on, off, M=self.m_time)

    def imp_s(self, expr, on=(), off=()):
        return self.m.implies_ge(expr, on, off, M=self.m_space)

    def theta_var(self, name: str) -> Variable:
        return self.m.continuous(name, 0.0, self.H)

    # -- trajectory -------------------------------------------------------------

    def trajectory(self):
        sc, m, ix, d, N = self.sc, self.m, self.ix, self.d, self.N
        box = sc.workspace.bounding_box()
        m.group = "trajectory"
        for k in range(sc.n_agents):
            for i in range(N):
                for b in range(d + 1):
                    for c in range(sc.dim):
                        ix.r[k, i, b, c] = m.continuous(f"r_k{k}_i{i}_b{b}_c{c}", box.lo[c], box.hi[c])
                for b in range(d + 1):
                    ix.h[k, i, b] = m.continuous(f"h_k{k}_i{i}_b{b}", sc.t0, sc.tf)
        for k, agent in enumerate(sc.agents):
            R = lambda i, b: ix.r_point(k, i, b)  # noqa: E731
            for i in range(N - 1):
                for c in range(sc.dim):
                    m.eq(R(i, d)[c], R(i + 1, 0)[c])
                    m.eq(R(i, d)[c] - R(i, d - 1)[c], R(i + 1, 1)[c] - R(i + 1, 0)[c])
                m.eq(ix.h[k, i, d], ix.h[k, i + 1, 0])
                m.eq(ix.h[k, i, d] - ix.h[k, i, d - 1], ix.h[k, i + 1, 1] - ix.h[k, i + 1, 0])
            m.eq(ix.h[k, 0, 0], sc.t0)
            m.eq(ix.h[k, N - 1, d], sc.tf)
            for i in range(N):
                for b in range(d):
                    m.ge(d * (ix.h[k, i, b + 1] - ix.h[k, i, b]), sc.eps_time)
            for c in range(sc.dim):
                m.eq(R(0, 0)[c], float(agent.x0[c]))
                m.eq(R(0, 1)[c] - R(0, 0)[c] - float(agent.v0[c]) * (ix.h[k, 0, 1] - ix.h[k, 0, 0]), 0.0)
                if agent.xf is not None:
                    m.eq(R(N - 1, d)[c], float(agent.xf[c]))
                if agent.vf is not None:
                    m.eq(R(N - 1, d)[c] - R(N - 1, d - 1)[c]
                         - float(agent.vf[c]) * (ix.h[k, N - 1, d] - ix.h[k, N - 1, d - 1]), 0.0)
            # workspace faces not already implied by the variable box
            for i in range(N):
                for b in range(d + 1):
                    for f in sc.workspace.faces:
                        expr = f.offset - self.dot(f.normal, k, i, b)
                        if m.expr_range(expr)[0] < -1e-12:
                            m.ge(expr, 0.0)
            # velocity: ratio of derivative control points, componentwise
            for i in range(N):
                for b in range(d):
                    dh = ix.h[k, i, b + 1] - ix.h[k, i, b]
                    for c in range(sc.dim):
                        dr = R(i, b + 1)[c] - R(i, b)[c]
                        m.ge(dr - float(agent.vmin[c]) * dh, 0.0)
                        m.le(dr - float(agent.vmax[c]) * dh, 0.0)
        m.group = "obstacles"
        for k in range(sc.n_agents):
            for i in range(N):
                for o, obs in enumerate(sc.obstacles):
                    betas = [m.binary(f"beta_k{k}_i{i}_o{o}_f{f}") for f in range(len(obs.faces))]
                    for f, (face, beta) in enumerate(zip(obs.faces, betas)):
                        ix.beta[k, i, o, f] = beta
                        for b in range(d + 1):
                            self.imp_s(self.dot(face.normal, k, i, b) - face.offset, on=[beta])
                    m.ge(quicksum(betas), 1.0)

    # -- predicates ---------------------------------------------------------------

    def zspat_single(self, pred: Predicate, k: int, i: int, name: str) -> Variable:
        m = self.m
        if not self.exact:
            z = m.binary(name)
            for a_i, atom in enumerate(pred.atoms):
                for b in range(self.d + 1):
                    self.imp_s(self.dot(atom.coeff(k), k, i, b) + atom.offset, on=[z])
            return z
        terms = []
        for a_i, atom in enumerate(pred.atoms):
            for b in range(self.d + 1):
                expr = self.dot(atom.coeff(k), k, i, b) + atom.offset
                lo, hi = m.expr_range(expr)
                M = self.m_space or max(abs(lo), abs(hi)) + 1.0
                terms.append(m.reify_geq(expr, M, 1e-6, f"{name}_a{a_i}_b{b}"))
        return m.reify_and(terms, name)

    def signs(self):
        return {"right": ("+",), "left": ("-",), "atr": ("+", "-")}[self.ix.mode]

    def predicate(self, n: int, leaf, window) -> PredicateIndex:
        pred = leaf.pred
        S = tuple(sorted(relevant_agents(pred)))
        if len(S) > 2:
            raise EncodingError("predicates over more than two agents are not supported")
        g = f"p{n}"
        self.m.group = g
        pi = PredicateIndex(n, pred, window, S, g)
        N = self.N
        if len(S) == 1:
            k = S[0]
            for i in range(N):
                pi.z[k, i] = self.zspat_single(pred, k, i, f"{g}_z_k{k}_i{i}")
        else:
            self.joint(pi)
        lo, hi = window
        for k in S:
            for i in range(N):
                # may go negative for segments the operator excludes
                th = self.m.continuous(f"{g}_theta_k{k}_i{i}", -self.H, self.H)
                pi.theta[k, i] = th
                self.imp_t(-th, on=[], off=[pi.z[k, i]])
                if isinstance(leaf, Eventually):
                    # certify a single time point inside the segment
                    t = self.m.continuous(f"{g}_t_k{k}_i{i}", self.sc.t0, self.sc.tf)
                    self.m.ge(t, self.s(k, i))
                    self.m.le(t, self.e(k, i))
                    pi.point[k, i] = t
                    w_end = w_start = LinExpr.of(t)
                else:
                    # the whole window part of the segment; later segments that start
                    # inside the window are forced to satisfy by the operator anyway
                    w_end, w_start = LinExpr.of(hi), LinExpr.of(lo)
                for sgn in self.signs():
                    if sgn == "+":
                        later = [(m_, self.s(k, i + m_) - w_end) for m_ in range(1, N - i)]
                        nbr = lambda m_: i + m_  # noqa: E731
                    else:
                        later = [(m_, w_start - self.e(k, i - m_)) for m_ in range(1, i + 1)]
                        nbr = lambda m_: i - m_  # noqa: E731
                    if len(S) == 1:
                        # a violating neighbour must not be reached before the shift ends
                        for m_, gap in later:
                            self.imp_t(gap - th, off=[pi.z[k, nbr(m_)]])
                    else:
                        self.m.le(th, pi.caps[sgn, k, i])
                        for m_, gap in later:
                            sel = self.m.binary(f"{g}_w{'p' if sgn == '+' else 'm'}_k{k}_i{i}_m{m_}")
                            pi.selectors[sgn, k, i, m_] = sel
                            self.imp_t(gap - th, off=[sel])
                            self.imp_t(pi.caps[sgn, k, nbr(m_)] - th, on=[sel])
        return pi

    def joint(self, pi: PredicateIndex):
        """Pairwise encoding for a predicate over agents ``k < l``."""
        m, N, d, g = self.m, self.N, self.d, pi.group
        k, l = pi.agents
        pred = pi.pred
        box = self.sc.workspace.bounding_box()
        # per-segment lower bounds of each atom's agent term over the control points
        low = {}
        for ag in (k, l):
            for i in range(N):
                for a_i, atom in enumerate(pred.atoms):
                    a = atom.coeff(ag)
                    if a is None:
                        continue
                    rng = [float(np.dot(a, np.where(a >= 0, box.lo, box.hi))),
                           float(np.dot(a, np.where(a >= 0, box.hi, box.lo)))]
                    v = m.continuous(f"{g}_low_k{ag}_i{i}_a{a_i}", rng[0], rng[1])
                    for b in range(d + 1):
                        m.le(v, self.dot(a, ag, i, b))
                    low[ag, i, a_i] = v
        for i in range(N):
            for j in range(N):
                pair = m.binary(f"{g}_pair_i{i}_j{j}")
                pi.pair[i, j] = pair
                for a_i, atom in enumerate(pred.atoms):
                    expr = LinExpr.of(atom.offset)
                    for ag, seg in ((k, i), (l, j)):
                        if (ag, seg, a_i) in low:
                            expr = expr + low[ag, seg, a_i]
                    self.imp_s(expr, on=[pair])
        for i in range(N):
            for j in range(N):
                aft = m.binary(f"{g}_after_i{i}_j{j}")
                bef = m.binary(f"{g}_before_i{i}_j{j}")
                pi.after[i, j], pi.before[i, j] = aft, bef
                self.imp_t(self.s(l, j) - self.e(k, i) - self.sep, on=[aft])
                self.imp_t(self.s(k, i) - self.e(l, j) - self.sep, on=[bef])
                m.le(aft + bef, 1.0)
        # ordering is monotone along both agents' segment sequences
        for i in range(N):
            for j in range(N):
                if j + 1 < N:
                    m.le(pi.after[i, j], pi.after[i, j + 1])
                    m.le(pi.before[i, j + 1], pi.before[i, j])
                if i + 1 < N:
                    m.le(pi.after[i + 1, j], pi.after[i, j])
                    m.le(pi.before[i, j], pi.before[i + 1, j])
        # view of the shared binaries from each agent: (own seg, other seg) -> (pair, other after, other before)
        rel = {}
        for i in range(N):
            for j in range(N):
                rel[k, i, j] = (pi.pair[i, j], pi.after[i, j], pi.before[i, j])
                rel[l, j, i] = (pi.pair[i, j], pi.before[i, j], pi.after[i, j])
        other = {k: l, l: k}
        for ag in (k, l):
            o = other[ag]
            for i in range(N):
                z = m.binary(f"{g}_z_k{ag}_i{i}")
                pi.z[ag, i] = z
                t0p = self.theta_var(f"{g}_t0p_k{ag}_i{i}")
                t0m = self.theta_var(f"{g}_t0m_k{ag}_i{i}")
                pi.theta0["+", ag, i], pi.theta0["-", ag, i] = t0p, t0m
                for j in range(N):
                    pair, o_after, o_before = rel[ag, i, j]
                    m.le(z, pair + o_after + o_before)
                    self.imp_t(self.s(o, j) - self.e(ag, i) - t0p, on=[o_after], off=[pair])
                    self.imp_t(self.s(ag, i) - self.e(o, j) - t0m, on=[o_before], off=[pair])
        # caps: a segment reached by agent ag's own shift must tolerate the relative
        # shift of the other agent, which spans up to twice the box in atr mode
        for ag in (k, l):
            for i in range(N):
                t0p, t0m = pi.theta0["+", ag, i], pi.theta0["-", ag, i]
                for sgn in self.signs():
                    cap = self.theta_var(f"{g}_cap{'p' if sgn == '+' else 'm'}_k{ag}_i{i}")
                    pi.caps[sgn, ag, i] = cap
                    self.imp_t(-cap, off=[pi.z[ag, i]])
                    if self.ix.mode == "atr":
                        wp, wm = (1.0, 2.0) if sgn == "+" else (2.0, 1.0)
                    else:
                        wp = wm = 1.0
                    m.le(wp * cap, t0p)
                    m.le(wm * cap, t0m)

    # -- operators ----------------------------------------------------------------

    def always(self, n: int, pi: PredicateIndex, lo: float, hi: float, gate=()) -> Variable:
        m, N, g = self.m, self.N, f"op{n}"
        m.group = g
        th = self.theta_var(f"{g}_always")
        for k in pi.agents:
            bef, aft = [], []
            for i in range(N):
                excl = []
                if lo > self.sc.t0:
                    b = m.binary(f"{g}_before_k{k}_i{i}")
                    self.imp_t(lo - self.sep - self.e(k, i), on=[b])
                    bef.append(b)
                    excl.append(b)
                if hi < self.sc.tf:
                    a = m.binary(f"{g}_after_k{k}_i{i}")
                    self.imp_t(self.s(k, i) - hi - self.sep, on=[a])
                    aft.append(a)
                    excl.append(a)
                self.imp_t(pi.theta[k, i] - th, off=excl)
                # an active leaf needs every segment meeting the window to satisfy
                m.implies_ge(pi.z[k, i] - 1, on=list(gate), off=excl)
            for i in range(N - 1):
                if bef:
                    m.ge(bef[i], bef[i + 1])
                if aft:
                    m.le(aft[i], aft[i + 1])
        return th

    def eventually(self, n: int, pi: PredicateIndex, lo: float, hi: float, gate=()) -> Variable:
        m, N, g = self.m, self.N, f"op{n}"
        m.group = g
        th = self.theta_var(f"{g}_eventually")
        for k in pi.agents:
            thk = self.theta_var(f"{g}_eventually_k{k}")
            qs = []
            for i in range(N):
                q = m.binary(f"{g}_q_k{k}_i{i}")
                self.imp_t(pi.point[k, i] - lo, on=[q])
                self.imp_t(hi - pi.point[k, i], on=[q])
                self.imp_t(pi.theta[k, i] - thk, on=[q])
                m.le(q, pi.z[k, i])
                qs.append(q)
            m.le(quicksum(qs), 1.0)
            m.implies_ge(quicksum(qs) - 1, on=list(gate))
            m.le(th, thk)
        return th

    def formula(self, f: Formula, leaf_thetas: list, counter: list) -> Variable:
        """Operators bottom-up; ``leaf_thetas`` are consumed in leaf order."""
        m = self.m
        if isinstance(f, (Pred, Always, Eventually)):
            return leaf_thetas.pop(0)
        left = self.formula(f.left, leaf_thetas, counter)
        right = self.formula(f.right, leaf_thetas, counter)
        n = counter[0]
        counter[0] += 1
        g = f"op{n}"
        m.group = g
        if isinstance(f, And):
            th = self.theta_var(f"{g}_and")
            m.le(th, left)
            m.le(th, right)
        else:
            th = self.theta_var(f"{g}_or")
            sl, sr = self.or_selectors[id(f)]
            m.ge(sl + sr, 1.0)
            self.imp_t(left - th, on=[sl])
            self.imp_t(right - th, on=[sr])
        self.ix.operators.append((g, th))
        return th


def _window(leaf, sc: Scenario) -> tuple[float, float]:
    if isinstance(leaf, Pred):
        return sc.t0, sc.t0
    return leaf.interval.lo, leaf.interval.hi


def encode_trajectory(model: MilpModel, scenario: Scenario, formula: Formula | None = None,
                      mode: str | None = None) -> EncodingIndex:
    ix = EncodingIndex(scenario, formula if formula is not None else scenario.formula(),
                       mode or scenario.robustness)
    _Encoder(model, scenario, ix).trajectory()
    return ix


def encode(scenario: Scenario, formula: Formula | None = None, mode: str | None = None,
           exact_indicators: bool = False) -> tuple[MilpModel, EncodingIndex]:
    """Build the full model: trajectory, predicates, operators and the objective."""
    formula = formula if formula is not None else scenario.formula()
    mode = mode or scenario.robustness
    if mode not in ("atr", "right", "left"):
        raise EncodingError(f"unknown robustness mode {mode!r}")
    for leaf in leaves(formula):
        lo, hi = _window(leaf, scenario)
        if lo < scenario.t0 or hi > scenario.tf:
            raise EncodingError(f"interval [{lo}, {hi}] is outside the horizon [{scenario.t0}, {scenario.tf}]")
    model = MilpModel("atrplan")
    ix = EncodingIndex(scenario, formula, mode)
    enc = _Encoder(model, scenario, ix, exact=exact_indicators)
    enc.trajectory()
    leaf_list = list(leaves(formula))
    for n, leaf in enumerate(leaf_list):
        ix.predicates.append(enc.predicate(n, leaf, _window(leaf, scenario)))
    # Or selectors come first so leaves know which choices activate them
    model.group = "or"
    gates = []
    enc.or_selectors = {}

    def walk(f, gate):
        if isinstance(f, And):
            walk(f.left, gate)
            walk(f.right, gate)
        elif isinstance(f, Or):
            n = len(enc.or_selectors)
            sel = (model.binary(f"or{n}_sel_l"), model.binary(f"or{n}_sel_r"))
            enc.or_selectors[id(f)] = sel
            walk(f.left, gate + [sel[0]])
            walk(f.right, gate + [sel[1]])
        else:
            gates.append(gate)

    walk(formula, [])
    counter = [0]
    thetas = []
    for leaf, pi, gate in zip(leaf_list, ix.predicates, gates):
        n = counter[0]
        counter[0] += 1
        lo, hi = pi.window
        if isinstance(leaf, Eventually):
            th = enc.eventually(n, pi, lo, hi, gate)
        else:
            th = enc.always(n, pi, lo, hi, gate)
        ix.operators.append((f"op{n}", th))
        thetas.append(th)
    root = enc.formula(formula, thetas, counter)
    model.group = "objective"
    phi = model.continuous("theta_phi", 0.0, scenario.horizon)
    model.le(phi, root)
    model.ge(phi, scenario.eps_rob)
    model.set_objective(phi, maximize=True)
    ix.theta_phi = phi
    return model, ix


# -- standalone reified indicators --------------------------------------------------

def encode_zspat_single(model: MilpModel, pred: Predicate, points, name: str = "z",
                        M: float | None = None, eps: float = 1e-6) -> Variable:
    """``z = 1`` iff every atom holds at every point; ``points`` are lists of expressions per coordinate."""
    (k,) = relevant_agents(pred)
    terms = []
    for a_i, atom in enumerate(pred.atoms):
        a = atom.coeff(k)
        for b, pt in enumerate(points):
            expr = quicksum(float(a[c]) * LinExpr.of(pt[c]) for c in range(len(a))) + atom.offset
            lo, hi = model.expr_range(expr)
            terms.append(model.reify_geq(expr, M or max(abs(lo), abs(hi)) + 1.0, eps, f"{name}_a{a_i}_b{b}"))
    return model.reify_and(terms, name)


def encode_ztemp_and_order(model: MilpModel, span_ki, span_lj, name: str = "t", M: float | None = None,
                           eps: float = 1e-6) -> tuple[Variable, Variable, Variable]:
    """Reified (z_temp, z_plus, z_minus) for closed spans ``(start, end)`` of two segments.

    z_temp: the spans intersect; z_plus: segment lj ends no earlier than ki;
    z_minus: segment lj starts no later than ki.
    """
    (s_k, e_k), (s_l, e_l) = [(LinExpr.of(a), LinExpr.of(b)) for a, b in (span_ki, span_lj)]

    def big(expr):
        lo, hi = model.expr_range(expr)
        return M or max(abs(lo), abs(hi)) + 1.0

    a = model.reify_geq(e_k - s_l, big(e_k - s_l), eps, f"{name}_ls_le_ke")
    b = model.reify_geq(e_l - s_k, big(e_l - s_k), eps, f"{name}_le_ge_ks")
    z_temp = model.reify_and([a, b], f"{name}_temp")
    z_plus = model.reify_geq(e_l - e_k, big(e_l - e_k), eps, f"{name}_plus")
    z_minus = model.reify_geq(s_k - s_l, big(s_k - s_l), eps, f"{name}_minus")
    return z_temp, z_plus, z_minus


def encode_zspat_joint(model: MilpModel, pred: Predicate, points_k, points_l, name: str = "zp",
                       M: float | None = None, eps: float = 1e-6) -> Variable:
    """Pair indicator: every atom holds for every combination of control points of the two segments."""
    k, l = sorted(relevant_agents(pred))
    terms = []
    for a_i, atom in enumerate(pred.atoms):
        ak, al = atom.coeff(k), atom.coeff(l)
        for b1, p1 in enumerate(points_k):
            for b2, p2 in enumerate(points_l):
                expr = LinExpr.of(atom.offset)
                if ak is not None:
                    expr = expr + quicksum(float(ak[c]) * LinExpr.of(p1[c]) for c in range(len(ak)))
                if al is not None:
                    expr = expr + quicksum(float(al[c]) * LinExpr.of(p2[c]) for c in range(len(al)))
                lo, hi = model.expr_range(expr)
                terms.append(model.reify_geq(expr, M or max(abs(lo), abs(hi)) + 1.0, eps,
                                             f"{name}_a{a_i}_b{b1}_{b2}"))
    return model.reify_and(terms, name)


def segment_joint_indicator(model: MilpModel, z_pairs: list[Variable], z_temps: list[Variable],
                            name: str = "zs") -> Variable:
    """``z = 1`` iff every temporally intersecting pair satisfies (``z_temp => z_pair`` for all)."""
    z = model.binary(name)
    oks = []
    for n, (zp, zt) in enumerate(zip(z_pairs, z_temps)):
        model.le(z, zp + 1 - zt)
        ok = model.binary(f"{name}_ok{n}")  # ok = zp or not zt
        model.ge(ok, zp)
        model.ge(ok, 1 - zt)
        model.le(ok, zp + 1 - zt)
        oks.append(ok)
    model.ge(z, quicksum(oks) - len(oks) + 1)
    return z


# -- extraction --------------------------------------------------------------------

def model_statistics(model: MilpModel, index: EncodingIndex) -> dict:
    st = model.stats()
    from .stl import format_predicate
    per = []
    for pi in index.predicates:
        gst = st["groups"].get(pi.group, {"variables": 0, "binaries": 0, "constraints": 0})
        per.append({"leaf": pi.leaf, "predicate": format_predicate(pi.pred),
                    "agents": [k + 1 for k in pi.agents], **gst})
    return {"variables": st["variables"], "binaries": st["binaries"], "constraints": st["constraints"],
            "per_predicate": per}


def _snap(a, b, what):
    if np.max(np.abs(np.asarray(a) - np.asarray(b))) > JOIN_SNAP_TOL:
        raise EncodingError(f"extracted plan violates {what} beyond {JOIN_SNAP_TOL}")


def extract_plan_and_stats(solution: MilpSolution, index: EncodingIndex, model: MilpModel | None = None
                           ) -> tuple[MultiAgentPlan, float, dict]:
    """Read the control points back into a validated plan.

    Join equalities are snapped to exact equality after checking they hold
    within solver tolerance; any remaining plan violation is an encoder bug and
    raises ``EncodingError`` naming the violated invariant.
    """
    if solution.status != "optimal":
        raise EncodingError(f"no plan: solver status is {solution.status}")
    sc = index.scenario
    K, N, d, D = sc.n_agents, sc.n_segments, sc.degree, sc.dim
    val = solution.values
    r = np.array([[[[val[index.r[k, i, b, c].id] for c in range(D)] for b in range(d + 1)]
                   for i in range(N)] for k in range(K)])
    h = np.array([[[val[index.h[k, i, b].id] for b in range(d + 1)] for i in range(N)] for k in range(K)])
    for k in range(K):
        _snap(r[k, 0, 0], sc.agents[k].x0, f"initial position of agent {k + 1}")
        r[k, 0, 0] = sc.agents[k].x0
        _snap([h[k, 0, 0], h[k, -1, -1]], [sc.t0, sc.tf], f"horizon of agent {k + 1}")
        h[k, 0, 0], h[k, -1, -1] = sc.t0, sc.tf
        if sc.agents[k].xf is not None:
            r[k, -1, -1] = sc.agents[k].xf
        for i in range(N - 1):
            for arr, nm in ((r, "position"), (h, "time")):
                _snap(arr[k, i, -1], arr[k, i + 1, 0], f"{nm} continuity at join {i} of agent {k + 1}")
                arr[k, i + 1, 0] = arr[k, i, -1]
                slope = arr[k, i, -1] - arr[k, i, -2]
                _snap(arr[k, i + 1, 1], arr[k, i + 1, 0] + slope, f"{nm} smoothness at join {i} of agent {k + 1}")
                arr[k, i + 1, 1] = arr[k, i + 1, 0] + slope
    plan = plan_from_arrays(r, h, sc.t0, sc.tf)
    bad = validate(plan, sc)
    if bad:
        raise EncodingError("extracted plan is invalid: " + "; ".join(map(str, bad)))
    theta = solution.value(index.theta_phi)
    stats = model_statistics(model, index) if model is not None else {}
    return plan, float(theta), stats
