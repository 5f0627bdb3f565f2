"""Multi-agent plans built from (curvature, temporal) Bezier segment pairs.

Each segment pairs a spatial curve ``r(s)`` with a scalar time curve ``h(s)``;
the physical trajectory is ``x(h(s)) = r(s)``.  Segments are concatenated per
agent with C0/C1 joins.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bezier import BezierCurve, de_casteljau
from .geometry import contains, strictly_inside

JOIN_TOL = 1e-9
SAMPLE_TOL = 1e-6
# velocity is a ratio of derivative curves; on very short segments solver-level
# feasibility noise is amplified by 1/h', so it is checked relative to the bound
VEL_TOL = 1e-6
DEFAULT_EPS_TIME = 1e-3


class PlanError(ValueError):
    pass


@dataclass(frozen=True)
class Segment:
    r: BezierCurve
    h: BezierCurve

    def __post_init__(self):
        if self.h.dim != 1:
            raise PlanError("temporal curve must be one-dimensional")
        if self.r.degree != self.h.degree:
            raise PlanError("curvature and temporal curves must share a degree")

    @property
    def degree(self) -> int:
        return self.r.degree

    @property
    def span(self) -> tuple[float, float]:
        hc = self.h.control_points[:, 0]
        return float(hc[0]), float(hc[-1])


@dataclass(frozen=True)
class AgentTrajectory:
    segments: tuple[Segment, ...]

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        if not self.segments:
            raise PlanError("an agent trajectory needs at least one segment")


@dataclass(frozen=True)
class MultiAgentPlan:
    agents: tuple[AgentTrajectory, ...]
    t0: float
    tf: float

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))
        if not self.agents:
            raise PlanError("plan has no agents")
        dims = {s.r.dim for a in self.agents for s in a.segments}
        degs = {s.degree for a in self.agents for s in a.segments}
        if len(dims) != 1 or len(degs) != 1:
            raise PlanError("all segments must share dimension and degree")

    @property
    def dim(self) -> int:
        return self.agents[0].segments[0].r.dim

    @property
    def degree(self) -> int:
        return self.agents[0].segments[0].degree

    @property
    def n_agents(self) -> int:
        return len(self.agents)

    @property
    def n_segments(self) -> int:
        return len(self.agents[0].segments)


def time_span(plan: MultiAgentPlan, k: int, i: int) -> tuple[float, float]:
    if not 0 <= k < plan.n_agents:
        raise IndexError(f"agent index {k} out of range")
    segs = plan.agents[k].segments
    if not 0 <= i < len(segs):
        raise IndexError(f"segment index {i} out of range for agent {k}")
    return segs[i].span


def _invert_time(h_ctrl: np.ndarray, t: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Solve h(s) = t for s by bisection (h strictly increasing)."""
    lo = np.zeros_like(t)
    hi = np.ones_like(t)
    P = h_ctrl[:, None]
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        hm = de_casteljau(P, mid)[:, 0]
        below = hm < t
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.all(np.abs(hm - t) <= tol) or np.all(hi - lo <= 1e-16):
            break
    s = 0.5 * (lo + hi)
    s[t <= h_ctrl[0]] = 0.0
    s[t >= h_ctrl[-1]] = 1.0
    return s


def _segment_index(agent: AgentTrajectory, t: np.ndarray) -> np.ndarray:
    ends = np.array([s.span[1] for s in agent.segments])
    # ties at shared boundaries resolve to the earlier segment
    idx = np.searchsorted(ends, t, side="left")
    return np.minimum(idx, len(ends) - 1)


def states_at(plan: MultiAgentPlan, k: int, times) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised ``state_at``: positions and velocities (m, dim) at ``times``."""
    t = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(t < plan.t0 - JOIN_TOL) or np.any(t > plan.tf + JOIN_TOL):
        raise PlanError(f"time outside [{plan.t0}, {plan.tf}]")
    agent = plan.agents[k]
    for seg in agent.segments:
        if np.any(np.diff(seg.h.control_points[:, 0]) <= 0):
            raise PlanError(f"agent {k}: temporal curve is not strictly increasing")
    pos = np.empty((t.shape[0], plan.dim))
    vel = np.empty((t.shape[0], plan.dim))
    idx = _segment_index(agent, t)
    for i in np.unique(idx):
        mask = idx == i
        seg = agent.segments[i]
        s = _invert_time(seg.h.control_points[:, 0], t[mask])
        pos[mask] = de_casteljau(seg.r.control_points, s)
        pos[mask & (t == seg.span[0])] = seg.r.control_points[0]
        rd = seg.r.derivative().control_points
        hd = seg.h.derivative().control_points
        vel[mask] = de_casteljau(rd, s) / de_casteljau(hd, s)
    return pos, vel


def state_at(plan: MultiAgentPlan, k: int, t: float) -> tuple[np.ndarray, np.ndarray]:
    pos, vel = states_at(plan, k, [t])
    return pos[0], vel[0]


@dataclass(frozen=True)
class Violation:
    kind: str
    agent: int
    segment: int | None
    message: str

    def __str__(self):
        where = f"agent {self.agent + 1}" + (f", segment {self.segment}" if self.segment is not None else "")
        return f"{self.kind} ({where}): {self.message}"


def validate(plan: MultiAgentPlan, scenario=None, eps_time: float | None = None,
             samples_per_segment: int = 100) -> list[Violation]:
    """Report every violated plan invariant; an empty list means the plan is valid.

    With a ``scenario`` the velocity bounds, boundary states, workspace and
    obstacles are checked on samples as well.
    """
    out: list[Violation] = []
    if eps_time is None:
        eps_time = scenario.eps_time if scenario is not None else DEFAULT_EPS_TIME
    d = plan.degree
    for k, agent in enumerate(plan.agents):
        segs = agent.segments
        if len(segs) != plan.n_segments:
            out.append(Violation("segment count", k, None, "agents have differing segment counts"))
        h0 = segs[0].h.control_points[0, 0]
        hf = segs[-1].h.control_points[-1, 0]
        if abs(h0 - plan.t0) > JOIN_TOL or abs(hf - plan.tf) > JOIN_TOL:
            out.append(Violation("horizon", k, None, f"time curve spans [{h0}, {hf}], expected [{plan.t0}, {plan.tf}]"))
        for i, seg in enumerate(segs):
            gaps = np.diff(seg.h.control_points[:, 0])
            if np.any(gaps < eps_time / d - SAMPLE_TOL):
                out.append(Violation("non-forward time", k, i, f"minimum temporal control gap {gaps.min():.3g}"))
        for i in range(len(segs) - 1):
            a, b = segs[i], segs[i + 1]
            for name, ca, cb in (("r", a.r.control_points, b.r.control_points),
                                 ("h", a.h.control_points, b.h.control_points)):
                if np.max(np.abs(ca[-1] - cb[0])) > JOIN_TOL:
                    out.append(Violation("C0 discontinuity", k, i, f"{name} endpoints differ at join {i}/{i + 1}"))
                da, db = d * (ca[-1] - ca[-2]), d * (cb[1] - cb[0])
                if np.max(np.abs(da - db)) > JOIN_TOL * max(1.0, np.abs(da).max()):
                    out.append(Violation("C1 discontinuity", k, i, f"{name} derivatives differ at join {i}/{i + 1}"))
    if any(v.kind == "non-forward time" for v in out) or scenario is None:
        return out
    s = np.linspace(0.0, 1.0, samples_per_segment)
    for k, agent in enumerate(plan.agents):
        spec = scenario.agents[k]
        for i, seg in enumerate(agent.segments):
            X = de_casteljau(seg.r.control_points, s)
            V = de_casteljau(seg.r.derivative().control_points, s) / de_casteljau(seg.h.derivative().control_points, s)
            vtol = VEL_TOL * np.maximum(1.0, np.maximum(np.abs(spec.vmin), np.abs(spec.vmax)))
            if np.any(V < spec.vmin - vtol) or np.any(V > spec.vmax + vtol):
                out.append(Violation("velocity", k, i, f"velocity range [{V.min():.4g}, {V.max():.4g}] outside bounds"))
            if not all(contains(scenario.workspace, x, SAMPLE_TOL) for x in X):
                out.append(Violation("workspace", k, i, "sampled position leaves the workspace"))
            for o, obs in enumerate(scenario.obstacles):
                if any(strictly_inside(obs, x, SAMPLE_TOL) for x in X):
                    out.append(Violation("collision", k, i, f"sampled position inside obstacle {o}"))
        first, last = agent.segments[0], agent.segments[-1]
        if np.max(np.abs(first.r.control_points[0] - spec.x0)) > SAMPLE_TOL:
            out.append(Violation("boundary", k, 0, "initial position differs from x0"))
        v_start = first.r.derivative().control_points[0] / first.h.derivative().control_points[0]
        if np.max(np.abs(v_start - spec.v0)) > SAMPLE_TOL:
            out.append(Violation("boundary", k, 0, "initial velocity differs from v0"))
        if spec.xf is not None and np.max(np.abs(last.r.control_points[-1] - spec.xf)) > SAMPLE_TOL:
            out.append(Violation("boundary", k, len(agent.segments) - 1, "final position differs from xf"))
        if spec.vf is not None:
            v_end = last.r.derivative().control_points[-1] / last.h.derivative().control_points[-1]
            if np.max(np.abs(v_end - spec.vf)) > SAMPLE_TOL:
                out.append(Violation("boundary", k, len(agent.segments) - 1, "final velocity differs from vf"))
    return out


@dataclass(frozen=True)
class SampledSignal:
    """Per-agent positions on a shared uniform grid: ``values[k, j]`` is agent k at ``times[j]``."""

    times: np.ndarray
    values: np.ndarray  # (n_agents, T, dim)

    @property
    def t0(self) -> float:
        return float(self.times[0])

    @property
    def tf(self) -> float:
        return float(self.times[-1])

    @property
    def n_agents(self) -> int:
        return self.values.shape[0]

    def at(self, k: int, t) -> np.ndarray:
        """Linear interpolation of agent ``k``, holding boundary states outside the horizon."""
        t = np.clip(np.asarray(t, dtype=float), self.t0, self.tf)
        V = self.values[k]
        return np.stack([np.interp(t, self.times, V[:, c]) for c in range(V.shape[1])], axis=-1)


def time_grid(t0: float, tf: float, dt: float) -> np.ndarray:
    if dt <= 0:
        raise ValueError("dt must be positive")
    n = int(np.floor((tf - t0) / dt + 1e-9))
    grid = t0 + dt * np.arange(n + 1)
    if tf - grid[-1] > 1e-9:
        grid = np.append(grid, tf)
    else:
        grid[-1] = tf
    return grid


def sample(plan: MultiAgentPlan, dt: float) -> SampledSignal:
    times = time_grid(plan.t0, plan.tf, dt)
    values = np.stack([states_at(plan, k, times)[0] for k in range(plan.n_agents)])
    return SampledSignal(times, values)


def shifted_in_time(plan: MultiAgentPlan, k: int, delta: float) -> MultiAgentPlan:
    """Translate agent ``k``'s temporal curves by ``delta`` (the horizon moves with it)."""
    agents = list(plan.agents)
    agents[k] = AgentTrajectory(tuple(
        Segment(s.r, BezierCurve(s.h.control_points + delta)) for s in plan.agents[k].segments))
    return MultiAgentPlan(tuple(agents), plan.t0, plan.tf)


# -- plan file -------------------------------------------------------------

def plan_to_dict(plan: MultiAgentPlan) -> dict:
    return {
        "t0": float(plan.t0),
        "tf": float(plan.tf),
        "dim": plan.dim,
        "degree": plan.degree,
        "agents": [
            {"segments": [{"r": seg.r.control_points.tolist(), "h": seg.h.control_points[:, 0].tolist()}
                          for seg in agent.segments]}
            for agent in plan.agents
        ],
    }


def plan_from_dict(doc: dict, check: bool = True) -> MultiAgentPlan:
    try:
        t0, tf, dim, degree = float(doc["t0"]), float(doc["tf"]), int(doc["dim"]), int(doc["degree"])
        agents_doc = doc["agents"]
    except (KeyError, TypeError, ValueError) as exc:
        raise PlanError(f"malformed plan header: {exc}") from None
    n_seg = None
    agents = []
    for k, a in enumerate(agents_doc):
        segs = a.get("segments") if isinstance(a, dict) else None
        if not segs:
            raise PlanError(f"agent {k + 1}: missing segments")
        if n_seg is not None and len(segs) != n_seg:
            raise PlanError(f"agent {k + 1}: expected {n_seg} segments, found {len(segs)} (missing segment {len(segs)})")
        n_seg = len(segs)
        out = []
        for i, s in enumerate(segs):
            if not isinstance(s, dict) or "r" not in s or "h" not in s:
                raise PlanError(f"agent {k + 1}, segment {i}: missing 'r' or 'h'")
            r = np.asarray(s["r"], dtype=float)
            h = np.asarray(s["h"], dtype=float)
            if r.shape != (degree + 1, dim) or h.shape != (degree + 1,):
                raise PlanError(f"agent {k + 1}, segment {i}: control point shapes do not match degree/dim")
            out.append(Segment(BezierCurve(r), BezierCurve(h[:, None])))
        agents.append(AgentTrajectory(tuple(out)))
    plan = MultiAgentPlan(tuple(agents), t0, tf)
    if check:
        problems = validate(plan, eps_time=0.0)
        for k, agent in enumerate(plan.agents):
            for i, seg in enumerate(agent.segments):
                if np.any(np.diff(seg.h.control_points[:, 0]) <= 0):
                    problems.append(Violation("non-forward time", k, i, "temporal control points not increasing"))
        if problems:
            raise PlanError("invalid plan: " + "; ".join(map(str, problems)))
    return plan


def write_plan(plan: MultiAgentPlan, path) -> None:
    with open(path, "w") as fh:
        json.dump(plan_to_dict(plan), fh, indent=1)
        fh.write("\n")


def read_plan(path) -> MultiAgentPlan:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise PlanError(f"malformed plan file: {exc}") from None
    return plan_from_dict(doc)


def plan_from_arrays(r: Sequence, h: Sequence, t0: float, tf: float) -> MultiAgentPlan:
    """``r[k][i]`` is a (d+1, dim) array, ``h[k][i]`` a (d+1,) array."""
    agents = []
    for rk, hk in zip(r, h):
        agents.append(AgentTrajectory(tuple(
            Segment(BezierCurve(np.asarray(ri, dtype=float)), BezierCurve(np.asarray(hi, dtype=float)[:, None]))
            for ri, hi in zip(rk, hk))))
    return MultiAgentPlan(tuple(agents), t0, tf)
