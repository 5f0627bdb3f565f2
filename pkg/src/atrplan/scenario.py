"""Scenario documents: agents, bounds, geometry, STL formula and encoder settings.

Scenarios are JSON objects with a fixed field set; unknown fields are errors
so typos in benchmark configs are caught early.  Polygons are written as lists
of vertices (1-D intervals as ``[[lo], [hi]]``).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .geometry import ConvexPolygon, GeometryError, contains, polygon_from_vertices
from .monitor import MODES
from .stl import Always, Eventually, Formula, STLSyntaxError, leaves, parse

TOP_FIELDS = {"dim", "t0", "tf", "n_segments", "degree", "agents", "workspace", "obstacles", "regions",
              "spec", "eps_time", "eps_rob", "robustness", "big_m"}
REQUIRED = {"dim", "tf", "n_segments", "degree", "agents", "workspace", "spec"}
AGENT_FIELDS = {"x0", "v0", "xf", "vf", "vmin", "vmax"}
AGENT_REQUIRED = {"x0", "v0", "vmin", "vmax"}
BIG_M_FIELDS = {"time", "space"}


class ScenarioError(ValueError):
    """Validation failure; ``path`` names the offending field (e.g. ``agents[1].vmax``)."""

    def __init__(self, path: str, msg: str):
        super().__init__(f"{path}: {msg}")
        self.path = path


@dataclass(frozen=True)
class AgentSpec:
    x0: np.ndarray
    v0: np.ndarray
    vmin: np.ndarray
    vmax: np.ndarray
    xf: np.ndarray | None = None
    vf: np.ndarray | None = None


@dataclass(frozen=True)
class Scenario:
    dim: int
    agents: tuple[AgentSpec, ...]
    t0: float
    tf: float
    n_segments: int
    degree: int
    workspace: ConvexPolygon
    spec: str
    obstacles: tuple[ConvexPolygon, ...] = ()
    regions: dict = field(default_factory=dict)
    eps_time: float = 1e-3
    eps_rob: float = 0.0
    robustness: str = "atr"
    big_m: dict = field(default_factory=dict)

    @property
    def n_agents(self) -> int:
        return len(self.agents)

    @property
    def horizon(self) -> float:
        return self.tf - self.t0

    def formula(self) -> Formula:
        return parse(self.spec, self.regions, self.dim, self.n_agents)

    def with_overrides(self, **kw) -> "Scenario":
        out = replace(self, **kw)
        _check(out)
        return out


def _vec(x, dim: int, path: str) -> np.ndarray:
    if isinstance(x, (int, float)) and dim == 1:
        x = [x]
    try:
        arr = np.asarray(x, dtype=float)
    except (TypeError, ValueError):
        raise ScenarioError(path, "expected a numeric vector") from None
    if arr.shape != (dim,):
        raise ScenarioError(path, f"expected {dim} components, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ScenarioError(path, "components must be finite")
    arr.setflags(write=False)
    return arr


def _num(doc: dict, key: str, default=None, path: str = "") -> float:
    val = doc.get(key, default)
    if isinstance(val, bool) or not isinstance(val, (int, float)) or not math.isfinite(val):
        raise ScenarioError(path + key, "expected a finite number")
    return float(val)


def _int(doc: dict, key: str) -> int:
    val = doc[key]
    if isinstance(val, bool) or not isinstance(val, int):
        raise ScenarioError(key, "expected an integer")
    return val


def _poly(verts, path: str) -> ConvexPolygon:
    try:
        return polygon_from_vertices(verts)
    except (GeometryError, ValueError, TypeError) as exc:
        raise ScenarioError(path, str(exc)) from None


def _unknown(doc: dict, allowed: set, path: str) -> None:
    extra = sorted(set(doc) - allowed)
    if extra:
        raise ScenarioError(path + extra[0], "unknown field")


def scenario_from_dict(doc: dict) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError("<root>", "scenario must be a JSON object")
    _unknown(doc, TOP_FIELDS, "")
    for key in sorted(REQUIRED):
        if key not in doc:
            raise ScenarioError(key, "missing required field")
    dim = _int(doc, "dim")
    if dim not in (1, 2):
        raise ScenarioError("dim", "only 1-D and 2-D scenarios are supported")
    if not isinstance(doc["agents"], list) or not doc["agents"]:
        raise ScenarioError("agents", "expected a non-empty list")
    agents = []
    for k, a in enumerate(doc["agents"]):
        p = f"agents[{k}]."
        if not isinstance(a, dict):
            raise ScenarioError(p[:-1], "expected an object")
        _unknown(a, AGENT_FIELDS, p)
        for key in sorted(AGENT_REQUIRED):
            if key not in a:
                raise ScenarioError(p + key, "missing required field")
        opt = {key: (None if a.get(key) is None else _vec(a[key], dim, p + key)) for key in ("xf", "vf")}
        agents.append(AgentSpec(_vec(a["x0"], dim, p + "x0"), _vec(a["v0"], dim, p + "v0"),
                                _vec(a["vmin"], dim, p + "vmin"), _vec(a["vmax"], dim, p + "vmax"), **opt))
    regions = doc.get("regions", {})
    if not isinstance(regions, dict):
        raise ScenarioError("regions", "expected an object mapping names to vertex lists")
    spec = doc["spec"]
    if not isinstance(spec, str):
        raise ScenarioError("spec", "expected a string")
    robustness = doc.get("robustness", "atr")
    if robustness not in MODES:
        raise ScenarioError("robustness", f"expected one of {', '.join(MODES)}")
    big_m = doc.get("big_m", {}) or {}
    if not isinstance(big_m, dict):
        raise ScenarioError("big_m", "expected an object")
    _unknown(big_m, BIG_M_FIELDS, "big_m.")
    for key in big_m:
        _num(big_m, key, path="big_m.")
    sc = Scenario(
        dim=dim,
        agents=tuple(agents),
        t0=_num(doc, "t0", 0.0),
        tf=_num(doc, "tf"),
        n_segments=_int(doc, "n_segments"),
        degree=_int(doc, "degree"),
        workspace=_poly(doc["workspace"], "workspace"),
        spec=spec,
        obstacles=tuple(_poly(o, f"obstacles[{i}]") for i, o in enumerate(doc.get("obstacles", []))),
        regions={name: _poly(v, f"regions.{name}") for name, v in regions.items()},
        eps_time=_num(doc, "eps_time", 1e-3),
        eps_rob=_num(doc, "eps_rob", 0.0),
        robustness=robustness,
        big_m={k: float(v) for k, v in big_m.items()},
    )
    _check(sc)
    return sc


def _check(sc: Scenario) -> None:
    if not sc.t0 < sc.tf:
        raise ScenarioError("tf", "t0 < tf required")
    if sc.n_segments < 1:
        raise ScenarioError("n_segments", "at least one segment required")
    if sc.degree < 2:
        raise ScenarioError("degree", "degree must be at least 2")
    if sc.eps_time <= 0:
        raise ScenarioError("eps_time", "must be positive")
    if sc.eps_time * sc.n_segments > sc.horizon:
        raise ScenarioError("eps_time", "segments cannot fit in the horizon with this minimum duration")
    if sc.eps_rob < 0:
        raise ScenarioError("eps_rob", "must be non-negative")
    if sc.robustness not in MODES:
        raise ScenarioError("robustness", f"expected one of {', '.join(MODES)}")
    for name, poly in [("workspace", sc.workspace)] + [(f"obstacles[{i}]", o) for i, o in enumerate(sc.obstacles)] \
            + [(f"regions.{n}", r) for n, r in sc.regions.items()]:
        if poly.dim != sc.dim:
            raise ScenarioError(name, f"polygon dimension {poly.dim} differs from dim={sc.dim}")
    for k, a in enumerate(sc.agents):
        p = f"agents[{k}]."
        if np.any(a.vmin >= a.vmax):
            raise ScenarioError(p + "vmin", "vmin < vmax required componentwise")
        if not contains(sc.workspace, a.x0):
            raise ScenarioError(p + "x0", "initial position outside the workspace")
        if np.any(a.v0 < a.vmin) or np.any(a.v0 > a.vmax):
            raise ScenarioError(p + "v0", "initial velocity outside [vmin, vmax]")
        if a.xf is not None and not contains(sc.workspace, a.xf):
            raise ScenarioError(p + "xf", "final position outside the workspace")
    try:
        formula = sc.formula()
    except (STLSyntaxError, ValueError) as exc:
        raise ScenarioError("spec", str(exc)) from None
    for leaf in leaves(formula):
        if isinstance(leaf, (Always, Eventually)):
            iv = leaf.interval
            if iv.lo < sc.t0 or iv.hi > sc.tf:
                raise ScenarioError("spec", f"interval [{iv.lo}, {iv.hi}] is outside [{sc.t0}, {sc.tf}]")


def scenario_to_dict(sc: Scenario) -> dict:
    doc = {"dim": sc.dim, "t0": sc.t0, "tf": sc.tf, "n_segments": sc.n_segments, "degree": sc.degree,
           "agents": [], "workspace": sc.workspace.to_json(),
           "obstacles": [o.to_json() for o in sc.obstacles],
           "regions": {n: r.to_json() for n, r in sc.regions.items()},
           "spec": sc.spec, "eps_time": sc.eps_time, "eps_rob": sc.eps_rob, "robustness": sc.robustness}
    if sc.big_m:
        doc["big_m"] = dict(sc.big_m)
    for a in sc.agents:
        d = {"x0": a.x0.tolist(), "v0": a.v0.tolist(), "vmin": a.vmin.tolist(), "vmax": a.vmax.tolist()}
        if a.xf is not None:
            d["xf"] = a.xf.tolist()
        if a.vf is not None:
            d["vf"] = a.vf.tolist()
        doc["agents"].append(d)
    return doc


def load_scenario(path) -> Scenario:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError("<file>", f"invalid JSON: {exc}") from None
    return scenario_from_dict(doc)


def save_scenario(sc: Scenario, path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(sc), indent=2) + "\n")
