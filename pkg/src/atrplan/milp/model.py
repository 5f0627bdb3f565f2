"""Solver-agnostic MILP intermediate representation.

Variables get incremental ids in creation order; constraints are stored with
the expression constant folded into the right-hand side.  ``emit_lp`` writes a
CPLEX-style LP document whose layout is fixed byte for byte, and
``parse_lp`` reads that layout back.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Union

import numpy as np

NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
CONTINUOUS = "continuous"
BINARY = "binary"
SENSES = ("<=", "=", ">=")


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class Variable:
    id: int
    name: str
    kind: str
    lb: float
    ub: float

    # arithmetic builds LinExpr objects so encoders read like algebra
    def _e(self) -> "LinExpr":
        return LinExpr({self.id: 1.0})

    def __add__(self, o):
        return self._e() + o

    __radd__ = __add__

    def __sub__(self, o):
        return self._e() - o

    def __rsub__(self, o):
        return -self._e() + o

    def __mul__(self, c):
        return self._e() * c

    __rmul__ = __mul__

    def __neg__(self):
        return -self._e()

    def __truediv__(self, c):
        return self._e() * (1.0 / c)


class LinExpr:
    __slots__ = ("terms", "constant")

    def __init__(self, terms: Mapping[int, float] | None = None, constant: float = 0.0):
        self.terms: dict[int, float] = dict(terms or {})
        self.constant = float(constant)

    @staticmethod
    def of(x: "ExprLike") -> "LinExpr":
        if isinstance(x, LinExpr):
            return x
        if isinstance(x, Variable):
            return LinExpr({x.id: 1.0})
        if isinstance(x, (int, float, np.floating, np.integer)):
            return LinExpr({}, float(x))
        raise TypeError(f"cannot use {type(x).__name__} in a linear expression")

    def copy(self) -> "LinExpr":
        return LinExpr(self.terms, self.constant)

    def __add__(self, o):
        o = LinExpr.of(o)
        out = self.copy()
        for v, c in o.terms.items():
            out.terms[v] = out.terms.get(v, 0.0) + c
        out.constant += o.constant
        return out

    __radd__ = __add__

    def __neg__(self):
        return LinExpr({v: -c for v, c in self.terms.items()}, -self.constant)

    def __sub__(self, o):
        return self + (-LinExpr.of(o))

    def __rsub__(self, o):
        return LinExpr.of(o) - self

    def __mul__(self, c):
        c = float(c)
        return LinExpr({v: c * a for v, a in self.terms.items()}, c * self.constant)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self * (1.0 / c)

    def normalized(self) -> "LinExpr":
        return LinExpr({v: c for v, c in sorted(self.terms.items()) if c != 0.0}, self.constant)

    def value(self, x) -> float:
        return float(sum(c * x[v] for v, c in self.terms.items()) + self.constant)


ExprLike = Union[LinExpr, Variable, float, int]


def quicksum(items: Iterable[ExprLike]) -> LinExpr:
    out = LinExpr()
    for it in items:
        it = LinExpr.of(it)
        for v, c in it.terms.items():
            out.terms[v] = out.terms.get(v, 0.0) + c
        out.constant += it.constant
    return out


@dataclass
class Constraint:
    expr: LinExpr  # constant-free, normalized
    sense: str
    rhs: float
    group: str = ""
    big_m: tuple | None = None  # (M, ids on, ids off, core >= 0 expr) for post-solve checks


@dataclass
class MilpSolution:
    status: str  # "optimal" | "infeasible" | "unknown"
    objective: float = math.nan
    values: dict[int, float] = field(default_factory=dict)
    stats: dict = field(default_factory=dict)

    def __getitem__(self, var) -> float:
        return self.values[var.id if isinstance(var, Variable) else var]

    def value(self, expr: ExprLike) -> float:
        return LinExpr.of(expr).value(self.values)


class MilpModel:
    def __init__(self, name: str = "model"):
        self.name = name
        self.variables: list[Variable] = []
        self.constraints: list[Constraint] = []
        self.objective: LinExpr | None = None
        self.maximize = True
        self.group = ""  # label attached to newly created variables/constraints
        self.var_group: list[str] = []
        self._by_name: dict[str, int] = {}

    # -- building ----------------------------------------------------------

    def add_variable(self, name: str, kind: str = CONTINUOUS, lb: float = 0.0, ub: float = math.inf) -> Variable:
        if not NAME_RE.match(name):
            raise ModelError(f"invalid variable name {name!r}")
        if name in self._by_name:
            raise ModelError(f"duplicate variable name {name!r}")
        if kind == BINARY:
            if (lb, ub) != (0.0, 1.0) and (lb, ub) != (0, 1):
                raise ModelError("binary variables are fixed to bounds [0, 1]")
            lb, ub = 0.0, 1.0
        elif kind != CONTINUOUS:
            raise ModelError(f"unknown variable kind {kind!r}")
        lb, ub = float(lb), float(ub)
        if lb > ub:
            raise ModelError(f"variable {name!r} has lb > ub")
        v = Variable(len(self.variables), name, kind, lb, ub)
        self.variables.append(v)
        self.var_group.append(self.group)
        self._by_name[name] = v.id
        return v

    def binary(self, name: str) -> Variable:
        return self.add_variable(name, BINARY, 0.0, 1.0)

    def continuous(self, name: str, lb: float, ub: float) -> Variable:
        return self.add_variable(name, CONTINUOUS, lb, ub)

    def var_by_name(self, name: str) -> Variable:
        try:
            return self.variables[self._by_name[name]]
        except KeyError:
            raise ModelError(f"unknown variable {name!r}") from None

    def _check_expr(self, expr: LinExpr) -> LinExpr:
        n = len(self.variables)
        for v, c in expr.terms.items():
            if not (isinstance(v, (int, np.integer)) and 0 <= v < n):
                raise ModelError(f"unknown variable id {v}")
            if not math.isfinite(c):
                raise ModelError("coefficients must be finite")
        return expr.normalized()

    def add_constraint(self, expr: ExprLike, sense: str, rhs: float = 0.0, big_m=None) -> int:
        if sense not in SENSES:
            raise ModelError(f"unknown sense {sense!r}")
        e = self._check_expr(LinExpr.of(expr))
        rhs = float(rhs) - e.constant
        if not math.isfinite(rhs):
            raise ModelError("rhs must be finite")
        self.constraints.append(Constraint(LinExpr(e.terms), sense, rhs, self.group, big_m))
        return len(self.constraints) - 1

    def le(self, lhs: ExprLike, rhs: ExprLike = 0.0) -> int:
        return self.add_constraint(LinExpr.of(lhs) - rhs, "<=", 0.0)

    def ge(self, lhs: ExprLike, rhs: ExprLike = 0.0) -> int:
        return self.add_constraint(LinExpr.of(lhs) - rhs, ">=", 0.0)

    def eq(self, lhs: ExprLike, rhs: ExprLike = 0.0) -> int:
        return self.add_constraint(LinExpr.of(lhs) - rhs, "=", 0.0)

    def set_objective(self, expr: ExprLike, maximize: bool = True) -> None:
        self.objective = self._check_expr(LinExpr.of(expr))
        self.maximize = bool(maximize)

    # -- bounds & big-M helpers ----------------------------------------------

    def expr_range(self, expr: ExprLike) -> tuple[float, float]:
        """Interval bounds of ``expr`` over the variable box."""
        e = LinExpr.of(expr)
        lo = hi = e.constant
        for v, c in e.terms.items():
            var = self.variables[v]
            if c >= 0:
                lo += c * var.lb
                hi += c * var.ub
            else:
                lo += c * var.ub
                hi += c * var.lb
        return lo, hi

    def implies_ge(self, expr: ExprLike, on: Iterable[Variable] = (), off: Iterable[Variable] = (),
                   margin: float = 1.0, M: float | None = None) -> int | None:
        """Big-M encoding of ``(all on == 1 and all off == 0) => expr >= 0``.

        M defaults to the box bound of ``expr`` plus ``margin``; returns None
        when the implication holds over the whole box.
        """
        on, off = list(on), list(off)
        e = LinExpr.of(expr)
        lo, _ = self.expr_range(e)
        if lo >= 0:
            return None
        if M is None:
            M = -lo + margin
        if M <= 0:
            raise ModelError("big-M must be positive")
        gate = quicksum([1 - z for z in on] + list(off))
        return self.add_constraint(e + M * gate, ">=", 0.0,
                                   big_m=(M, tuple(z.id for z in on), tuple(z.id for z in off), e))

    def implies_le(self, expr: ExprLike, on: Iterable[Variable] = (), off: Iterable[Variable] = (),
                   margin: float = 1.0, M: float | None = None) -> int | None:
        return self.implies_ge(-LinExpr.of(expr), on, off, margin, M)

    def reify_geq(self, expr: ExprLike, M: float, eps: float, name: str) -> Variable:
        """Binary ``z`` with ``z = 1 <=> expr >= 0`` (``z = 0`` forces ``expr <= -eps``)."""
        if M <= 0 or eps <= 0:
            raise ModelError("reify_geq needs positive M and eps")
        z = self.binary(name)
        e = LinExpr.of(expr)
        self.add_constraint(e + M * (1 - z), ">=", 0.0, big_m=(M, (z.id,), (), e))
        self.add_constraint(e - M * z, "<=", -eps, big_m=(M, (), (z.id,), -e - eps))
        return z

    def reify_and(self, terms: list[Variable], name: str) -> Variable:
        z = self.binary(name)
        for t in terms:
            self.le(z, t)
        self.ge(z, quicksum(terms) - len(terms) + 1)
        return z

    # -- statistics ------------------------------------------------------------

    @property
    def n_binaries(self) -> int:
        return sum(v.kind == BINARY for v in self.variables)

    def stats(self) -> dict:
        groups: dict[str, dict] = {}
        for v, g in zip(self.variables, self.var_group):
            d = groups.setdefault(g, {"variables": 0, "binaries": 0, "constraints": 0})
            d["variables"] += 1
            d["binaries"] += v.kind == BINARY
        for c in self.constraints:
            d = groups.setdefault(c.group, {"variables": 0, "binaries": 0, "constraints": 0})
            d["constraints"] += 1
        return {
            "variables": len(self.variables),
            "binaries": self.n_binaries,
            "constraints": len(self.constraints),
            "groups": groups,
        }

    def check_solution(self, values: Mapping[int, float], tol: float = 1e-6) -> list[str]:
        """Constraint/bound/integrality violations of ``values`` beyond ``tol``."""
        bad = []
        for v in self.variables:
            x = values[v.id]
            if x < v.lb - tol or x > v.ub + tol:
                bad.append(f"bound {v.name}={x}")
            if v.kind == BINARY and min(abs(x), abs(x - 1)) > tol:
                bad.append(f"integrality {v.name}={x}")
        for i, c in enumerate(self.constraints):
            lhs = c.expr.value(values)
            scale = max(1.0, abs(c.rhs))
            if (c.sense == "<=" and lhs > c.rhs + tol * scale) or (c.sense == ">=" and lhs < c.rhs - tol * scale) \
                    or (c.sense == "=" and abs(lhs - c.rhs) > tol * scale):
                bad.append(f"c{i}: {lhs} {c.sense} {c.rhs}")
        return bad

    def tight_big_m(self, values: Mapping[int, float], tol: float = 1e-4) -> list[int]:
        """Deactivated big-M rows sitting within ``tol`` of their M bound (M too small)."""
        out = []
        for i, c in enumerate(self.constraints):
            if c.big_m is None:
                continue
            M, on, off, core = c.big_m
            gate = sum(1 - round(values[z]) for z in on) + sum(round(values[z]) for z in off)
            if gate >= 1 and core.value(values) + M * gate <= tol:
                out.append(i)
        return out


# -- LP text format -------------------------------------------------------------

def fmt_num(x: float) -> str:
    x = float(x)
    if x == 0.0:
        return "0"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if x.is_integer() and abs(x) < 1e16:
        return str(int(x))
    return repr(x)


def fmt_expr(expr: LinExpr, names: list[str]) -> str:
    parts = []
    for v, c in sorted(expr.terms.items()):
        if c == 0.0:
            continue
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        body = names[v] if mag == 1.0 else f"{fmt_num(mag)} {names[v]}"
        if not parts:
            parts.append(body if sign == "+" else f"- {body}")
        else:
            parts.append(f"{sign} {body}")
    return " ".join(parts) if parts else "0"


def emit_lp(model: MilpModel) -> str:
    if model.objective is None:
        raise ModelError("model has no objective")
    names = [v.name for v in model.variables]
    lines = ["Maximize" if model.maximize else "Minimize", f" obj: {fmt_expr(model.objective, names)}", "Subject To"]
    for i, c in enumerate(model.constraints):
        lines.append(f" c{i}: {fmt_expr(c.expr, names)} {c.sense} {fmt_num(c.rhs)}")
    lines.append("Bounds")
    for v in model.variables:
        if math.isinf(v.lb) and math.isinf(v.ub) and v.lb < 0 < v.ub:
            lines.append(f" {v.name} free")
        else:
            lines.append(f" {fmt_num(v.lb)} <= {v.name} <= {fmt_num(v.ub)}")
    bins = [v.name for v in model.variables if v.kind == BINARY]
    if bins:
        lines.append("Binaries")
        lines.append(" " + " ".join(bins))
    lines.append("End")
    return "\n".join(lines) + "\n"


_TERM = re.compile(r"\s*([+-])?\s*(\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|inf)?\s*([A-Za-z_][A-Za-z0-9_]*)")


def _parse_expr(text: str, lookup) -> LinExpr:
    text = text.strip()
    if text == "0":
        return LinExpr()
    terms: dict[int, float] = {}
    pos = 0
    while pos < len(text):
        m = _TERM.match(text, pos)
        if not m or m.end() == pos:
            raise ModelError(f"cannot parse expression near {text[pos:pos + 20]!r}")
        sign = -1.0 if m.group(1) == "-" else 1.0
        coef = float(m.group(2)) if m.group(2) else 1.0
        v = lookup(m.group(3))
        terms[v] = terms.get(v, 0.0) + sign * coef
        pos = m.end()
        while pos < len(text) and text[pos] == " ":
            pos += 1
    return LinExpr(terms)


def parse_lp(text: str) -> MilpModel:
    """Read the layout written by :func:`emit_lp`."""
    lines = [ln.rstrip("\n") for ln in text.splitlines()]
    if not lines or lines[0] not in ("Maximize", "Minimize"):
        raise ModelError("LP must start with Maximize or Minimize")
    maximize = lines[0] == "Maximize"
    try:
        i_st = lines.index("Subject To")
        i_b = lines.index("Bounds")
        i_end = lines.index("End")
    except ValueError as exc:
        raise ModelError(f"missing LP section: {exc}") from None
    i_bin = lines.index("Binaries") if "Binaries" in lines else None
    bin_names = set(lines[i_bin + 1].split()) if i_bin is not None else set()
    model = MilpModel()
    bound_end = i_bin if i_bin is not None else i_end
    bound_re = re.compile(r"\s*(\S+) <= ([A-Za-z_][A-Za-z0-9_]*) <= (\S+)\s*$")
    for ln in lines[i_b + 1:bound_end]:
        m = bound_re.match(ln)
        if m:
            name, lb, ub = m.group(2), float(m.group(1)), float(m.group(3))
        elif ln.strip().endswith(" free"):
            name, lb, ub = ln.split()[0], -math.inf, math.inf
        else:
            raise ModelError(f"bad bound line {ln!r}")
        model.add_variable(name, BINARY if name in bin_names else CONTINUOUS, lb, ub)
    lookup = lambda n: model.var_by_name(n).id  # noqa: E731
    obj_line = lines[1].strip()
    if not obj_line.startswith("obj:"):
        raise ModelError("objective line must start with 'obj:'")
    objective = _parse_expr(obj_line[4:], lookup)
    row_re = re.compile(r"\s*c(\d+): (.*) (<=|>=|=) (\S+)\s*$")
    for ln in lines[2:i_st] + lines[i_st + 1:i_b]:
        m = row_re.match(ln)
        if not m:
            raise ModelError(f"bad constraint line {ln!r}")
        model.add_constraint(_parse_expr(m.group(2), lookup), m.group(3), float(m.group(4)))
    model.set_objective(objective, maximize)
    return model


# -- solution text format --------------------------------------------------------

def parse_solution(text: str, model: MilpModel) -> MilpSolution:
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise ModelError("line 1: empty solution")
    head = lines[0].split()
    if len(head) != 2 or head[0] != "status" or head[1] not in ("OPTIMAL", "INFEASIBLE", "UNKNOWN"):
        raise ModelError(f"line 1: expected 'status OPTIMAL|INFEASIBLE|UNKNOWN', got {lines[0]!r}")
    status = head[1].lower()
    objective = math.nan
    start = 1
    if len(lines) > 1 and lines[1].startswith("objective"):
        parts = lines[1].split()
        try:
            objective = float(parts[1])
            if len(parts) != 2:
                raise ValueError
        except (ValueError, IndexError):
            raise ModelError(f"line 2: malformed objective {lines[1]!r}") from None
        start = 2
    elif status == "optimal":
        raise ModelError("line 2: objective required for OPTIMAL status")
    values = {v.id: (v.lb if math.isfinite(v.lb) else 0.0) for v in model.variables}
    for n, ln in enumerate(lines[start:], start=start + 1):
        parts = ln.split()
        if len(parts) != 3 or parts[0] != "var":
            raise ModelError(f"line {n}: expected 'var <name> <value>', got {ln!r}")
        try:
            v = model.var_by_name(parts[1])
        except ModelError:
            raise ModelError(f"line {n}: unknown variable {parts[1]!r}") from None
        try:
            values[v.id] = float(parts[2])
        except ValueError:
            raise ModelError(f"line {n}: malformed value {parts[2]!r}") from None
    if status != "optimal":
        values = {}
    return MilpSolution(status, objective, values)


def format_solution(sol: MilpSolution, model: MilpModel) -> str:
    lines = [f"status {sol.status.upper()}"]
    if sol.status == "optimal" or (sol.values and math.isfinite(sol.objective)):
        lines.append(f"objective {repr(float(sol.objective))}")
        for v in model.variables:
            if v.id in sol.values:
                lines.append(f"var {v.name} {repr(float(sol.values[v.id]))}")
    return "\n".join(lines) + "\n"


def models_equal(a: MilpModel, b: MilpModel) -> bool:
    """Structural identity: same variables, rows, senses, right-hand sides and objective."""
    if [(v.name, v.kind, v.lb, v.ub) for v in a.variables] != [(v.name, v.kind, v.lb, v.ub) for v in b.variables]:
        return False
    if len(a.constraints) != len(b.constraints) or a.maximize != b.maximize:
        return False
    for ca, cb in zip(a.constraints, b.constraints):
        if ca.sense != cb.sense or ca.rhs != cb.rhs or ca.expr.terms != cb.expr.terms:
            return False
    return a.objective.terms == b.objective.terms
