"""STL fragment over joint-linear predicates.

Grammar (agents are 1-based in text, 0-based in the AST)::

    phi  := conj { "||" conj }
    conj := term { "&&" term }
    term := psi | "(" phi ")"
    psi  := atom | ("G" | "F") "[" num "," num "]" atom
    atom := "in(" agent "," region ")"
          | "close(" agent "," agent "," num ")"
          | "hs(" agent "," "[" num {"," num} "]" "," num ")"

Temporal operators only ever wrap a single predicate.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Mapping, Union

import numpy as np

from .geometry import ConvexPolygon

# boundary states count as satisfying up to floating-point noise
SAT_TOL = 1e-9


class STLSyntaxError(ValueError):
    def __init__(self, msg: str, pos: int | None = None):
        super().__init__(msg if pos is None else f"{msg} at position {pos}")
        self.pos = pos


@dataclass(frozen=True)
class LinearAtom:
    """``mu(x) = sum_k coeffs[k] . x_k + offset``; satisfied when ``mu >= 0``."""

    coeffs: tuple[tuple[int, tuple[float, ...]], ...]
    offset: float

    @staticmethod
    def make(coeffs: Mapping[int, np.ndarray], offset: float) -> "LinearAtom":
        items = tuple(sorted((int(k), tuple(float(c) for c in np.atleast_1d(v))) for k, v in coeffs.items()))
        if not any(any(c != 0.0 for c in v) for _, v in items):
            raise ValueError("linear atom needs a nonzero coefficient")
        return LinearAtom(items, float(offset))

    @property
    def agents(self) -> frozenset[int]:
        return frozenset(k for k, v in self.coeffs if any(c != 0.0 for c in v))

    def coeff(self, k: int) -> np.ndarray | None:
        for kk, v in self.coeffs:
            if kk == k:
                return np.array(v)
        return None

    def value(self, state: Mapping[int, np.ndarray]) -> float:
        return float(sum(np.dot(v, state[k]) for k, v in self.coeffs) + self.offset)


@dataclass(frozen=True)
class Predicate:
    """Conjunction of linear atoms; ``form`` remembers the surface syntax."""

    atoms: tuple[LinearAtom, ...]
    form: tuple

    @property
    def relevant(self) -> frozenset[int]:
        return relevant_agents(self)

    def value(self, state: Mapping[int, np.ndarray]) -> float:
        return min(a.value(state) for a in self.atoms)


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not (0.0 <= self.lo <= self.hi):
            raise ValueError(f"interval requires 0 <= lo <= hi, got [{self.lo}, {self.hi}]")


@dataclass(frozen=True)
class Pred:
    pred: Predicate


@dataclass(frozen=True)
class Always:
    interval: Interval
    pred: Predicate


@dataclass(frozen=True)
class Eventually:
    interval: Interval
    pred: Predicate


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


Formula = Union[Pred, Always, Eventually, And, Or]
TemporalLeaf = Union[Pred, Always, Eventually]


def relevant_agents(pred: Predicate) -> frozenset[int]:
    out: set[int] = set()
    for a in pred.atoms:
        out |= a.agents
    return frozenset(out)


def leaves(f: Formula) -> Iterator[TemporalLeaf]:
    """Predicate-bearing leaves in left-to-right order."""
    if isinstance(f, (And, Or)):
        yield from leaves(f.left)
        yield from leaves(f.right)
    else:
        yield f


# -- desugaring --------------------------------------------------------------

def desugar(form: tuple, regions: Mapping[str, ConvexPolygon], dim: int) -> tuple[LinearAtom, ...]:
    kind = form[0]
    if kind == "in":
        _, k, name = form
        if name not in regions:
            raise KeyError(f"unknown region {name!r}")
        poly = regions[name]
        if poly.dim != dim:
            raise ValueError(f"region {name!r} has dimension {poly.dim}, workspace has {dim}")
        return tuple(LinearAtom.make({k: -f.normal}, f.offset) for f in poly.faces)
    if kind == "close":
        _, k, l, eps = form
        if eps <= 0:
            raise ValueError("close() needs a positive tolerance")
        if k == l:
            raise ValueError("close() needs two distinct agents")
        atoms = []
        for c in range(dim):
            e = np.zeros(dim)
            e[c] = 1.0
            atoms.append(LinearAtom.make({k: -e, l: e}, eps))   # eps - (x_k - x_l)_c >= 0
            atoms.append(LinearAtom.make({k: e, l: -e}, eps))   # eps + (x_k - x_l)_c >= 0
        return tuple(atoms)
    if kind == "hs":
        _, k, a, b = form
        if len(a) != dim:
            raise ValueError(f"hs() normal has {len(a)} entries, workspace dimension is {dim}")
        return (LinearAtom.make({k: np.asarray(a, dtype=float)}, b),)
    raise ValueError(f"unknown atom form {kind!r}")


def make_predicate(form: tuple, regions: Mapping[str, ConvexPolygon], dim: int) -> Predicate:
    return Predicate(desugar(form, regions, dim), form)


# -- parser ------------------------------------------------------------------

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<op>&&|\|\|)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[()\[\],])
""", re.VERBOSE)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise STLSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            toks.append((kind, m.group(), pos))
        pos = m.end()
    toks.append(("eof", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text, regions, dim, n_agents):
        self.toks = _tokenize(text)
        self.i = 0
        self.regions = regions
        self.dim = dim
        self.n_agents = n_agents

    def peek(self):
        return self.toks[self.i]

    def next(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, text, pos = self.next()
        if text != value:
            raise STLSyntaxError(f"expected {value!r}, found {text or 'end of input'!r}", pos)

    def number(self) -> float:
        kind, text, pos = self.next()
        if kind != "num":
            raise STLSyntaxError(f"expected a number, found {text or 'end of input'!r}", pos)
        return float(text)

    def agent(self) -> int:
        kind, text, pos = self.next()
        if kind != "num" or not re.fullmatch(r"\+?\d+", text):
            raise STLSyntaxError(f"expected an agent index, found {text!r}", pos)
        k = int(text)
        if k < 1 or (self.n_agents is not None and k > self.n_agents):
            raise STLSyntaxError(f"agent index {k} out of range", pos)
        return k - 1

    def phi(self):
        node = self.conj()
        while self.peek()[1] == "||":
            self.next()
            node = Or(node, self.conj())
        return node

    def conj(self):
        node = self.term()
        while self.peek()[1] == "&&":
            self.next()
            node = And(node, self.term())
        return node

    def term(self):
        if self.peek()[1] == "(":
            self.next()
            node = self.phi()
            self.expect(")")
            return node
        return self.psi()

    def psi(self):
        kind, text, pos = self.peek()
        if text in ("G", "F"):
            self.next()
            self.expect("[")
            lo = self.number()
            self.expect(",")
            hi = self.number()
            _, _, cpos = self.peek()
            self.expect("]")
            if lo > hi:
                raise STLSyntaxError(f"interval [{lo}, {hi}] has lo > hi", cpos)
            if lo < 0:
                raise STLSyntaxError(f"interval [{lo}, {hi}] starts before 0", cpos)
            if self.peek()[1] in ("G", "F"):
                raise STLSyntaxError("nested temporal operators are not part of the fragment", self.peek()[2])
            if self.peek()[1] == "(":
                raise STLSyntaxError("temporal operators apply to a single atom only", self.peek()[2])
            pred = self.atom()
            iv = Interval(lo, hi)
            return Always(iv, pred) if text == "G" else Eventually(iv, pred)
        return Pred(self.atom())

    def atom(self) -> Predicate:
        kind, text, pos = self.next()
        if text == "in":
            self.expect("(")
            k = self.agent()
            self.expect(",")
            rk, name, rpos = self.next()
            if rk != "name":
                raise STLSyntaxError(f"expected a region name, found {name!r}", rpos)
            if name not in self.regions:
                raise STLSyntaxError(f"unknown region {name!r}", rpos)
            self.expect(")")
            form = ("in", k, name)
        elif text == "close":
            self.expect("(")
            k = self.agent()
            self.expect(",")
            l = self.agent()
            self.expect(",")
            _, _, epos = self.peek()
            eps = self.number()
            self.expect(")")
            if eps <= 0:
                raise STLSyntaxError("close() tolerance must be positive", epos)
            if k == l:
                raise STLSyntaxError("close() needs two distinct agents", pos)
            form = ("close", k, l, eps)
        elif text == "hs":
            self.expect("(")
            k = self.agent()
            self.expect(",")
            self.expect("[")
            a = [self.number()]
            while self.peek()[1] == ",":
                self.next()
                a.append(self.number())
            self.expect("]")
            self.expect(",")
            b = self.number()
            self.expect(")")
            form = ("hs", k, tuple(a), b)
        else:
            raise STLSyntaxError(f"expected an atom (in/close/hs), found {text or 'end of input'!r}", pos)
        try:
            return make_predicate(form, self.regions, self.dim)
        except (ValueError, KeyError) as exc:
            raise STLSyntaxError(str(exc), pos) from None


def parse(text: str, regions: Mapping[str, ConvexPolygon] | None = None, dim: int = 1,
          n_agents: int | None = None) -> Formula:
    p = _Parser(text, regions or {}, dim, n_agents)
    node = p.phi()
    kind, tok, pos = p.peek()
    if kind != "eof":
        if tok in ("G", "F"):
            raise STLSyntaxError("nested temporal operators are not part of the fragment", pos)
        raise STLSyntaxError(f"unexpected token {tok!r}", pos)
    return node


# -- printer -----------------------------------------------------------------

def _num(x: float) -> str:
    return str(int(x)) if float(x).is_integer() and abs(x) < 1e15 else repr(float(x))


def format_predicate(pred: Predicate) -> str:
    f = pred.form
    if f[0] == "in":
        return f"in({f[1] + 1},{f[2]})"
    if f[0] == "close":
        return f"close({f[1] + 1},{f[2] + 1},{_num(f[3])})"
    return f"hs({f[1] + 1},[{','.join(_num(a) for a in f[2])}],{_num(f[3])})"


def format_formula(f: Formula) -> str:
    """Canonical text with explicit parentheses wherever associativity needs them."""
    if isinstance(f, Pred):
        return format_predicate(f.pred)
    if isinstance(f, (Always, Eventually)):
        op = "G" if isinstance(f, Always) else "F"
        return f"{op}[{_num(f.interval.lo)},{_num(f.interval.hi)}] {format_predicate(f.pred)}"
    op = " && " if isinstance(f, And) else " || "
    left = format_formula(f.left)
    right = format_formula(f.right)
    if isinstance(f, And):
        if isinstance(f.left, Or):
            left = f"({left})"
        if isinstance(f.right, (And, Or)):
            right = f"({right})"
    else:
        if isinstance(f.right, Or):
            right = f"({right})"
    return left + op + right


# -- qualitative semantics on sampled signals --------------------------------

def predicate_values(signal, pred: Predicate, times) -> np.ndarray:
    times = np.atleast_1d(np.asarray(times, dtype=float))
    vals = np.full(times.shape, np.inf)
    for atom in pred.atoms:
        mu = np.full(times.shape, atom.offset)
        for k, a in atom.coeffs:
            mu = mu + signal.at(k, times) @ np.asarray(a)
        vals = np.minimum(vals, mu)
    return vals


def interval_times(signal, iv: Interval) -> np.ndarray:
    """Grid times inside the closed interval, plus its endpoints."""
    tol = 1e-9
    if iv.lo < signal.t0 - tol or iv.hi > signal.tf + tol:
        raise ValueError(f"interval [{iv.lo}, {iv.hi}] exceeds the signal horizon [{signal.t0}, {signal.tf}]")
    t = signal.times
    inner = t[(t >= iv.lo - tol) & (t <= iv.hi + tol)]
    return np.unique(np.concatenate([[iv.lo, iv.hi], inner]))


def qualitative_sat(formula: Formula, signal) -> bool:
    if isinstance(formula, And):
        return qualitative_sat(formula.left, signal) and qualitative_sat(formula.right, signal)
    if isinstance(formula, Or):
        return qualitative_sat(formula.left, signal) or qualitative_sat(formula.right, signal)
    if isinstance(formula, Pred):
        return bool(predicate_values(signal, formula.pred, [signal.t0])[0] >= -SAT_TOL)
    vals = predicate_values(signal, formula.pred, interval_times(signal, formula.interval))
    if isinstance(formula, Always):
        return bool(np.all(vals >= -SAT_TOL))
    return bool(np.any(vals >= -SAT_TOL))
