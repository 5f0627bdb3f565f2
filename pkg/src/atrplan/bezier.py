"""Bezier curves: de Casteljau evaluation, hodographs and the convex-hull check."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, QhullError


class BezierError(ValueError):
    pass


@dataclass(frozen=True)
class BezierCurve:
    """Curve of degree ``len(control_points) - 1``; control points are rows."""

    control_points: np.ndarray

    def __post_init__(self):
        P = np.asarray(self.control_points, dtype=float)
        if P.ndim == 1:
            P = P[:, None]
        if P.ndim != 2 or P.shape[0] < 1:
            raise BezierError("control points must be a (d+1, dim) array")
        if not np.all(np.isfinite(P)):
            raise BezierError("control points must be finite")
        P.setflags(write=False)
        object.__setattr__(self, "control_points", P)

    @property
    def degree(self) -> int:
        return self.control_points.shape[0] - 1

    @property
    def dim(self) -> int:
        return self.control_points.shape[1]

    def __call__(self, s):
        return evaluate(self, s)

    def derivative(self) -> "BezierCurve":
        return derivative(self)


def _check_phase(s):
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0.0) or np.any(s_arr > 1.0) or np.any(~np.isfinite(s_arr)):
        raise BezierError(f"phase must lie in [0, 1], got {s}")
    return s_arr


def de_casteljau(P: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Evaluate control points ``P`` (d+1, dim) at phases ``s`` (m,) -> (m, dim)."""
    s = np.asarray(s, dtype=float)[:, None, None]
    pts = np.broadcast_to(P, (s.shape[0],) + P.shape).copy()
    for r in range(P.shape[0] - 1, 0, -1):
        pts = (1.0 - s) * pts[:, :r] + s * pts[:, 1 : r + 1]
    return pts[:, 0]


def evaluate(curve: BezierCurve, s):
    """Point on the curve at phase ``s`` (scalar -> (dim,), array -> (m, dim))."""
    s_arr = _check_phase(s)
    P = curve.control_points
    if s_arr.ndim == 0:
        if s_arr == 0.0:
            return P[0].copy()
        if s_arr == 1.0:
            return P[-1].copy()
        return de_casteljau(P, s_arr[None])[0]
    out = de_casteljau(P, s_arr.ravel())
    # endpoint property holds bit-exactly
    out[s_arr.ravel() == 0.0] = P[0]
    out[s_arr.ravel() == 1.0] = P[-1]
    return out


def bernstein_sum(curve: BezierCurve, s: float) -> np.ndarray:
    """Direct Bernstein-basis summation; kept as an independent check on de Casteljau."""
    from math import comb

    d = curve.degree
    w = np.array([comb(d, b) * (1 - s) ** (d - b) * s**b for b in range(d + 1)])
    return w @ curve.control_points


def derivative(curve: BezierCurve) -> BezierCurve:
    d = curve.degree
    if d < 1:
        raise BezierError("derivative requires degree >= 1")
    return BezierCurve(d * np.diff(curve.control_points, axis=0))


def _hull_equations(P: np.ndarray):
    if P.shape[1] == 1:
        return None
    try:
        hull = ConvexHull(P)
    except (QhullError, ValueError):
        return None
    return hull.equations


def in_hull_lp(P: np.ndarray, x: np.ndarray, tol: float = 1e-8) -> bool:
    """Is ``x`` a convex combination of the rows of ``P``?  Solved as an LP feasibility problem."""
    m = P.shape[0]
    A_eq = np.vstack([P.T, np.ones((1, m))])
    b_eq = np.concatenate([x, [1.0]])
    # minimise the L1 residual with slack pairs so that near-misses are measurable
    k = A_eq.shape[0]
    A = np.hstack([A_eq, np.eye(k), -np.eye(k)])
    c = np.concatenate([np.zeros(m), np.ones(2 * k)])
    res = linprog(c, A_eq=A, b_eq=b_eq, bounds=[(0, None)] * (m + 2 * k), method="highs")
    return bool(res.status == 0 and res.fun <= tol)


def hull_contains_curve(curve: BezierCurve, n_samples: int, shrink: float = 1.0, tol: float = 1e-8) -> bool:
    """Sample the curve and check every sample lies in its control-point hull.

    ``shrink`` < 1 contracts the hull toward the control-point centroid; this
    exists so tests can confirm the check is able to fail.
    """
    if n_samples < 2:
        raise BezierError("n_samples must be >= 2")
    P = curve.control_points
    c = P.mean(axis=0)
    P = c + shrink * (P - c)
    X = evaluate(curve, np.linspace(0.0, 1.0, n_samples))
    if P.shape[1] == 1:
        lo, hi = P.min(), P.max()
        return bool(np.all(X >= lo - tol) & np.all(X <= hi + tol))
    eq = _hull_equations(P)
    if eq is not None:
        viol = X @ eq[:, :-1].T + eq[:, -1]
        ok = viol.max(axis=1) <= tol
        if ok.all():
            return True
        # borderline samples are settled by the exact convex-combination LP
        return all(in_hull_lp(P, x, tol) for x in X[~ok])
    return all(in_hull_lp(P, x, tol) for x in X)
