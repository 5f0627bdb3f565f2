"""Convex polygons, half-spaces and boxes.

A half-space stores ``normal`` and ``offset``; a point ``x`` is inside when
``offset - normal @ x >= 0``.  Polygons are closed sets and may be 1-D
intervals or 2-D convex polygons given counterclockwise.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

TOL = 1e-9


class GeometryError(ValueError):
    pass


def as_point(p, dim: int | None = None) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(p, dtype=float))
    if arr.ndim != 1:
        raise GeometryError(f"point must be a flat coordinate vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise GeometryError("point coordinates must be finite")
    if dim is not None and arr.shape[0] != dim:
        raise GeometryError(f"dimension mismatch: expected {dim}, got {arr.shape[0]}")
    return arr


@dataclass(frozen=True)
class HalfSpace:
    normal: np.ndarray
    offset: float

    def __post_init__(self):
        n = as_point(self.normal)
        if not np.any(n != 0.0):
            raise GeometryError("half-space normal must have a nonzero entry")
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "offset", float(self.offset))

    def slack(self, p) -> float:
        """``offset - normal . p``; non-negative inside."""
        return float(self.offset - self.normal @ np.asarray(p, dtype=float))


@dataclass(frozen=True)
class Box:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo, hi = as_point(self.lo), as_point(self.hi)
        if lo.shape != hi.shape or np.any(lo > hi):
            raise GeometryError("box requires lo <= hi componentwise")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return self.lo.shape[0]

    def contains(self, p, tol: float = TOL) -> bool:
        p = as_point(p, self.dim)
        return bool(np.all(p >= self.lo - tol) and np.all(p <= self.hi + tol))


@dataclass(frozen=True)
class ConvexPolygon:
    vertices: np.ndarray  # (nv, dim)
    faces: tuple[HalfSpace, ...] = field(default=())

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def H(self) -> np.ndarray:
        return np.array([f.normal for f in self.faces])

    @property
    def b(self) -> np.ndarray:
        return np.array([f.offset for f in self.faces])

    def centroid(self) -> np.ndarray:
        return self.vertices.mean(axis=0)

    def contains(self, p, tol: float = TOL) -> bool:
        return contains(self, p, tol)

    def bounding_box(self) -> Box:
        return bounding_box(self.vertices)

    def to_json(self) -> list:
        return [list(map(float, v)) for v in self.vertices]


def polygon_from_vertices(vertices: Sequence) -> ConvexPolygon:
    """Build a closed convex polygon (or interval in 1-D) from its vertices.

    2-D vertices must be in counterclockwise order with no three collinear.
    """
    V = np.asarray(vertices, dtype=float)
    if V.ndim == 1:
        V = V[:, None]
    if V.ndim != 2 or not np.all(np.isfinite(V)):
        raise GeometryError("vertices must be a finite (nv, dim) array")
    dim = V.shape[1]
    if dim == 1:
        if V.shape[0] != 2:
            raise GeometryError("a 1-D polygon is an interval with exactly 2 vertices")
        lo, hi = float(V.min()), float(V.max())
        if hi - lo <= TOL:
            raise GeometryError("degenerate interval (duplicate vertices)")
        faces = (HalfSpace([-1.0], -lo), HalfSpace([1.0], hi))
        return ConvexPolygon(np.array([[lo], [hi]]), faces)
    if dim != 2:
        raise GeometryError("only 1-D intervals and 2-D polygons are supported")
    nv = V.shape[0]
    if nv < 3:
        raise GeometryError("a 2-D polygon needs at least 3 vertices")
    scale = max(1.0, float(np.abs(V).max()))
    faces = []
    total_turn = 0.0
    for i in range(nv):
        a, b, c = V[i], V[(i + 1) % nv], V[(i + 2) % nv]
        e1, e2 = b - a, c - b
        if np.linalg.norm(e1) <= TOL * scale:
            raise GeometryError(f"duplicate vertices at index {i}")
        cross = e1[0] * e2[1] - e1[1] * e2[0]
        if abs(cross) <= TOL * scale * scale:
            raise GeometryError(f"collinear vertices around index {(i + 1) % nv}")
        if cross < 0:
            # all turns must be left turns for a counterclockwise convex polygon
            raise GeometryError("vertices must be convex and in counterclockwise order")
        total_turn += np.arctan2(cross, e1 @ e2)
        normal = np.array([e1[1], -e1[0]]) / np.linalg.norm(e1)
        faces.append(HalfSpace(normal, float(normal @ a)))
    if abs(total_turn - 2 * np.pi) > 1e-6:
        raise GeometryError("vertices wind more than once; polygon is not simple")
    poly = ConvexPolygon(V.copy(), tuple(faces))
    for v in V:
        if not contains(poly, v):
            raise GeometryError("non-convex vertex set")
    return poly


def box_polygon(lo, hi) -> ConvexPolygon:
    """Axis-aligned rectangle (2-D) or interval (1-D)."""
    lo, hi = as_point(lo), as_point(hi)
    if lo.shape[0] == 1:
        return polygon_from_vertices([[lo[0]], [hi[0]]])
    if lo.shape[0] != 2:
        raise GeometryError("box_polygon supports 1-D and 2-D only")
    return polygon_from_vertices([[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]])


def contains(poly: ConvexPolygon, p, tol: float = TOL) -> bool:
    p = as_point(p, poly.dim)
    return all(f.offset - f.normal @ p >= -tol for f in poly.faces)


def strictly_inside(poly: ConvexPolygon, p, tol: float = 1e-6) -> bool:
    p = as_point(p, poly.dim)
    return all(f.offset - f.normal @ p > tol for f in poly.faces)


def bounding_box(points) -> Box:
    P = np.asarray(points, dtype=float)
    if P.size == 0:
        raise GeometryError("bounding box of an empty point set")
    if P.ndim == 1:
        P = P[:, None]
    return Box(P.min(axis=0), P.max(axis=0))
