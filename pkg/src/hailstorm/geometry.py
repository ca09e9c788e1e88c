"""Footprint shapes and ground sets in R^d with exact closed-set predicates.

Points are plain tuples of floats; the heap dynamics call these predicates
once per candidate pair, so they avoid numpy for small-vector arithmetic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence, Union

TOL = 1e-12
HALF_PI = 0.5 * math.pi

Point = tuple


def as_point(x) -> tuple:
    if isinstance(x, (int, float)):
        return (float(x),)
    return tuple(float(v) for v in x)


def _dot(a, b) -> float:
    return sum(x * y for x, y in zip(a, b))


def _norm(a) -> float:
    return math.sqrt(sum(x * x for x in a))


def unit(v) -> tuple:
    v = as_point(v)
    n = _norm(v)
    if n == 0.0:
        raise ValueError("zero vector has no direction")
    return tuple(x / n for x in v)


def _check_unit(v) -> None:
    if abs(_norm(v) - 1.0) > 1e-9:
        raise ValueError(f"direction {v!r} is not a unit vector")


class Interval(NamedTuple):
    """Closed interval [lo, hi]; an empty intersection is returned as ``None``."""

    lo: float
    hi: float


@dataclass(frozen=True)
class Ball:
    center: tuple
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", as_point(self.center))
        r = float(self.radius)
        if not r > 0.0 or not math.isfinite(r):
            raise ValueError(f"ball radius must be positive, got {self.radius!r}")
        object.__setattr__(self, "radius", r)

    kind = "ball"
    bounded = True

    @property
    def d(self) -> int:
        return len(self.center)

    @property
    def params(self) -> tuple:
        return (self.radius,)

    def diameter(self) -> float:
        return 2.0 * self.radius

    def inradius(self) -> float:
        return self.radius

    def translated(self, v) -> "Ball":
        return Ball(tuple(c + x for c, x in zip(self.center, v)), self.radius)

    def bbox(self) -> tuple[tuple, tuple]:
        r = self.radius
        return tuple(c - r for c in self.center), tuple(c + r for c in self.center)

    def contains(self, x) -> bool:
        return math.dist(self.center, x) <= self.radius + TOL

    def distance_to_point(self, x) -> float:
        return max(0.0, math.dist(self.center, x) - self.radius)

    def support(self, u) -> float:
        return _dot(self.center, u) + self.radius * _norm(u)

    def intersects(self, other) -> bool:
        if isinstance(other, Ball):
            return math.dist(self.center, other.center) <= self.radius + other.radius + TOL
        if isinstance(other, Box):
            return other.distance_to_point(self.center) <= self.radius + TOL
        return other.intersects(self)


@dataclass(frozen=True)
class Box:
    center: tuple
    half_widths: tuple

    def __post_init__(self):
        c = as_point(self.center)
        hw = as_point(self.half_widths)
        if len(hw) != len(c):
            raise ValueError("box center and half_widths differ in dimension")
        if not all(h > 0.0 and math.isfinite(h) for h in hw):
            raise ValueError(f"box half_widths must be positive, got {self.half_widths!r}")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "half_widths", hw)

    kind = "box"
    bounded = True

    @property
    def d(self) -> int:
        return len(self.center)

    @property
    def params(self) -> tuple:
        return self.half_widths

    def diameter(self) -> float:
        return 2.0 * _norm(self.half_widths)

    def inradius(self) -> float:
        return min(self.half_widths)

    def translated(self, v) -> "Box":
        return Box(tuple(c + x for c, x in zip(self.center, v)), self.half_widths)

    def bbox(self) -> tuple[tuple, tuple]:
        return (
            tuple(c - h for c, h in zip(self.center, self.half_widths)),
            tuple(c + h for c, h in zip(self.center, self.half_widths)),
        )

    def contains(self, x) -> bool:
        return all(abs(xi - c) <= h + TOL for xi, c, h in zip(x, self.center, self.half_widths))

    def distance_to_point(self, x) -> float:
        s = 0.0
        for xi, c, h in zip(x, self.center, self.half_widths):
            e = abs(xi - c) - h
            if e > 0.0:
                s += e * e
        return math.sqrt(s)

    def support(self, u) -> float:
        return _dot(self.center, u) + sum(h * abs(ui) for h, ui in zip(self.half_widths, u))

    def corners(self):
        d = self.d
        for mask in range(1 << d):
            yield tuple(
                c + (h if (mask >> k) & 1 else -h)
                for k, (c, h) in enumerate(zip(self.center, self.half_widths))
            )

    def intersects(self, other) -> bool:
        if isinstance(other, Box):
            return all(
                abs(a - b) <= ha + hb + TOL
                for a, b, ha, hb in zip(self.center, other.center, self.half_widths, other.half_widths)
            )
        if isinstance(other, Ball):
            return self.distance_to_point(other.center) <= other.radius + TOL
        return other.intersects(self)


Shape = Union[Ball, Box]


def diameter(s: Shape) -> float:
    return s.diameter()


def intersects(a, b) -> bool:
    """Closed-set contact test; tangency counts as contact."""
    return a.intersects(b)


def contains_point(s, x) -> bool:
    return s.contains(as_point(x))


def support(s: Shape, direction) -> float:
    """max over the shape of x . direction."""
    direction = as_point(direction)
    _check_unit(direction)
    return s.support(direction)


def ray_intersection(s: Shape, origin, direction) -> Interval | None:
    """The set {r >= 0 : origin + r*direction in s}, or None when empty."""
    o = as_point(origin)
    u = as_point(direction)
    _check_unit(u)
    if isinstance(s, Ball):
        p = [oi - ci for oi, ci in zip(o, s.center)]
        b = _dot(p, u)
        c = _dot(p, p) - s.radius * s.radius
        disc = b * b - c
        # disc = r^2 - perp^2; a line passing within TOL of the sphere still touches
        if disc < -(2.0 * s.radius + TOL) * TOL:
            return None
        sq = math.sqrt(max(disc, 0.0))
        t0, t1 = -b - sq, -b + sq
        if t1 < -TOL:
            return None
        return Interval(max(t0, 0.0), max(t1, 0.0))
    lo, hi = -math.inf, math.inf
    for oi, ui, c, h in zip(o, u, s.center, s.half_widths):
        if abs(ui) < 1e-15:
            if abs(oi - c) > h + TOL:
                return None
            continue
        a = (c - h - oi) / ui
        b = (c + h - oi) / ui
        if a > b:
            a, b = b, a
        lo = max(lo, a)
        hi = min(hi, b)
    lo = max(lo, 0.0)
    if hi < lo - TOL:
        return None
    return Interval(lo, max(hi, lo))


# ---------------------------------------------------------------- grounds


@dataclass(frozen=True)
class PointSet:
    points: tuple

    def __post_init__(self):
        pts = tuple(as_point(p) for p in self.points)
        if not pts:
            raise ValueError("PointSet ground needs at least one point")
        if len({len(p) for p in pts}) != 1:
            raise ValueError("PointSet points differ in dimension")
        object.__setattr__(self, "points", pts)

    kind = "points"
    bounded = True

    @property
    def d(self) -> int:
        return len(self.points[0])

    def contains(self, x) -> bool:
        return any(math.dist(p, x) <= TOL for p in self.points)

    def intersects(self, s) -> bool:
        return any(s.contains(p) for p in self.points)

    def extent(self) -> float:
        pts = self.points
        return max((math.dist(a, b) for a in pts for b in pts), default=0.0)


@dataclass(frozen=True)
class HalfSpace:
    """The closed half-space {x : x . normal >= offset}."""

    normal: tuple
    offset: float = 0.0

    def __post_init__(self):
        n = as_point(self.normal)
        _check_unit(n)
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "offset", float(self.offset))

    kind = "halfspace"
    bounded = False

    @property
    def d(self) -> int:
        return len(self.normal)

    def contains(self, x) -> bool:
        return _dot(x, self.normal) >= self.offset - TOL

    def intersects(self, s) -> bool:
        return s.support(self.normal) >= self.offset - TOL

    def distance_to_point(self, x) -> float:
        return max(0.0, self.offset - _dot(x, self.normal))


@dataclass(frozen=True)
class FullSpace:
    d: int = 1

    kind = "full"
    bounded = False

    def contains(self, x) -> bool:
        return True

    def intersects(self, s) -> bool:
        return True

    def distance_to_point(self, x) -> float:
        return 0.0


@dataclass(frozen=True)
class Cone:
    """Closed circular cone {x : angle(x - apex, axis) <= half_angle}.

    In d=1 every admissible half-angle gives the half-line on the axis side.
    """

    apex: tuple
    axis: tuple
    half_angle: float

    def __post_init__(self):
        apex = as_point(self.apex)
        axis = as_point(self.axis)
        _check_unit(axis)
        if len(apex) != len(axis):
            raise ValueError("cone apex and axis differ in dimension")
        a = float(self.half_angle)
        if not 0.0 < a <= HALF_PI + 1e-15:
            raise ValueError(f"cone half_angle must lie in (0, pi/2], got {self.half_angle!r}")
        object.__setattr__(self, "apex", apex)
        object.__setattr__(self, "axis", axis)
        object.__setattr__(self, "half_angle", min(a, HALF_PI))

    kind = "cone"
    bounded = False

    @property
    def d(self) -> int:
        return len(self.apex)

    @property
    def is_halfspace(self) -> bool:
        return self.d == 1 or self.half_angle >= HALF_PI - 1e-15

    def as_halfspace(self) -> HalfSpace:
        return HalfSpace(self.axis, _dot(self.apex, self.axis))

    def contains(self, x) -> bool:
        return self.distance_to_point(x) <= TOL

    def distance_to_point(self, x) -> float:
        if self.is_halfspace:
            return self.as_halfspace().distance_to_point(x)
        p = [xi - ai for xi, ai in zip(x, self.apex)]
        r = _norm(p)
        if r == 0.0:
            return 0.0
        h = _dot(p, self.axis)
        perp = math.sqrt(max(r * r - h * h, 0.0))
        beta = math.atan2(perp, h)
        if beta <= self.half_angle:
            return 0.0
        if beta >= self.half_angle + HALF_PI:
            return r
        return r * math.sin(beta - self.half_angle)

    def project(self, x) -> tuple:
        """Nearest point of the cone to x."""
        p = [xi - ai for xi, ai in zip(x, self.apex)]
        h = _dot(p, self.axis)
        if self.is_halfspace:
            if h >= 0.0:
                return tuple(x)
            return tuple(xi - h * ui for xi, ui in zip(x, self.axis))
        r = _norm(p)
        if r == 0.0:
            return tuple(x)
        perp_v = [pi - h * ui for pi, ui in zip(p, self.axis)]
        perp = _norm(perp_v)
        beta = math.atan2(perp, h)
        if beta <= self.half_angle:
            return tuple(x)
        if beta >= self.half_angle + HALF_PI:
            return self.apex
        if perp == 0.0:
            return self.apex
        # project onto the boundary generator in the plane of (axis, p)
        e = [v / perp for v in perp_v]
        g = [math.cos(self.half_angle) * ui + math.sin(self.half_angle) * ei for ui, ei in zip(self.axis, e)]
        t = max(0.0, _dot(p, g))
        return tuple(ai + t * gi for ai, gi in zip(self.apex, g))

    def intersects(self, s) -> bool:
        if self.is_halfspace:
            return self.as_halfspace().intersects(s)
        if isinstance(s, Ball):
            return self.distance_to_point(s.center) <= s.radius + TOL
        if s.d == 2:
            return _box_meets_wedge(s, self)
        return _box_meets_cone_numeric(s, self)

    def halfplane_normals(self) -> tuple[tuple, tuple]:
        """Inward normals of the two boundary rays of a planar wedge."""
        th = math.atan2(self.axis[1], self.axis[0])
        a = self.half_angle
        n_plus = (math.sin(th + a), -math.cos(th + a))
        n_minus = (-math.sin(th - a), math.cos(th - a))
        return n_plus, n_minus


def _clip(poly: list, n, c: float) -> list:
    """Sutherland-Hodgman clip of a polygon to {x : n.x >= c - TOL}."""
    out = []
    if not poly:
        return out
    k = len(poly)
    for i in range(k):
        p, q = poly[i], poly[(i + 1) % k]
        fp = n[0] * p[0] + n[1] * p[1] - c + TOL
        fq = n[0] * q[0] + n[1] * q[1] - c + TOL
        if fp >= 0.0:
            out.append(p)
        if (fp >= 0.0) != (fq >= 0.0):
            t = fp / (fp - fq)
            out.append((p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])))
    return out


def _box_meets_wedge(box: Box, cone: Cone) -> bool:
    (cx, cy), (hx, hy) = box.center, box.half_widths
    poly = [(cx - hx, cy - hy), (cx + hx, cy - hy), (cx + hx, cy + hy), (cx - hx, cy + hy)]
    for n in cone.halfplane_normals():
        poly = _clip(poly, n, n[0] * cone.apex[0] + n[1] * cone.apex[1])
        if not poly:
            return False
    return True


def _box_meets_cone_numeric(box: Box, cone: Cone) -> bool:
    # d >= 3 box/cone contact: minimize the (C^1, convex) squared distance to the
    # cone over the box; accepted at 1e-9, coarser than the exact predicates.
    if cone.contains(box.center) or box.contains(cone.apex):
        return True
    if any(cone.contains(c) for c in box.corners()):
        return True
    import numpy as np
    from scipy.optimize import minimize

    def f(x):
        p = cone.project(tuple(x))
        diff = np.asarray(x) - np.asarray(p)
        return float(diff @ diff), 2.0 * diff

    lo, hi = box.bbox()
    best = math.inf
    for start in [box.center, *box.corners()]:
        res = minimize(f, np.asarray(start), jac=True, method="L-BFGS-B", bounds=list(zip(lo, hi)),
                       options={"ftol": 1e-20, "gtol": 1e-14, "maxiter": 500})
        best = min(best, res.fun)
        if best <= 1e-18:
            break
    return math.sqrt(best) <= 1e-9


Ground = Union[PointSet, Ball, Box, Cone, HalfSpace, FullSpace]


def ground_extent(g) -> float:
    """Spatial extent (diameter) of a bounded ground; 0 for unbounded ones."""
    if isinstance(g, PointSet):
        return g.extent()
    if isinstance(g, (Ball, Box)):
        return g.diameter()
    return 0.0


def make_shape(kind: str, center, params: Sequence[float]) -> Shape:
    if kind == "ball":
        if len(params) != 1:
            raise ValueError("ball takes a single radius parameter")
        return Ball(center, params[0])
    if kind == "box":
        return Box(center, params)
    raise ValueError(f"unknown shape kind {kind!r}")
