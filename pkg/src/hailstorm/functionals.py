"""Shape observables of a heap: directional heights, gauges, diameter, cover time.

Every observable is a functional ``f(state, t) -> float`` so estimators can
evaluate a list of them at checkpoint times. String keys such as
``"ray:w=1;0,phi=0.7"`` build the same objects from config files.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .geometry import HALF_PI, TOL, Ball, Box, Cone, as_point, ray_intersection, unit
from .heap import HeapState

Functional = Callable[[HeapState, float], float]


def _is_vertical(angle: float) -> bool:
    return angle >= HALF_PI - 1e-15


# ------------------------------------------------------------ direction sets


@dataclass(frozen=True)
class NorthPole:
    def __call__(self, state: HeapState, t: float = 0.0) -> float:
        return max_height(state, self)

    @property
    def key(self) -> str:
        return "north_pole"

    def probes(self, d: int, t: float) -> list:
        return [(0.0,) * d]


@dataclass(frozen=True)
class RayDirection:
    """Single space-height direction: unit spatial w tilted up by angle phi."""

    w: tuple
    phi: float

    def __post_init__(self):
        object.__setattr__(self, "w", unit(self.w))
        if not 0.0 < self.phi <= HALF_PI + 1e-15:
            raise ValueError("phi must lie in (0, pi/2]")

    def __call__(self, state: HeapState, t: float = 0.0) -> float:
        return max_height(state, self)

    @property
    def key(self) -> str:
        return f"ray:w={_vec(self.w)},phi={self.phi!r}"


@dataclass(frozen=True)
class VerticalCap:
    """All directions within angle alpha of the vertical."""

    alpha: float

    def __post_init__(self):
        if not 0.0 < self.alpha <= HALF_PI + 1e-15:
            raise ValueError("alpha must lie in (0, pi/2]")

    def __call__(self, state: HeapState, t: float = 0.0) -> float:
        return max_height(state, self)

    @property
    def key(self) -> str:
        return f"cap:alpha={self.alpha!r}"


@dataclass(frozen=True)
class SpatialCone:
    """Directions whose spatial part lies in a closed convex cone with apex 0."""

    cone: Cone

    def __post_init__(self):
        if any(a != 0.0 for a in self.cone.apex):
            raise ValueError("direction cones must have their apex at the origin")

    def __call__(self, state: HeapState, t: float = 0.0) -> float:
        return max_height(state, self)

    @property
    def key(self) -> str:
        return f"cone:axis={_vec(self.cone.axis)},angle={self.cone.half_angle!r}"


ThetaSpec = NorthPole | RayDirection | VerticalCap | SpatialCone


def max_height(state: HeapState, theta) -> float:
    """Largest h >= 0 reached by the heap along the direction set theta."""
    tops, fps = state.tops, state.footprints
    if isinstance(theta, NorthPole) or (isinstance(theta, RayDirection) and _is_vertical(theta.phi)):
        return max(0.0, state.height((0.0,) * state.d))
    best = 0.0
    if isinstance(theta, SpatialCone):
        cone = theta.cone
        for top, fp in zip(tops, fps):
            if top > best and cone.intersects(fp):
                best = top
        return best
    if isinstance(theta, VerticalCap):
        if _is_vertical(theta.alpha):
            return max(0.0, max(tops, default=0.0))
        slope = math.tan(theta.alpha)
        origin = (0.0,) * state.d
        for top, fp in zip(tops, fps):
            if top > best and fp.distance_to_point(origin) <= top * slope + TOL:
                best = top
        return best
    if isinstance(theta, RayDirection):
        slope = math.tan(theta.phi)
        origin = (0.0,) * state.d
        for top, fp in zip(tops, fps):
            iv = ray_intersection(fp, origin, theta.w)
            if iv is None or iv.lo * slope > top + TOL:
                continue
            h = min(iv.hi * slope, top)
            if h > best:
                best = h
        return best
    raise TypeError(f"unsupported direction set {theta!r}")


# ------------------------------------------------------------ set-gauges


@dataclass(frozen=True)
class PointGauge:
    v: tuple

    def __post_init__(self):
        object.__setattr__(self, "v", unit(self.v))

    def __call__(self, state: HeapState, t: float = 0.0) -> float:
        return gauge_distance(state, self)

    @property
    def key(self) -> str:
        return f"gauge:point:v={_vec(self.v)}"


@dataclass(frozen=True)
class RayGauge:
    v: tuple

    def __post_init__(self):
        object.__setattr__(self, "v", unit(self.v))

    def __call__(self, state: HeapState, t: float = 0.0) -> float:
        return gauge_distance(state, self)

    @property
    def key(self) -> str:
        return f"gauge:ray:v={_vec(self.v)}"


class GaugeAxiomError(ValueError):
    pass


@dataclass(frozen=True)
class HalfSpaceGauge:
    """A = {x . w >= 0} pushed along v; needs v . w > 0."""

    w: tuple
    v: tuple | None = None

    def __post_init__(self):
        w = unit(self.w)
        v = w if self.v is None else unit(self.v)
        if sum(a * b for a, b in zip(v, w)) <= 0.0:
            raise GaugeAxiomError("half-space gauge needs v . w > 0")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "v", v)

    def __call__(self, state: HeapState, t: float = 0.0) -> float:
        return gauge_distance(state, self)

    @property
    def key(self) -> str:
        if self.v == self.w:
            return f"gauge:halfspace:w={_vec(self.w)}"
        return f"gauge:halfspace:w={_vec(self.w)},v={_vec(self.v)}"


GaugeSpec = PointGauge | RayGauge | HalfSpaceGauge


def gauge_distance(state: HeapState, g) -> float:
    """inf{r >= 0 : (A + r v) misses the union of placed footprints}."""
    fps = state.footprints
    origin = (0.0,) * state.d
    if isinstance(g, PointGauge):
        ivs = sorted(iv for iv in (ray_intersection(fp, origin, g.v) for fp in fps) if iv is not None)
        reach = 0.0
        if not ivs or ivs[0].lo > TOL:
            return 0.0
        for lo, hi in ivs:
            if lo > reach + TOL:
                break
            reach = max(reach, hi)
        return reach
    if isinstance(g, RayGauge):
        best = 0.0
        for fp in fps:
            iv = ray_intersection(fp, origin, g.v)
            if iv is not None and iv.hi > best:
                best = iv.hi
        return best
    if isinstance(g, HalfSpaceGauge):
        vw = sum(a * b for a, b in zip(g.v, g.w))
        far = max((fp.support(g.w) for fp in fps), default=0.0)
        return max(0.0, far) / vw
    raise TypeError(f"unsupported gauge {g!r}")


# ------------------------------------------------------------ other observables


@dataclass(frozen=True)
class Diameter:
    def __call__(self, state: HeapState, t: float = 0.0) -> float:
        return footprint_diameter(state)

    key = "diameter"


@dataclass(frozen=True)
class HeightAt:
    """max(0, H(x)) at a fixed spatial point."""

    x: tuple

    def __post_init__(self):
        object.__setattr__(self, "x", as_point(self.x))

    def __call__(self, state: HeapState, t: float = 0.0) -> float:
        return max(0.0, state.height(self.x))

    @property
    def key(self) -> str:
        return f"height:x={_vec(self.x)}"

    def probes(self, d: int, t: float) -> list:
        return [self.x]


@dataclass(frozen=True)
class SpaceTimeRay:
    """max(0, H(x, t)) at x = t cot(phi) w: the heap seen from a point moving
    outward at speed cot(phi), so phi = pi/2 is the origin's height."""

    w: tuple
    phi: float

    def __post_init__(self):
        object.__setattr__(self, "w", unit(self.w))
        if not 0.0 < self.phi <= HALF_PI + 1e-15:
            raise ValueError("phi must lie in (0, pi/2]")

    def position(self, t: float) -> tuple:
        if _is_vertical(self.phi):
            return (0.0,) * len(self.w)
        s = t / math.tan(self.phi)
        return tuple(s * wi for wi in self.w)

    def __call__(self, state: HeapState, t: float) -> float:
        return max(0.0, state.height(self.position(t)))

    @property
    def key(self) -> str:
        return f"spacetime:w={_vec(self.w)},phi={self.phi!r}"

    def probes(self, d: int, t: float) -> list:
        return [self.position(t)]


def footprint_diameter(state: HeapState) -> float:
    """Exact diameter of the union of placed footprints."""
    fps = state.footprints
    if not fps:
        return 0.0
    if state.d == 1:
        lo = min(fp.bbox()[0][0] for fp in fps)
        hi = max(fp.bbox()[1][0] for fp in fps)
        return hi - lo
    balls = [fp for fp in fps if isinstance(fp, Ball)]
    boxes = [fp for fp in fps if isinstance(fp, Box)]
    best = 0.0
    if balls:
        c = np.array([b.center for b in balls])
        r = np.array([b.radius for b in balls])
        for i in range(0, len(balls), 512):
            dist = np.sqrt(((c[i : i + 512, None, :] - c[None, :, :]) ** 2).sum(-1))
            best = max(best, float((dist + r[i : i + 512, None] + r[None, :]).max()))
    if boxes:
        c = np.array([b.center for b in boxes])
        h = np.array([b.half_widths for b in boxes])
        for i in range(0, len(boxes), 512):
            span = np.abs(c[i : i + 512, None, :] - c[None, :, :]) + h[i : i + 512, None, :] + h[None, :, :]
            best = max(best, float(np.sqrt((span**2).sum(-1)).max()))
    if balls and boxes:
        # farthest point of a box from a ball center is a corner
        cb = np.array([b.center for b in balls])
        rb = np.array([b.radius for b in balls])
        cx = np.array([b.center for b in boxes])
        hx = np.array([b.half_widths for b in boxes])
        for i in range(0, len(balls), 512):
            span = np.abs(cb[i : i + 512, None, :] - cx[None, :, :]) + hx[None, :, :]
            best = max(best, float((np.sqrt((span**2).sum(-1)) + rb[i : i + 512, None]).max()))
    return best


def _region_points(K, eps: float) -> list:
    lo, hi = K.bbox()
    axes = [np.arange(a, b + eps * 0.5, eps) for a, b in zip(lo, hi)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(lo))
    return [tuple(p) for p in grid.tolist() if K.contains(p)]


def cover_time(state: HeapState, K, eps: float | None = None) -> float:
    """First time every point of K lies in a placed footprint; inf if never.

    K is a finite point collection or a Ball/Box region; a region is replaced
    by the points of an eps-lattice inside it (default eps: a quarter of the
    smallest placed inradius).
    """
    if isinstance(K, (Ball, Box)):
        if eps is None:
            if not state.footprints:
                return math.inf
            eps = min(fp.inradius() for fp in state.footprints) / 4.0
        points = _region_points(K, eps)
    else:
        points = [as_point(p) for p in K]
    worst = 0.0
    tops_time = [s.time for s in state.placed]
    fps = state.footprints
    for x in points:
        first = math.inf
        for j in state.grid.at_point(x):
            if tops_time[j] < first and fps[j].contains(x):
                first = tops_time[j]
        if first == math.inf:
            return math.inf
        worst = max(worst, first)
    return worst


# ------------------------------------------------------------ string keys


def _vec(v) -> str:
    return ";".join(repr(float(x)) for x in v)


def _parse_args(body: str) -> dict:
    out = {}
    if not body:
        return out
    for part in body.split(","):
        if "=" not in part:
            raise ValueError(f"expected key=value, got {part!r}")
        k, v = part.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _pvec(s: str) -> tuple:
    return tuple(float(x) for x in s.split(";"))


def parse_functional(key: str):
    """Build a functional from its config key."""
    head, _, body = key.partition(":")
    if head == "north_pole":
        return NorthPole()
    if head == "diameter":
        return Diameter()
    if head == "gauge":
        kind, _, body = body.partition(":")
        args = _parse_args(body)
        if kind == "point":
            return PointGauge(_pvec(args["v"]))
        if kind == "ray":
            return RayGauge(_pvec(args["v"]))
        if kind == "halfspace":
            return HalfSpaceGauge(_pvec(args["w"]), _pvec(args["v"]) if "v" in args else None)
        raise ValueError(f"unknown gauge kind {kind!r}")
    args = _parse_args(body)
    if head == "ray":
        return RayDirection(_pvec(args["w"]), float(args["phi"]))
    if head == "spacetime":
        return SpaceTimeRay(_pvec(args["w"]), float(args["phi"]))
    if head == "cap":
        return VerticalCap(float(args["alpha"]))
    if head == "cone":
        axis = unit(_pvec(args["axis"]))
        return SpatialCone(Cone((0.0,) * len(axis), axis, float(args["angle"])))
    if head == "height":
        return HeightAt(_pvec(args["x"]))
    raise ValueError(f"unknown functional key {key!r}")


def functional_key(f) -> str:
    return getattr(f, "key", None) or getattr(f, "__name__", repr(f))


def probe_points(functionals: Sequence, d: int, t: float) -> list | None:
    """Points whose heights determine every functional, or None when some
    functional depends on the whole heap."""
    pts = []
    for f in functionals:
        probes = getattr(f, "probes", None)
        if probes is None:
            return None
        pts.extend(probes(d, t))
    return pts
