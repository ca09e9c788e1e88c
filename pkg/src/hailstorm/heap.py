"""Event-driven heap dynamics on a partial substrate.

An arriving stone is placed when its footprint touches the ground or an
earlier placed stone; its top is then its height plus the largest surface
height found under the footprint. Otherwise it is discarded. Every point of
a footprint receives the same top, so the height field is a max over the
covering stones and no raster is needed.
"""
from __future__ import annotations

import itertools
import math
import statistics
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, NamedTuple

from .geometry import TOL, Ground, Shape, as_point, make_shape
from .rain import Arrival, Realization

NEG_INF = -math.inf


class OutOfOrderArrival(ValueError):
    pass


@dataclass(frozen=True)
class PlacedStone:
    id: int
    arrival: Arrival
    top: float
    parents: tuple
    grounded: bool

    @property
    def footprint(self) -> Shape:
        return self.arrival.footprint

    @property
    def time(self) -> float:
        return self.arrival.time


class Event(NamedTuple):
    time: float
    placed: bool
    arrival: int
    stone: int | None


class SpatialGrid:
    """Uniform grid keyed by footprint bounding boxes."""

    def __init__(self, d: int, cell: float):
        if not cell > 0:
            raise ValueError("grid cell size must be positive")
        self.d = d
        self.cell = float(cell)
        self.cells: dict = defaultdict(list)

    def _keys(self, lo, hi):
        h = self.cell
        ranges = [range(math.floor((a - TOL) / h), math.floor((b + TOL) / h) + 1) for a, b in zip(lo, hi)]
        if self.d == 1:
            return ranges[0]
        return itertools.product(*ranges)

    def key(self, x):
        h = self.cell
        if self.d == 1:
            return math.floor(x[0] / h)
        return tuple(math.floor(v / h) for v in x)

    def insert(self, idx: int, lo, hi) -> None:
        cells = self.cells
        for k in self._keys(lo, hi):
            cells[k].append(idx)

    def candidates(self, lo, hi) -> set:
        out = set()
        cells = self.cells
        for k in self._keys(lo, hi):
            got = cells.get(k)
            if got:
                out.update(got)
        return out

    def at_point(self, x) -> list:
        return self.cells.get(self.key(x), ())


class HeapState:
    """Placed stones, their spatial index and the full event log."""

    def __init__(self, ground: Ground, window=None, cell_size: float | None = None, d: int | None = None):
        self.ground = ground
        self.window = window
        if d is None:
            d = window.d if window is not None else ground.d
        self.d = d
        self.placed: list[PlacedStone] = []
        self.tops: list[float] = []
        self.footprints: list[Shape] = []
        self.grid = SpatialGrid(d, cell_size or 1.0)
        self.clock = 0.0
        self.events: list[Event] = []
        self.n_arrivals = 0

    # -- dynamics

    def step(self, a: Arrival) -> Event:
        if a.time < self.clock:
            raise OutOfOrderArrival(f"arrival at t={a.time} precedes clock {self.clock}")
        self.clock = a.time
        self.n_arrivals += 1
        fp = a.footprint
        lo, hi = fp.bbox()
        best = NEG_INF
        grounded = self.ground.intersects(fp)
        if grounded:
            best = 0.0
        parents = []
        tops, fps = self.tops, self.footprints
        for j in self.grid.candidates(lo, hi):
            if fp.intersects(fps[j]):
                parents.append(j + 1)
                if tops[j] > best:
                    best = tops[j]
        if best == NEG_INF:
            ev = Event(a.time, False, self.n_arrivals, None)
        else:
            ev = Event(a.time, True, self.n_arrivals, self._place(a, best + a.mark.sigma, sorted(parents), grounded))
        self.events.append(ev)
        return ev

    def _place(self, a: Arrival, top: float, parents, grounded: bool) -> int:
        sid = len(self.placed) + 1
        self.placed.append(PlacedStone(sid, a, top, tuple(parents), grounded))
        self.tops.append(top)
        self.footprints.append(a.footprint)
        lo, hi = a.footprint.bbox()
        self.grid.insert(sid - 1, lo, hi)
        return sid

    def advance(self, arrivals: Iterable[Arrival], until: float = math.inf) -> None:
        for a in arrivals:
            if a.time >= until:
                break
            self.step(a)

    # -- queries

    def height(self, x) -> float:
        x = as_point(x)
        best = 0.0 if self.ground.contains(x) else NEG_INF
        tops, fps = self.tops, self.footprints
        for j in self.grid.at_point(x):
            if tops[j] > best and fps[j].contains(x):
                best = tops[j]
        return best

    def covering(self, x) -> list[int]:
        """Ids of placed stones whose footprint contains x."""
        x = as_point(x)
        fps = self.footprints
        return sorted(j + 1 for j in self.grid.at_point(x) if fps[j].contains(x))

    def stone(self, sid: int) -> PlacedStone:
        if not 1 <= sid <= len(self.placed):
            raise KeyError(f"no placed stone with id {sid}")
        return self.placed[sid - 1]

    def ancestry(self, sid: int) -> set[int]:
        """Transitive closure of the parent relation, excluding the stone itself."""
        seen: set[int] = set()
        stack = list(self.stone(sid).parents)
        while stack:
            p = stack.pop()
            if p not in seen:
                seen.add(p)
                stack.extend(self.placed[p - 1].parents)
        return seen

    def max_top(self) -> float:
        return max(self.tops, default=NEG_INF)

    def __len__(self) -> int:
        return len(self.placed)


def _median_diameter(r: Realization) -> float:
    if not r.arrivals:
        return 1.0
    return statistics.median(a.footprint.diameter() for a in r.arrivals[:4096])


def new(ground: Ground, window=None, cell_size: float | None = None) -> HeapState:
    return HeapState(ground, window, cell_size)


def new_for(r: Realization, ground: Ground) -> HeapState:
    return HeapState(ground, r.window, _median_diameter(r), d=r.d)


def run(r: Realization, ground: Ground, until: float = math.inf) -> HeapState:
    state = new_for(r, ground)
    state.advance(r.arrivals, until)
    return state


def brute_force_run(r: Realization, ground: Ground, until: float = math.inf) -> HeapState:
    """All-pairs reference engine with no spatial index."""
    placed: list[tuple[Arrival, float, tuple, bool]] = []
    events = []
    last = -math.inf
    for i, a in enumerate(r.arrivals, start=1):
        if a.time >= until:
            break
        if a.time < last:
            raise OutOfOrderArrival(f"arrival at t={a.time} precedes {last}")
        last = a.time
        grounded = ground.intersects(a.footprint)
        m = 0.0 if grounded else NEG_INF
        parents = []
        for j, (b, top, _, _) in enumerate(placed, start=1):
            if a.footprint.intersects(b.footprint):
                parents.append(j)
                m = max(m, top)
        if m > NEG_INF:
            placed.append((a, m + a.mark.sigma, tuple(parents), grounded))
            events.append(Event(a.time, True, i, len(placed)))
        else:
            events.append(Event(a.time, False, i, None))
    state = new_for(r, ground)
    for a, top, parents, grounded in placed:
        state._place(a, top, parents, grounded)
    state.events = events
    state.n_arrivals = len(events)
    state.clock = last if events else 0.0
    return state


# ------------------------------------------------------------ text dump

DUMP_HEADER = "# hailstorm heap v1"


def describe_ground(g) -> str:
    kind = g.kind
    if kind == "points":
        return "points " + " ; ".join(" ".join(repr(v) for v in p) for p in g.points)
    if kind == "ball":
        return "ball " + " ".join(repr(v) for v in (*g.center, g.radius))
    if kind == "box":
        return "box " + " ".join(repr(v) for v in (*g.center, *g.half_widths))
    if kind == "cone":
        return "cone " + " ".join(repr(v) for v in (*g.apex, *g.axis, g.half_angle))
    if kind == "halfspace":
        return "halfspace " + " ".join(repr(v) for v in (*g.normal, g.offset))
    return "full"


def dumps(state: HeapState) -> str:
    lines = [DUMP_HEADER, f"# d {state.d}", f"# ground {describe_ground(state.ground)}"]
    placed_iter = iter(state.placed)
    for ev in state.events:
        if ev.placed:
            s = next(placed_iter)
            fp = s.footprint
            fields = [str(s.id), repr(s.time), repr(s.top), fp.kind, *(repr(c) for c in fp.center),
                      *(repr(p) for p in fp.params), *(str(p) for p in s.parents)]
            lines.append(" ".join(fields))
        else:
            lines.append(f"# discarded {ev.arrival} {ev.time!r}")
    return "\n".join(lines) + "\n"


def loads_dump(text: str) -> list[dict]:
    """Parse a heap dump into a list of stone records."""
    d = None
    out = []
    for raw in text.splitlines():
        line = raw.strip()
        if line.startswith("# d "):
            d = int(line.split()[2])
            continue
        if not line or line.startswith("#"):
            continue
        tok = line.split()
        kind = tok[3]
        npar = 1 if kind == "ball" else d
        center = tuple(float(v) for v in tok[4 : 4 + d])
        params = [float(v) for v in tok[4 + d : 4 + d + npar]]
        out.append({
            "id": int(tok[0]),
            "time": float(tok[1]),
            "top": float(tok[2]),
            "footprint": make_shape(kind, center, params),
            "parents": tuple(int(p) for p in tok[4 + d + npar :]),
        })
    return out
