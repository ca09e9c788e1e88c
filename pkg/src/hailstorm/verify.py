"""Pathwise property checks over fixtures and seeded random instances.

Every check returns a ``PropertyResult``; a failing instance carries the seed
that regenerates it so it can be replayed with ``random_instance``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import heap, rain
from .functionals import (
    HalfSpaceGauge,
    PointGauge,
    RayGauge,
    SpatialCone,
    footprint_diameter,
    max_height,
)
from .geometry import Ball, Box, Cone, FullSpace, HalfSpace, PointSet, unit
from .marks import Dist, Mark, MarkSpec

EPS = 1e-9


@dataclass
class PropertyResult:
    name: str
    passed: bool
    checked: int
    violations: int = 0
    counterexample_seed: int | None = None
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        seed = "" if self.counterexample_seed is None else f" seed={self.counterexample_seed}"
        return f"{status} {self.name}: {self.checked} checked, {self.violations} violations{seed} {self.detail}".rstrip()


class _Tally:
    def __init__(self, name: str):
        self.name = name
        self.checked = 0
        self.violations = 0
        self.seed = None
        self.detail = ""

    def check(self, ok: bool, seed, detail: str = "") -> None:
        self.checked += 1
        if not ok:
            self.violations += 1
            if self.seed is None:
                self.seed, self.detail = seed, detail

    def result(self) -> PropertyResult:
        return PropertyResult(self.name, self.violations == 0, self.checked, self.violations, self.seed, self.detail)


# ------------------------------------------------------------ random instances


@dataclass(frozen=True)
class Instance:
    realization: rain.Realization
    ground: object
    spec: MarkSpec


def _expected_arrivals_window(d: int, lam: float, target: float, rng) -> rain.Window:
    horizon = float(rng.uniform(1.0, 3.0))
    side = (target / (lam * horizon)) ** (1.0 / d)
    return rain.Window.cube(d, 0.5 * side, horizon)


def random_ground(d: int, rng, kinds=("points", "ball", "box", "halfspace", "cone", "full")):
    kind = kinds[int(rng.integers(len(kinds)))]
    if kind == "points":
        pts = [(0.0,) * d] + [tuple(rng.uniform(-1, 1, d)) for _ in range(int(rng.integers(0, 3)))]
        return PointSet(pts)
    if kind == "ball":
        return Ball((0.0,) * d, float(rng.uniform(0.1, 0.8)))
    if kind == "box":
        return Box((0.0,) * d, tuple(rng.uniform(0.1, 0.8, d)))
    if kind == "halfspace":
        return HalfSpace(unit(rng.normal(size=d)), float(rng.uniform(-0.5, 0.5)))
    if kind == "cone":
        return Cone((0.0,) * d, unit(rng.normal(size=d)), float(rng.uniform(0.2, math.pi / 2)))
    return FullSpace(d)


def random_instance(seed: int, d: int | None = None, family: str | None = None, intensity: float | None = None,
                    ground=None, target: float = 100.0, coupled: bool = False) -> Instance:
    """Seeded random (realization, ground) pair with about ``target`` arrivals."""
    rng = np.random.default_rng(seed)
    d = d or int(rng.integers(1, 4))
    family = family or ("ball", "box")[int(rng.integers(2))]
    lam = intensity if intensity is not None else float((0.2, 1.0, 5.0)[int(rng.integers(3))])
    size = Dist.uniform(0.15, 0.6)
    height = "diameter" if coupled else Dist.uniform(0.5, 2.0)
    spec = MarkSpec(family, size, height)
    window = _expected_arrivals_window(d, lam, target, rng)
    g = ground if ground is not None else random_ground(d, rng)
    r = rain.generate(int(rng.integers(2**63)), lam, window, spec)
    return Instance(r, g, spec)


def _stone_log(state: heap.HeapState) -> list:
    return [(e.arrival, e.placed, e.stone, state.placed[e.stone - 1].top if e.placed else None,
             state.placed[e.stone - 1].parents if e.placed else None) for e in state.events]


# ------------------------------------------------------------ properties


def check_oracle(n: int = 1000, seed: int = 0, target: float = 80.0) -> PropertyResult:
    """Indexed engine and all-pairs engine agree stone by stone."""
    t = _Tally("oracle_equivalence")
    combos = [(d, f, lam) for d in (1, 2, 3) for f in ("ball", "box") for lam in (0.2, 1.0, 5.0)]
    for i in range(n):
        d, f, lam = combos[i % len(combos)]
        s = seed * 1_000_003 + i
        inst = random_instance(s, d, f, lam, target=target)
        a = heap.run(inst.realization, inst.ground)
        b = heap.brute_force_run(inst.realization, inst.ground)
        t.check(_stone_log(a) == _stone_log(b), s, f"d={d} {f} lambda={lam}")
    return t.result()


def _coupled_probe(ra: rain.Realization, rb: rain.Realization, ga, gb, xs, ks) -> bool:
    """Step both runs together; at each probed event compare heights (b >= a)."""
    sa, sb = heap.new_for(ra, ga), heap.new_for(rb, gb)
    by_k: dict[int, list] = {}
    for x, k in zip(xs, ks):
        by_k.setdefault(k, []).append(x)
    for k, (aa, ab) in enumerate(zip(ra.arrivals, rb.arrivals)):
        sa.step(aa)
        sb.step(ab)
        for x in by_k.get(k, ()):
            if sb.height(x) < sa.height(x) - EPS:
                return False
    return True


def _probe_points(inst: Instance, rng, m: int):
    w = inst.realization.window
    hw = np.asarray(w.half_widths)
    xs = [tuple(p) for p in (np.asarray(w.center) + rng.uniform(-hw, hw, size=(m, w.d))).tolist()]
    n = max(1, len(inst.realization.arrivals))
    ks = rng.integers(0, n, size=m).tolist()
    return xs, ks


def _larger_ground(g, d, rng):
    if isinstance(g, PointSet):
        return PointSet(g.points + (tuple(rng.uniform(-1, 1, d)),))
    if isinstance(g, Ball):
        return Ball(g.center, g.radius + float(rng.uniform(0.05, 0.5)))
    if isinstance(g, Box):
        return Box(g.center, tuple(h + float(rng.uniform(0.05, 0.5)) for h in g.half_widths))
    if isinstance(g, HalfSpace):
        return HalfSpace(g.normal, g.offset - float(rng.uniform(0.05, 0.5)))
    if isinstance(g, Cone):
        return Cone(g.apex, g.axis, min(math.pi / 2, g.half_angle + float(rng.uniform(0.05, 0.5))))
    return g


def _modify_one(r: rain.Realization, rng, what: str) -> rain.Realization:
    if not r.arrivals:
        return r
    arr = list(r.arrivals)
    i = int(rng.integers(len(arr)))
    a = arr[i]
    shape = a.mark.shape
    if what == "sigma":
        mark = Mark(shape, a.sigma + float(rng.uniform(0.1, 2.0)))
    else:
        grow = float(rng.uniform(0.05, 0.4))
        if isinstance(shape, Ball):
            shape = Ball(shape.center, shape.radius + grow)
        else:
            shape = Box(shape.center, tuple(h + grow for h in shape.half_widths))
        mark = Mark(shape, a.sigma)
    arr[i] = rain.Arrival(a.position, a.time, mark)
    return rain.Realization(tuple(arr), r.window, r.intensity, r.seed)


def check_monotonicity(pairs: int = 200, probes: int = 1000, seed: int = 0) -> list[PropertyResult]:
    """Coupled runs: larger ground, later time, raised sigma, enlarged footprint."""
    out = []
    for what in ("ground", "time", "sigma", "footprint"):
        t = _Tally(f"monotonicity_{what}")
        for i in range(pairs):
            s = seed * 1_000_003 + i
            rng = np.random.default_rng([s, 17])
            inst = random_instance(s)
            r, g, d = inst.realization, inst.ground, inst.realization.d
            xs, ks = _probe_points(inst, rng, probes)
            if what == "ground":
                ok = _coupled_probe(r, r, g, _larger_ground(g, d, rng), xs, ks)
            elif what == "time":
                # compare each probed event with the one right after it
                st = heap.new_for(r, g)
                before: dict = {}
                want: dict = {}
                ok = True
                for j, k in enumerate(ks):
                    want.setdefault(k, []).append(j)
                for k, a in enumerate(r.arrivals):
                    for j in want.get(k, ()):
                        before[j] = st.height(xs[j])
                    st.step(a)
                    for j in want.get(k, ()):
                        if st.height(xs[j]) < before[j] - EPS:
                            ok = False
            else:
                ok = _coupled_probe(r, _modify_one(r, rng, what), g, g, xs, ks)
            t.check(ok, s)
        out.append(t.result())
    return out


def superadditivity_holds(r: rain.Realization, x, y, t1: float, t2: float) -> bool:
    """H(x+y, t2) >= H(x, t1) + H'(y, t2 - t1) with ground {0} on both sides."""
    d = r.d
    origin = PointSet([(0.0,) * d])
    xy = tuple(a + b for a, b in zip(x, y))
    lhs = heap.run(r, origin, until=t2).height(xy)
    a = heap.run(r, origin, until=t1).height(x)
    sub = rain.shift(r, x, t1)
    b = heap.run(sub, origin, until=t2 - t1).height(y)
    rhs = a + b
    return rhs == -math.inf or lhs >= rhs - EPS


def check_superadditivity(n: int = 500, seed: int = 0) -> PropertyResult:
    t = _Tally("superadditivity")
    # hand-traced fixture first
    t.check(superadditivity_holds(fixture_a(), (0.0,), (1.0,), 1.5, 2.5), "fixture-A")
    for i in range(n):
        s = seed * 1_000_003 + i
        rng = np.random.default_rng([s, 29])
        d = int(rng.integers(1, 4))
        inst = random_instance(s, d=d, ground=PointSet([(0.0,) * d]), target=150.0)
        r = inst.realization
        T = r.window.horizon
        t1, t2 = sorted(rng.uniform(0, T, 2).tolist())
        # probe where the heap actually is, so the inequality is not vacuous
        st = heap.run(r, PointSet([(0.0,) * d]), until=t1)
        x = st.footprints[int(rng.integers(len(st)))].center if len(st) else (0.0,) * d
        y = tuple(rng.uniform(-0.5, 0.5, d))
        t.check(superadditivity_holds(r, x, y, t1, t2), s)
    return t.result()


def duality_gap(r: rain.Realization, cone: Cone, t: float) -> float:
    """|H^cone(0, t) - stick height over the cone directions on the reversed rain|."""
    d = r.d
    direct = max(0.0, heap.run(r, cone, until=t).height((0.0,) * d))
    rev = rain.reverse(r, t)
    dual = max_height(heap.run(rev, PointSet([(0.0,) * d])), SpatialCone(cone))
    return abs(direct - dual)


def check_duality(n: int = 500, seed: int = 0, tol: float = EPS) -> PropertyResult:
    t = _Tally("cone_duality")
    fix = rain.from_arrivals([((-0.3,), 1.0, "ball", [0.5], 1.0)], 1, rain.Window.cube(1, 5.0, 2.0))
    gap = duality_gap(fix, Cone((0.0,), (1.0,), math.pi / 2), 2.0)
    t.check(gap <= tol, "duality-fixture", f"gap={gap}")
    for i in range(n):
        s = seed * 1_000_003 + i
        rng = np.random.default_rng([s, 31])
        d = 1 + i % 2
        cone = Cone((0.0,) * d, unit(rng.normal(size=d)), float(rng.uniform(0.2, math.pi / 2)))
        inst = random_instance(s, d=d, ground=cone, target=150.0)
        r = inst.realization
        gap = duality_gap(r, cone, r.window.horizon)
        t.check(gap <= tol, s, f"gap={gap}")
    return t.result()


def check_coupling(n: int = 500, seed: int = 0) -> PropertyResult:
    """Heights equal to footprint diameters, ground {0}: 4 max H >= diam F."""
    t = _Tally("diameter_height_coupling")
    for i in range(n):
        s = seed * 1_000_003 + i
        rng = np.random.default_rng([s, 37])
        d = int(rng.integers(1, 4))
        inst = random_instance(s, d=d, ground=PointSet([(0.0,) * d]), coupled=True, target=150.0)
        st = heap.run(inst.realization, inst.ground)
        top = max(0.0, st.max_top())
        diam = footprint_diameter(st)
        t.check(4.0 * top >= diam - EPS, s, f"4*top={4 * top} diam={diam}")
    return t.result()


def check_gauges(n: int = 200, seed: int = 0) -> PropertyResult:
    """Point and ray gauges sit below the half-space gauge, which sits below diam F."""
    t = _Tally("gauge_domination")
    for i in range(n):
        s = seed * 1_000_003 + i
        rng = np.random.default_rng([s, 41])
        d = int(rng.integers(1, 4))
        inst = random_instance(s, d=d, ground=PointSet([(0.0,) * d]), target=150.0)
        st = heap.run(inst.realization, inst.ground)
        v = unit(rng.normal(size=d))
        hs = HalfSpaceGauge(v)(st)
        diam = footprint_diameter(st)
        ok = PointGauge(v)(st) <= hs + EPS and RayGauge(v)(st) <= hs + EPS and hs <= diam + EPS
        t.check(ok, s)
    return t.result()


def fixture_a() -> rain.Realization:
    return rain.from_arrivals(
        [((0.3,), 1.0, "ball", [0.5], 2.0), ((1.0,), 2.0, "ball", [0.3], 1.0), ((5.0,), 2.5, "ball", [0.5], 7.0)],
        1,
        rain.Window.cube(1, 10.0, 3.0),
    )


SUITES = {
    "oracle": lambda seed, scale: [check_oracle(max(1, int(1000 * scale)), seed)],
    "monotonicity": lambda seed, scale: check_monotonicity(max(1, int(200 * scale)), 1000, seed),
    "superadditivity": lambda seed, scale: [check_superadditivity(max(1, int(500 * scale)), seed)],
    "duality": lambda seed, scale: [check_duality(max(1, int(500 * scale)), seed)],
    "coupling": lambda seed, scale: [check_coupling(max(1, int(500 * scale)), seed)],
    "gauge": lambda seed, scale: [check_gauges(max(1, int(200 * scale)), seed)],
}


def run_suite(name: str = "all", seed: int = 0, scale: float = 1.0) -> list[PropertyResult]:
    """Run one named property suite, or all of them."""
    if name == "all":
        names = list(SUITES)
    elif name in SUITES:
        names = [name]
    else:
        raise KeyError(f"unknown suite {name!r}; choose from {['all', *SUITES]}")
    out = []
    for n in names:
        out.extend(SUITES[n](seed, scale))
    return out
