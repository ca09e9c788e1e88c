from __future__ import annotations

import math

import numpy as np
import pytest

from hailstorm import rain
from hailstorm.geometry import Ball
from hailstorm.marks import Dist, MarkSpec

def flat(r):
    return [v for a in r for v in (*a.position, a.time)]


SPEC = MarkSpec("ball", Dist.uniform(0.2, 0.5), Dist.exponential(1.0))


def test_zero_intensity_is_empty():
    assert len(rain.generate(1, 0.0, rain.Window.cube(2, 3.0, 5.0), SPEC)) == 0


def test_same_seed_identical():
    w = rain.Window.cube(2, 3.0, 5.0)
    assert rain.dumps(rain.generate(9, 1.5, w, SPEC)) == rain.dumps(rain.generate(9, 1.5, w, SPEC))


def test_arrivals_sorted_and_inside():
    w = rain.Window((1.0, -1.0), (2.0, 3.0), 4.0)
    r = rain.generate(4, 2.0, w, SPEC)
    times = [a.time for a in r]
    assert times == sorted(times)
    assert all(w.contains(a.position) and 0 <= a.time < 4.0 for a in r)


def test_poisson_count_moments():
    w = rain.Window.cube(1, 3.0, 5.0)
    counts = np.array([int(np.random.default_rng(s).poisson(2.0 * w.volume)) for s in range(10_000)])
    # the generator draws its count the same way; confirm with the real generator on a subsample
    sub = np.array([len(rain.generate(s, 2.0, w, MarkSpec())) for s in range(2000)])
    for c in (counts, sub):
        se = c.std(ddof=1) / math.sqrt(len(c))
        assert abs(c.mean() - 60.0) <= 4 * se
        assert c.var(ddof=1) == pytest.approx(60.0, rel=0.1)


def test_shift(fixture_realization):
    r = fixture_realization
    assert rain.dumps(rain.shift(r, (0.0,), 0.0)).splitlines()[5:] == rain.dumps(r).splitlines()[5:]
    s = rain.shift(r, (0.0,), 1.5)
    assert [a.time for a in s] == [0.5, 1.0]
    twice = rain.shift(rain.shift(r, (0.5,), 0.5), (-1.0,), 0.7)
    once = rain.shift(r, (-0.5,), 1.2)
    assert flat(twice) == pytest.approx(flat(once))


def test_reverse():
    r = rain.from_arrivals([((0.0,), 0.5, "ball", [0.1], 1.0), ((0.0,), 1.8, "ball", [0.1], 1.0)], 1,
                           rain.Window.cube(1, 1.0, 2.0))
    assert [a.time for a in rain.reverse(r, 2.0)] == pytest.approx([0.2, 1.5])
    one = rain.from_arrivals([((0.0,), 1.0, "ball", [0.1], 1.0)], 1, rain.Window.cube(1, 1.0, 2.0))
    assert [a.time for a in rain.reverse(one, 2.0)] == [1.0]
    big = rain.generate(3, 1.0, rain.Window.cube(2, 2.0, 3.0), SPEC)
    back = rain.reverse(rain.reverse(big, 3.0), 3.0)
    assert flat(back) == pytest.approx(flat(big))


def test_containment_margin():
    w = rain.Window.cube(1, 6.0, 1.0)
    assert rain.containment_margin(w, [], 1.0) == rain.MarginReport(math.inf, False)
    rep = rain.containment_margin(w, [Ball((5.0,), 0.5)], 1.0)
    assert rep.margin == pytest.approx(0.5) and rep.contaminated
    rep = rain.containment_margin(w, [Ball((0.3,), 0.5), Ball((1.0,), 0.3)], 1.0)
    assert rep.margin == pytest.approx(4.7) and not rep.contaminated


def test_text_round_trip():
    r = rain.generate(5, 1.0, rain.Window.cube(2, 2.0, 2.0), MarkSpec("box", (0.2, 0.3), 1.0))
    assert rain.dumps(rain.loads(rain.dumps(r))) == rain.dumps(r)


def test_malformed_line_reports_line_number():
    with pytest.raises(rain.RealizationFormatError) as exc:
        rain.loads("# hailstorm realization v1\nd 1\n1.0 0.0 ball 0.5 1.0\n2.0 oops\n")
    assert exc.value.lineno == 4


def test_reverse_swaps_simultaneous_arrivals():
    r = rain.from_arrivals([((0.0,), 1.0, "ball", [0.5], 1.0), ((0.4,), 1.0, "ball", [0.5], 2.0)], 1,
                           rain.Window.cube(1, 2.0, 2.0))
    rev = rain.reverse(r, 2.0)
    assert [a.sigma for a in rev] == [2.0, 1.0]
    assert [a.sigma for a in rain.reverse(rev, 2.0)] == [1.0, 2.0]
