from __future__ import annotations

import math

import pytest

from hailstorm import heap, rain
from hailstorm.geometry import Cone, FullSpace, PointSet
from hailstorm.verify import random_instance


def test_initial_heights():
    s = heap.new(PointSet([(0.0,)]))
    assert s.height((0.0,)) == 0.0 and s.height((1.0,)) == -math.inf
    assert heap.new(FullSpace(2)).height((3.0, 4.0)) == 0.0
    c = heap.new(Cone((0.0, 0.0), (1.0, 0.0), math.pi / 4))
    assert c.height((1.0, 1.0)) == 0.0 and c.height((-1.0, 0.0)) == -math.inf


def test_fixture_steps(fixture_realization, origin1):
    s = heap.new(origin1)
    a1, a2, a3 = fixture_realization.arrivals
    e1, e2, e3 = s.step(a1), s.step(a2), s.step(a3)
    assert e1.placed and s.stone(1).top == 2.0
    assert e2.placed and s.stone(2).top == 3.0 and s.stone(2).parents == (1,)
    assert not e3.placed and len(s) == 2


def test_fixture_heights(fixture_realization, origin1):
    s = heap.run(fixture_realization, origin1)
    assert s.height((0.0,)) == 2.0
    assert s.height((0.75,)) == 3.0
    assert s.height((4.0,)) == -math.inf
    assert s.ancestry(2) == {1} and s.ancestry(1) == set()
    with pytest.raises(KeyError):
        s.ancestry(3)


def test_fixture_dump(fixture_realization, origin1):
    text = heap.dumps(heap.run(fixture_realization, origin1))
    lines = [ln for ln in text.splitlines() if not ln.startswith("# ") or ln.startswith("# discarded")]
    assert lines == ["1 1.0 2.0 ball 0.3 0.5", "2 2.0 3.0 ball 1.0 0.3 1", "# discarded 3 2.5"]
    assert text == heap.dumps(heap.brute_force_run(fixture_realization, origin1))
    recs = heap.loads_dump(text)
    assert [r["top"] for r in recs] == [2.0, 3.0] and recs[1]["parents"] == (1,)


def test_chain_ancestry(origin1):
    r = rain.from_arrivals([((0.0,), 1.0, "ball", [0.5], 1.0), ((0.8,), 2.0, "ball", [0.5], 1.0),
                            ((1.6,), 3.0, "ball", [0.5], 1.0)], 1)
    s = heap.run(r, origin1)
    assert s.ancestry(3) == {1, 2}
    assert [st.top for st in s.placed] == [1.0, 2.0, 3.0]


def test_empty_realization(origin1):
    r = rain.from_arrivals([], 1)
    assert len(heap.run(r, origin1)) == 0 and len(heap.brute_force_run(r, origin1)) == 0


def test_full_space_places_everything():
    inst = random_instance(12, d=2, ground=FullSpace(2))
    s = heap.run(inst.realization, inst.ground)
    assert len(s) == len(inst.realization)


def test_out_of_order_rejected(fixture_realization, origin1):
    s = heap.new(origin1)
    s.step(fixture_realization.arrivals[1])
    with pytest.raises(heap.OutOfOrderArrival):
        s.step(fixture_realization.arrivals[0])


def test_footprint_monotone_in_time():
    inst = random_instance(21, d=2, ground=PointSet([(0.0, 0.0)]))
    s = heap.new_for(inst.realization, inst.ground)
    seen = 0
    for a in inst.realization.arrivals:
        s.step(a)
        assert len(s) >= seen
        seen = len(s)


@pytest.mark.parametrize("d", [1, 2, 3])
@pytest.mark.parametrize("family", ["ball", "box"])
def test_oracle_equivalence_sample(d, family):
    for seed in range(15):
        inst = random_instance(seed, d=d, family=family)
        a = heap.dumps(heap.run(inst.realization, inst.ground))
        b = heap.dumps(heap.brute_force_run(inst.realization, inst.ground))
        assert a == b
