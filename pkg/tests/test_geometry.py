from __future__ import annotations

import math

import numpy as np
import pytest

from hailstorm import geometry as g
from hailstorm.geometry import Ball, Box, Cone, FullSpace, HalfSpace, PointSet


def test_diameters():
    assert g.diameter(Ball((0.0,), 0.5)) == 1.0
    assert g.diameter(Box((0.0, 0.0), (1.0, 2.0))) == pytest.approx(2 * math.sqrt(5))


@pytest.mark.parametrize("bad", [lambda: Ball((0.0,), 0.0), lambda: Box((0.0, 0.0), (1.0, -1.0))])
def test_degenerate_shapes_rejected(bad):
    with pytest.raises(ValueError):
        bad()


def test_intersects_closed():
    a = Ball((0.3,), 0.5)
    assert g.intersects(a, Ball((1.0,), 0.3))
    assert g.intersects(a, Ball((1.0,), 0.2))  # touch at 0.8
    assert not g.intersects(Ball((0.0, 0.0), 1.0), Ball((3.0, 0.0), 1.0))


def test_contains_point():
    assert g.contains_point(Ball((0.3,), 0.5), (0.0,))
    assert Cone((0.0, 0.0), (1.0, 0.0), math.pi / 4).contains((1.0, 1.0))
    assert not PointSet([(0.0,)]).contains((0.1,))


def test_ray_intersection():
    assert tuple(g.ray_intersection(Ball((0.3,), 0.5), (0.0,), (1.0,))) == pytest.approx((0.0, 0.8))
    assert g.ray_intersection(Ball((5.0,), 0.5), (0.0,), (-1.0,)) is None
    assert tuple(g.ray_intersection(Ball((2.0, 0.0), 1.0), (0.0, 0.0), (1.0, 0.0))) == pytest.approx((1.0, 3.0))


def test_ray_intersection_box_matches_sampling():
    rng = np.random.default_rng(3)
    for _ in range(200):
        box = Box(tuple(rng.uniform(-2, 2, 2)), tuple(rng.uniform(0.1, 1.0, 2)))
        v = g.unit(rng.normal(size=2))
        iv = g.ray_intersection(box, (0.0, 0.0), v)
        rs = np.linspace(0, 6, 6001)
        inside = [r for r in rs if box.contains(tuple(r * np.asarray(v)))]
        if iv is None:
            assert not inside
        else:
            assert inside and inside[0] == pytest.approx(iv.lo, abs=2e-3) and inside[-1] == pytest.approx(iv.hi, abs=2e-3)


def test_support():
    assert g.support(Ball((0.3,), 0.5), (1.0,)) == pytest.approx(0.8)
    assert g.support(Ball((1.0, 1.0), 2.0), (1.0, 0.0)) == 3.0
    assert g.support(Box((0.0, 0.0), (1.0, 2.0)), (0.0, 1.0)) == 2.0
    with pytest.raises(ValueError):
        g.support(Ball((0.0,), 1.0), (2.0,))


def test_cone_right_angle_is_halfspace():
    rng = np.random.default_rng(0)
    cone = Cone((0.0, 0.0), (0.6, 0.8), math.pi / 2)
    hs = HalfSpace((0.6, 0.8), 0.0)
    for x in rng.uniform(-3, 3, size=(500, 2)):
        assert cone.contains(tuple(x)) == hs.contains(tuple(x))


@pytest.mark.parametrize("d", [2, 3])
def test_cone_box_predicate_matches_sampling(d):
    # a box that contains a sampled cone point must be reported as meeting the cone
    rng = np.random.default_rng(d)
    for _ in range(60):
        cone = Cone((0.0,) * d, g.unit(rng.normal(size=d)), float(rng.uniform(0.2, 1.4)))
        box = Box(tuple(rng.uniform(-2, 2, d)), tuple(rng.uniform(0.1, 0.8, d)))
        pts = np.asarray(box.center) + rng.uniform(-1, 1, size=(4000, d)) * np.asarray(box.half_widths)
        hit = any(cone.contains(tuple(p)) for p in pts)
        if hit:
            assert cone.intersects(box)
        if not cone.intersects(box):
            assert not hit


def test_cone_ball_distance():
    cone = Cone((0.0, 0.0), (1.0, 0.0), math.pi / 4)
    assert cone.distance_to_point((-1.0, 0.0)) == pytest.approx(1.0)
    assert cone.distance_to_point((0.0, 1.0)) == pytest.approx(math.sqrt(0.5))
    assert cone.intersects(Ball((0.0, 1.0), 0.71))
    assert not cone.intersects(Ball((0.0, 1.0), 0.70))


def test_full_space():
    assert FullSpace(2).contains((100.0, -3.0))
    assert FullSpace(2).intersects(Ball((9.0, 9.0), 0.1))
