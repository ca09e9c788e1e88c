from __future__ import annotations

import numpy as np
import pytest

from hailstorm.marks import Dist, LightTailViolation, MarkSpec, check_spec, sample_mark, sample_marks, validate_light_tail


def test_light_tail_rule():
    assert validate_light_tail(MarkSpec("ball", Dist.exponential(2.0), 1.0), 1).ok
    report = validate_light_tail(MarkSpec("ball", Dist.exponential(2.0), 1.0), 2)
    assert not report.ok and "infinite" in report.violations[0]
    assert validate_light_tail(MarkSpec("ball", 0.5, Dist.exponential(1.0)), 3).ok
    with pytest.raises(LightTailViolation):
        check_spec(MarkSpec("box", Dist.exponential(1.0), 1.0), 2)


def test_fixed_and_coupled_marks():
    rng = np.random.default_rng(0)
    m = sample_mark(rng, MarkSpec("ball", 0.5, 2.0), 1)
    assert m.shape.radius == 0.5 and m.sigma == 2.0
    m = sample_mark(rng, MarkSpec("ball", 0.5, "diameter"), 1)
    assert m.sigma == 1.0
    params, sigma = sample_marks(rng, MarkSpec("box", Dist.uniform(0.1, 0.9), "diameter"), 50, 3)
    assert np.allclose(sigma, 2 * np.sqrt((params**2).sum(1)))


def test_uniform_radius_mean():
    rng = np.random.default_rng(1)
    params, _ = sample_marks(rng, MarkSpec("ball", Dist.uniform(0.2, 0.4), 1.0), 100_000, 2)
    r = params[:, 0]
    se = r.std(ddof=1) / np.sqrt(len(r))
    assert abs(r.mean() - 0.3) <= 3 * se


@pytest.mark.parametrize("dist", [Dist.uniform(0.5, 2.0), Dist.exponential(1.5), Dist.truncexp(1.0, 2.0)])
def test_moments_match_sampling(dist):
    x = np.asarray(dist.sample(np.random.default_rng(2), 200_000))
    assert x.mean() == pytest.approx(dist.mean(), abs=4 * x.std() / np.sqrt(len(x)))
    assert x.var() == pytest.approx(dist.var(), rel=0.03)
    assert np.mean(x <= dist.quantile(0.9)) == pytest.approx(0.9, abs=0.005)


def test_invalid_dists():
    with pytest.raises(ValueError):
        Dist.uniform(0.0, 1.0)
    with pytest.raises(ValueError):
        Dist("lognormal", 1.0)
