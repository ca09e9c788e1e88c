"""Monte Carlo estimation of linear growth rates over independent replicates.

Each replicate draws its own rain from a seed derived from the base seed and
the replicate index, runs the heap through the checkpoint times and evaluates
every functional at every checkpoint. Results are reduced in replicate order,
so the estimates do not depend on how many worker processes were used.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import heap, rain
from .functionals import SpaceTimeRay, RayDirection, functional_key, parse_functional, probe_points
from .geometry import HALF_PI, PointSet, ground_extent
from .marks import MarkSpec

log = logging.getLogger(__name__)

CENSORING = ("rerun", "exclude", "keep")
METHODS = ("increment", "origin")


class AllContaminated(RuntimeError):
    """Every replicate was flagged and excluded by the censoring rule."""


def replicate_seed(base: int, index: int) -> int:
    """64-bit seed for replicate ``index``: SeedSequence hash of (base, index)."""
    ss = np.random.SeedSequence([int(base) & 0xFFFFFFFFFFFFFFFF, int(index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class WindowPolicy:
    """Simulation window and contamination handling.

    half_width None picks ground extent + 10 diameter quantiles + horizon.
    r_cut None uses the 0.9999 diameter quantile, plus the ground extent for
    bounded grounds.
    """

    half_width: float | None = None
    r_cut: float | None = None
    censoring: str = "rerun"

    def __post_init__(self):
        if self.censoring not in CENSORING:
            raise ValueError(f"censoring must be one of {CENSORING}")


@dataclass(frozen=True)
class ExperimentPlan:
    d: int
    intensity: float
    marks: MarkSpec
    ground: object
    functionals: tuple
    checkpoints: tuple
    replicates: int = 100
    seed: int = 0
    window: WindowPolicy = field(default_factory=WindowPolicy)
    method: str = "increment"

    def __post_init__(self):
        fs = self.functionals
        if isinstance(fs, str) or callable(fs):
            fs = (fs,)
        fs = tuple(parse_functional(f) if isinstance(f, str) else f for f in fs)
        if not fs:
            raise ValueError("plan needs at least one functional")
        object.__setattr__(self, "functionals", fs)
        cps = tuple(float(t) for t in self.checkpoints)
        if not cps or cps[0] <= 0 or any(b <= a for a, b in zip(cps, cps[1:])):
            raise ValueError("checkpoints must be positive and strictly increasing")
        object.__setattr__(self, "checkpoints", cps)
        if self.replicates < 2:
            raise ValueError("plan needs at least 2 replicates")
        if self.intensity < 0:
            raise ValueError("intensity must be non-negative")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")

    @property
    def horizon(self) -> float:
        return self.checkpoints[-1]

    @property
    def keys(self) -> list[str]:
        return [functional_key(f) for f in self.functionals]

    def half_width(self) -> float:
        if self.window.half_width is not None:
            return float(self.window.half_width)
        return ground_extent(self.ground) + 10.0 * self.marks.diameter_quantile(0.9999, self.d) + self.horizon

    def r_cut(self) -> float:
        if self.window.r_cut is not None:
            return float(self.window.r_cut)
        q = self.marks.diameter_quantile(0.9999, self.d)
        return q + ground_extent(self.ground) if _bounded(self.ground) else q

    def sim_window(self, scale: float = 1.0) -> rain.Window:
        return rain.Window.cube(self.d, scale * self.half_width(), self.horizon)


def _bounded(ground) -> bool:
    return getattr(ground, "bounded", True)


@dataclass
class ReplicateResult:
    index: int
    seed: int
    values: np.ndarray  # (n_functionals, n_checkpoints)
    flagged: bool  # contaminated on the first attempt
    contaminated: bool  # still contaminated after the censoring rule
    margin: float


@dataclass
class RateEstimate:
    functional: str
    slope: float
    stderr: float
    means: tuple
    checkpoints: tuple
    n_replicates: int
    contamination_rate: float
    n_excluded: int = 0
    method: str = "increment"
    raw_slope: float = 0.0
    sup_mean: float = 0.0
    sup_mean_stderr: float = 0.0

    def positive(self, k: float = 3.0) -> bool:
        se = 0.0 if math.isnan(self.stderr) else self.stderr
        return bool(self.slope > k * se)

    def to_dict(self) -> dict:
        out = dict(self.__dict__)
        out["means"] = list(self.means)
        out["checkpoints"] = list(self.checkpoints)
        return out


@dataclass
class PlanResult:
    plan: ExperimentPlan
    estimates: list
    replicates: list
    used: np.ndarray  # boolean mask over replicates

    @property
    def values(self) -> np.ndarray:
        return np.stack([r.values for r in self.replicates])


def _contamination(plan: ExperimentPlan, state: heap.HeapState, window: rain.Window) -> rain.MarginReport:
    r_cut = plan.r_cut()
    if _bounded(plan.ground):
        return rain.containment_margin(window, state.footprints, r_cut)
    pts = probe_points(plan.functionals, plan.d, plan.horizon)
    if pts is None:
        return rain.containment_margin(window, state.footprints, r_cut)
    # only stones feeding the probed heights can carry boundary effects inward
    ids: set[int] = set()
    for x in pts:
        for sid in state.covering(x):
            ids.add(sid)
            ids |= state.ancestry(sid)
    return rain.containment_margin(window, [state.footprints[i - 1] for i in ids], r_cut)


def simulate_replicate(plan: ExperimentPlan, seed: int, scale: float = 1.0):
    """One replicate: values array (functionals x checkpoints) and margin report."""
    window = plan.sim_window(scale)
    r = rain.generate(seed, plan.intensity, window, plan.marks)
    state = heap.new_for(r, plan.ground)
    values = np.empty((len(plan.functionals), len(plan.checkpoints)))
    arrivals = r.arrivals
    pos = 0
    for k, t in enumerate(plan.checkpoints):
        while pos < len(arrivals) and arrivals[pos].time < t:
            state.step(arrivals[pos])
            pos += 1
        for j, f in enumerate(plan.functionals):
            values[j, k] = f(state, t)
    return values, _contamination(plan, state, window), state


def _replicate(args) -> ReplicateResult:
    plan, index = args
    seed = replicate_seed(plan.seed, index)
    values, report, _ = simulate_replicate(plan, seed)
    flagged = report.contaminated
    margin = report.margin
    if flagged and plan.window.censoring == "rerun":
        values, report, _ = simulate_replicate(plan, seed, scale=2.0)
        margin = report.margin
    contaminated = report.contaminated and plan.window.censoring != "keep"
    return ReplicateResult(index, seed, values, flagged, contaminated, margin)


def run_replicates(plan: ExperimentPlan, jobs: int = 1) -> list[ReplicateResult]:
    tasks = [(plan, i) for i in range(plan.replicates)]
    if jobs <= 1 or any(not hasattr(f, "key") for f in plan.functionals):
        return [_replicate(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        results = list(ex.map(_replicate, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    return sorted(results, key=lambda r: r.index)


def _slopes(values: np.ndarray, cps: np.ndarray, method: str) -> np.ndarray:
    """Per-replicate slope estimates from a (R, K) value array."""
    if method == "increment" and len(cps) > 1:
        return (values[:, -1] - values[:, 0]) / (cps[-1] - cps[0])
    return values @ cps / float(cps @ cps)


def _stderr(x: np.ndarray) -> float:
    n = len(x)
    return float(np.std(x, ddof=1) / math.sqrt(n)) if n > 1 else math.nan


def summarize(key: str, values: np.ndarray, cps: Sequence[float], method: str = "increment",
              contamination_rate: float = 0.0, n_excluded: int = 0) -> RateEstimate:
    """Reduce a (R, K) array of functional values to a rate estimate.

    The reported slope is clipped at 0: the limit constants are non-negative
    and clipping can only move the estimate towards them.
    """
    cps_a = np.asarray(cps, dtype=float)
    per = _slopes(values, cps_a, method)
    raw = float(per.mean())
    means = values.mean(axis=0)
    ratios = means / cps_a
    k = int(np.argmax(ratios))
    return RateEstimate(
        functional=key,
        slope=max(0.0, raw),
        stderr=_stderr(per),
        means=tuple(float(m) for m in means),
        checkpoints=tuple(float(t) for t in cps_a),
        n_replicates=len(values),
        contamination_rate=contamination_rate,
        n_excluded=n_excluded,
        method=method,
        raw_slope=raw,
        sup_mean=float(ratios[k]),
        sup_mean_stderr=_stderr(values[:, k]) / float(cps_a[k]),
    )


def run(plan: ExperimentPlan, jobs: int = 1) -> PlanResult:
    results = run_replicates(plan, jobs)
    used = np.array([not r.contaminated for r in results])
    flagged = sum(r.flagged for r in results)
    n_excl = int((~used).sum())
    if n_excl:
        log.info("%d of %d replicates excluded as contaminated", n_excl, len(results))
    if not used.any():
        raise AllContaminated(f"all {len(results)} replicates contaminated")
    vals = np.stack([r.values for r in results])[used]
    rate_c = flagged / len(results)
    estimates = [
        summarize(key, vals[:, j, :], plan.checkpoints, plan.method, rate_c, n_excl)
        for j, key in enumerate(plan.keys)
    ]
    return PlanResult(plan, estimates, results, used)


def rate(plan: ExperimentPlan, jobs: int = 1) -> RateEstimate:
    """Rate estimate of the plan's first functional."""
    return run(plan, jobs).estimates[0]


def sup_mean_rate(plan: ExperimentPlan, jobs: int = 1) -> float:
    """max over checkpoints of mean value / t."""
    return rate(plan, jobs).sup_mean


def direction_functional(w, phi: float, mode: str = "spacetime"):
    if mode == "spacetime":
        return SpaceTimeRay(w, phi)
    if mode == "height":
        return RayDirection(w, phi)
    raise ValueError(f"unknown directional mode {mode!r}")


def directional_rate(plan: ExperimentPlan, w, phi: float, mode: str = "spacetime", jobs: int = 1) -> RateEstimate:
    """Growth rate along the space-time direction sin(phi) e_h + cos(phi) w.

    mode "spacetime" follows the point x = t cot(phi) w as time runs, which
    is where the rate along the direction is realised. mode "height" instead
    reads the heap's current height profile along the tilted ray.
    """
    return rate(replace(plan, functionals=(direction_functional(w, phi, mode),)), jobs)


@dataclass
class PhaseBracket:
    phi_lo: float
    phi_hi: float
    cells: list  # (phi, slope, stderr, positive)
    monotone: bool
    found: bool
    diagnostic: str = ""

    @property
    def interior(self) -> bool:
        return 0.0 < self.phi_lo < self.phi_hi < HALF_PI


def phase_angle(plan: ExperimentPlan, w, phis: Sequence[float], k: float = 3.0,
                mode: str = "spacetime", jobs: int = 1) -> PhaseBracket:
    """Bracket the angle where the directional rate turns statistically positive.

    All angles are evaluated on the same replicates. A cell is positive when
    slope > k * stderr and zero otherwise.
    """
    phis = sorted(float(p) for p in phis)
    fs = tuple(direction_functional(w, p, mode) for p in phis)
    res = run(replace(plan, functionals=fs), jobs)
    cells = [(p, e.slope, e.stderr, e.positive(k)) for p, e in zip(phis, res.estimates)]
    pos = [c[3] for c in cells]
    first = next((i for i, p in enumerate(pos) if p), None)
    monotone = first is None or all(pos[first:])
    if first is None:
        return PhaseBracket(phis[-1], HALF_PI, cells, monotone, False, "no statistically positive cell")
    hi = phis[first]
    if first == 0:
        return PhaseBracket(0.0, hi, cells, monotone, False, "smallest angle already positive")
    diag = "" if monotone else "positive cell followed by a zero cell"
    return PhaseBracket(phis[first - 1], hi, cells, monotone, True, diag)


# ------------------------------------------------------------ hit probability


@dataclass
class HitReport:
    estimate: float
    stderr: float
    bound: float
    replicates: int
    passed: bool


def ball_volume(d: int, r: float) -> float:
    return math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0) * r**d


def _hit_one(args) -> bool:
    seed, intensity, window, spec, ground, gauge, threshold = args
    realization = rain.generate(seed, intensity, window, spec)
    return gauge(heap.run(realization, ground)) > threshold


def hit_probability_check(d: int, intensity: float, r: float, horizon: float = 1.0, v=None,
                          replicates: int = 10_000, seed: int = 0, k: float = 4.0, jobs: int = 1) -> HitReport:
    """Compare P(D_point,v at the horizon > r/2) with 1 - exp(-lambda |B_{r/2}|).

    Rain outside a window of half-width 4r is not simulated. Dropping
    arrivals can only shrink the footprint, so the estimate errs low.
    """
    from .functionals import PointGauge

    v = v if v is not None else (1.0,) + (0.0,) * (d - 1)
    spec = MarkSpec("ball", r, 1.0)
    window = rain.Window.cube(d, 4.0 * r, horizon)
    ground = PointSet([(0.0,) * d])
    tasks = [(replicate_seed(seed, i), intensity, window, spec, ground, PointGauge(v), r / 2.0)
             for i in range(replicates)]
    if jobs <= 1:
        hits = sum(map(_hit_one, tasks))
    else:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            hits = sum(ex.map(_hit_one, tasks, chunksize=max(1, replicates // (4 * jobs))))
    p = hits / replicates
    se = math.sqrt(p * (1.0 - p) / replicates)
    bound = -math.expm1(-intensity * ball_volume(d, r / 2.0))
    return HitReport(p, se, bound, replicates, p >= bound - k * se)
