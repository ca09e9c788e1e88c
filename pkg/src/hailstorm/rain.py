"""Space-time Poisson rain in a finite window, and realization transforms."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .geometry import Ball, Box, Shape, as_point, make_shape
from .marks import Mark, MarkSpec, check_spec, sample_marks


@dataclass(frozen=True)
class Window:
    """Spatial box (center, half_widths) times the time interval [0, horizon)."""

    center: tuple
    half_widths: tuple
    horizon: float

    def __post_init__(self):
        c, hw = as_point(self.center), as_point(self.half_widths)
        if len(c) != len(hw):
            raise ValueError("window center and half_widths differ in dimension")
        if not all(h > 0 for h in hw):
            raise ValueError("window half_widths must be positive")
        if not self.horizon > 0:
            raise ValueError("window horizon must be positive")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "half_widths", hw)
        object.__setattr__(self, "horizon", float(self.horizon))

    @classmethod
    def cube(cls, d: int, half_width: float, horizon: float) -> "Window":
        return cls((0.0,) * d, (float(half_width),) * d, horizon)

    @property
    def d(self) -> int:
        return len(self.center)

    @property
    def volume(self) -> float:
        """Space-time volume of the window."""
        return math.prod(2.0 * h for h in self.half_widths) * self.horizon

    def scaled(self, factor: float) -> "Window":
        return Window(self.center, tuple(factor * h for h in self.half_widths), self.horizon)

    def contains(self, x) -> bool:
        return all(abs(xi - c) <= h for xi, c, h in zip(x, self.center, self.half_widths))


@dataclass(frozen=True)
class Arrival:
    position: tuple
    time: float
    mark: Mark
    footprint: Shape = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "footprint", self.mark.shape.translated(self.position))

    @property
    def sigma(self) -> float:
        return self.mark.sigma


def _sort_key(a: Arrival):
    return (a.time, a.position)


@dataclass(frozen=True)
class Realization:
    """A finite time-sorted list of arrivals with the window it was drawn in."""

    arrivals: tuple
    window: Window
    intensity: float
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "arrivals", tuple(self.arrivals))

    @property
    def d(self) -> int:
        return self.window.d

    def __len__(self) -> int:
        return len(self.arrivals)

    def __iter__(self):
        return iter(self.arrivals)

    def until(self, t: float) -> "Realization":
        """Arrivals strictly before time t."""
        return Realization(tuple(a for a in self.arrivals if a.time < t), self.window, self.intensity, self.seed)

    def with_arrivals(self, arrivals: Iterable[Arrival]) -> "Realization":
        return Realization(tuple(sorted(arrivals, key=_sort_key)), self.window, self.intensity, self.seed)


def generate(seed, intensity: float, window: Window, spec: MarkSpec) -> Realization:
    """Draw the marked Poisson rain of the given intensity inside the window."""
    if intensity < 0:
        raise ValueError("intensity must be non-negative")
    d = window.d
    check_spec(spec, d)
    rng = np.random.default_rng(seed)
    n = int(rng.poisson(intensity * window.volume)) if intensity > 0 else 0
    if n == 0:
        return Realization((), window, intensity, seed)
    hw = np.asarray(window.half_widths)
    pos = np.asarray(window.center) + rng.uniform(-hw, hw, size=(n, d))
    times = rng.uniform(0.0, window.horizon, size=n)
    params, sigma = sample_marks(rng, spec, n, d)
    order = np.lexsort(tuple(pos[:, k] for k in reversed(range(d))) + (times,))
    family = spec.family
    origin = (0.0,) * d
    arrivals = []
    pos_l, t_l, par_l, sig_l = pos[order].tolist(), times[order].tolist(), params[order].tolist(), sigma[order].tolist()
    for x, t, p, s in zip(pos_l, t_l, par_l, sig_l):
        shape = Ball(origin, p[0]) if family == "ball" else Box(origin, tuple(p))
        arrivals.append(Arrival(tuple(x), t, Mark(shape, s)))
    return Realization(tuple(arrivals), window, intensity, seed)


def shift(r: Realization, x0, t0: float) -> Realization:
    """Re-center space-time at (x0, t0); arrivals that land before time 0 are dropped."""
    x0 = as_point(x0)
    arrivals = [
        Arrival(tuple(xi - oi for xi, oi in zip(a.position, x0)), a.time - t0, a.mark)
        for a in r.arrivals
        if a.time - t0 >= 0.0
    ]
    w = r.window
    horizon = w.horizon - t0
    window = Window(tuple(c - o for c, o in zip(w.center, x0)), w.half_widths, horizon if horizon > 0 else 1e-300)
    return Realization(tuple(sorted(arrivals, key=_sort_key)), window, r.intensity, r.seed)


def reverse(r: Realization, t: float) -> Realization:
    """Reflect time on [0, t]: an arrival at time s moves to t - s.

    The arrival order is reversed outright rather than re-sorted, so arrivals
    sharing a time also swap order and reversing twice is the identity.
    """
    if t > r.window.horizon:
        raise ValueError("reversal time exceeds the realization horizon")
    arrivals = [Arrival(a.position, t - a.time, a.mark) for a in reversed(r.arrivals) if 0.0 <= a.time <= t]
    w = r.window
    return Realization(tuple(arrivals), Window(w.center, w.half_widths, t), r.intensity, r.seed)


@dataclass(frozen=True)
class MarginReport:
    margin: float
    contaminated: bool


def containment_margin(window: Window | Realization, footprints: Iterable[Shape], r_cut: float) -> MarginReport:
    """Smallest distance from a footprint to the spatial window boundary."""
    if isinstance(window, Realization):
        window = window.window
    lo_w = [c - h for c, h in zip(window.center, window.half_widths)]
    hi_w = [c + h for c, h in zip(window.center, window.half_widths)]
    margin = math.inf
    for fp in footprints:
        lo, hi = fp.bbox()
        for k in range(len(lo_w)):
            margin = min(margin, lo[k] - lo_w[k], hi_w[k] - hi[k])
    return MarginReport(margin, margin < r_cut)


def default_r_cut(spec: MarkSpec, d: int, ground_extent: float = 0.0) -> float:
    return spec.diameter_quantile(0.9999, d) + ground_extent


# ------------------------------------------------------------ text format

HEADER = "# hailstorm realization v1"


class RealizationFormatError(ValueError):
    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


def dumps(r: Realization) -> str:
    w = r.window
    lines = [
        HEADER,
        f"d {r.d}",
        f"intensity {r.intensity!r}",
        "window " + " ".join(repr(v) for v in (*w.center, *w.half_widths, w.horizon)),
        f"seed {r.seed if r.seed is not None else 'none'}",
    ]
    for a in r.arrivals:
        fp = a.mark.shape
        fields = [repr(a.time), *(repr(x) for x in a.position), fp.kind, *(repr(p) for p in fp.params), repr(a.sigma)]
        lines.append(" ".join(fields))
    return "\n".join(lines) + "\n"


def loads(text: str) -> Realization:
    d = None
    intensity = 0.0
    window = None
    seed = None
    arrivals = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tok = line.split()
        try:
            if tok[0] == "d":
                d = int(tok[1])
            elif tok[0] == "intensity":
                intensity = float(tok[1])
            elif tok[0] == "window":
                if d is None:
                    raise RealizationFormatError(lineno, "window given before d")
                vals = [float(v) for v in tok[1:]]
                if len(vals) != 2 * d + 1:
                    raise RealizationFormatError(lineno, f"window needs {2 * d + 1} numbers")
                window = Window(vals[:d], vals[d : 2 * d], vals[-1])
            elif tok[0] == "seed":
                seed = None if tok[1] == "none" else int(tok[1])
            else:
                if d is None:
                    raise RealizationFormatError(lineno, "arrival line before header")
                t = float(tok[0])
                x = tuple(float(v) for v in tok[1 : 1 + d])
                kind = tok[1 + d]
                nparams = 1 if kind == "ball" else d
                params = [float(v) for v in tok[2 + d : 2 + d + nparams]]
                rest = tok[2 + d + nparams :]
                if len(x) != d or len(params) != nparams or len(rest) != 1:
                    raise RealizationFormatError(lineno, "wrong number of fields in arrival line")
                shape = make_shape(kind, (0.0,) * d, params)
                arrivals.append(Arrival(x, t, Mark(shape, float(rest[0]))))
        except RealizationFormatError:
            raise
        except (ValueError, IndexError) as exc:
            raise RealizationFormatError(lineno, str(exc) or "malformed line") from None
    if d is None:
        raise RealizationFormatError(0, "missing 'd' header")
    if window is None:
        window = Window.cube(d, 1.0, max([a.time for a in arrivals], default=0.0) + 1.0)
    return Realization(tuple(sorted(arrivals, key=_sort_key)), window, intensity, seed)


def from_arrivals(arrivals: Sequence[tuple], d: int, window: Window | None = None, intensity: float = 0.0) -> Realization:
    """Build a realization from (position, time, shape_kind, params, sigma) tuples."""
    out = []
    for pos, t, kind, params, sigma in arrivals:
        out.append(Arrival(as_point(pos), float(t), Mark(make_shape(kind, (0.0,) * d, params), float(sigma))))
    if window is None:
        window = Window.cube(d, 10.0, max([a.time for a in out], default=0.0) + 1.0)
    return Realization(tuple(sorted(out, key=_sort_key)), window, intensity)
