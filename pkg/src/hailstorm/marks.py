"""Distributions of hailstone marks: footprint shape and height."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .geometry import Ball, Box, Shape

DIST_KINDS = ("constant", "uniform", "exponential", "truncexp")


@dataclass(frozen=True)
class Dist:
    """A positive scalar distribution from a light-tail-checkable family.

    ``truncexp`` is the exponential law conditioned on ``X <= cap``.
    """

    kind: str
    a: float = 0.0
    b: float = 0.0

    def __post_init__(self):
        if self.kind not in DIST_KINDS:
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        a, b = float(self.a), float(self.b)
        if self.kind == "constant" and not a > 0:
            raise ValueError("constant value must be positive")
        if self.kind == "uniform" and not 0 < a <= b:
            raise ValueError("uniform(a, b) needs 0 < a <= b")
        if self.kind in ("exponential", "truncexp") and not a > 0:
            raise ValueError("exponential rate must be positive")
        if self.kind == "truncexp" and not b > 0:
            raise ValueError("truncated exponential cap must be positive")

    @classmethod
    def constant(cls, value: float) -> "Dist":
        return cls("constant", value)

    @classmethod
    def uniform(cls, lo: float, hi: float) -> "Dist":
        return cls("uniform", lo, hi)

    @classmethod
    def exponential(cls, rate: float) -> "Dist":
        return cls("exponential", rate)

    @classmethod
    def truncexp(cls, rate: float, cap: float) -> "Dist":
        return cls("truncexp", rate, cap)

    @property
    def bounded(self) -> bool:
        return self.kind != "exponential"

    def sample(self, rng: np.random.Generator, size=None):
        k, a, b = self.kind, self.a, self.b
        if k == "constant":
            return np.full(size, a) if size is not None else a
        if k == "uniform":
            return rng.uniform(a, b, size)
        if k == "exponential":
            return rng.exponential(1.0 / a, size)
        u = rng.random(size)
        return -np.log1p(-u * -math.expm1(-a * b)) / a

    def mean(self) -> float:
        k, a, b = self.kind, self.a, self.b
        if k == "constant":
            return a
        if k == "uniform":
            return 0.5 * (a + b)
        if k == "exponential":
            return 1.0 / a
        z = -math.expm1(-a * b)
        return 1.0 / a - b * math.exp(-a * b) / z

    def var(self) -> float:
        k, a, b = self.kind, self.a, self.b
        if k == "constant":
            return 0.0
        if k == "uniform":
            return (b - a) ** 2 / 12.0
        if k == "exponential":
            return 1.0 / (a * a)
        z = -math.expm1(-a * b)
        m2 = (2.0 / a**2 - math.exp(-a * b) * (b * b + 2.0 * b / a + 2.0 / a**2)) / z
        return m2 - self.mean() ** 2

    def quantile(self, p: float) -> float:
        k, a, b = self.kind, self.a, self.b
        if k == "constant":
            return a
        if k == "uniform":
            return a + p * (b - a)
        if k == "exponential":
            return -math.log1p(-p) / a
        return -math.log1p(-p * -math.expm1(-a * b)) / a

    def minimum(self) -> float:
        return self.a if self.kind in ("constant", "uniform") else 0.0

    def to_dict(self) -> dict:
        if self.kind == "constant":
            return {"dist": "constant", "value": self.a}
        if self.kind == "uniform":
            return {"dist": "uniform", "a": self.a, "b": self.b}
        if self.kind == "exponential":
            return {"dist": "exponential", "rate": self.a}
        return {"dist": "truncexp", "rate": self.a, "cap": self.b}

    @classmethod
    def from_value(cls, v) -> "Dist":
        if isinstance(v, Dist):
            return v
        if isinstance(v, (int, float)):
            return cls.constant(v)
        kind = v["dist"]
        if kind == "constant":
            return cls.constant(v["value"])
        if kind == "uniform":
            return cls.uniform(v["a"], v["b"])
        if kind == "exponential":
            return cls.exponential(v["rate"])
        if kind == "truncexp":
            return cls.truncexp(v["rate"], v["cap"])
        raise ValueError(f"unknown distribution {kind!r}")


COUPLED = "diameter"


@dataclass(frozen=True)
class MarkSpec:
    """Joint law of a footprint and its height.

    ``size`` is the radius law for balls.  For boxes it is either a fixed
    tuple of half-widths or a ``Dist`` drawn independently per axis.
    ``height`` is a fixed value, a ``Dist``, or ``"diameter"`` (height equal
    to the footprint diameter).
    """

    family: str = "ball"
    size: Union[Dist, tuple, float] = 0.5
    height: Union[Dist, float, str] = 1.0

    def __post_init__(self):
        if self.family not in ("ball", "box"):
            raise ValueError(f"unknown shape family {self.family!r}")
        size = self.size
        if self.family == "box" and isinstance(size, (tuple, list)):
            size = tuple(float(h) for h in size)
            if not all(h > 0 for h in size):
                raise ValueError("box half-widths must be positive")
        else:
            size = Dist.from_value(size)
        object.__setattr__(self, "size", size)
        h = self.height
        if h != COUPLED:
            h = Dist.from_value(h)
        object.__setattr__(self, "height", h)

    @property
    def coupled(self) -> bool:
        return self.height == COUPLED

    def shape_params(self, d: int) -> int:
        return 1 if self.family == "ball" else d

    def diameter_quantile(self, p: float, d: int) -> float:
        if self.family == "ball":
            return 2.0 * self.size.quantile(p)
        if isinstance(self.size, tuple):
            return 2.0 * math.sqrt(sum(h * h for h in self.size))
        # conservative: every half-width below the p**(1/d) quantile
        return 2.0 * math.sqrt(d) * self.size.quantile(p ** (1.0 / d))

    def min_inradius(self) -> float:
        if self.family == "box" and isinstance(self.size, tuple):
            return min(self.size)
        return self.size.minimum()

    def to_dict(self) -> dict:
        out = {"family": self.family}
        out["size"] = list(self.size) if isinstance(self.size, tuple) else self.size.to_dict()
        out["height"] = COUPLED if self.coupled else self.height.to_dict()
        return out


@dataclass(frozen=True)
class Mark:
    shape: Shape
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("mark height must be positive")


@dataclass
class LightTailReport:
    ok: bool
    violations: list = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.ok


def validate_light_tail(spec: MarkSpec, d: int) -> LightTailReport:
    """Check E exp(c diam^d) and E exp(c height) are finite for some c > 0.

    Decided per family from the analytic tails: bounded laws always pass,
    an exponential size passes only when d == 1, an exponential height passes.
    """
    violations = []
    size = spec.size
    if isinstance(size, Dist) and size.kind == "exponential" and d > 1:
        violations.append(
            f"E exp(c * diam^{d}) is infinite for every c > 0: "
            f"{'radius' if spec.family == 'ball' else 'half-width'} is exponential in d={d}"
        )
    return LightTailReport(not violations, violations)


class LightTailViolation(ValueError):
    pass


def check_spec(spec: MarkSpec, d: int) -> None:
    report = validate_light_tail(spec, d)
    if not report.ok:
        raise LightTailViolation("; ".join(report.violations))


def sample_marks(rng: np.random.Generator, spec: MarkSpec, n: int, d: int):
    """Draw n marks; returns (params array of shape (n, k), sigma array)."""
    if spec.family == "ball":
        params = np.asarray(spec.size.sample(rng, n), dtype=float).reshape(n, 1)
        diam = 2.0 * params[:, 0]
    else:
        if isinstance(spec.size, tuple):
            if len(spec.size) != d:
                raise ValueError(f"box half-widths have dimension {len(spec.size)}, expected {d}")
            params = np.tile(np.asarray(spec.size, dtype=float), (n, 1))
        else:
            params = np.asarray(spec.size.sample(rng, (n, d)), dtype=float).reshape(n, d)
        # same arithmetic as Box.diameter so coupled heights match exactly
        diam = np.array([2.0 * math.sqrt(sum(h * h for h in row)) for row in params.tolist()])
    if spec.coupled:
        sigma = diam
    else:
        sigma = np.asarray(spec.height.sample(rng, n), dtype=float).reshape(n)
    return params, sigma


def mark_from_params(family: str, params, sigma: float, d: int) -> Mark:
    origin = (0.0,) * d
    if family == "ball":
        return Mark(Ball(origin, float(params[0])), float(sigma))
    return Mark(Box(origin, tuple(float(p) for p in params)), float(sigma))


def sample_mark(rng: np.random.Generator, spec: MarkSpec, d: int) -> Mark:
    params, sigma = sample_marks(rng, spec, 1, d)
    return mark_from_params(spec.family, params[0], sigma[0], d)
