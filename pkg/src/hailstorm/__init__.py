"""Event-driven simulation and growth-rate estimation for heaps of random
stones falling on a substrate that is either sticky or transparent."""
from __future__ import annotations

__version__ = "0.1.0"

from .estimators import ExperimentPlan, RateEstimate, WindowPolicy, rate  # noqa: E402
from .geometry import Ball, Box, Cone, FullSpace, HalfSpace, PointSet  # noqa: E402
from .heap import HeapState, brute_force_run, run  # noqa: E402
from .marks import Dist, MarkSpec  # noqa: E402
from .rain import Realization, Window, generate  # noqa: E402

__all__ = [
    "Ball", "Box", "Cone", "Dist", "ExperimentPlan", "FullSpace", "HalfSpace", "HeapState", "MarkSpec",
    "PointSet", "RateEstimate", "Realization", "Window", "WindowPolicy", "brute_force_run", "generate",
    "rate", "run",
]
