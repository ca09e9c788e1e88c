"""JSON experiment configs: strict schema plus builders for library objects."""
from __future__ import annotations

import json
from pathlib import Path

import jsonschema

from .branching import BranchingSpec, Offspring
from .estimators import ExperimentPlan, WindowPolicy
from .geometry import Ball, Box, Cone, FullSpace, HalfSpace, PointSet
from .marks import Dist, MarkSpec

KINDS = ("simulate", "rate", "phase", "gauge", "cover", "branching", "verify")

_num = {"type": "number"}
_vec = {"type": "array", "items": _num, "minItems": 1}

_dist = {
    "oneOf": [
        {"type": "number", "exclusiveMinimum": 0},
        {"type": "object", "additionalProperties": False, "required": ["dist", "value"],
         "properties": {"dist": {"const": "constant"}, "value": _num}},
        {"type": "object", "additionalProperties": False, "required": ["dist", "a", "b"],
         "properties": {"dist": {"const": "uniform"}, "a": _num, "b": _num}},
        {"type": "object", "additionalProperties": False, "required": ["dist", "rate"],
         "properties": {"dist": {"const": "exponential"}, "rate": _num}},
        {"type": "object", "additionalProperties": False, "required": ["dist", "rate", "cap"],
         "properties": {"dist": {"const": "truncexp"}, "rate": _num, "cap": _num}},
    ]
}

_shape = {
    "type": "object",
    "additionalProperties": False,
    "required": ["type"],
    "properties": {
        "type": {"enum": ["points", "ball", "box", "cone", "halfspace", "full"]},
        "points": {"type": "array", "items": _vec, "minItems": 1},
        "center": _vec,
        "radius": _num,
        "half_widths": _vec,
        "apex": _vec,
        "axis": _vec,
        "half_angle": _num,
        "normal": _vec,
        "offset": _num,
    },
}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "kind": {"enum": list(KINDS)},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "jobs": {"type": "integer", "minimum": 1},
        "out": {"type": "string"},
        "d": {"type": "integer", "minimum": 1},
        "intensity": {"type": "number", "minimum": 0},
        "marks": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "family": {"enum": ["ball", "box"]},
                "size": {"oneOf": [_dist, _vec]},
                "height": {"oneOf": [_dist, {"const": "diameter"}]},
            },
        },
        "ground": _shape,
        "functionals": {"type": "array", "items": {"type": "string"}, "minItems": 1},
        "checkpoints": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1},
        "replicates": {"type": "integer", "minimum": 2},
        "window": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "half_width": {"type": "number", "exclusiveMinimum": 0},
                "r_cut": {"type": "number", "minimum": 0},
                "censoring": {"enum": ["rerun", "exclude", "keep"]},
            },
        },
        "method": {"enum": ["increment", "origin"]},
        "direction": _vec,
        "phis": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1},
        "mode": {"enum": ["spacetime", "height"]},
        "significance": {"type": "number", "exclusiveMinimum": 0},
        "cover": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"points": {"type": "array", "items": _vec}, "region": _shape, "eps": _num},
        },
        "branching": {
            "type": "object",
            "additionalProperties": False,
            "required": ["offspring", "height"],
            "properties": {
                "offspring": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["law"],
                    "properties": {
                        "law": {"enum": ["constant", "binomial", "poisson"]},
                        "value": {"type": "integer", "minimum": 0},
                        "n": {"type": "integer", "minimum": 0},
                        "p": _num,
                        "mean": _num,
                    },
                },
                "height": _dist,
                "coupling": {"enum": ["common", "scaled"]},
                "offset": {"type": "integer", "minimum": 0},
                "generations": {"type": "integer", "minimum": 1},
            },
        },
        "suite": {"type": "string"},
        "scale": {"type": "number", "exclusiveMinimum": 0},
    },
    "allOf": [
        {"if": {"properties": {"kind": {"enum": ["rate", "gauge", "cover", "simulate"]}}, "required": ["kind"]},
         "then": {"required": ["d", "intensity", "marks", "ground", "checkpoints"]}},
        {"if": {"properties": {"kind": {"const": "phase"}}, "required": ["kind"]},
         "then": {"required": ["d", "intensity", "marks", "ground", "checkpoints", "direction", "phis"]}},
        {"if": {"properties": {"kind": {"const": "branching"}}, "required": ["kind"]},
         "then": {"required": ["branching"]}},
    ],
}


class ConfigError(ValueError):
    pass


def validate(cfg: dict) -> dict:
    try:
        jsonschema.validate(cfg, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {exc.message}") from None
    return cfg


def load(path: str | Path) -> dict:
    try:
        cfg = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from None
    return validate(cfg)


def build_shape(g: dict, d: int | None = None):
    kind = g["type"]
    try:
        if kind == "points":
            return PointSet(g["points"])
        if kind == "ball":
            return Ball(g.get("center", (0.0,) * (d or 1)), g["radius"])
        if kind == "box":
            hw = g["half_widths"]
            return Box(g.get("center", (0.0,) * len(hw)), hw)
        if kind == "cone":
            axis = g["axis"]
            return Cone(g.get("apex", (0.0,) * len(axis)), axis, g["half_angle"])
        if kind == "halfspace":
            return HalfSpace(g["normal"], g.get("offset", 0.0))
        return FullSpace(d or 1)
    except KeyError as exc:
        raise ConfigError(f"ground of type {kind!r} needs field {exc.args[0]!r}") from None


def build_marks(m: dict) -> MarkSpec:
    size = m.get("size", 0.5)
    if isinstance(size, list):
        size = tuple(size)
    return MarkSpec(m.get("family", "ball"), size, m.get("height", 1.0))


def build_plan(cfg: dict) -> ExperimentPlan:
    d = cfg["d"]
    w = cfg.get("window", {})
    return ExperimentPlan(
        d=d,
        intensity=cfg["intensity"],
        marks=build_marks(cfg["marks"]),
        ground=build_shape(cfg["ground"], d),
        functionals=tuple(cfg.get("functionals", ["north_pole"])),
        checkpoints=tuple(cfg["checkpoints"]),
        replicates=cfg.get("replicates", 100),
        seed=cfg.get("seed", 0),
        window=WindowPolicy(w.get("half_width"), w.get("r_cut"), w.get("censoring", "rerun")),
        method=cfg.get("method", "increment"),
    )


def build_branching(b: dict) -> BranchingSpec:
    o = b["offspring"]
    law = o["law"]
    if law == "constant":
        off = Offspring.constant(o.get("value", 1))
    elif law == "binomial":
        off = Offspring.binomial(o["n"], o["p"])
    else:
        off = Offspring.poisson(o["mean"])
    return BranchingSpec(off, Dist.from_value(b["height"]), b.get("coupling", "common"), b.get("offset", 0))
