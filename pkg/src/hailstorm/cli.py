"""Command-line runner: ``hailstorm <kind> --config FILE --out DIR``.

Exit codes: 0 ok, 1 verify failures, 2 bad config or input file,
3 every replicate contaminated, 4 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, config, heap, plotting, rain, verify
from .branching import max_height_rate
from .estimators import AllContaminated, phase_angle, replicate_seed, run
from .functionals import cover_time
from .geometry import PointSet

log = logging.getLogger("hailstorm")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_CONTAMINATED, EXIT_IO = 0, 1, 2, 3, 4


def fmt(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def write_csv(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else ("nan" if math.isnan(v) else ("inf" if v > 0 else "-inf"))
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def slug(key: str) -> str:
    return re.sub(r"[^A-Za-z0-9.]+", "_", key).strip("_")


def write_manifest(out: Path, kind: str, cfg: dict, seeds) -> None:
    echo = {k: v for k, v in cfg.items() if k not in ("jobs", "out")}
    write_json(out / "manifest.json", {
        "kind": kind,
        "version": __version__,
        "config": echo,
        "seed": cfg.get("seed", 0),
        "replicate_seeds": [str(s) for s in seeds],
        "seed_rule": "numpy SeedSequence([base, index]).generate_state(1, uint64)",
    })


# ------------------------------------------------------------ kinds


RATE_HEADER = ["functional", "slope", "stderr", "n_replicates", "contamination_rate"]


def _rate_rows(estimates):
    cps = estimates[0].checkpoints
    header = RATE_HEADER + ["n_excluded", "method", "sup_mean", "sup_mean_stderr"] + [f"mean@{t!r}" for t in cps]
    rows = [[e.functional, e.slope, e.stderr, e.n_replicates, e.contamination_rate, e.n_excluded, e.method,
             e.sup_mean, e.sup_mean_stderr, *e.means] for e in estimates]
    return header, rows


def _write_traces(out: Path, res, figures: bool) -> None:
    cps = np.asarray(res.plan.checkpoints)
    vals = res.values[res.used]
    for j, e in enumerate(res.estimates):
        v = vals[:, j, :]
        se = v.std(axis=0, ddof=1) / math.sqrt(len(v)) if len(v) > 1 else np.full(len(cps), math.nan)
        rows = [[t, v[:, k].mean(), se[k], *v[:, k]] for k, t in enumerate(cps)]
        name = f"{j:02d}_{slug(e.functional)}"
        write_csv(out / "plotdata" / f"{name}.csv", ["t", "mean", "stderr", *(f"rep{r.index}" for r, u in
                  zip(res.replicates, res.used) if u)], rows)
        if figures:
            plotting.growth(out / "figures" / f"{name}.png", cps, v, e, e.functional)


def do_rate(cfg: dict, out: Path, jobs: int, figures: bool) -> int:
    plan = config.build_plan(cfg)
    if cfg["kind"] == "gauge" and not all(k.startswith("gauge:") for k in plan.keys):
        raise config.ConfigError("gauge runs take only gauge:... functionals")
    res = run(plan, jobs)
    header, rows = _rate_rows(res.estimates)
    write_csv(out / "results.csv", header, rows)
    write_json(out / "summary.json", {"kind": cfg["kind"], "estimates": [e.to_dict() for e in res.estimates]})
    _write_traces(out, res, figures)
    write_manifest(out, cfg["kind"], cfg, [r.seed for r in res.replicates])
    return EXIT_OK


def do_phase(cfg: dict, out: Path, jobs: int, figures: bool) -> int:
    plan = config.build_plan({**cfg, "functionals": ["north_pole"]})
    k = cfg.get("significance", 3.0)
    b = phase_angle(plan, tuple(cfg["direction"]), cfg["phis"], k, cfg.get("mode", "spacetime"), jobs)
    write_csv(out / "results.csv", ["phi", "slope", "stderr", "positive"], b.cells)
    write_csv(out / "plotdata" / "phase.csv", ["phi", "slope", "stderr", "positive"], b.cells)
    write_json(out / "summary.json", {"kind": "phase", "phi_lo": b.phi_lo, "phi_hi": b.phi_hi, "found": b.found,
                                      "monotone": b.monotone, "interior": b.interior, "diagnostic": b.diagnostic,
                                      "significance": k, "mode": cfg.get("mode", "spacetime")})
    if figures:
        plotting.phase(out / "figures" / "phase.png", b.cells, b)
    write_manifest(out, "phase", cfg, [replicate_seed(plan.seed, i) for i in range(plan.replicates)])
    return EXIT_OK


def _cover_one(args):
    plan, K, eps, i = args
    seed = replicate_seed(plan.seed, i)
    r = rain.generate(seed, plan.intensity, plan.sim_window(), plan.marks)
    return seed, cover_time(heap.run(r, plan.ground), K, eps)


def do_cover(cfg: dict, out: Path, jobs: int, figures: bool) -> int:
    plan = config.build_plan(cfg)
    c = cfg.get("cover", {})
    K = config.build_shape(c["region"], plan.d) if "region" in c else [tuple(p) for p in c.get("points", [])]
    tasks = [(plan, K, c.get("eps"), i) for i in range(plan.replicates)]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as ex:
            results = list(ex.map(_cover_one, tasks))
    else:
        results = [_cover_one(t) for t in tasks]
    times = np.array([t for _, t in results])
    finite = times[np.isfinite(times)]
    write_csv(out / "results.csv", ["replicate", "seed", "cover_time"],
              [[i, s, t] for i, (s, t) in enumerate(results)])
    srt = np.sort(finite)
    ecdf = [[t, (k + 1) / len(times)] for k, t in enumerate(srt)]
    write_csv(out / "plotdata" / "cover_ecdf.csv", ["t", "fraction_covered"], ecdf)
    write_json(out / "summary.json", {
        "kind": "cover", "replicates": len(times), "censored": int(len(times) - len(finite)),
        "mean_cover_time": float(finite.mean()) if len(finite) else math.inf, "horizon": plan.horizon,
    })
    if figures and len(srt):
        plotting.lines(out / "figures" / "cover_ecdf.png", srt, {"covered": [r[1] for r in ecdf]}, "t",
                       "fraction covered")
    write_manifest(out, "cover", cfg, [s for s, _ in results])
    return EXIT_OK


def do_simulate(cfg: dict, out: Path, jobs: int, figures: bool) -> int:
    plan = config.build_plan({**cfg, "replicates": cfg.get("replicates", 2)})
    seed = plan.seed
    r = rain.generate(seed, plan.intensity, plan.sim_window(), plan.marks)
    state = heap.new_for(r, plan.ground)
    rows = []
    pos = 0
    for t in plan.checkpoints:
        while pos < len(r.arrivals) and r.arrivals[pos].time < t:
            state.step(r.arrivals[pos])
            pos += 1
        rows.extend([key, t, f(state, t)] for key, f in zip(plan.keys, plan.functionals))
    out.mkdir(parents=True, exist_ok=True)
    (out / "realization.txt").write_text(rain.dumps(r))
    (out / "heap.txt").write_text(heap.dumps(state))
    write_csv(out / "results.csv", ["functional", "t", "value"], rows)
    write_csv(out / "plotdata" / "stones.csv", ["id", "t", "top", "sigma", *(f"c{k}" for k in range(plan.d))],
              [[s.id, s.time, s.top, s.arrival.sigma, *s.footprint.center] for s in state.placed])
    write_json(out / "summary.json", {"kind": "simulate", "arrivals": len(r), "placed": len(state),
                                      "max_top": max(0.0, state.max_top())})
    if figures:
        plotting.heap_profile(out / "figures" / "heap.png", state)
    write_manifest(out, "simulate", cfg, [seed])
    return EXIT_OK


def do_branching(cfg: dict, out: Path, jobs: int, figures: bool) -> int:
    b = cfg["branching"]
    spec = config.build_branching(b)
    n = b.get("generations", 10)
    res = max_height_rate(spec, n, cfg.get("replicates", 100), cfg.get("seed", 0))
    rows = [[g, p, ps, h, hs] for g, p, ps, h, hs in zip(res.generations, res.mean_population,
                                                         res.population_stderr, res.mean_height, res.height_stderr)]
    write_csv(out / "results.csv", ["n", "mean_d", "stderr_d", "mean_h", "stderr"], rows)
    write_csv(out / "plotdata" / "branching.csv", ["n", "mean_d", "stderr_d", "mean_h", "stderr"], rows)
    write_json(out / "summary.json", {"kind": "branching", "spec": spec.to_dict(), "estimate": res.estimate.to_dict(),
                                      "censored": res.n_censored})
    if figures:
        plotting.lines(out / "figures" / "branching.png", res.generations, {"mean h(n)": res.mean_height}, "n",
                       "h(n)")
    write_manifest(out, "branching", cfg, [replicate_seed(cfg.get("seed", 0), i)
                                           for i in range(cfg.get("replicates", 100))])
    return EXIT_OK


def do_verify(cfg: dict, out: Path, jobs: int, figures: bool) -> int:
    results = verify.run_suite(cfg.get("suite", "all"), cfg.get("seed", 0), cfg.get("scale", 1.0))
    for r in results:
        print(r.line())
    write_csv(out / "results.csv", ["property", "passed", "checked", "violations", "counterexample_seed"],
              [[r.name, r.passed, r.checked, r.violations, "" if r.counterexample_seed is None
                else r.counterexample_seed] for r in results])
    write_json(out / "summary.json", {"kind": "verify", "passed": all(r.passed for r in results)})
    write_manifest(out, "verify", cfg, [])
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


HANDLERS = {"simulate": do_simulate, "rate": do_rate, "gauge": do_rate, "phase": do_phase, "cover": do_cover,
            "branching": do_branching, "verify": do_verify}


def do_replay(args) -> int:
    text = Path(args.realization).read_text()
    try:
        r = rain.loads(text)
    except rain.RealizationFormatError as exc:
        print(f"error: {args.realization}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.ground:
        g = args.ground
        spec = json.loads(Path(g).read_text() if os.path.exists(g) else g)
        config.validate({"ground": spec})
        ground = config.build_shape(spec, r.d)
    else:
        ground = PointSet([(0.0,) * r.d])
    dump = heap.dumps(heap.run(r, ground))
    if args.out:
        Path(args.out).write_text(dump)
    else:
        sys.stdout.write(dump)
    return EXIT_OK


# ------------------------------------------------------------ entry point


def _seed_override(args):
    if args.seed is not None:
        return args.seed
    env = os.environ.get("HAILSTORM_SEED")
    return int(env) if env else None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hailstorm", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    p.add_argument("--version", action="version", version=f"hailstorm {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for kind in config.KINDS:
        s = sub.add_parser(kind)
        s.add_argument("--config", help="JSON experiment config")
        s.add_argument("--out", help="output directory (default: config 'out' or ./out)")
        s.add_argument("--seed", type=int, help="base seed; overrides the config and HAILSTORM_SEED")
        s.add_argument("--jobs", type=int, help="worker processes")
        s.add_argument("--no-figures", action="store_true", help="skip PNG rendering")
        if kind == "verify":
            s.add_argument("--suite", help=f"one of all, {', '.join(verify.SUITES)}")
            s.add_argument("--scale", type=float, help="multiply instance counts")
    s = sub.add_parser("replay")
    s.add_argument("realization", help="realization text file")
    s.add_argument("--ground", help="ground as JSON text or a JSON file (default: the origin)")
    s.add_argument("--out", help="write the dump here instead of stdout")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "replay":
            return do_replay(args)
        cfg = config.load(args.config) if args.config else {}
        kind = cfg.setdefault("kind", args.command)
        if kind != args.command:
            raise config.ConfigError(f"config kind {kind!r} does not match subcommand {args.command!r}")
        seed = _seed_override(args)
        if seed is not None:
            cfg["seed"] = seed
        if getattr(args, "suite", None):
            cfg["suite"] = args.suite
        if getattr(args, "scale", None):
            cfg["scale"] = args.scale
        config.validate(cfg)
        jobs = args.jobs or cfg.get("jobs", 1)
        out = Path(args.out or cfg.get("out", "out"))
        return HANDLERS[kind](cfg, out, jobs, not args.no_figures)
    except (config.ConfigError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AllContaminated as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONTAMINATED
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
