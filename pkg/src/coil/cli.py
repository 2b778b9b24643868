"""Command-line entry point: ``coil run``, ``coil bench-ufl`` and ``coil replay``.

Results CSV (``results.csv``), one row per episode, header first::

    seed,algorithm,profile,n_teach,n_human,n_pref,n_robot,realized_cost,runtime_ms

``run.json`` next to it records the root seed, the resolved configuration, its
SHA-256 hash and the package version. Episode traces (``--trace DIR``) are JSON
lines; the record schema is documented in :mod:`coil.trace`.

The run configuration is a JSON object. Recognised keys (all optional)::

    profiles        list of profile names, or {name: {c_rob, c_hum, ...}} for custom costs
    algorithms      list of algorithm names
    n_seeds, root_seed, seq_len, n_varieties, n_goals, challenging_frac,
    variety_weights, domain ("gridworld" or "conveyor"),
    teach_prior     [alpha0, beta0]
    ig_beta_scale, ig_entropy_form, confidence_alpha

Command-line flags override the file; ``COIL_SEED`` overrides the root seed.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import ALGORITHMS, make_planner
from .errors import BadConfig, CoilError, InvariantViolation, ParseError
from .gridworld import DEFAULT_TEACH_PRIOR, METRIC_FIELDS, ScenarioConfig, run_suite, summary_table
from .model import PROFILES, CostProfile, TeachModel
from .trace import verify_trace, write_trace
from .ufl import loads, random_instance, solution_cost, solve_exact, solve_greedy

CSV_COLUMNS = ("seed", "algorithm", "profile") + METRIC_FIELDS
BENCH_COLUMNS = ("size", "instance", "n_demands", "n_facilities", "greedy_cost", "exact_cost",
                 "ratio", "greedy_ms", "exact_ms")

DEFAULTS = {
    "profiles": ["low", "med", "high"],
    "algorithms": ["COIL", "C-ADL", "IG", "CBA"],
    "n_seeds": 30,
    "root_seed": 0,
    "seq_len": 15,
    "n_varieties": 9,
    "n_goals": 3,
    "challenging_frac": 0.0,
    "variety_weights": None,
    "domain": "gridworld",
    "teach_prior": [DEFAULT_TEACH_PRIOR.alpha, DEFAULT_TEACH_PRIOR.beta],
    "ig_beta_scale": 0.01,
    "ig_entropy_form": "reduction",
    "confidence_alpha": 0.8,
}


def _split(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def load_config(path) -> dict:
    if path is None:
        return {}
    try:
        cfg = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise BadConfig("config", f"{path}: {exc}") from None
    if not isinstance(cfg, dict):
        raise BadConfig("config", "top level must be an object")
    unknown = set(cfg) - set(DEFAULTS)
    if unknown:
        raise BadConfig(sorted(unknown)[0], "unknown configuration key")
    return cfg


def resolve_run_config(args) -> dict:
    cfg = dict(DEFAULTS)
    cfg.update(load_config(args.config))
    if args.profile:
        cfg["profiles"] = ["low", "med", "high"] if args.profile == "all" else _split(args.profile)
    if args.algos:
        cfg["algorithms"] = _split(args.algos)
    if args.seeds is not None:
        cfg["n_seeds"] = args.seeds
    if args.challenging_frac is not None:
        cfg["challenging_frac"] = args.challenging_frac
    if os.environ.get("COIL_SEED"):
        try:
            cfg["root_seed"] = int(os.environ["COIL_SEED"])
        except ValueError:
            raise BadConfig("COIL_SEED", "must be an integer") from None
    return cfg


def _profiles(spec) -> list:
    if isinstance(spec, dict):
        out = []
        for name, costs in spec.items():
            try:
                out.append((name, CostProfile(**costs)))
            except (TypeError, ValueError) as exc:
                raise BadConfig(f"profiles.{name}", str(exc)) from None
        return out
    for name in spec:
        if name not in PROFILES:
            raise BadConfig("profile", f"unknown profile {name!r} (choose from low, med, high)")
    return [(name, PROFILES[name]) for name in spec]


def _check_algorithms(names):
    if not names:
        raise BadConfig("algos", "no algorithms given")
    for name in names:
        try:
            make_planner(name)
        except KeyError:
            raise BadConfig("algos", f"unknown algorithm {name!r} (choose from "
                                     f"{', '.join(ALGORITHMS)})") from None


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()


def cmd_run(args) -> int:
    cfg = resolve_run_config(args)
    profiles = _profiles(cfg["profiles"])
    _check_algorithms(cfg["algorithms"])
    if int(cfg["n_seeds"]) < 1:
        raise BadConfig("seeds", "need at least one seed")
    weights = cfg["variety_weights"]
    scenario_cfg = ScenarioConfig(int(cfg["seq_len"]), int(cfg["n_varieties"]), int(cfg["n_goals"]),
                                  float(cfg["challenging_frac"]),
                                  tuple(weights) if weights is not None else None, cfg["domain"])
    try:
        prior = TeachModel(*cfg["teach_prior"])
    except (TypeError, ValueError) as exc:
        raise BadConfig("teach_prior", str(exc)) from None
    if args.workers < 1:
        raise BadConfig("workers", "must be at least 1")

    result = run_suite(profiles, cfg["algorithms"], int(cfg["n_seeds"]), int(cfg["root_seed"]),
                       scenario_cfg, prior, args.workers, alpha=float(cfg["confidence_alpha"]),
                       beta_scale=float(cfg["ig_beta_scale"]),
                       ig_entropy_form=cfg["ig_entropy_form"])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "results.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, CSV_COLUMNS, extrasaction="ignore", lineterminator="\n")
        writer.writeheader()
        writer.writerows(sorted(result.rows, key=lambda r: (r["seed"], r["profile"], r["algorithm"])))
    (out / "run.json").write_text(json.dumps(
        {"root_seed": cfg["root_seed"], "config": cfg, "config_hash": config_hash(cfg),
         "version": __version__}, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    scen_dir = out / "scenarios"
    scen_dir.mkdir(exist_ok=True)
    for seed, scenario in sorted(result.scenarios.items()):
        (scen_dir / f"scenario_{seed}.json").write_text(scenario.dumps() + "\n", encoding="utf-8")
    if args.trace:
        tdir = Path(args.trace)
        tdir.mkdir(parents=True, exist_ok=True)
        for (seed, pname, algo), log in sorted(result.logs.items()):
            write_trace(tdir / f"{pname}_{algo}_{seed}.jsonl", log, seed)
    print(summary_table(result))
    return 0


def cmd_bench_ufl(args) -> int:
    sizes = [int(s) for s in _split(args.sizes)]
    if not sizes or min(sizes) < 1:
        raise BadConfig("sizes", "need positive instance sizes")
    if args.facilities is not None and args.facilities < 1:
        raise BadConfig("facilities", "must be positive")
    if args.instances < 1:
        raise BadConfig("instances", "need at least one instance")
    if not 0.0 <= args.infeasible_frac < 1.0:
        raise BadConfig("infeasible_frac", "must lie in [0, 1)")
    rng = np.random.default_rng(int(os.environ.get("COIL_SEED", args.seed)))
    rows = []
    if args.instance:
        instances = [(0, 0, loads(Path(args.instance).read_text(encoding="utf-8")))]
    else:
        instances = [(size, n, random_instance(rng, size, args.facilities or size,
                                               infeasible_frac=args.infeasible_frac,
                                               metric=args.metric))
                     for size in sizes for n in range(args.instances)]
    for size, n, inst in instances:
        t0 = time.perf_counter()
        g = solve_greedy(inst)
        t1 = time.perf_counter()
        e = solve_exact(inst)
        t2 = time.perf_counter()
        gc, ec = solution_cost(g, inst), solution_cost(e, inst)
        rows.append({"size": size, "instance": n, "n_demands": inst.n_demands,
                     "n_facilities": inst.n_facilities, "greedy_cost": gc, "exact_cost": ec,
                     "ratio": gc / ec if ec > 0 else 1.0,
                     "greedy_ms": 1e3 * (t1 - t0), "exact_ms": 1e3 * (t2 - t1)})
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "bench_ufl.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, BENCH_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    print(f"{'size':>6}{'n':>6}{'mean ratio':>12}{'max ratio':>11}{'bound':>8}{'speedup':>10}")
    for size in sorted({r["size"] for r in rows}):
        rs = [r for r in rows if r["size"] == size]
        ratios = np.array([r["ratio"] for r in rs])
        speed = np.median([r["exact_ms"] / max(r["greedy_ms"], 1e-6) for r in rs])
        bound = math.log(max(rs[0]["n_demands"], 1)) + 1
        print(f"{size:>6}{len(rs):>6}{ratios.mean():>12.4f}{ratios.max():>11.4f}"
              f"{bound:>8.3f}{speed:>9.1f}x")
    return 0


def cmd_replay(args) -> int:
    paths = []
    for p in map(Path, args.traces):
        paths.extend(sorted(p.glob("*.jsonl")) if p.is_dir() else [p])
    status = 0
    for path in paths:
        try:
            totals = verify_trace(path)
        except InvariantViolation as exc:
            print(f"FAIL {path}: {exc}", file=sys.stderr)
            status = max(status, 1)
            continue
        except ParseError as exc:
            print(f"PARSE ERROR {path}: {exc}", file=sys.stderr)
            status = 2
            continue
        cost = totals.get("realized_cost")
        print(f"ok   {path}" + (f"  cost={cost:g}" if cost is not None else "  (empty)"))
    return status


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coil", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment suite on simulated scenarios")
    run.add_argument("--config", help="JSON run configuration")
    run.add_argument("--profile", help="low, med, high, a comma list, or all")
    run.add_argument("--algos", help=f"comma list from {', '.join(ALGORITHMS)}")
    run.add_argument("--seeds", type=int, help="number of paired episodes")
    run.add_argument("--challenging-frac", type=float, dest="challenging_frac")
    run.add_argument("--trace", metavar="DIR", help="write one JSONL trace per episode")
    run.add_argument("--out", default="results", help="output directory")
    run.add_argument("--workers", type=int, default=1)
    run.set_defaults(func=cmd_run)

    bench = sub.add_parser("bench-ufl", help="greedy vs exact facility-location benchmark")
    bench.add_argument("--sizes", default="5,10,15", help="comma list of demand counts")
    bench.add_argument("--facilities", type=int, help="facility count (default: same as size)")
    bench.add_argument("--instances", type=int, default=20)
    bench.add_argument("--infeasible-frac", type=float, default=0.2, dest="infeasible_frac")
    bench.add_argument("--metric", action="store_true", help="metric service costs")
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--instance", help="solve one instance file instead of random ones")
    bench.add_argument("--out", default="results")
    bench.set_defaults(func=cmd_bench_ufl)

    replay = sub.add_parser("replay", help="re-verify recorded episode traces")
    replay.add_argument("traces", nargs="+", help="trace files or directories of *.jsonl")
    replay.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BadConfig as exc:
        print(f"error: bad config field {exc.field!r}: {exc}", file=sys.stderr)
        return 2
    except (CoilError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
