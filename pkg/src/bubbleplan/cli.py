"""Command-line interface.

Subcommands: cover (sample a bubble cover), plan (cover + graph search +
trajectory refinement), explore (unknown-environment episode), bench and
area (benchmark harness). Every subcommand is deterministic given --seed and
--config, and prints a single JSON summary object as its final stdout line.

Exit codes: 0 ok, 2 invalid config, 3 infeasible seed, 4 start/goal
disconnected from the cover, 5 solver non-convergence.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import envs
from .bench import (
    AreaConfig,
    BenchConfig,
    area_sweep,
    run_benchmark,
    write_area_csv,
    write_benchmark_csv,
)
from .bubbles import cover_to_dict
from .errors import (
    CoverDisconnectedError,
    InfeasibleEndpointError,
    InfeasibleProblemError,
    InvalidConfigError,
    NotInCoverError,
    SamplingSaturationError,
    SeedInfeasibleError,
    SolverConvergenceError,
)
from .frontier import explore_episode
from .pipeline import plan_through_cover
from .samplers import SamplerConfig, Termination, brm, ebg, rbg
from .trajopt import CostSpec, save_trajectory, trajectory_to_dict, write_polyline_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SEED = 3
EXIT_DISCONNECTED = 4
EXIT_SOLVER = 5


def _parse_point(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",")], dtype=float)
    except ValueError as exc:
        raise InvalidConfigError(f"cannot parse point {text!r}; expected x,y[,z]") from exc


def _emit(summary: dict) -> None:
    print(json.dumps(summary, sort_keys=True))


def _check_out(path: str | None) -> None:
    if path is not None and not Path(path).parent.exists():
        raise InvalidConfigError(f"--out parent directory does not exist: {Path(path).parent}")


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise InvalidConfigError(f"config file not found: {p}")
    cfg = json.loads(p.read_text())
    if not isinstance(cfg, dict):
        raise InvalidConfigError("config file must hold a JSON object")
    return cfg


def _sampler_config(args, config: dict) -> SamplerConfig:
    """Defaults < config file < explicit CLI flags."""
    valid = {f.name for f in fields(SamplerConfig)}
    merged = {k: v for k, v in config.items() if k in valid}
    for name in valid:
        value = getattr(args, name, None)
        if value is not None:
            merged[name] = value
    return SamplerConfig(**merged)


def _add_sampler_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--eps", type=float, default=None, help="footprint clearance (m)")
    p.add_argument("--r-min", dest="r_min", type=float, default=None, help="minimum bubble radius (m)")
    p.add_argument("--n-sample", dest="n_sample", type=int, default=None, help="BRM sample count")
    p.add_argument("--n-explore", dest="n_explore", type=int, default=None, help="EBG directions per dimension")
    p.add_argument("--k-overlap", dest="k_overlap", type=float, default=None, help="EBG overlap factor in [0,1]")
    p.add_argument("--inflation", type=float, default=None, help="RBG sampling-support inflation fraction")
    p.add_argument("--max-bubbles", dest="max_bubbles", type=int, default=None)
    p.add_argument("--max-rejections", dest="max_rejections", type=int, default=None)
    p.add_argument("--max-iterations", dest="max_iterations", type=int, default=None)


def _run_sampler(algo, oracle, cfg, start, goal, max_iterations):
    if algo == "brm":
        return brm(oracle, oracle.workspace, cfg)
    if start is None:
        raise InvalidConfigError(f"--start is required for {algo}")
    if goal is not None:
        term = Termination("goal_contained", goal)
    else:
        term = Termination("bubble_count")
    if algo == "rbg":
        return rbg(oracle, oracle.workspace, start, cfg, term, max_iterations=max_iterations)
    return ebg(oracle, start, cfg, term, max_iterations=max_iterations)


def _cmd_cover(args) -> int:
    _check_out(args.out)
    config = _load_config(args.config)
    cfg = _sampler_config(args, config)
    oracle = envs.make_oracle(args.env)
    start = _parse_point(args.start) if args.start else None
    goal = _parse_point(args.goal) if args.goal else None
    cover = _run_sampler(args.algo, oracle, cfg, start, goal, args.max_iterations)
    if args.out:
        Path(args.out).write_text(json.dumps(cover_to_dict(cover)))
    _emit(
        {
            "n_bubbles": len(cover),
            "unique_queries": oracle.unique_queries,
            "total_queries": oracle.total_queries,
            "saturated": cover.saturated,
        }
    )
    return EXIT_OK


def _cmd_plan(args) -> int:
    _check_out(args.out)
    config = _load_config(args.config)
    cfg = _sampler_config(args, config)
    oracle = envs.make_oracle(args.env)
    start = _parse_point(args.start)
    goal = _parse_point(args.goal)
    cover = _run_sampler(args.algo, oracle, cfg, start, goal, args.max_iterations)
    cost = CostSpec(d_cost=1 if args.cost == "length" else 4)
    result = plan_through_cover(cover, start, goal, cost, v0=args.v0, order=args.order)
    if args.out:
        save_trajectory(result.trajectory, args.out)
        if args.samples:
            write_polyline_csv(result.trajectory, Path(args.out).with_suffix(".samples.csv"), args.samples)
    _emit(
        {
            "path_bubbles": len(result.path.indices),
            "total_weight": result.path.total_weight,
            "raw_cost": result.length if args.cost == "length" else result.objective,
            "unique_queries": oracle.unique_queries,
        }
    )
    return EXIT_OK


def _cmd_explore(args) -> int:
    _check_out(args.out)
    config = _load_config(args.config)
    cfg = _sampler_config(args, config)
    oracle = envs.make_oracle(args.env)
    start = _parse_point(args.start)
    goal = _parse_point(args.goal)
    trace, reached = explore_episode(
        oracle, start, goal, cfg,
        max_steps=args.max_steps, max_range=args.max_range,
    )
    if args.out:
        Path(args.out).write_text(
            "".join(json.dumps(rec, sort_keys=True) + "\n" for rec in trace)
        )
    _emit(
        {
            "steps": len(trace),
            "reached": reached,
            "observed_fraction": trace[-1]["observed_fraction"] if trace else 0.0,
            "n_bubbles": trace[-1]["n_bubbles"] if trace else 0,
        }
    )
    return EXIT_OK


def _cmd_bench(args) -> int:
    config = _load_config(args.config)
    if args.seed is not None:
        config["pair_seed"] = args.seed
    out = args.out or config.pop("out", None)
    _check_out(out)
    cfg = BenchConfig(**config)
    records = run_benchmark(cfg)
    if out:
        write_benchmark_csv(records, out, record_wall_time=cfg.record_wall_time)
    n_success = sum(1 for r in records if r.success)
    _emit({"rows": len(records), "successes": n_success, "out": out})
    return EXIT_OK


def _cmd_area(args) -> int:
    config = _load_config(args.config)
    if args.seed is not None:
        config["seed"] = args.seed
    out = args.out or config.pop("out", None)
    _check_out(out)
    cfg = AreaConfig(**config)
    curves = area_sweep(cfg)
    if out:
        write_area_csv(curves, out)
    final_medians = {f"{c.env}/{c.algorithm}": c.median[-1] for c in curves}
    _emit({"curves": len(curves), "final_medians": final_medians, "out": out})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bubbleplan", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def _shared(p: argparse.ArgumentParser) -> None:
        p.add_argument("--env", default="room2d", help="environment JSON file or builtin name")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None, help="output file path")
        p.add_argument("--config", default=None, help="JSON config overriding defaults")

    p_cover = sub.add_parser("cover", help="sample a bubble cover")
    _shared(p_cover)
    p_cover.add_argument("--algo", choices=("brm", "rbg", "ebg"), required=True)
    p_cover.add_argument("--start", default=None, help="seed point x,y[,z] (rbg/ebg)")
    p_cover.add_argument("--goal", default=None, help="stop once this point is covered")
    _add_sampler_flags(p_cover)
    p_cover.set_defaults(func=_cmd_cover)

    p_plan = sub.add_parser("plan", help="plan a trajectory between two points")
    _shared(p_plan)
    p_plan.add_argument("--algo", choices=("brm", "rbg", "ebg"), default="ebg")
    p_plan.add_argument("--start", required=True)
    p_plan.add_argument("--goal", required=True)
    p_plan.add_argument("--cost", choices=("length", "snap"), default="length")
    p_plan.add_argument("--samples", type=int, default=None, help="emit a CSV polyline with this many samples")
    p_plan.add_argument("--v0", type=float, default=1.0, help="nominal speed for durations")
    p_plan.add_argument("--order", type=int, default=5, help="Bezier order")
    _add_sampler_flags(p_plan)
    p_plan.set_defaults(func=_cmd_plan)

    p_explore = sub.add_parser("explore", help="explore an unknown environment toward a goal")
    _shared(p_explore)
    p_explore.add_argument("--start", required=True)
    p_explore.add_argument("--goal", required=True)
    p_explore.add_argument("--max-steps", dest="max_steps", type=int, default=20)
    p_explore.add_argument("--max-range", dest="max_range", type=float, default=4.0)
    _add_sampler_flags(p_explore)
    p_explore.set_defaults(func=_cmd_explore)

    p_bench = sub.add_parser("bench", help="run the benchmark sweep")
    _shared(p_bench)
    p_bench.set_defaults(func=_cmd_bench)

    p_area = sub.add_parser("area", help="run the reachable-area sweep")
    _shared(p_area)
    p_area.set_defaults(func=_cmd_area)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    # The shared --seed flag reaches SamplerConfig through _sampler_config,
    # which picks up any args attribute named like a config field.
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InvalidConfigError, SamplingSaturationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SeedInfeasibleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SEED
    except (NotInCoverError, CoverDisconnectedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DISCONNECTED
    except (SolverConvergenceError, InfeasibleProblemError, InfeasibleEndpointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
