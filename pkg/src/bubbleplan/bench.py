"""Benchmark harness: randomized planning trials and reachable-area sweeps.

One benchmark run is a full factorial of environment x algorithm x start/goal
pair x seed x iteration budget. Every run gets a fresh oracle so its query
counters are isolated; failures are recorded, never raised. CSV outputs are
sorted on deterministic keys; wall-clock times are written as 0.0 unless
``record_wall_time`` is set, so rerunning a config reproduces the file byte
for byte.
"""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .baselines import BaselineConfig, prm_star, rrt_star
from .bubbles import BubbleCover
from .distance_field import DistanceOracle, Workspace
from .envs import environment_spec, make_oracle
from .errors import InvalidConfigError, PlanningError, SamplingSaturationError
from .graph_planner import build_intersection_graph, containing_bubbles
from .pipeline import plan_through_cover
from .samplers import SamplerConfig, Termination, brm, ebg, rbg
from .trajopt import CostSpec

BUBBLE_ALGORITHMS = ("brm", "rbg", "ebg")
BASELINE_ALGORITHMS = ("prm_star", "rrt_star")

BENCH_CSV_HEADER = (
    "env,algorithm,pair_id,seed,budget,success,unique_queries,total_queries,"
    "raw_cost,normalized_cost,wall_time_s"
)
AREA_CSV_HEADER = "env,algorithm,iteration,q10,median,q90"


@dataclass
class BenchConfig:
    environments: list[str]
    algorithms: list[str]
    n_pairs: int = 20
    n_seeds: int = 3
    budgets: list[int] = field(default_factory=lambda: [100, 200, 400])
    cost: str = "length"
    eps: float = 0.1
    r_min: float = 0.1
    pair_seed: int = 1_000_003
    record_wall_time: bool = False
    sampler: dict = field(default_factory=dict)
    baseline: dict = field(default_factory=dict)
    out: str | None = None

    def __post_init__(self):
        if self.n_pairs < 1 or self.n_seeds < 1:
            raise InvalidConfigError("n_pairs and n_seeds must be >= 1")
        if self.cost not in ("length", "snap"):
            raise InvalidConfigError("cost must be 'length' or 'snap'")
        for algo in self.algorithms:
            if algo not in BUBBLE_ALGORITHMS + BASELINE_ALGORITHMS:
                raise InvalidConfigError(f"unknown algorithm {algo!r}")


@dataclass
class BenchRecord:
    env: str
    algorithm: str
    pair_id: int
    seed: int
    budget: int
    success: bool
    unique_queries: int
    total_queries: int
    raw_cost: float | None
    normalized_cost: float | None = None
    wall_time: float = 0.0

    def sort_key(self):
        return (self.env, self.algorithm, self.pair_id, self.seed, self.budget)


def _run_seed(*parts) -> int:
    digest = hashlib.blake2b("|".join(str(p) for p in parts).encode(), digest_size=8)
    return int.from_bytes(digest.digest(), "little")


def generate_pairs(
    oracle: DistanceOracle,
    workspace: Workspace,
    n: int,
    eps: float,
    r_min: float,
    seed: int,
) -> list[tuple[np.ndarray, np.ndarray]]:
    """n random start/goal pairs: both endpoints admit a seed bubble
    (query >= eps + r_min) and are at least 10% of the diagonal apart."""
    rng = np.random.default_rng(seed)
    min_gap = 0.1 * workspace.diagonal
    pairs = []
    attempts = 0
    cap = max(10_000 * n, 100_000)

    def _draw_valid() -> np.ndarray | None:
        nonlocal attempts
        while attempts < cap:
            y = workspace.sample(rng, 1)[0]
            attempts += 1
            if oracle.query(y) >= eps + r_min:
                return y
        return None

    while len(pairs) < n:
        s = _draw_valid()
        g = _draw_valid()
        if s is None or g is None:
            raise SamplingSaturationError(
                f"pair sampling saturated after {attempts} attempts "
                f"({len(pairs)}/{n} pairs found)"
            )
        if np.linalg.norm(s - g) >= min_gap:
            pairs.append((s, g))
    return pairs


def _cost_spec(kind: str) -> CostSpec:
    return CostSpec(d_cost=1) if kind == "length" else CostSpec(d_cost=4)


def _run_bubble(oracle, algo, start, goal, budget, run_seed, cfg: BenchConfig):
    overrides = dict(cfg.sampler)
    overrides.pop("seed", None)
    scfg = SamplerConfig(eps=cfg.eps, r_min=cfg.r_min, seed=run_seed, **overrides)
    if algo == "brm":
        scfg.n_sample = budget
        cover = brm(oracle, oracle.workspace, scfg)
    elif algo == "rbg":
        term = Termination("goal_contained", goal)
        cover = rbg(oracle, oracle.workspace, start, scfg, term, max_iterations=budget)
    else:
        term = Termination("goal_contained", goal)
        cover = ebg(oracle, start, scfg, term, max_iterations=budget)
    result = plan_through_cover(cover, start, goal, _cost_spec(cfg.cost))
    raw = result.length if cfg.cost == "length" else result.objective
    return raw


def _run_baseline(oracle, algo, start, goal, budget, run_seed, cfg: BenchConfig):
    overrides = dict(cfg.baseline)
    overrides.pop("seed", None)
    overrides.setdefault("eps", cfg.eps)
    bcfg = BaselineConfig(n_samples=budget, seed=run_seed, **overrides)
    planner = prm_star if algo == "prm_star" else rrt_star
    result = planner(oracle, oracle.workspace, bcfg, start, goal)
    if not result.success:
        return None
    return result.length


def run_benchmark(cfg: BenchConfig) -> list[BenchRecord]:
    """Full factorial sweep; returns one record per run (normalized in
    place). Individual run failures are recorded as success=false."""
    records: list[BenchRecord] = []
    for env in cfg.environments:
        env_name = environment_spec(env).get("name", str(env))
        pair_oracle = make_oracle(env)
        pairs = generate_pairs(
            pair_oracle, pair_oracle.workspace, cfg.n_pairs, cfg.eps, cfg.r_min, cfg.pair_seed
        )
        for algo in cfg.algorithms:
            for pair_id, (start, goal) in enumerate(pairs):
                for seed_idx in range(cfg.n_seeds):
                    for budget in cfg.budgets:
                        oracle = make_oracle(env)
                        run_seed = _run_seed(cfg.pair_seed, env_name, algo, pair_id, seed_idx, budget)
                        t0 = time.perf_counter()
                        raw: float | None = None
                        try:
                            if algo in BUBBLE_ALGORITHMS:
                                raw = _run_bubble(oracle, algo, start, goal, budget, run_seed, cfg)
                            else:
                                raw = _run_baseline(oracle, algo, start, goal, budget, run_seed, cfg)
                        except PlanningError:
                            raw = None
                        wall = time.perf_counter() - t0
                        records.append(
                            BenchRecord(
                                env=env_name,
                                algorithm=algo,
                                pair_id=pair_id,
                                seed=seed_idx,
                                budget=budget,
                                success=raw is not None,
                                unique_queries=oracle.unique_queries,
                                total_queries=oracle.total_queries,
                                raw_cost=raw,
                                wall_time=wall,
                            )
                        )
    _normalize(records)
    records.sort(key=BenchRecord.sort_key)
    return records


def _normalize(records: list[BenchRecord]) -> None:
    """Divide each successful cost by the worst successful cost in its
    (env, pair) group, so the worst run normalizes to exactly 1.0."""
    groups: dict[tuple, float] = {}
    for r in records:
        if r.success:
            key = (r.env, r.pair_id)
            groups[key] = max(groups.get(key, 0.0), r.raw_cost)
    for r in records:
        if r.success:
            worst = groups[(r.env, r.pair_id)]
            r.normalized_cost = r.raw_cost / worst if worst > 0 else 1.0


def write_benchmark_csv(records: list[BenchRecord], path, record_wall_time: bool = False) -> None:
    lines = [BENCH_CSV_HEADER]
    for r in sorted(records, key=BenchRecord.sort_key):
        raw = repr(float(r.raw_cost)) if r.success else ""
        norm = repr(float(r.normalized_cost)) if r.success else ""
        wall = repr(round(r.wall_time, 6)) if record_wall_time else "0.0"
        lines.append(
            f"{r.env},{r.algorithm},{r.pair_id},{r.seed},{r.budget},"
            f"{'true' if r.success else 'false'},{r.unique_queries},{r.total_queries},"
            f"{raw},{norm},{wall}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Reachable-area study
# ---------------------------------------------------------------------------

def _free_points(oracle: DistanceOracle, workspace: Workspace, n_mc: int, seed: int) -> np.ndarray:
    """n_mc uniform samples from free space (rejection on query >= 0)."""
    rng = np.random.default_rng(seed)
    out: list[np.ndarray] = []
    total = 0
    for _ in range(1000):
        batch = workspace.sample(rng, n_mc)
        keep = oracle.query_many(batch) >= 0.0
        out.append(batch[keep])
        total += int(np.count_nonzero(keep))
        if total >= n_mc:
            break
    else:
        raise SamplingSaturationError("free-space rejection sampling saturated")
    return np.concatenate(out)[:n_mc]


def _seed_component(cover: BubbleCover, seed_point=None) -> np.ndarray:
    """Indices of the connected component holding the seed bubble (or, for
    covers without one, every component containing the seed point)."""
    n = len(cover)
    graph = build_intersection_graph(cover)
    roots: list[int]
    if cover.seed_index is not None:
        roots = [cover.seed_index]
    elif seed_point is not None:
        roots = [int(i) for i in containing_bubbles(cover, seed_point)]
        if not roots:
            return np.empty(0, dtype=int)
    else:
        return np.arange(n)
    member = np.zeros(n, dtype=bool)
    stack = list(roots)
    member[roots] = True
    while stack:
        u = stack.pop()
        for v, _ in graph.adjacency[u]:
            if not member[v]:
                member[v] = True
                stack.append(v)
    return np.flatnonzero(member)


def _fraction_inside(points: np.ndarray, cover: BubbleCover, indices: np.ndarray) -> float:
    if indices.size == 0 or len(cover) == 0:
        return 0.0
    from scipy.spatial.distance import cdist

    centers = cover.centers()[indices]
    radii = cover.radii()[indices]
    n = points.shape[0]
    active = np.arange(n)
    chunk = 512
    covered = 0
    for lo in range(0, indices.size, chunk):
        if active.size == 0:
            break
        d = cdist(points[active], centers[lo : lo + chunk])
        hit = np.any(d <= radii[lo : lo + chunk], axis=1)
        covered += int(np.count_nonzero(hit))
        active = active[~hit]
    return float(covered / n)


def reachable_area(
    cover: BubbleCover,
    oracle: DistanceOracle,
    workspace: Workspace,
    n_mc: int,
    seed: int,
    seed_point=None,
) -> float:
    """Monte Carlo fraction of free space covered by the seed-connected
    component of the cover's intersection graph."""
    if len(cover) == 0:
        return 0.0
    points = _free_points(oracle, workspace, n_mc, seed)
    return _fraction_inside(points, cover, _seed_component(cover, seed_point))


# ---------------------------------------------------------------------------
# Area sweep
# ---------------------------------------------------------------------------

@dataclass
class AreaConfig:
    environments: list[str]
    algorithms: list[str] = field(default_factory=lambda: list(BUBBLE_ALGORITHMS))
    n_locations: int = 20
    budget: int = 1000
    record_every: int = 50
    n_mc: int = 10_000
    eps: float = 0.1
    r_min: float = 0.1
    seed: int = 7
    sampler: dict = field(default_factory=dict)
    out: str | None = None

    def __post_init__(self):
        for algo in self.algorithms:
            if algo not in BUBBLE_ALGORITHMS:
                raise InvalidConfigError(f"area sweep supports bubble samplers only, got {algo!r}")
        if self.record_every < 1 or self.budget < self.record_every:
            raise InvalidConfigError("budget must cover at least one recording interval")


@dataclass
class AreaCurve:
    env: str
    algorithm: str
    iterations: list[int]
    q10: list[float]
    median: list[float]
    q90: list[float]


def _sample_seed_locations(oracle, workspace, n, eps, r_min, seed) -> np.ndarray:
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(100_000):
        y = workspace.sample(rng, 1)[0]
        if oracle.query(y) >= eps + r_min:
            out.append(y)
            if len(out) == n:
                return np.asarray(out)
    raise SamplingSaturationError("seed-location sampling saturated")


def _cover_snapshots(cover: BubbleCover, log: list[int], marks: list[int]) -> list[BubbleCover]:
    """Prefix covers at the recorded iteration marks; samplers that stop
    early hold their final state for the remaining marks."""
    out = []
    for k in marks:
        count = log[k - 1] if k <= len(log) else (log[-1] if log else len(cover))
        out.append(BubbleCover(cover.bubbles[:count], seed_index=cover.seed_index))
    return out


def area_sweep(cfg: AreaConfig) -> list[AreaCurve]:
    """Median and 10%/90% quantile curves of reachable area over iterations,
    across randomly initialized seed locations."""
    curves: list[AreaCurve] = []
    marks = list(range(cfg.record_every, cfg.budget + 1, cfg.record_every))
    for env in cfg.environments:
        env_name = environment_spec(env).get("name", str(env))
        mc_oracle = make_oracle(env)
        points = _free_points(mc_oracle, mc_oracle.workspace, cfg.n_mc, _run_seed(cfg.seed, env_name, "mc"))
        locations = _sample_seed_locations(
            mc_oracle, mc_oracle.workspace, cfg.n_locations, cfg.eps, cfg.r_min,
            _run_seed(cfg.seed, env_name, "locations"),
        )
        for algo in cfg.algorithms:
            areas = np.zeros((cfg.n_locations, len(marks)))
            for li, loc in enumerate(locations):
                oracle = make_oracle(env)
                overrides = dict(cfg.sampler)
                overrides.pop("seed", None)
                scfg = SamplerConfig(
                    eps=cfg.eps, r_min=cfg.r_min,
                    seed=_run_seed(cfg.seed, env_name, algo, li), **overrides,
                )
                log: list[int] = []
                if algo == "brm":
                    scfg.n_sample = cfg.budget
                    cover = brm(oracle, oracle.workspace, scfg, iteration_log=log)
                elif algo == "rbg":
                    scfg.max_bubbles = cfg.budget
                    cover = rbg(
                        oracle, oracle.workspace, loc, scfg,
                        Termination("bubble_count"), max_iterations=cfg.budget,
                        iteration_log=log,
                    )
                else:
                    scfg.max_bubbles = cfg.budget
                    cover = ebg(
                        oracle, loc, scfg, Termination("bubble_count"),
                        max_iterations=cfg.budget, iteration_log=log,
                    )
                for mi, snap in enumerate(_cover_snapshots(cover, log, marks)):
                    areas[li, mi] = _fraction_inside(points, snap, _seed_component(snap, loc))
            curves.append(
                AreaCurve(
                    env=env_name,
                    algorithm=algo,
                    iterations=marks,
                    q10=list(np.quantile(areas, 0.1, axis=0)),
                    median=list(np.quantile(areas, 0.5, axis=0)),
                    q90=list(np.quantile(areas, 0.9, axis=0)),
                )
            )
    return curves


def write_area_csv(curves: list[AreaCurve], path) -> None:
    lines = [AREA_CSV_HEADER]
    for c in sorted(curves, key=lambda c: (c.env, c.algorithm)):
        for it, a, b, d in zip(c.iterations, c.q10, c.median, c.q90):
            lines.append(f"{c.env},{c.algorithm},{it},{repr(float(a))},{repr(float(b))},{repr(float(d))}")
    Path(path).write_text("\n".join(lines) + "\n")
