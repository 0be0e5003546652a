"""Unknown-environment extension: visibility-gated expansion with a simulated
range sensor.

A fine observation grid over the workspace records which cells have been seen
from any sensor pose so far (monotone: cells only flip unknown -> observed).
Bubble expansion is modified so that bubbles not yet fully visible become
"frontier" bubbles: they stay in the cover but are not expanded until a later
scan uncovers them. Planning targets the fully visible bubble closest to the
goal (graph weight plus a terminal distance-to-goal cost) until the goal
itself falls inside a fully visible bubble.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .bubbles import BubbleCover, SafeBubble, make_bubble, point_to_bubble_distance
from .distance_field import AnalyticScene, DistanceOracle, GridField, _as_point
from .errors import ExplorationStuckError, InvalidConfigError, SeedInfeasibleError
from .graph_planner import BubblePath, build_intersection_graph, containing_bubbles
from .pipeline import refine_path
from .samplers import SamplerConfig, expansion_directions
from .trajopt import BezierTrajectory, CostSpec

# Observation grid cells per axis.
_CELLS_2D = 256
_CELLS_3D = 64
# Weight of the terminal distance-to-goal cost when picking a target bubble.
_TERMINAL_WEIGHT = 1.0


class KnownRegion:
    """Observed mask over a fine cell grid of the workspace."""

    def __init__(self, workspace, cells_per_axis: int | None = None):
        self.workspace = workspace
        m = workspace.dim
        n = cells_per_axis or (_CELLS_2D if m == 2 else _CELLS_3D)
        self.shape = (n,) * m
        self.cell_size = workspace.extent / n
        self.observed = np.zeros(self.shape, dtype=bool)
        self.poses: list[np.ndarray] = []
        axes = [
            workspace.lower[i] + (np.arange(n) + 0.5) * self.cell_size[i]
            for i in range(m)
        ]
        self._centers = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        self._axes = axes

    @property
    def observed_count(self) -> int:
        return int(np.count_nonzero(self.observed))

    @property
    def observed_fraction(self) -> float:
        return float(np.count_nonzero(self.observed) / self.observed.size)

    def mark_points(self, pts: np.ndarray) -> None:
        idx = np.floor((pts - self.workspace.lower) / self.cell_size).astype(int)
        valid = np.all((idx >= 0) & (idx < np.array(self.shape)), axis=1)
        idx = idx[valid]
        if idx.size:
            self.observed[tuple(idx.T)] = True


def _ray_hits_analytic(scene: AnalyticScene, origin: np.ndarray, directions: np.ndarray) -> np.ndarray:
    """First-hit parameter per unit direction (inf when nothing is hit)."""
    t_hit = np.full(directions.shape[0], np.inf)
    for prim in scene.primitives:
        if hasattr(prim, "radius"):  # sphere
            oc = origin - prim.center
            b = directions @ oc
            c = oc @ oc - prim.radius**2
            disc = b * b - c
            ok = disc >= 0
            t = np.where(ok, -b - np.sqrt(np.maximum(disc, 0.0)), np.inf)
            t = np.where(t >= 0, t, np.inf)
            np.minimum(t_hit, t, out=t_hit)
        else:  # axis-aligned box: slab method
            with np.errstate(divide="ignore", invalid="ignore"):
                inv = 1.0 / directions
                t1 = (prim.lower - origin) * inv
                t2 = (prim.upper - origin) * inv
            t_near = np.nanmax(np.minimum(t1, t2), axis=1)
            t_far = np.nanmin(np.maximum(t1, t2), axis=1)
            ok = (t_near <= t_far) & (t_far >= 0) & (t_near >= 0)
            t = np.where(ok, t_near, np.inf)
            np.minimum(t_hit, t, out=t_hit)
    return t_hit


def _scan_directions(m: int, angular_resolution: float) -> np.ndarray:
    if m == 2:
        n = max(8, math.ceil(2.0 * math.pi / angular_resolution))
        angles = 2.0 * math.pi * np.arange(n) / n
        return np.column_stack([np.cos(angles), np.sin(angles)])
    n = max(32, math.ceil(4.0 * math.pi / angular_resolution**2))
    i = np.arange(n)
    z = 1.0 - 2.0 * (i + 0.5) / n
    rho = np.sqrt(1.0 - z * z)
    theta = math.pi * (1.0 + math.sqrt(5.0)) * i
    return np.column_stack([rho * np.cos(theta), rho * np.sin(theta), z])


def simulate_scan(
    scene: AnalyticScene | GridField,
    region: KnownRegion,
    pose,
    max_range: float,
    angular_resolution: float,
) -> KnownRegion:
    """Cast rays from the pose and mark cells observed up to the first
    obstacle hit or max_range. Analytic scenes intersect rays exactly; grid
    scenes march at half the cell size."""
    pose = _as_point(pose, region.workspace.dim)
    if float(scene.distance(pose[None, :])[0]) <= 0:
        raise InvalidConfigError("scan pose is inside an obstacle")
    dirs = _scan_directions(region.workspace.dim, angular_resolution)
    step = float(np.min(region.cell_size)) / 2.0

    if isinstance(scene, AnalyticScene):
        t_end = np.minimum(_ray_hits_analytic(scene, pose, dirs), max_range)
        for d, t in zip(dirs, t_end):
            ts = np.arange(0.0, t, step)
            pts = pose + ts[:, None] * d
            region.mark_points(np.vstack([pts, pose + t * d]))
    else:
        for d in dirs:
            ts = np.arange(0.0, max_range + step, step)
            pts = pose + ts[:, None] * d
            hit = np.flatnonzero(scene.distance(pts) <= 0.0)
            if hit.size:
                pts = pts[: hit[0] + 1]
            region.mark_points(pts)
    region.poses.append(pose.copy())
    return region


def is_fully_visible(bubble: SafeBubble, region: KnownRegion) -> bool:
    """True iff every grid cell whose center lies inside the bubble has been
    observed. Cells outside the workspace do not exist and are ignored."""
    lo_idx = np.floor(
        (bubble.center - bubble.radius - region.workspace.lower) / region.cell_size
    ).astype(int)
    hi_idx = np.ceil(
        (bubble.center + bubble.radius - region.workspace.lower) / region.cell_size
    ).astype(int)
    lo_idx = np.clip(lo_idx, 0, np.array(region.shape))
    hi_idx = np.clip(hi_idx, 0, np.array(region.shape))
    if np.any(lo_idx >= hi_idx):
        return True
    window = tuple(slice(a, b) for a, b in zip(lo_idx, hi_idx))
    centers = region._centers[window]
    inside = np.linalg.norm(centers - bubble.center, axis=-1) <= bubble.radius
    return bool(np.all(region.observed[window][inside]))


@dataclass
class FrontierCover:
    """Bubble cover with a per-bubble visibility flag."""

    cover: BubbleCover
    fully_visible: list[bool]

    @property
    def n_frontier(self) -> int:
        return sum(1 for v in self.fully_visible if not v)


@dataclass
class ExplorationState:
    """Mutable episode state threaded through explore_step calls."""

    oracle: DistanceOracle
    cfg: SamplerConfig
    pose: np.ndarray
    region: KnownRegion
    max_range: float = 4.0
    angular_resolution: float = 2.0 * math.pi / 2048
    v0: float = 1.0
    bubbles: list[SafeBubble] = field(default_factory=list)
    visible: list[bool] = field(default_factory=list)
    pending: list[int] = field(default_factory=list)
    rng: np.random.Generator | None = None
    _queued: set = field(default_factory=set)
    started: bool = False
    reached: bool = False

    def __post_init__(self):
        self.pose = np.asarray(self.pose, dtype=float)
        if self.rng is None:
            self.rng = np.random.default_rng(self.cfg.seed)

    @property
    def scene(self):
        return self.oracle.source

    def frontier_cover(self) -> FrontierCover:
        return FrontierCover(BubbleCover(list(self.bubbles), seed_index=0), list(self.visible))


def _expand_until_frontier(state: ExplorationState) -> None:
    """Run the visibility-gated expansion queue until only frontier bubbles
    remain (they are retained in the cover but not expanded)."""
    cfg = state.cfg
    m = state.oracle.dim
    max_bubbles = cfg.resolved_max_bubbles(m)

    def _key(center: np.ndarray) -> tuple:
        return tuple(np.round(center / 1e-9).astype(np.int64).tolist())

    heap: list[tuple[float, int, SafeBubble, int]] = []
    counter = 0

    def _enqueue(b: SafeBubble, member: int) -> None:
        nonlocal counter
        heapq.heappush(heap, (-b.radius, counter, b, member))
        counter += 1

    if not state.started:
        seed = make_bubble(state.oracle, state.pose, cfg.eps, cfg.r_min)
        if seed is None:
            raise SeedInfeasibleError("seed not in free space")
        state._queued.add(_key(seed.center))
        _enqueue(seed, -1)
        state.started = True
    for member in state.pending:
        _enqueue(state.bubbles[member], member)
    state.pending = []

    def _expand(bubble: SafeBubble) -> None:
        for direction in expansion_directions(m, cfg.n_explore, state.rng):
            y_new = bubble.center + bubble.radius * direction
            key = _key(y_new)
            if key in state._queued:
                continue
            state._queued.add(key)
            child = make_bubble(state.oracle, y_new, cfg.eps, cfg.r_min)
            if child is not None:
                _enqueue(child, -1)

    while heap and len(state.bubbles) < max_bubbles:
        _, _, current, member = heapq.heappop(heap)
        if member < 0:
            if state.bubbles:
                centers = np.array([b.center for b in state.bubbles])
                radii = np.array([b.radius for b in state.bubbles])
                depth = float(
                    np.min(np.linalg.norm(centers - current.center, axis=1) - radii)
                )
                if depth < -cfg.k_overlap * current.radius:
                    continue
            state.bubbles.append(current)
            state.visible.append(False)
            member = len(state.bubbles) - 1
        if is_fully_visible(current, state.region):
            state.visible[member] = True
            _expand(current)
        else:
            state.visible[member] = False
            state.pending.append(member)


def _plan_step(state: ExplorationState, goal: np.ndarray):
    """Choose a target among fully visible bubbles and refine a trajectory."""
    cover = BubbleCover(list(state.bubbles), seed_index=0)
    graph = build_intersection_graph(cover)
    visible = np.array(state.visible, dtype=bool)

    start_idxs = [
        int(i) for i in containing_bubbles(cover, state.pose) if visible[i]
    ]
    if not start_idxs:
        raise ExplorationStuckError("pose is not inside any fully visible bubble")

    # Dijkstra over the fully visible subgraph only: the agent moves through
    # verified space.
    n = len(cover)
    dist = np.full(n, np.inf)
    prev = np.full(n, -1, dtype=int)
    heap = []
    for s in start_idxs:
        dist[s] = 0.0
        heapq.heappush(heap, (0.0, s))
    while heap:
        d, u = heapq.heappop(heap)
        if d != dist[u]:
            continue
        for v, w in graph.adjacency[u]:
            if not visible[v]:
                continue
            nd = d + w
            if nd < dist[v]:
                dist[v] = nd
                prev[v] = u
                heapq.heappush(heap, (nd, v))

    goal_idxs = [int(i) for i in containing_bubbles(cover, goal) if visible[i]]
    reachable = np.isfinite(dist) & visible
    if goal_idxs and any(np.isfinite(dist[i]) for i in goal_idxs):
        target = min(goal_idxs, key=lambda i: (dist[i], i))
        endpoint = goal.copy()
        reached = True
    else:
        candidates = np.flatnonzero(reachable)
        if candidates.size == 0:
            raise ExplorationStuckError("no fully visible bubble is reachable")
        scores = [
            (
                dist[i]
                + _TERMINAL_WEIGHT * max(0.0, point_to_bubble_distance(goal, cover[i])),
                int(i),
            )
            for i in candidates
        ]
        target = min(scores)[1]
        b = cover[target]
        gap = goal - b.center
        norm = float(np.linalg.norm(gap))
        if norm <= b.radius:
            endpoint = goal.copy()
        else:
            # Nudged a hair inside the boundary so the endpoint stays in the
            # closed ball under floating-point roundoff.
            endpoint = b.center + gap * (b.radius * (1.0 - 1e-9) / norm)
        reached = False

    indices = [target]
    while prev[indices[-1]] >= 0:
        indices.append(int(prev[indices[-1]]))
    indices.reverse()
    path = BubblePath(indices, float(dist[target]))
    result = refine_path(cover, path, state.pose, endpoint, CostSpec(d_cost=1), v0=state.v0)
    return path, result.trajectory, endpoint, reached


def explore_step(state: ExplorationState, goal) -> tuple[FrontierCover, BubblePath, BezierTrajectory]:
    """One sense-expand-plan-move cycle.

    Scans from the current pose, re-runs the visibility-gated expansion,
    plans either to the goal (when it lies in a fully visible bubble) or to
    the fully visible bubble closest to the goal, and teleports the agent
    along the planned trajectory.
    """
    goal = _as_point(goal, state.oracle.dim)
    simulate_scan(state.scene, state.region, state.pose, state.max_range, state.angular_resolution)
    _expand_until_frontier(state)
    path, traj, endpoint, reached = _plan_step(state, goal)
    state.pose = endpoint
    state.reached = reached
    return state.frontier_cover(), path, traj


def explore_episode(
    oracle: DistanceOracle,
    start,
    goal,
    cfg: SamplerConfig,
    max_steps: int = 20,
    max_range: float = 4.0,
    angular_resolution: float = 2.0 * math.pi / 2048,
) -> tuple[list[dict], bool]:
    """Run explore_step until the goal is reached or the step budget ends.

    Returns the per-step trace records and whether the goal was reached.
    """
    region = KnownRegion(oracle.workspace)
    state = ExplorationState(
        oracle=oracle,
        cfg=cfg,
        pose=np.asarray(start, dtype=float),
        region=region,
        max_range=max_range,
        angular_resolution=angular_resolution,
    )
    trace: list[dict] = []
    reached = False
    for step in range(1, max_steps + 1):
        fcover, _, _ = explore_step(state, goal)
        reached = bool(state.reached)
        trace.append(
            {
                "step": step,
                "pose": [float(v) for v in state.pose],
                "n_bubbles": len(fcover.cover),
                "n_frontier": fcover.n_frontier,
                "observed_fraction": state.region.observed_fraction,
                "reached": reached,
            }
        )
        if reached:
            break
    return trace, reached
