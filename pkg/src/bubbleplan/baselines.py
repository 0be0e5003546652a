"""PRM* and RRT* baselines with edge-sampled collision checking.

Both planners validate configurations and edges by querying the distance
oracle, so their query counters are directly comparable with the bubble
samplers'. Connection radii follow the optimal-variant shrinkage
gamma * (log n / n)**(1/m); gamma of None resolves to 2.0 times the largest
workspace extent, standing in for the measure-based constant.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .distance_field import DistanceOracle, Workspace, _as_point
from .errors import InvalidConfigError, SeedInfeasibleError


@dataclass
class BaselineConfig:
    n_samples: int = 200
    edge_resolution: float = 0.05
    eps: float = 0.1
    gamma: float | None = None
    steer_eta: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.edge_resolution <= 0:
            raise InvalidConfigError("edge_resolution must be > 0")
        if self.gamma is not None and self.gamma <= 0:
            raise InvalidConfigError("gamma must be > 0")

    def resolved_gamma(self, workspace: Workspace) -> float:
        if self.gamma is not None:
            return self.gamma
        return 2.0 * float(np.max(workspace.extent))

    def resolved_steer_eta(self, workspace: Workspace) -> float:
        if self.steer_eta is not None:
            return self.steer_eta
        return 0.1 * float(np.max(workspace.extent))


@dataclass
class BaselineResult:
    """Planner output; failures are results, not errors, so the benchmark can
    compute success rates."""

    success: bool
    points: np.ndarray | None = None

    @property
    def length(self) -> float:
        if not self.success:
            return math.inf
        return float(np.sum(np.linalg.norm(np.diff(self.points, axis=0), axis=1)))


def _connection_radius(gamma: float, n: int, m: int) -> float:
    n = max(n, 2)
    return gamma * (math.log(n) / n) ** (1.0 / m)


def edge_collision_check(oracle: DistanceOracle, a, b, resolution: float, eps: float) -> bool:
    """Check a straight edge by querying ceil(len/res)+1 evenly spaced points
    (both endpoints included; one counted query per point)."""
    if resolution <= 0:
        raise InvalidConfigError("resolution must be > 0")
    a = _as_point(a, oracle.dim)
    b = _as_point(b, oracle.dim)
    n_pts = math.ceil(np.linalg.norm(b - a) / resolution) + 1
    frac = np.linspace(0.0, 1.0, n_pts)[:, None]
    pts = a * (1.0 - frac) + b * frac
    return bool(np.all(oracle.query_many(pts) >= eps))


def _sample_valid(
    oracle: DistanceOracle,
    workspace: Workspace,
    rng: np.random.Generator,
    n: int,
    eps: float,
) -> np.ndarray:
    out = []
    attempts = 0
    cap = max(1000 * n, 10_000)
    while len(out) < n:
        if attempts >= cap:
            raise SeedInfeasibleError("could not draw enough valid samples")
        y = workspace.sample(rng, 1)[0]
        attempts += 1
        if oracle.query(y) >= eps:
            out.append(y)
    return np.array(out)


def prm_star(
    oracle: DistanceOracle,
    workspace: Workspace,
    cfg: BaselineConfig,
    y_s,
    y_g,
) -> BaselineResult:
    """PRM*: n valid uniform samples plus start/goal, edges within the
    shrinking connection radius, Dijkstra over edge lengths."""
    y_s = _as_point(y_s, oracle.dim)
    y_g = _as_point(y_g, oracle.dim)
    if oracle.query(y_s) < cfg.eps:
        raise SeedInfeasibleError("start point is not valid")
    if oracle.query(y_g) < cfg.eps:
        raise SeedInfeasibleError("goal point is not valid")

    rng = np.random.default_rng(cfg.seed)
    samples = _sample_valid(oracle, workspace, rng, cfg.n_samples, cfg.eps)
    nodes = np.vstack([y_s[None, :], y_g[None, :], samples])
    n = nodes.shape[0]
    radius = _connection_radius(cfg.resolved_gamma(workspace), n, oracle.dim)

    adjacency: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    for i in range(n):
        dists = np.linalg.norm(nodes[i + 1 :] - nodes[i], axis=1)
        for off in np.flatnonzero(dists <= radius):
            j = i + 1 + int(off)
            if edge_collision_check(oracle, nodes[i], nodes[j], cfg.edge_resolution, cfg.eps):
                w = float(dists[off])
                adjacency[i].append((j, w))
                adjacency[j].append((i, w))

    dist = np.full(n, np.inf)
    prev = np.full(n, -1, dtype=int)
    dist[0] = 0.0
    heap = [(0.0, 0)]
    while heap:
        d, u = heapq.heappop(heap)
        if d != dist[u]:
            continue
        if u == 1:
            break
        for v, w in adjacency[u]:
            nd = d + w
            if nd < dist[v]:
                dist[v] = nd
                prev[v] = u
                heapq.heappush(heap, (nd, v))
    if not np.isfinite(dist[1]):
        return BaselineResult(False)
    order = [1]
    while order[-1] != 0:
        order.append(int(prev[order[-1]]))
    return BaselineResult(True, nodes[order[::-1]])


def rrt_star(
    oracle: DistanceOracle,
    workspace: Workspace,
    cfg: BaselineConfig,
    y_s,
    y_g,
) -> BaselineResult:
    """RRT*: steer toward uniform samples, connect through the lowest-cost
    valid neighbor, rewire within the shrinking radius, return the best
    branch that connects to the goal."""
    y_s = _as_point(y_s, oracle.dim)
    y_g = _as_point(y_g, oracle.dim)
    if oracle.query(y_s) < cfg.eps:
        raise SeedInfeasibleError("start point is not valid")
    if oracle.query(y_g) < cfg.eps:
        raise SeedInfeasibleError("goal point is not valid")

    rng = np.random.default_rng(cfg.seed)
    eta = cfg.resolved_steer_eta(workspace)
    gamma = cfg.resolved_gamma(workspace)
    m = oracle.dim

    nodes = [y_s]
    parent = [-1]
    cost = [0.0]
    children: list[set[int]] = [set()]
    goal_links: dict[int, float] = {}

    def _propagate(root: int) -> None:
        stack = [root]
        while stack:
            u = stack.pop()
            for c in children[u]:
                cost[c] = cost[u] + float(np.linalg.norm(nodes[c] - nodes[u]))
                stack.append(c)

    for _ in range(cfg.n_samples):
        y_rand = workspace.sample(rng, 1)[0]
        pts = np.asarray(nodes)
        dists = np.linalg.norm(pts - y_rand, axis=1)
        nearest = int(np.argmin(dists))
        gap = dists[nearest]
        if gap < 1e-12:
            continue
        step = min(eta, gap)
        y_new = nodes[nearest] + (y_rand - nodes[nearest]) * (step / gap)
        if oracle.query(y_new) < cfg.eps:
            continue

        radius = _connection_radius(gamma, len(nodes) + 1, m)
        near_dists = np.linalg.norm(pts - y_new, axis=1)
        near = [int(i) for i in np.flatnonzero(near_dists <= radius)]
        if nearest not in near:
            near.append(nearest)

        # Choose the parent minimizing arrival cost among valid connections.
        best_parent = -1
        best_cost = math.inf
        for idx in sorted(near, key=lambda k: (cost[k] + near_dists[k], k)):
            candidate = cost[idx] + float(near_dists[idx])
            if candidate >= best_cost:
                break
            if edge_collision_check(oracle, nodes[idx], y_new, cfg.edge_resolution, cfg.eps):
                best_parent = idx
                best_cost = candidate
                break
        if best_parent < 0:
            continue
        nodes.append(y_new)
        parent.append(best_parent)
        cost.append(best_cost)
        children.append(set())
        new_idx = len(nodes) - 1
        children[best_parent].add(new_idx)

        # Rewire neighbors through the new node when it lowers their cost.
        for idx in near:
            through = best_cost + float(near_dists[idx])
            if through < cost[idx] and edge_collision_check(
                oracle, y_new, nodes[idx], cfg.edge_resolution, cfg.eps
            ):
                children[parent[idx]].discard(idx)
                parent[idx] = new_idx
                children[new_idx].add(idx)
                cost[idx] = through
                _propagate(idx)

        # Record a validated connection from the new node to the goal.
        goal_gap = float(np.linalg.norm(y_g - y_new))
        if goal_gap <= eta and edge_collision_check(
            oracle, y_new, y_g, cfg.edge_resolution, cfg.eps
        ):
            goal_links[new_idx] = goal_gap

    if not goal_links:
        return BaselineResult(False)
    best_goal_node = min(goal_links, key=lambda i: (cost[i] + goal_links[i], i))
    chain = [best_goal_node]
    while chain[-1] != 0:
        chain.append(parent[chain[-1]])
    pts = [nodes[i] for i in chain[::-1]] + [y_g]
    return BaselineResult(True, np.asarray(pts))
