"""Bubble cover construction: BRM, RBG, and EBG samplers.

All three samplers own a single RNG stream derived from the config seed, so
identical (oracle, config, seed) runs produce bit-identical covers. The
optional ``iteration_log`` argument records the bubble count after each
iteration (sample for BRM, expansion attempt for RBG, queue pop for EBG),
which the benchmark's area sweep uses to snapshot covers by prefix.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.transform import Rotation

from .bubbles import CENTER_QUANTIZATION, BubbleCover, SafeBubble, make_bubble
from .distance_field import DistanceOracle, Workspace, _as_point
from .errors import InvalidConfigError, SeedInfeasibleError


@dataclass
class SamplerConfig:
    """Knobs shared by the bubble samplers.

    ``max_bubbles`` of None resolves to 1000 in 2D and 3000 in 3D;
    ``max_rejections`` of None resolves to 10 * max_bubbles.
    """

    eps: float = 0.1
    r_min: float = 0.1
    n_sample: int = 100
    n_explore: int = 4
    k_overlap: float = 0.5
    inflation: float = 0.1
    max_bubbles: int | None = None
    max_rejections: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.eps < 0:
            raise InvalidConfigError("eps must be >= 0")
        if self.r_min <= 0:
            raise InvalidConfigError("r_min must be > 0")
        if self.n_explore < 2:
            raise InvalidConfigError("n_explore must be >= 2")
        if not 0.0 <= self.k_overlap <= 1.0:
            raise InvalidConfigError("k_overlap must be in [0, 1]")
        if self.inflation < 0:
            raise InvalidConfigError("inflation must be >= 0")

    def resolved_max_bubbles(self, dim: int) -> int:
        if self.max_bubbles is not None:
            return self.max_bubbles
        return 1000 if dim == 2 else 3000

    def resolved_max_rejections(self, dim: int) -> int:
        if self.max_rejections is not None:
            return self.max_rejections
        return 10 * self.resolved_max_bubbles(dim)


@dataclass
class Termination:
    """Stop condition for the iterative samplers.

    ``bubble_count`` stops at the config's max_bubbles, ``goal_contained``
    stops once the goal point falls inside a bubble, and ``queue_empty``
    (EBG only) runs until the expansion queue drains. The max_bubbles budget
    is always enforced as a hard cap.
    """

    mode: str = "bubble_count"
    goal: np.ndarray | None = None

    def __post_init__(self):
        if self.mode not in ("bubble_count", "goal_contained", "queue_empty"):
            raise InvalidConfigError(f"unknown termination mode {self.mode!r}")
        if (self.goal is not None) != (self.mode == "goal_contained"):
            raise InvalidConfigError("goal must be given iff mode is 'goal_contained'")
        if self.goal is not None:
            self.goal = np.asarray(self.goal, dtype=float)


class _Balls:
    """Growing center/radius arrays with vectorized boundary distances."""

    def __init__(self, dim: int):
        self._centers = np.empty((16, dim))
        self._radii = np.empty(16)
        self.n = 0

    def add(self, center: np.ndarray, radius: float) -> None:
        if self.n == self._centers.shape[0]:
            self._centers = np.concatenate([self._centers, np.empty_like(self._centers)])
            self._radii = np.concatenate([self._radii, np.empty_like(self._radii)])
        self._centers[self.n] = center
        self._radii[self.n] = radius
        self.n += 1

    def boundary_distances(self, y: np.ndarray) -> np.ndarray:
        return (
            np.linalg.norm(self._centers[: self.n] - y, axis=1) - self._radii[: self.n]
        )


def _goal_reached(term: Termination, bubble: SafeBubble) -> bool:
    return term.mode == "goal_contained" and bubble.contains_point(term.goal)


def brm(
    oracle: DistanceOracle,
    workspace: Workspace,
    cfg: SamplerConfig,
    iteration_log: list[int] | None = None,
) -> BubbleCover:
    """Bubble roadmap: n_sample uniform centers, keep those above r_min.

    Makes exactly n_sample oracle queries; bubble order equals sampling
    order.
    """
    rng = np.random.default_rng(cfg.seed)
    samples = workspace.sample(rng, cfg.n_sample)
    radii = (oracle.query_many(samples) - cfg.eps) / oracle.lipschitz
    bubbles = []
    for y, r in zip(samples, radii):
        if r > cfg.r_min:
            bubbles.append(SafeBubble(y.copy(), float(r)))
        if iteration_log is not None:
            iteration_log.append(len(bubbles))
    return BubbleCover(bubbles)


def rbg(
    oracle: DistanceOracle,
    workspace: Workspace,
    y_seed,
    cfg: SamplerConfig,
    term: Termination,
    max_iterations: int | None = None,
    iteration_log: list[int] | None = None,
) -> BubbleCover:
    """Rapidly exploring bubble graph.

    Starting from a seed bubble, repeatedly draw a point outside the current
    bubbles (from the workspace box inflated by cfg.inflation per side),
    steer to the perimeter of the nearest bubble, and keep the new bubble if
    it passes the size gate. One iteration is one steered candidate.
    """
    y_seed = _as_point(y_seed, oracle.dim)
    seed_bubble = make_bubble(oracle, y_seed, cfg.eps, cfg.r_min)
    if seed_bubble is None:
        raise SeedInfeasibleError("seed not in free space")
    max_bubbles = cfg.resolved_max_bubbles(oracle.dim)
    max_rejections = cfg.resolved_max_rejections(oracle.dim)

    rng = np.random.default_rng(cfg.seed)
    balls = _Balls(oracle.dim)
    bubbles: list[SafeBubble] = []

    def _push(b: SafeBubble) -> None:
        bubbles.append(b)
        balls.add(b.center, b.radius)

    _push(seed_bubble)
    if _goal_reached(term, seed_bubble):
        return BubbleCover(bubbles, seed_index=0)

    pad = cfg.inflation * workspace.extent
    lo, hi = workspace.lower - pad, workspace.upper + pad
    failures = 0
    saturated = False
    iterations = 0
    while len(bubbles) < max_bubbles:
        if max_iterations is not None and iterations >= max_iterations:
            break
        # Rejection-sample a point outside the union of current bubbles.
        y_rand = None
        while failures < max_rejections:
            cand = rng.uniform(lo, hi)
            if np.all(balls.boundary_distances(cand) > 0.0):
                y_rand = cand
                break
            failures += 1
        if y_rand is None:
            saturated = True
            break

        dists = balls.boundary_distances(y_rand)
        near = int(np.argmin(dists))
        y_near = balls._centers[near]
        r_near = balls._radii[near]
        direction = (y_rand - y_near) / np.linalg.norm(y_rand - y_near)
        y_new = y_near + r_near * direction
        iterations += 1

        bubble = make_bubble(oracle, y_new, cfg.eps, cfg.r_min)
        if bubble is None:
            failures += 1
        else:
            failures = 0
            _push(bubble)
            if _goal_reached(term, bubble):
                break
        if iteration_log is not None:
            iteration_log.append(len(bubbles))
    return BubbleCover(bubbles, seed_index=0, saturated=saturated)


def expansion_directions(m: int, n_explore: int, rng: np.random.Generator) -> np.ndarray:
    """n_explore**m unit vectors used for one EBG expansion.

    2D: uniformly spaced angles with a random phase per call. 3D: a
    Fibonacci sphere lattice under a uniform random rotation per call.
    """
    if m == 2:
        phase = rng.uniform(0.0, 2.0 * math.pi)
        return _directions_2d(n_explore**2, phase)
    if m == 3:
        quat = rng.normal(size=4)
        rot = Rotation.from_quat(quat / np.linalg.norm(quat)).as_matrix()
        return _fibonacci_sphere(n_explore**3) @ rot.T
    raise InvalidConfigError("expansion directions are defined for m in {2, 3}")


def _directions_2d(count: int, phase: float) -> np.ndarray:
    angles = phase + 2.0 * math.pi * np.arange(count) / count
    return np.column_stack([np.cos(angles), np.sin(angles)])


def _fibonacci_sphere(count: int) -> np.ndarray:
    i = np.arange(count)
    z = 1.0 - 2.0 * (i + 0.5) / count
    rho = np.sqrt(1.0 - z * z)
    theta = math.pi * (1.0 + math.sqrt(5.0)) * i
    pts = np.column_stack([rho * np.cos(theta), rho * np.sin(theta), z])
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


def ebg(
    oracle: DistanceOracle,
    y_seed,
    cfg: SamplerConfig,
    term: Termination,
    max_iterations: int | None = None,
    iteration_log: list[int] | None = None,
) -> BubbleCover:
    """Expansive bubble graph.

    A priority queue in descending radius order holds candidate bubbles. The
    largest is popped (one iteration), discarded if its center sits deeper
    than k_overlap times its radius inside the existing cover, and otherwise
    confirmed and expanded into n_explore**m children at distance radius
    along fresh unit directions. Children centers within 1e-9 of an already
    queued center are dropped before querying; queue ties break by insertion
    order.
    """
    y_seed = _as_point(y_seed, oracle.dim)
    seed_bubble = make_bubble(oracle, y_seed, cfg.eps, cfg.r_min)
    if seed_bubble is None:
        raise SeedInfeasibleError("seed not in free space")
    m = oracle.dim
    max_bubbles = cfg.resolved_max_bubbles(m)
    rng = np.random.default_rng(cfg.seed)

    heap: list[tuple[float, int, SafeBubble]] = []
    counter = 0

    def _enqueue(b: SafeBubble) -> None:
        nonlocal counter
        heapq.heappush(heap, (-b.radius, counter, b))
        counter += 1

    def _key(center: np.ndarray) -> tuple:
        return tuple(np.round(center / CENTER_QUANTIZATION).astype(np.int64).tolist())

    queued = {_key(seed_bubble.center)}
    _enqueue(seed_bubble)

    balls = _Balls(m)
    bubbles: list[SafeBubble] = []
    iterations = 0
    while heap and len(bubbles) < max_bubbles:
        if max_iterations is not None and iterations >= max_iterations:
            break
        _, _, current = heapq.heappop(heap)
        iterations += 1
        if bubbles:
            depth = float(np.min(balls.boundary_distances(current.center)))
            if depth < -cfg.k_overlap * current.radius:
                if iteration_log is not None:
                    iteration_log.append(len(bubbles))
                continue
        bubbles.append(current)
        balls.add(current.center, current.radius)
        if _goal_reached(term, current):
            if iteration_log is not None:
                iteration_log.append(len(bubbles))
            break
        for direction in expansion_directions(m, cfg.n_explore, rng):
            y_new = current.center + current.radius * direction
            key = _key(y_new)
            if key in queued:
                continue
            queued.add(key)
            child = make_bubble(oracle, y_new, cfg.eps, cfg.r_min)
            if child is not None:
                _enqueue(child)
        if iteration_log is not None:
            iteration_log.append(len(bubbles))
    return BubbleCover(bubbles, seed_index=0)
