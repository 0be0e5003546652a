"""Shared fixtures and independent geometric oracles used across the tests."""

from __future__ import annotations

import numpy as np
import pytest

from bubbleplan.distance_field import AnalyticScene, Box, DistanceOracle, Sphere, Workspace


def sample_in_ball(rng: np.random.Generator, center: np.ndarray, radius: float, n: int) -> np.ndarray:
    """Uniform samples from the interior of a ball."""
    center = np.asarray(center, dtype=float)
    m = center.shape[0]
    d = rng.normal(size=(n, m))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    rho = radius * rng.random(n) ** (1.0 / m)
    return center + d * rho[:, None]


def boundary_points(prim, n: int) -> np.ndarray:
    """Dense deterministic samples of a 2D primitive's boundary."""
    if isinstance(prim, Sphere):
        t = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
        return prim.center + prim.radius * np.column_stack([np.cos(t), np.sin(t)])
    lo, hi = prim.lower, prim.upper
    per = n // 4
    t = np.linspace(0.0, 1.0, per, endpoint=False)
    bottom = np.column_stack([lo[0] + t * (hi[0] - lo[0]), np.full(per, lo[1])])
    top = np.column_stack([hi[0] - t * (hi[0] - lo[0]), np.full(per, hi[1])])
    left = np.column_stack([np.full(per, lo[0]), hi[1] - t * (hi[1] - lo[1])])
    right = np.column_stack([np.full(per, hi[0]), lo[1] + t * (hi[1] - lo[1])])
    return np.vstack([bottom, right, top, left])


def brute_force_scene_distance(scene: AnalyticScene, pts: np.ndarray, n_boundary: int = 4000) -> np.ndarray:
    """Distance to the nearest obstacle boundary via dense boundary sampling.

    Overestimates the true distance by at most the boundary sampling gap,
    and is independent of the analytic signed-distance formulas.
    """
    pts = np.atleast_2d(pts)
    best = np.full(pts.shape[0], np.inf)
    for prim in scene.primitives:
        bp = boundary_points(prim, n_boundary)
        for lo in range(0, bp.shape[0], 1000):
            chunk = bp[lo : lo + 1000]
            d = np.linalg.norm(pts[:, None, :] - chunk[None, :, :], axis=2)
            np.minimum(best, d.min(axis=1), out=best)
    return best


@pytest.fixture
def square_workspace() -> Workspace:
    return Workspace(np.array([0.0, 0.0]), np.array([10.0, 10.0]))


@pytest.fixture
def empty_oracle(square_workspace) -> DistanceOracle:
    return DistanceOracle(AnalyticScene([], square_workspace))


@pytest.fixture
def sphere_oracle(square_workspace) -> DistanceOracle:
    scene = AnalyticScene([Sphere(np.array([5.0, 5.0]), 1.0)], square_workspace)
    return DistanceOracle(scene)


@pytest.fixture
def cluttered_oracle(square_workspace) -> DistanceOracle:
    scene = AnalyticScene(
        [
            Sphere(np.array([3.0, 3.0]), 0.8),
            Sphere(np.array([7.5, 6.5]), 1.1),
            Box(np.array([1.0, 6.0]), np.array([2.5, 8.5])),
            Box(np.array([5.5, 1.0]), np.array([8.0, 2.2])),
        ],
        square_workspace,
    )
    return DistanceOracle(scene)
