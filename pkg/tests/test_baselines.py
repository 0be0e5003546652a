"""PRM*/RRT* baseline tests with exact query accounting."""

import math

import numpy as np
import pytest

from bubbleplan.baselines import (
    BaselineConfig,
    edge_collision_check,
    prm_star,
    rrt_star,
)
from bubbleplan.distance_field import AnalyticScene, Box, DistanceOracle, Workspace
from bubbleplan.errors import SeedInfeasibleError


class _LoggingOracle(DistanceOracle):
    """Records (batch size, first point, last point) per query batch."""

    def __init__(self, source):
        super().__init__(source)
        self.batches = []

    def query_many(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        self.batches.append((pts.shape[0], pts[0].copy(), pts[-1].copy()))
        return super().query_many(pts)

    def query(self, y):
        p = np.asarray(y, dtype=float)
        self.batches.append((1, p.copy(), p.copy()))
        return super().query(p)


@pytest.fixture
def walled_oracle():
    # Vertical wall splits the square except for nothing: fully walled off.
    ws = Workspace(np.zeros(2), np.full(2, 10.0))
    scene = AnalyticScene([Box(np.array([4.8, 0.0]), np.array([5.2, 10.0]))], ws)
    return DistanceOracle(scene)


class TestEdgeCollisionCheck:
    def test_query_point_count(self, empty_oracle):
        # Length 1.0 at resolution 0.05: ceil(20)+1 = 21 points.
        assert edge_collision_check(empty_oracle, [1.0, 1.0], [2.0, 1.0], 0.05, 0.0)
        assert empty_oracle.total_queries == 21

    def test_empty_scene_passes(self, empty_oracle):
        assert edge_collision_check(empty_oracle, [0.5, 0.5], [9.5, 9.5], 0.05, 0.1)

    def test_wall_crossing_fails(self, walled_oracle):
        # The segment crosses the wall: analytic intersection of the segment
        # y=5 with the slab x in [4.8, 5.2] is nonempty, so a sampled point
        # at resolution 0.05 must land inside it.
        assert not edge_collision_check(walled_oracle, [1.0, 5.0], [9.0, 5.0], 0.05, 0.0)

    def test_degenerate_edge_single_point(self, empty_oracle):
        assert edge_collision_check(empty_oracle, [1.0, 1.0], [1.0, 1.0], 0.05, 0.0)
        assert empty_oracle.total_queries == 1


class TestPRMStar:
    def test_near_straight_in_empty_square(self, empty_oracle):
        cfg = BaselineConfig(n_samples=150, eps=0.1, seed=0)
        res = prm_star(empty_oracle, empty_oracle.workspace, cfg, [1.0, 1.0], [9.0, 9.0])
        assert res.success
        straight = math.hypot(8.0, 8.0)
        assert res.length <= 1.05 * straight

    def test_walled_off_goal_fails_gracefully(self, walled_oracle):
        cfg = BaselineConfig(n_samples=80, eps=0.1, seed=1)
        res = prm_star(walled_oracle, walled_oracle.workspace, cfg, [1.0, 5.0], [9.0, 5.0])
        assert not res.success
        assert res.length == math.inf

    def test_seed_determinism(self, cluttered_oracle):
        cfg = BaselineConfig(n_samples=100, eps=0.1, seed=2)
        a = prm_star(cluttered_oracle, cluttered_oracle.workspace, cfg, [0.5, 0.5], [9.5, 9.5])
        b = prm_star(cluttered_oracle, cluttered_oracle.workspace, cfg, [0.5, 0.5], [9.5, 9.5])
        assert a.success == b.success
        assert np.array_equal(a.points, b.points)

    def test_invalid_start_raises(self, cluttered_oracle):
        cfg = BaselineConfig(n_samples=10, eps=0.1, seed=3)
        with pytest.raises(SeedInfeasibleError):
            prm_star(cluttered_oracle, cluttered_oracle.workspace, cfg, [3.0, 3.0], [9.0, 9.0])

    def test_path_collision_free_at_finer_recheck(self, cluttered_oracle):
        cfg = BaselineConfig(n_samples=150, eps=0.1, seed=4)
        res = prm_star(cluttered_oracle, cluttered_oracle.workspace, cfg, [0.5, 0.5], [9.5, 9.5])
        assert res.success
        fresh = DistanceOracle(cluttered_oracle.source)
        for a, b in zip(res.points, res.points[1:]):
            assert edge_collision_check(fresh, a, b, cfg.edge_resolution / 5, cfg.eps)


class TestRRTStar:
    def test_near_straight_in_empty_square(self, empty_oracle):
        cfg = BaselineConfig(n_samples=400, eps=0.1, seed=5)
        res = rrt_star(empty_oracle, empty_oracle.workspace, cfg, [1.0, 1.0], [9.0, 9.0])
        assert res.success
        assert res.length <= 1.05 * math.hypot(8.0, 8.0)

    def test_walled_off_goal_fails_gracefully(self, walled_oracle):
        cfg = BaselineConfig(n_samples=150, eps=0.1, seed=6)
        res = rrt_star(walled_oracle, walled_oracle.workspace, cfg, [1.0, 5.0], [9.0, 5.0])
        assert not res.success

    def test_seed_determinism(self, cluttered_oracle):
        cfg = BaselineConfig(n_samples=200, eps=0.1, seed=7)
        a = rrt_star(cluttered_oracle, cluttered_oracle.workspace, cfg, [0.5, 0.5], [9.5, 9.5])
        b = rrt_star(cluttered_oracle, cluttered_oracle.workspace, cfg, [0.5, 0.5], [9.5, 9.5])
        assert a.success == b.success
        if a.success:
            assert np.array_equal(a.points, b.points)

    def test_path_collision_free_at_finer_recheck(self, cluttered_oracle):
        cfg = BaselineConfig(n_samples=400, eps=0.1, seed=8)
        res = rrt_star(cluttered_oracle, cluttered_oracle.workspace, cfg, [0.5, 0.5], [9.5, 9.5])
        assert res.success
        fresh = DistanceOracle(cluttered_oracle.source)
        for a, b in zip(res.points, res.points[1:]):
            assert edge_collision_check(fresh, a, b, cfg.edge_resolution / 5, cfg.eps)


class TestQueryAccounting:
    def test_every_query_is_attributable(self, cluttered_oracle):
        # Each batch is either a single validity query or an edge check whose
        # point count is exactly ceil(len/res)+1 for its endpoints.
        oracle = _LoggingOracle(cluttered_oracle.source)
        cfg = BaselineConfig(n_samples=60, eps=0.1, seed=9)
        prm_star(oracle, oracle.workspace, cfg, [0.5, 0.5], [9.5, 9.5])
        total = 0
        edge_batches = 0
        for size, first, last in oracle.batches:
            total += size
            if size > 1:
                expected = math.ceil(np.linalg.norm(last - first) / cfg.edge_resolution) + 1
                assert size == expected
                edge_batches += 1
            else:
                assert size == 1
        assert total == oracle.total_queries
        assert edge_batches > 0
