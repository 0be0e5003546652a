"""Safe bubble construction and ball geometry tests."""

import json
import math

import numpy as np
import pytest

from bubbleplan.bubbles import (
    BubbleCover,
    SafeBubble,
    contains,
    cover_from_dict,
    cover_to_dict,
    hausdorff,
    make_bubble,
    overlaps,
    point_to_bubble_distance,
)
from bubbleplan.distance_field import AnalyticScene, DistanceOracle, Sphere, Workspace

from conftest import sample_in_ball


def _b(cx, cy, r):
    return SafeBubble(np.array([cx, cy], dtype=float), r)


def _oracle_with_value(value: float, lipschitz: float = 1.0) -> DistanceOracle:
    """Oracle whose query at (3, 5) returns exactly `value` (sphere geometry)."""
    ws = Workspace(np.zeros(2), np.full(2, 10.0))
    scene = AnalyticScene([Sphere(np.array([3.0, 5.0 + value + 1.0]), 1.0)], ws)
    return DistanceOracle(scene, lipschitz=lipschitz)


class TestMakeBubble:
    def test_radius_from_clearance(self):
        oracle = _oracle_with_value(2.0)
        b = make_bubble(oracle, [3.0, 5.0], eps=0.5, r_min=0.1)
        assert b is not None
        assert b.radius == pytest.approx(1.5, abs=1e-12)

    def test_size_gate_returns_none(self):
        oracle = _oracle_with_value(2.0)
        assert make_bubble(oracle, [3.0, 5.0], eps=0.5, r_min=2.0) is None

    def test_lipschitz_scales_radius(self):
        oracle = _oracle_with_value(2.0, lipschitz=2.0)
        b = make_bubble(oracle, [3.0, 5.0], eps=0.0, r_min=0.1)
        assert b.radius == pytest.approx(1.0, abs=1e-12)

    def test_exactly_one_query(self):
        oracle = _oracle_with_value(2.0)
        make_bubble(oracle, [3.0, 5.0], eps=0.0, r_min=0.1)
        assert oracle.total_queries == 1


class TestBallGeometry:
    def test_point_distance_outside(self):
        assert point_to_bubble_distance([3.0, 0.0], _b(0, 0, 1)) == pytest.approx(2.0)

    def test_point_distance_inside(self):
        assert point_to_bubble_distance([0.5, 0.0], _b(0, 0, 1)) == pytest.approx(-0.5)

    def test_point_distance_boundary(self):
        assert point_to_bubble_distance([0.0, 1.0], _b(0, 0, 1)) == pytest.approx(0.0)

    def test_overlap_and_not_contained(self):
        assert overlaps(_b(0, 0, 1), _b(1.5, 0, 1))
        assert not contains(_b(0, 0, 1), _b(1.5, 0, 1))

    def test_concentric_containment(self):
        assert contains(_b(0, 0, 1), _b(0, 0, 2))
        assert not contains(_b(0, 0, 2), _b(0, 0, 1))

    def test_tangent_pair_does_not_overlap(self):
        assert not overlaps(_b(0, 0, 1), _b(2.0, 0, 1))


class TestHausdorff:
    def test_overlapping_pair_matches_dense_sup(self):
        bi, bj = _b(0, 0, 1), _b(1.5, 0, 1)
        assert hausdorff(bi, bj) == pytest.approx(1.5, abs=1e-12)
        # Independent check: sup over dense interior samples of the
        # boundary distance to the other bubble.
        rng = np.random.default_rng(0)
        pts = sample_in_ball(rng, bi.center, bi.radius, 10_000)
        sup = max(point_to_bubble_distance(p, bj) for p in pts)
        assert abs(hausdorff(bi, bj) - sup) < 0.05

    def test_identical_bubbles(self):
        assert hausdorff(_b(2, 3, 0.7), _b(2, 3, 0.7)) == 0.0

    def test_nested_pair_uses_formula_verbatim(self):
        # |0 + 1 - 2| = 1 even though the set-theoretic value would be 0.
        assert hausdorff(_b(0, 0, 1), _b(0, 0, 2)) == pytest.approx(1.0)

    def test_sup_consistency_on_random_overlapping_pairs(self):
        # For overlapping non-nested pairs the formula equals the true sup;
        # brute force over dense boundary samples agrees within 2x the
        # sampling resolution.
        rng = np.random.default_rng(4)
        checked = 0
        while checked < 100:
            ci = rng.uniform(0, 10, 2)
            cj = rng.uniform(0, 10, 2)
            ri, rj = rng.uniform(0.3, 2.0, 2)
            bi, bj = SafeBubble(ci, ri), SafeBubble(cj, rj)
            gap = np.linalg.norm(ci - cj)
            if not (abs(ri - rj) < gap < ri + rj):
                continue
            checked += 1
            n = 10_000
            t = np.linspace(0, 2 * np.pi, n, endpoint=False)
            boundary = ci + ri * np.column_stack([np.cos(t), np.sin(t)])
            sup = np.max(np.linalg.norm(boundary - cj, axis=1) - rj)
            resolution = 2 * np.pi * ri / n
            assert abs(hausdorff(bi, bj) - sup) <= 2 * resolution


class TestTheorems:
    def test_safety_of_constructed_bubbles(self, cluttered_oracle):
        # Every point inside a constructed bubble keeps at least eps
        # clearance (sampled check of the safety certificate).
        rng = np.random.default_rng(5)
        eps = 0.2
        built = 0
        while built < 50:
            y = rng.uniform(0, 10, 2)
            b = make_bubble(cluttered_oracle, y, eps=eps, r_min=0.05)
            if b is None:
                continue
            built += 1
            pts = sample_in_ball(rng, b.center, b.radius, 1000)
            values = cluttered_oracle.query_many(pts)
            assert np.min(values) >= eps - 1e-9

    def test_random_bubbles_never_strictly_nest(self, cluttered_oracle):
        # Containment requires ||c1-c2|| <= |r1-r2|, and the radii gap of two
        # bubbles from one 1-Lipschitz field never exceeds the center gap, so
        # strict nesting cannot occur.
        rng = np.random.default_rng(6)
        centers = rng.uniform(0, 10, size=(4000, 2))
        radii = (cluttered_oracle.query_many(centers) - 0.05) / cluttered_oracle.lipschitz
        keep = radii > 0.01
        centers, radii = centers[keep], radii[keep]
        n_pairs = 100_000
        ii = rng.integers(0, len(centers), n_pairs)
        jj = rng.integers(0, len(centers), n_pairs)
        distinct = ii != jj
        ii, jj = ii[distinct], jj[distinct]
        gaps = np.linalg.norm(centers[ii] - centers[jj], axis=1)
        rdiff = np.abs(radii[ii] - radii[jj])
        contained = gaps <= rdiff
        # containment only at exact equality, never strictly
        assert np.all(np.abs(gaps[contained] - rdiff[contained]) <= 1e-12)
        assert np.count_nonzero(gaps < rdiff - 1e-12) == 0


class TestCoverFiles:
    def test_roundtrip(self):
        cover = BubbleCover([_b(1, 2, 0.5), _b(3, 4, 1.5)], seed_index=1)
        d = cover_to_dict(cover)
        assert d["dim"] == 2
        restored = cover_from_dict(json.loads(json.dumps(d)))
        assert restored.seed_index == 1
        assert np.array_equal(restored.centers(), cover.centers())
        assert np.array_equal(restored.radii(), cover.radii())
