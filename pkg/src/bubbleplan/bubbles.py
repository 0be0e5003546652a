"""Safe bubbles and ball geometry.

A safe bubble around y has radius (d(y) - eps)/L: any Lipschitz lower bound
on clearance certifies an obstacle-free ball of that radius around the query
point, so a single distance query replaces per-configuration collision
checking inside the ball.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .distance_field import DistanceOracle, _as_point
from .errors import DimensionMismatchError

# Centers closer than this are treated as the same candidate by samplers.
CENTER_QUANTIZATION = 1e-9


@dataclass(frozen=True)
class SafeBubble:
    """Ball certified collision-free (up to the footprint clearance eps)."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    def contains_point(self, y) -> bool:
        p = _as_point(y, self.dim)
        return bool(np.linalg.norm(p - self.center) <= self.radius)


@dataclass
class BubbleCover:
    """Ordered set of safe bubbles, optionally tagged with the seed bubble.

    ``saturated`` is set by samplers that gave up after too many consecutive
    rejections.
    """

    bubbles: list[SafeBubble] = field(default_factory=list)
    seed_index: int | None = None
    saturated: bool = False

    def __len__(self) -> int:
        return len(self.bubbles)

    def __getitem__(self, i: int) -> SafeBubble:
        return self.bubbles[i]

    def __iter__(self):
        return iter(self.bubbles)

    @property
    def dim(self) -> int:
        if not self.bubbles:
            raise ValueError("empty cover has no dimension")
        return self.bubbles[0].dim

    def centers(self) -> np.ndarray:
        return np.array([b.center for b in self.bubbles], dtype=float)

    def radii(self) -> np.ndarray:
        return np.array([b.radius for b in self.bubbles], dtype=float)


def make_bubble(
    oracle: DistanceOracle, y, eps: float, r_min: float
) -> SafeBubble | None:
    """Construct the safe bubble at y, or None if it fails the size gate.

    Radius is (query(y) - eps) / L. Exactly one oracle query is made.
    """
    p = _as_point(y, oracle.dim)
    radius = (oracle.query(p) - eps) / oracle.lipschitz
    if radius > r_min:
        return SafeBubble(p, float(radius))
    return None


def center_distance(bi: SafeBubble, bj: SafeBubble) -> float:
    """||ci - cj|| computed with the same reduction the vectorized graph
    construction uses, so scalar and batched routes agree bit for bit."""
    return float(np.sqrt(np.sum((bi.center - bj.center) ** 2)))


def point_to_bubble_distance(y, bubble: SafeBubble) -> float:
    """Signed distance from a point to the bubble boundary (negative inside)."""
    p = _as_point(y, bubble.dim)
    return float(np.sqrt(np.sum((p - bubble.center) ** 2)) - bubble.radius)


def overlaps(bi: SafeBubble, bj: SafeBubble) -> bool:
    """True iff the bubbles' interiors intersect (tangency does not count)."""
    if bi.dim != bj.dim:
        raise DimensionMismatchError("bubbles have different dimensions")
    return center_distance(bi, bj) < bi.radius + bj.radius


def contains(bi: SafeBubble, bj: SafeBubble) -> bool:
    """True iff bi lies inside bj (closed containment)."""
    if bi.dim != bj.dim:
        raise DimensionMismatchError("bubbles have different dimensions")
    return center_distance(bi, bj) <= bj.radius - bi.radius


def hausdorff(bi: SafeBubble, bj: SafeBubble) -> float:
    """Single-sided Hausdorff distance | ||ci - cj|| + ri - rj |.

    This is the worst-case boundary distance from a point of bi to bj, used
    as the edge weight of the intersection graph. The formula is applied
    verbatim (absolute value included) even for nested pairs, where it
    differs from the set-theoretic value of zero; random covers make
    nesting a probability-zero event.
    """
    return float(abs(center_distance(bi, bj) + bi.radius - bj.radius))


# ---------------------------------------------------------------------------
# Cover files
# ---------------------------------------------------------------------------

def cover_to_dict(cover: BubbleCover) -> dict:
    d = {
        "dim": cover.dim if cover.bubbles else 0,
        "bubbles": [
            {"center": b.center.tolist(), "radius": b.radius} for b in cover.bubbles
        ],
    }
    if cover.seed_index is not None:
        d["seed_index"] = cover.seed_index
    return d


def cover_from_dict(d: dict) -> BubbleCover:
    bubbles = [
        SafeBubble(np.asarray(b["center"], dtype=float), float(b["radius"]))
        for b in d["bubbles"]
    ]
    return BubbleCover(bubbles, seed_index=d.get("seed_index"))


def save_cover(cover: BubbleCover, path) -> None:
    Path(path).write_text(json.dumps(cover_to_dict(cover)))


def load_cover(path) -> BubbleCover:
    return cover_from_dict(json.loads(Path(path).read_text()))
