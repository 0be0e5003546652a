"""Distance oracles over 2D/3D workspaces.

Two sources are supported: analytic scenes made of sphere/box obstacles
(exact signed distance) and grid fields built from occupancy grids (exact
Euclidean distance transform at the nodes, multilinear interpolation in
between, with a conservativeness margin subtracted so the reported value
never exceeds the true distance).

Every query is counted: total calls and distinct quantized query positions.
"""

from __future__ import annotations

import json
import math
import threading
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.ndimage import distance_transform_edt, map_coordinates

from .errors import DimensionMismatchError, InvalidConfigError, NoFreeSpaceError

# Coordinates are rounded to this many meters before hashing, so "distinct
# query positions" is deterministic.
QUANTIZATION = 1e-9
_QUANT_DECIMALS = 9


def _as_point(y, dim: int | None = None) -> np.ndarray:
    p = np.asarray(y, dtype=float)
    if p.ndim != 1:
        raise DimensionMismatchError(f"expected a single point, got shape {p.shape}")
    if dim is not None and p.shape[0] != dim:
        raise DimensionMismatchError(f"point has dimension {p.shape[0]}, expected {dim}")
    return p


def _as_points(pts, dim: int | None = None) -> np.ndarray:
    p = np.asarray(pts, dtype=float)
    if p.ndim == 1:
        p = p[None, :]
    if p.ndim != 2:
        raise DimensionMismatchError(f"expected an (n, m) point array, got shape {p.shape}")
    if dim is not None and p.shape[1] != dim:
        raise DimensionMismatchError(f"points have dimension {p.shape[1]}, expected {dim}")
    return p


@dataclass(frozen=True)
class Workspace:
    """Axis-aligned box of the planning space (2D or 3D), in meters."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        if lo.ndim != 1 or lo.shape != hi.shape:
            raise InvalidConfigError("workspace lower/upper must be 1D arrays of equal length")
        if lo.shape[0] not in (2, 3):
            raise InvalidConfigError("workspace dimension must be 2 or 3")
        if not np.all(lo < hi):
            raise InvalidConfigError("workspace requires lower[i] < upper[i] for all axes")

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    @property
    def extent(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def diagonal(self) -> float:
        return float(np.linalg.norm(self.extent))

    def contains(self, pts) -> np.ndarray:
        p = _as_points(pts, self.dim)
        return np.all((p >= self.lower) & (p <= self.upper), axis=1)

    def sample(self, rng: np.random.Generator, n: int, inflation: float = 0.0) -> np.ndarray:
        """Draw n uniform points from the box, optionally inflated per side.

        ``inflation`` is a fraction of the per-axis extent added to each side.
        """
        pad = inflation * self.extent
        return rng.uniform(self.lower - pad, self.upper + pad, size=(n, self.dim))


@dataclass(frozen=True)
class Sphere:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        if self.radius <= 0:
            raise InvalidConfigError("sphere radius must be positive")

    def signed_distance(self, pts: np.ndarray) -> np.ndarray:
        return np.linalg.norm(pts - self.center, axis=1) - self.radius


@dataclass(frozen=True)
class Box:
    """Axis-aligned box obstacle."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        if not np.all(lo < hi):
            raise InvalidConfigError("box requires lower[i] < upper[i] for all axes")

    def signed_distance(self, pts: np.ndarray) -> np.ndarray:
        center = 0.5 * (self.lower + self.upper)
        half = 0.5 * (self.upper - self.lower)
        q = np.abs(pts - center) - half
        outside = np.linalg.norm(np.maximum(q, 0.0), axis=1)
        inside = np.minimum(np.max(q, axis=1), 0.0)
        return outside + inside


Primitive = Sphere | Box


class AnalyticScene:
    """Union of sphere/box obstacles with an exact signed distance function.

    The scene distance is the minimum over primitive signed distances
    (negative inside an obstacle), capped above at the workspace diagonal
    so that obstacle-free scenes report a finite value.
    """

    def __init__(self, primitives: list[Primitive], workspace: Workspace):
        self.workspace = workspace
        self.primitives = list(primitives)
        for prim in self.primitives:
            self._check_intersects(prim)

    def _check_intersects(self, prim: Primitive) -> None:
        lo, hi = self.workspace.lower, self.workspace.upper
        if isinstance(prim, Sphere):
            if prim.center.shape[0] != self.workspace.dim:
                raise DimensionMismatchError("primitive dimension does not match workspace")
            nearest = np.clip(prim.center, lo, hi)
            if np.linalg.norm(nearest - prim.center) > prim.radius:
                raise InvalidConfigError("sphere obstacle does not intersect the workspace")
        else:
            if prim.lower.shape[0] != self.workspace.dim:
                raise DimensionMismatchError("primitive dimension does not match workspace")
            if np.any(prim.upper < lo) or np.any(prim.lower > hi):
                raise InvalidConfigError("box obstacle does not intersect the workspace")

    @property
    def dim(self) -> int:
        return self.workspace.dim

    def distance(self, pts: np.ndarray) -> np.ndarray:
        d = np.full(pts.shape[0], self.workspace.diagonal)
        for prim in self.primitives:
            np.minimum(d, prim.signed_distance(pts), out=d)
        return d


class GridField:
    """Node-centered distance grid: values[i] is the distance at origin + h*i.

    Continuous queries multilinearly interpolate the node values and subtract
    the conservativeness margin h*sqrt(m)/2 so the reported value is a lower
    bound on the true distance (clamped below at -h). Points outside the node
    hull are clamped onto it, which keeps the lower-bound property because all
    obstacles lie inside the hull.
    """

    def __init__(self, origin, spacing: float, values: np.ndarray, workspace: Workspace):
        self.origin = np.asarray(origin, dtype=float)
        self.spacing = float(spacing)
        self.values = np.asarray(values, dtype=float)
        self.workspace = workspace
        if self.spacing <= 0:
            raise InvalidConfigError("grid spacing must be positive")
        if self.origin.shape[0] != workspace.dim or self.values.ndim != workspace.dim:
            raise DimensionMismatchError("grid origin/values dimension does not match workspace")
        if np.any(self.values < 0):
            raise InvalidConfigError("grid field values must be nonnegative")

    @property
    def dim(self) -> int:
        return self.workspace.dim

    @property
    def dims(self) -> tuple[int, ...]:
        return self.values.shape

    @property
    def margin(self) -> float:
        return conservative_margin(self)

    def interpolate(self, pts: np.ndarray) -> np.ndarray:
        idx = (pts - self.origin).T / self.spacing
        return map_coordinates(self.values, idx, order=1, mode="nearest")

    def distance(self, pts: np.ndarray) -> np.ndarray:
        return np.maximum(self.interpolate(pts) - self.margin, -self.spacing)


def conservative_margin(f: GridField) -> float:
    """Margin delta = h*sqrt(m)/2 subtracted from interpolated grid values.

    Multilinear interpolation is a convex combination of the cell-corner
    values with weights that reproduce the query point, and the true distance
    is 1-Lipschitz, so interp(y) <= d(y) + h*sqrt(m)/2. Subtracting delta
    therefore keeps the report a lower bound on the true distance.
    """
    return f.spacing * math.sqrt(f.dim) / 2.0


def build_grid_from_occupancy(
    occupied: np.ndarray,
    origin,
    spacing: float,
    workspace: Workspace | None = None,
) -> GridField:
    """Build a distance grid from a boolean occupancy array.

    Each node value is the exact Euclidean distance from the node center to
    the nearest obstacle-cell center (zero on obstacle nodes). Obstacle-free
    grids get all values capped at the workspace diagonal.
    """
    occ = np.asarray(occupied, dtype=bool)
    if occ.size == 0:
        raise InvalidConfigError("occupancy grid is empty")
    if not occ.any():
        values = None  # no obstacle: cap below
    elif occ.all():
        raise NoFreeSpaceError("no free space: occupancy grid is fully occupied")
    else:
        # Exact EDT in index units, scaled by the spacing afterwards so the
        # result is bitwise identical to brute force over cell centers.
        values = distance_transform_edt(~occ) * spacing
    origin = np.asarray(origin, dtype=float)
    if workspace is None:
        upper = origin + spacing * (np.array(occ.shape) - 1)
        # Degenerate single-node axes still need a nonempty box.
        upper = np.maximum(upper, origin + spacing)
        workspace = Workspace(origin.copy(), upper)
    if values is None:
        values = np.full(occ.shape, workspace.diagonal)
    else:
        np.minimum(values, workspace.diagonal, out=values)
    return GridField(origin, spacing, values, workspace)


class DistanceOracle:
    """Queryable lower bound on the distance to the obstacle set.

    Wraps an AnalyticScene or GridField, tracks exact query counts (total and
    distinct quantized positions), and carries the Lipschitz constant used by
    bubble construction. Immutable after construction apart from the
    counters, which are lock-protected so concurrent queries never lose
    increments.
    """

    def __init__(self, source: AnalyticScene | GridField, lipschitz: float = 1.0):
        if lipschitz < 1.0:
            raise InvalidConfigError("lipschitz constant must be >= 1")
        self.source = source
        self.lipschitz = float(lipschitz)
        self._lock = threading.Lock()
        self.total_queries = 0
        self.unique_queries = 0
        self.out_of_domain_queries = 0
        self._seen: set[tuple] = set()

    @property
    def workspace(self) -> Workspace:
        return self.source.workspace

    @property
    def dim(self) -> int:
        return self.source.dim

    def reset_counters(self) -> None:
        with self._lock:
            self.total_queries = 0
            self.unique_queries = 0
            self.out_of_domain_queries = 0
            self._seen.clear()

    def _count(self, pts: np.ndarray) -> None:
        keys = list(map(tuple, np.round(pts, _QUANT_DECIMALS).tolist()))
        inside = self.workspace.contains(pts)
        n_out = int(pts.shape[0] - np.count_nonzero(inside))
        with self._lock:
            self.total_queries += pts.shape[0]
            self.out_of_domain_queries += n_out
            seen = self._seen
            before = len(seen)
            seen.update(keys)
            self.unique_queries += len(seen) - before

    def query(self, y) -> float:
        """Distance lower bound at a single point (one counted query)."""
        p = _as_point(y, self.dim)
        self._count(p[None, :])
        return float(self.source.distance(p[None, :])[0])

    def query_many(self, pts) -> np.ndarray:
        """Vectorized query; counts one query per point."""
        p = _as_points(pts, self.dim)
        self._count(p)
        return self.source.distance(p)


# ---------------------------------------------------------------------------
# Environment files
# ---------------------------------------------------------------------------

def read_pgm(path) -> np.ndarray:
    """Read a PGM (P2 ascii or P5 binary) image into a uint16 array."""
    data = Path(path).read_bytes()

    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos] not in (10, 13):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    magic = tokens[0]
    width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    if magic == b"P2":
        values = np.array(data[pos:].split(), dtype=np.uint16)
    elif magic == b"P5":
        pos += 1  # single whitespace after maxval
        dtype = ">u2" if maxval > 255 else np.uint8
        values = np.frombuffer(data, dtype=dtype, count=width * height, offset=pos).astype(np.uint16)
    else:
        raise InvalidConfigError(f"unsupported PGM magic {magic!r}")
    if values.size != width * height:
        raise InvalidConfigError("PGM pixel count does not match header")
    return values.reshape(height, width)


def _primitive_from_dict(d: dict) -> Primitive:
    kind = d.get("type")
    if kind == "sphere":
        return Sphere(np.asarray(d["center"], dtype=float), float(d["radius"]))
    if kind == "box":
        return Box(np.asarray(d["lower"], dtype=float), np.asarray(d["upper"], dtype=float))
    raise InvalidConfigError(f"unknown primitive type {kind!r}")


def _primitive_to_dict(p: Primitive) -> dict:
    if isinstance(p, Sphere):
        return {"type": "sphere", "center": p.center.tolist(), "radius": p.radius}
    return {"type": "box", "lower": p.lower.tolist(), "upper": p.upper.tolist()}


def scene_to_dict(scene: AnalyticScene) -> dict:
    return {
        "workspace": {
            "lower": scene.workspace.lower.tolist(),
            "upper": scene.workspace.upper.tolist(),
        },
        "analytic": [_primitive_to_dict(p) for p in scene.primitives],
    }


def load_environment(spec, base_dir=None) -> DistanceOracle:
    """Build an oracle from an environment dict or JSON file path.

    The file carries a workspace box plus either an "analytic" primitive list
    or an "occupancy" block referencing a PGM image (pixels <= threshold are
    obstacles; image rows are flipped so row 0 is the top of the map).
    """
    if isinstance(spec, (str, Path)):
        path = Path(spec)
        base_dir = path.parent
        spec = json.loads(path.read_text())
    if not isinstance(spec, dict):
        raise InvalidConfigError("environment spec must be a dict or a JSON file path")
    try:
        ws = spec["workspace"]
        workspace = Workspace(np.asarray(ws["lower"], dtype=float), np.asarray(ws["upper"], dtype=float))
    except KeyError as exc:
        raise InvalidConfigError(f"environment spec missing key: {exc}") from exc

    if "analytic" in spec:
        prims = [_primitive_from_dict(d) for d in spec["analytic"]]
        return DistanceOracle(AnalyticScene(prims, workspace))
    if "occupancy" in spec:
        occ_spec = spec["occupancy"]
        pgm_path = Path(occ_spec["pgm"])
        if not pgm_path.is_absolute() and base_dir is not None:
            pgm_path = Path(base_dir) / pgm_path
        pixels = read_pgm(pgm_path)
        obstacle = pixels <= int(occ_spec["obstacle_threshold"])
        # Flip so that increasing row index means increasing y, then
        # transpose to (x, y) axis order.
        occupied = obstacle[::-1, :].T
        grid = build_grid_from_occupancy(
            occupied,
            np.asarray(occ_spec["origin"], dtype=float),
            float(occ_spec["spacing"]),
            workspace,
        )
        return DistanceOracle(grid)
    raise InvalidConfigError("environment spec needs an 'analytic' or 'occupancy' section")
