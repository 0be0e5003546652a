"""Built-in benchmark environments.

Three analytic scenes at desk scale: an open room with scattered obstacles
("room2d"), two rooms joined by a narrow corridor ("corridor2d"), and a
cluttered 3D box room with a doorway ("clutter3d"). All are enclosed by wall
boxes so distance queries stay bounded and samplers cannot wander outside.
"""

from __future__ import annotations

import json
from pathlib import Path

from .distance_field import DistanceOracle, load_environment
from .errors import InvalidConfigError

_WALL = 0.2


def _walls_2d(w: float, h: float, t: float = _WALL) -> list[dict]:
    return [
        {"type": "box", "lower": [0.0, 0.0], "upper": [w, t]},
        {"type": "box", "lower": [0.0, h - t], "upper": [w, h]},
        {"type": "box", "lower": [0.0, 0.0], "upper": [t, h]},
        {"type": "box", "lower": [w - t, 0.0], "upper": [w, h]},
    ]


def room2d() -> dict:
    """10 m x 10 m room with scattered boxes and spheres; passages stay wide
    so simple roadmaps connect easily."""
    prims = _walls_2d(10.0, 10.0)
    prims += [
        {"type": "box", "lower": [2.0, 2.0], "upper": [3.2, 3.2]},
        {"type": "box", "lower": [6.6, 1.6], "upper": [7.8, 2.8]},
        {"type": "box", "lower": [4.4, 6.8], "upper": [5.6, 8.0]},
        {"type": "box", "lower": [1.6, 6.2], "upper": [2.6, 7.2]},
        {"type": "sphere", "center": [7.4, 7.2], "radius": 0.7},
        {"type": "sphere", "center": [5.0, 4.4], "radius": 0.5},
    ]
    return {
        "name": "room2d",
        "workspace": {"lower": [0.0, 0.0], "upper": [10.0, 10.0]},
        "analytic": prims,
    }


def corridor2d(corridor_width: float = 0.6) -> dict:
    """Two 2D rooms joined by a narrow corridor through a thick middle wall."""
    w, h = 12.0, 6.0
    gap_lo = 0.5 * (h - corridor_width)
    gap_hi = gap_lo + corridor_width
    prims = _walls_2d(w, h)
    prims += [
        {"type": "box", "lower": [5.6, 0.0], "upper": [6.4, gap_lo]},
        {"type": "box", "lower": [5.6, gap_hi], "upper": [6.4, h]},
        {"type": "box", "lower": [2.2, 3.8], "upper": [3.2, 4.8]},
        {"type": "sphere", "center": [9.2, 1.8], "radius": 0.6},
    ]
    return {
        "name": "corridor2d",
        "workspace": {"lower": [0.0, 0.0], "upper": [w, h]},
        "analytic": prims,
    }


def clutter3d() -> dict:
    """6 x 6 x 3 m box room split by a wall with one narrow doorway, plus
    scattered spheres and boxes."""
    w, d, h = 6.0, 6.0, 3.0
    t = 0.15
    prims = [
        {"type": "box", "lower": [0.0, 0.0, 0.0], "upper": [w, d, t]},
        {"type": "box", "lower": [0.0, 0.0, h - t], "upper": [w, d, h]},
        {"type": "box", "lower": [0.0, 0.0, 0.0], "upper": [t, d, h]},
        {"type": "box", "lower": [w - t, 0.0, 0.0], "upper": [w, d, h]},
        {"type": "box", "lower": [0.0, 0.0, 0.0], "upper": [w, t, h]},
        {"type": "box", "lower": [0.0, d - t, 0.0], "upper": [w, d, h]},
        # Divider with a doorway (0.9 m wide, up to z=2.0).
        {"type": "box", "lower": [2.9, 0.0, 0.0], "upper": [3.1, 2.4, h]},
        {"type": "box", "lower": [2.9, 3.3, 0.0], "upper": [3.1, d, h]},
        {"type": "box", "lower": [2.9, 2.4, 2.0], "upper": [3.1, 3.3, h]},
        {"type": "sphere", "center": [1.5, 1.6, 1.2], "radius": 0.45},
        {"type": "box", "lower": [1.0, 4.0, 0.15], "upper": [1.8, 4.8, 1.2]},
        {"type": "sphere", "center": [4.6, 4.4, 1.6], "radius": 0.5},
        {"type": "box", "lower": [4.2, 1.2, 0.15], "upper": [5.0, 2.0, 1.0]},
    ]
    return {
        "name": "clutter3d",
        "workspace": {"lower": [0.0, 0.0, 0.0], "upper": [w, d, h]},
        "analytic": prims,
    }


BUILTIN_ENVS = {
    "room2d": room2d,
    "corridor2d": corridor2d,
    "clutter3d": clutter3d,
}


def environment_spec(name_or_path) -> dict:
    """Resolve a builtin name or a JSON file path to an environment dict."""
    key = str(name_or_path)
    if key in BUILTIN_ENVS:
        return BUILTIN_ENVS[key]()
    path = Path(name_or_path)
    if not path.exists():
        raise InvalidConfigError(f"environment file not found: {path}")
    return json.loads(path.read_text())


def make_oracle(name_or_path) -> DistanceOracle:
    key = str(name_or_path)
    if key in BUILTIN_ENVS:
        return load_environment(BUILTIN_ENVS[key]())
    return load_environment(key)


def write_builtin(name: str, path) -> None:
    Path(path).write_text(json.dumps(environment_spec(name), indent=2))
