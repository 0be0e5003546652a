"""Safe-bubble motion planning on distance fields.

Sample ball covers of free space from a distance oracle, plan discrete
bubble paths on the intersection graph, and refine them into smooth Bezier
trajectories by convex optimization. Includes PRM*/RRT* baselines, a
visibility-gated explorer for unknown environments, and a benchmark harness.
"""

from .bubbles import (
    BubbleCover,
    SafeBubble,
    contains,
    hausdorff,
    load_cover,
    make_bubble,
    overlaps,
    point_to_bubble_distance,
    save_cover,
)
from .distance_field import (
    AnalyticScene,
    Box,
    DistanceOracle,
    GridField,
    Sphere,
    Workspace,
    build_grid_from_occupancy,
    conservative_margin,
    load_environment,
)
from .graph_planner import (
    BubblePath,
    IntersectionGraph,
    build_intersection_graph,
    containing_bubbles,
    shortest_bubble_path,
)
from .pipeline import PlanResult, plan_through_cover, refine_path
from .samplers import SamplerConfig, Termination, brm, ebg, expansion_directions, rbg
from .trajopt import (
    BezierSegment,
    BezierTrajectory,
    CostSpec,
    assemble_problem,
    bernstein_eval,
    bernstein_gram,
    default_durations,
    derivative_segment,
    solve,
    trajectory_length,
)

__version__ = "0.1.0"

__all__ = [
    "AnalyticScene",
    "BezierSegment",
    "BezierTrajectory",
    "Box",
    "BubbleCover",
    "BubblePath",
    "CostSpec",
    "DistanceOracle",
    "GridField",
    "IntersectionGraph",
    "PlanResult",
    "SafeBubble",
    "SamplerConfig",
    "Sphere",
    "Termination",
    "Workspace",
    "assemble_problem",
    "bernstein_eval",
    "bernstein_gram",
    "brm",
    "build_grid_from_occupancy",
    "build_intersection_graph",
    "conservative_margin",
    "containing_bubbles",
    "contains",
    "default_durations",
    "derivative_segment",
    "ebg",
    "expansion_directions",
    "hausdorff",
    "load_cover",
    "load_environment",
    "make_bubble",
    "overlaps",
    "plan_through_cover",
    "point_to_bubble_distance",
    "rbg",
    "refine_path",
    "save_cover",
    "shortest_bubble_path",
    "solve",
    "trajectory_length",
]
