"""Hierarchical planning pipeline: cover -> intersection graph -> bubble path
-> Bezier trajectory. Shared by the CLI, the benchmark, and the explorer."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bubbles import BubbleCover
from .graph_planner import BubblePath, IntersectionGraph, build_intersection_graph, shortest_bubble_path
from .trajopt import (
    BezierTrajectory,
    ConvexProblem,
    CostSpec,
    assemble_problem,
    build_trajectory,
    default_durations,
    solve,
    trajectory_length,
)


@dataclass
class PlanResult:
    path: BubblePath
    trajectory: BezierTrajectory
    problem: ConvexProblem
    objective: float
    length: float


def refine_path(
    cover: BubbleCover,
    path: BubblePath,
    y_s,
    y_g,
    cost: CostSpec,
    v0: float = 1.0,
    order: int = 5,
    tol: float = 1e-8,
) -> PlanResult:
    """Continuous refinement of a given bubble path."""
    durations = default_durations(path, cover, v0)
    problem = assemble_problem(path, cover, y_s, y_g, cost, durations, order=order)
    controls = solve(problem, tol=tol)
    traj = build_trajectory(problem, controls, path)
    return PlanResult(path, traj, problem, problem.objective(controls), trajectory_length(traj))


def plan_through_cover(
    cover: BubbleCover,
    y_s,
    y_g,
    cost: CostSpec | None = None,
    v0: float = 1.0,
    order: int = 5,
    graph: IntersectionGraph | None = None,
) -> PlanResult:
    """Full discrete + continuous planning inside an existing cover."""
    if graph is None:
        graph = build_intersection_graph(cover)
    path = shortest_bubble_path(graph, y_s, y_g)
    return refine_path(
        cover, path, np.asarray(y_s, float), np.asarray(y_g, float),
        cost or CostSpec(), v0=v0, order=order,
    )
