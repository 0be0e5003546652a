"""Bezier trajectory refinement inside a bubble path.

Each bubble on the discrete path gets one fixed-order Bezier segment. The
squared norm of the d-th derivative integrates to a positive semidefinite
quadratic form of the control points; endpoint and junction-continuity
constraints are affine; and containment is relaxed to per-control-point ball
constraints (sufficient by the convex-hull property). The resulting convex
program is solved by operator splitting: an equality-constrained quadratic
minimization with a precomputed factorization, alternated with closed-form
projections of each control point onto its bubble.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.integrate import quad
from scipy.linalg import cho_factor, cho_solve, lstsq, null_space

from .bubbles import BubbleCover
from .errors import (
    InfeasibleEndpointError,
    InfeasibleProblemError,
    InvalidConfigError,
    SolverConvergenceError,
)
from .graph_planner import BubblePath

DEFAULT_ORDER = 5
_OVER_RELAXATION = 1.6
_BALL_TOL = 1e-9
_EQ_TOL = 1e-8


@dataclass(frozen=True)
class BezierSegment:
    """One Bezier piece: K+1 control points traversed over duration T."""

    control_points: np.ndarray
    duration: float

    def __post_init__(self):
        pts = np.asarray(self.control_points, dtype=float)
        object.__setattr__(self, "control_points", pts)
        if pts.ndim != 2 or pts.shape[0] < 1:
            raise InvalidConfigError("control points must be a nonempty (K+1, m) array")
        if self.duration <= 0:
            raise InvalidConfigError("segment duration must be positive")

    @property
    def order(self) -> int:
        return self.control_points.shape[0] - 1

    @property
    def dim(self) -> int:
        return self.control_points.shape[1]


@dataclass
class BezierTrajectory:
    """One segment per path bubble; junctions share derivative values."""

    segments: list[BezierSegment]
    path: BubblePath | None = None

    @property
    def total_duration(self) -> float:
        return float(sum(s.duration for s in self.segments))

    @property
    def dim(self) -> int:
        return self.segments[0].dim

    def eval(self, t: float) -> np.ndarray:
        """Evaluate at global time t across the segment sequence."""
        if t < -1e-9 or t > self.total_duration + 1e-9:
            raise ValueError(f"t={t} outside [0, {self.total_duration}]")
        remaining = min(max(t, 0.0), self.total_duration)
        for seg in self.segments[:-1]:
            if remaining <= seg.duration:
                return bernstein_eval(seg, remaining)
            remaining -= seg.duration
        last = self.segments[-1]
        return bernstein_eval(last, min(remaining, last.duration))


@dataclass
class CostSpec:
    """Derivative order of the cost (1 = length surrogate, 4 = minimum snap)
    and the junction continuity order. r_cont of None resolves to
    min(4, K - 1) for the segment order K in use."""

    d_cost: int = 1
    r_cont: int | None = None

    def __post_init__(self):
        if self.d_cost < 1:
            raise InvalidConfigError("d_cost must be >= 1")
        if self.r_cont is not None and self.r_cont < 0:
            raise InvalidConfigError("r_cont must be >= 0")

    def resolved_r_cont(self, order: int) -> int:
        r = min(4, order - 1) if self.r_cont is None else self.r_cont
        return r

    def validate(self, order: int) -> int:
        r = self.resolved_r_cont(order)
        if order < self.d_cost:
            raise InvalidConfigError(f"order K={order} must be >= d_cost={self.d_cost}")
        if order < r + 1:
            raise InvalidConfigError(f"order K={order} must be >= r_cont+1={r + 1}")
        return r


@dataclass
class ConvexProblem:
    """Quadratic cost over stacked control points, affine equalities, and one
    ball constraint per control point. Q is symmetric PSD (within 1e-10) and
    applies identically to each coordinate column."""

    Q: np.ndarray
    A: np.ndarray
    B: np.ndarray
    ball_centers: np.ndarray
    ball_radii: np.ndarray
    n_segments: int
    order: int
    dim: int
    durations: np.ndarray

    @property
    def n_controls(self) -> int:
        return self.Q.shape[0]

    def objective(self, X: np.ndarray) -> float:
        return float(np.einsum("ik,ij,jk->", X, self.Q, X))

    def split_segments(self, X: np.ndarray) -> list[BezierSegment]:
        per = self.order + 1
        return [
            BezierSegment(X[p * per : (p + 1) * per].copy(), float(self.durations[p]))
            for p in range(self.n_segments)
        ]


# ---------------------------------------------------------------------------
# Bezier primitives
# ---------------------------------------------------------------------------

def bernstein_eval(seg: BezierSegment, t: float) -> np.ndarray:
    """De Casteljau evaluation at s = t/T; endpoints are reproduced exactly."""
    slack = 1e-9 * max(1.0, seg.duration)
    if t < -slack or t > seg.duration + slack:
        raise ValueError(f"t={t} outside [0, {seg.duration}]")
    s = min(max(t / seg.duration, 0.0), 1.0)
    pts = seg.control_points.copy()
    for level in range(seg.order):
        pts = (1.0 - s) * pts[:-1] + s * pts[1:]
    return pts[0]


def derivative_segment(seg: BezierSegment) -> BezierSegment:
    """Derivative as a Bezier of order K-1 with controls (K/T) * diff."""
    if seg.order < 1:
        raise InvalidConfigError("cannot differentiate an order-0 segment")
    controls = (seg.order / seg.duration) * np.diff(seg.control_points, axis=0)
    return BezierSegment(controls, seg.duration)


def bernstein_gram(order: int) -> np.ndarray:
    """Gram matrix of the Bernstein basis on [0, 1]:
    G[i, j] = C(K,i) C(K,j) / ((2K+1) C(2K, i+j))."""
    if order < 0:
        raise InvalidConfigError("order must be >= 0")
    K = order
    G = np.empty((K + 1, K + 1))
    for i in range(K + 1):
        for j in range(K + 1):
            G[i, j] = (
                math.comb(K, i)
                * math.comb(K, j)
                / ((2 * K + 1) * math.comb(2 * K, i + j))
            )
    return G


def _difference_matrix(order: int, d: int) -> np.ndarray:
    """Matrix of the d-th finite difference of K+1 control points."""
    D = np.eye(order + 1)
    for level in range(d):
        n = D.shape[0]
        step = np.zeros((n - 1, n))
        step[:, 1:] += np.eye(n - 1)
        step[:, :-1] -= np.eye(n - 1)
        D = step @ D
    return D


def control_point_cost_bound(controls: np.ndarray, cost_fn) -> float:
    """Convexity bound: the s-average of a convex cost along the curve is at
    most the mean of the cost at the control points."""
    values = [cost_fn(b) for b in np.asarray(controls, dtype=float)]
    return float(sum(values) / len(values))


# ---------------------------------------------------------------------------
# Problem assembly
# ---------------------------------------------------------------------------

def default_durations(path: BubblePath, cover: BubbleCover, v0: float = 1.0) -> np.ndarray:
    """Per-bubble durations T_p = r_p / V0 for a nominal speed V0."""
    if v0 <= 0:
        raise InvalidConfigError("V0 must be positive")
    radii = cover.radii()
    return np.array([radii[i] / v0 for i in path.indices])


def assemble_problem(
    path: BubblePath,
    cover: BubbleCover,
    y_s,
    y_g,
    cost: CostSpec,
    durations,
    order: int = DEFAULT_ORDER,
) -> ConvexProblem:
    """Build the convex program for one Bezier segment per path bubble.

    Cost: sum_p of the integral of ||y_p^(d)||^2 over [0, T_p]. Equalities:
    first control equals the start, last control equals the goal, and scaled
    finite differences match across junctions for d = 0..r_cont (equal
    durations reduce this to unscaled difference matching). Balls: every
    control point of segment p must lie in bubble p.
    """
    r_cont = cost.validate(order)
    durations = np.asarray(durations, dtype=float)
    if durations.shape != (len(path.indices),):
        raise InvalidConfigError("need one duration per path bubble")
    if np.any(durations <= 0):
        raise InvalidConfigError("durations must be positive")

    m = cover.dim
    y_s = np.asarray(y_s, dtype=float)
    y_g = np.asarray(y_g, dtype=float)
    bubbles = [cover[i] for i in path.indices]
    tol = 1e-12
    if np.linalg.norm(y_s - bubbles[0].center) > bubbles[0].radius + tol:
        raise InfeasibleEndpointError("start point outside the first path bubble")
    if np.linalg.norm(y_g - bubbles[-1].center) > bubbles[-1].radius + tol:
        raise InfeasibleEndpointError("goal point outside the last path bubble")

    P = len(bubbles)
    per = order + 1
    n = P * per
    d = cost.d_cost
    fall = math.perm(order, d)
    G = bernstein_gram(order - d)
    Dd = _difference_matrix(order, d)

    Q = np.zeros((n, n))
    for p, T in enumerate(durations):
        block = (fall**2 / T ** (2 * d - 1)) * (Dd.T @ G @ Dd)
        sl = slice(p * per, (p + 1) * per)
        Q[sl, sl] = block
    Q = 0.5 * (Q + Q.T)

    rows: list[np.ndarray] = []
    rhs: list[np.ndarray] = []
    start_row = np.zeros(n)
    start_row[0] = 1.0
    rows.append(start_row)
    rhs.append(y_s)
    end_row = np.zeros(n)
    end_row[n - 1] = 1.0
    rows.append(end_row)
    rhs.append(y_g)
    for p in range(P - 1):
        for dd in range(r_cont + 1):
            Dj = _difference_matrix(order, dd)
            row = np.zeros(n)
            row[p * per : (p + 1) * per] = Dj[-1] / durations[p] ** dd
            row[(p + 1) * per : (p + 2) * per] -= Dj[0] / durations[p + 1] ** dd
            rows.append(row)
            rhs.append(np.zeros(m))
    A = np.vstack(rows)
    B = np.vstack(rhs)

    ball_centers = np.repeat([b.center for b in bubbles], per, axis=0)
    ball_radii = np.repeat([b.radius for b in bubbles], per)
    return ConvexProblem(Q, A, B, ball_centers, ball_radii, P, order, m, durations)


# ---------------------------------------------------------------------------
# Splitting solver
# ---------------------------------------------------------------------------

def _project_balls(X: np.ndarray, centers: np.ndarray, radii: np.ndarray) -> np.ndarray:
    v = X - centers
    norms = np.linalg.norm(v, axis=1)
    scale = np.ones_like(norms)
    outside = norms > radii
    scale[outside] = radii[outside] / norms[outside]
    return centers + v * scale[:, None]


def _ball_violation(X: np.ndarray, centers: np.ndarray, radii: np.ndarray) -> float:
    return float(np.max(np.linalg.norm(X - centers, axis=1) - radii))


def solve(problem: ConvexProblem, tol: float = 1e-8, max_iterations: int = 10_000) -> np.ndarray:
    """Solve the convex program; returns the (n_controls, dim) point matrix.

    Alternates an equality-constrained quadratic step (nullspace elimination
    with a cached Cholesky factorization) with ball projections, using
    over-relaxation 1.6, until primal and dual residuals are below tol. The
    output is polished so that ball violations stay below 1e-9 and the
    equality residual below 1e-8.
    """
    Q, A, B = problem.Q, problem.A, problem.B
    centers, radii = problem.ball_centers, problem.ball_radii
    n, m = problem.n_controls, problem.dim

    qscale = float(np.max(Q.diagonal())) if np.any(Q.diagonal() > 0) else 1.0
    Qs = Q / qscale

    X0, *_ = lstsq(A, B)
    eq_err = float(np.max(np.abs(A @ X0 - B)))
    if eq_err > 1e-8 * max(1.0, float(np.max(np.abs(B)))):
        raise InfeasibleProblemError(f"inconsistent equality constraints (residual {eq_err:.3e})")
    N = null_space(A)
    if N.shape[1] == 0:
        if _ball_violation(X0, centers, radii) > _BALL_TOL:
            raise InfeasibleProblemError("equalities pin a point outside its bubble")
        return X0

    # Penalty matched to the reduced quadratic's curvature range: the
    # geometric mean of its extreme eigenvalues balances the primal and dual
    # convergence rates.
    reduced_eigs = np.linalg.eigvalsh(N.T @ (2.0 * Qs) @ N)
    lmax = max(float(reduced_eigs[-1]), 1e-12)
    lmin = max(float(reduced_eigs[0]), lmax * 1e-12)
    rho = math.sqrt(lmin * lmax)

    def _factor(r: float):
        H = 2.0 * Qs + r * np.eye(n)
        return cho_factor(N.T @ H @ N), H @ X0

    M, HX0 = _factor(rho)

    # Warm start: straight line between the pinned endpoints, pushed into
    # the balls.
    frac = np.linspace(0.0, 1.0, n)[:, None]
    Z = _project_balls(B[0] * (1 - frac) + B[1] * frac, centers, radii)
    U = np.zeros_like(Z)

    alpha = _OVER_RELAXATION
    primal = dual = np.inf
    best = np.inf
    last_improvement = 0
    for it in range(max_iterations):
        V = cho_solve(M, N.T @ (rho * (Z - U) - HX0))
        X = X0 + N @ V
        X_relax = alpha * X + (1.0 - alpha) * Z
        Z_new = _project_balls(X_relax + U, centers, radii)
        U = U + X_relax - Z_new
        primal = float(np.linalg.norm(X - Z_new))
        dual = float(rho * np.linalg.norm(Z_new - Z))
        Z = Z_new
        if primal <= tol and dual <= tol:
            break
        current = max(primal, dual)
        if current < 0.9 * best:
            best = current
            last_improvement = it
        elif it - last_improvement > 200 and alpha != 1.0:
            # Over-relaxation can orbit at floating-point precision; vanilla
            # iterations restore contraction for the final digits.
            alpha = 1.0
            last_improvement = it
        # Residual balancing keeps the two residuals comparable, which
        # avoids precision plateaus on badly scaled cost blocks.
        if it % 50 == 49:
            if primal > 10.0 * dual and rho < 1e6:
                rho *= 2.0
                U /= 2.0
                M, HX0 = _factor(rho)
            elif dual > 10.0 * primal and rho > 1e-6:
                rho /= 2.0
                U *= 2.0
                M, HX0 = _factor(rho)
    else:
        raise SolverConvergenceError(
            f"splitting solver did not converge (primal {primal:.3e}, dual {dual:.3e})",
            primal,
            dual,
        )

    # Polish: restore the equalities exactly, then re-project onto the balls
    # until both residual targets hold.
    pinv_A = np.linalg.pinv(A)
    W = Z
    for _ in range(100):
        W = W + pinv_A @ (B - A @ W)
        if _ball_violation(W, centers, radii) <= _BALL_TOL:
            break
        W = _project_balls(W, centers, radii)
        if float(np.max(np.abs(A @ W - B))) <= _EQ_TOL:
            break
    ball_res = _ball_violation(W, centers, radii)
    eq_res = float(np.max(np.abs(A @ W - B)))
    if ball_res > _BALL_TOL or eq_res > _EQ_TOL:
        raise SolverConvergenceError(
            f"polish failed (ball {ball_res:.3e}, equality {eq_res:.3e})", ball_res, eq_res
        )
    return W


def solve_reference(problem: ConvexProblem, max_iterations: int = 1_000_000) -> np.ndarray:
    """Projected-gradient reference solver (test oracle; slow but simple).

    Gradient steps on the quadratic cost, followed by projection onto the
    intersection of the equality subspace and the balls via inner Dykstra
    alternation. Independent of the splitting solver's update scheme.
    """
    Q, A, B = problem.Q, problem.A, problem.B
    centers, radii = problem.ball_centers, problem.ball_radii
    qscale = float(np.max(Q.diagonal())) if np.any(Q.diagonal() > 0) else 1.0
    Qs = Q / qscale
    lip = 2.0 * float(np.linalg.eigvalsh(Qs)[-1])
    step = 1.0 / max(lip, 1e-12)
    pinv_A = np.linalg.pinv(A)

    def _proj_eq(X):
        return X + pinv_A @ (B - A @ X)

    def _proj_intersection(X):
        P_inc = np.zeros_like(X)
        Q_inc = np.zeros_like(X)
        Y = X
        for _ in range(500):
            Y1 = _proj_eq(Y + P_inc)
            P_inc = Y + P_inc - Y1
            Y2 = _project_balls(Y1 + Q_inc, centers, radii)
            Q_inc = Y1 + Q_inc - Y2
            if np.linalg.norm(Y2 - Y) < 1e-14:
                Y = Y2
                break
            Y = Y2
        return Y

    X = _proj_intersection(problem.B[0] * np.ones((problem.n_controls, 1)))
    prev_obj = np.inf
    for it in range(max_iterations):
        X = _proj_intersection(X - step * (2.0 * Qs @ X))
        if it % 200 == 199:
            obj = float(np.einsum("ik,ij,jk->", X, Qs, X))
            if abs(prev_obj - obj) < 1e-15 * max(1.0, abs(obj)):
                break
            prev_obj = obj
    return X


# ---------------------------------------------------------------------------
# Trajectory utilities and files
# ---------------------------------------------------------------------------

def build_trajectory(problem: ConvexProblem, controls: np.ndarray, path: BubblePath | None = None) -> BezierTrajectory:
    return BezierTrajectory(problem.split_segments(controls), path)


def trajectory_length(traj: BezierTrajectory) -> float:
    """Arc length by adaptive quadrature of the speed along each segment."""
    total = 0.0
    for seg in traj.segments:
        if seg.order == 0:
            continue
        deriv = derivative_segment(seg)
        speed = lambda t: float(np.linalg.norm(bernstein_eval(deriv, t)))
        val, _ = quad(speed, 0.0, seg.duration, epsabs=1e-12, epsrel=1e-9, limit=200)
        total += val
    return float(total)


def sample_trajectory(traj: BezierTrajectory, n: int) -> tuple[np.ndarray, np.ndarray]:
    """n evenly spaced (time, point) samples over the full duration."""
    times = np.linspace(0.0, traj.total_duration, n)
    pts = np.array([traj.eval(t) for t in times])
    return times, pts


def trajectory_to_dict(traj: BezierTrajectory) -> dict:
    return {
        "K": traj.segments[0].order,
        "segments": [
            {"controls": s.control_points.tolist(), "duration": s.duration}
            for s in traj.segments
        ],
    }


def trajectory_from_dict(d: dict) -> BezierTrajectory:
    segments = [
        BezierSegment(np.asarray(s["controls"], dtype=float), float(s["duration"]))
        for s in d["segments"]
    ]
    return BezierTrajectory(segments)


def save_trajectory(traj: BezierTrajectory, path) -> None:
    Path(path).write_text(json.dumps(trajectory_to_dict(traj)))


def load_trajectory(path) -> BezierTrajectory:
    return trajectory_from_dict(json.loads(Path(path).read_text()))


def write_polyline_csv(traj: BezierTrajectory, path, samples: int) -> None:
    """CSV polyline (t, y_1..y_m) for plotting."""
    times, pts = sample_trajectory(traj, samples)
    header = "t," + ",".join(f"y_{i + 1}" for i in range(pts.shape[1]))
    lines = [header]
    for t, p in zip(times, pts):
        lines.append(",".join(repr(float(v)) for v in (t, *p)))
    Path(path).write_text("\n".join(lines) + "\n")
