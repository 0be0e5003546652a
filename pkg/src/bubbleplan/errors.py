"""Exception types shared across the toolkit."""


class PlanningError(Exception):
    """Base class for all bubbleplan errors."""


class DimensionMismatchError(PlanningError, ValueError):
    """A point's dimension does not match the workspace/object it is used with."""


class InvalidConfigError(PlanningError, ValueError):
    """A configuration value violates its documented bounds."""


class NoFreeSpaceError(PlanningError, ValueError):
    """An occupancy grid contains no free cell."""


class SeedInfeasibleError(PlanningError):
    """The seed point does not admit a bubble (not in free space, or too close)."""


class NotInCoverError(PlanningError):
    """Start or goal point is not contained in any bubble of the cover."""


class CoverDisconnectedError(PlanningError):
    """No bubble path connects the start bubbles to the goal bubbles."""


class InfeasibleEndpointError(PlanningError):
    """A trajectory endpoint lies outside its designated bubble."""


class InfeasibleProblemError(PlanningError):
    """The equality constraints of a convex problem are inconsistent."""


class SolverConvergenceError(PlanningError):
    """The splitting solver did not reach its residual targets.

    Carries the final residuals for diagnosis.
    """

    def __init__(self, message: str, primal_residual: float, dual_residual: float):
        super().__init__(message)
        self.primal_residual = primal_residual
        self.dual_residual = dual_residual


class ExplorationStuckError(PlanningError):
    """No fully visible bubble is reachable from the current pose."""


class SamplingSaturationError(PlanningError):
    """Rejection sampling exhausted its attempt budget."""
