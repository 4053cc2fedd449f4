"""Exceptions raised by the perception, planning and configuration layers.

Every error derives from :class:`TrollectorError` and from the builtin that
best describes it, so callers can catch either family.
"""


class TrollectorError(Exception):
    """Base class of all errors of this project."""


class ConfigurationError(TrollectorError, ValueError):
    """The scenario or settings file cannot be parsed or validated."""


class NonPositiveDepth(TrollectorError, ValueError):
    """A point lies on or behind the camera plane."""


class DegenerateConfiguration(TrollectorError, ValueError):
    """Too few, collinear or coplanar points for the requested solve."""


class NoValidSolution(TrollectorError, RuntimeError):
    """Every candidate pose places the points behind the camera."""


class DivergedRefinement(TrollectorError, RuntimeError):
    """The damped Gauss-Newton refinement kept increasing the residual."""


class TooFewPoints(TrollectorError, ValueError):
    """A point cloud is too small for plane fitting."""


class VerticalityViolation(TrollectorError, ValueError):
    """The fitted plane is closer to horizontal than a backplane can be."""


class TargetCoincident(TrollectorError, ValueError):
    """The robot position coincides with the view target."""


class InfeasibleStart(TrollectorError, ValueError):
    """The initial state already violates an obstacle barrier."""


class MaxIterations(TrollectorError, RuntimeError):
    """The SQP solver ran out of iterations."""


class SolverInfeasible(TrollectorError, RuntimeError):
    """A QP subproblem was infeasible and no feasible iterate was found."""
