"""Exception types shared across the package."""


class SingularMatrixError(ValueError):
    """A matrix that must be inverted is numerically singular."""


class DegenerateSolutionError(ValueError):
    """A solver produced a solution with no usable geometry (e.g. zero weight vector)."""


class DegenerateScenarioError(ValueError):
    """A scenario quantity is undefined (vanishing denominator, nonpositive objective)."""
