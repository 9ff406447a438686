"""Exception types shared across the package."""


class SpdeDistError(Exception):
    """Base class for all package errors."""


class GridMismatchError(SpdeDistError, ValueError):
    """Two curves (or a curve and a space) live on different grids."""


class IncompleteCurveError(SpdeDistError, ValueError):
    """A curve lacks the value at infinity required by its space."""


class DegenerateGridError(SpdeDistError, ValueError):
    """The grid has too few points for the requested operation."""


class BoundaryConditionError(SpdeDistError, ValueError):
    """A curve violates the boundary conditions of a generator."""


class SpaceMismatchError(SpdeDistError, TypeError):
    """A state element does not belong to the set's or model's space."""


class ConditionError(SpdeDistError, ValueError):
    """A Gram matrix is too ill-conditioned to solve reliably."""


class ChartError(SpdeDistError, ValueError):
    """A manifold chart has a rank-deficient Jacobian."""


class DomainError(SpdeDistError, ValueError):
    """An element lies outside the domain of a generator."""


class DivergenceError(SpdeDistError, FloatingPointError):
    """A time stepper produced a non-finite state."""

    def __init__(self, step, time):
        super().__init__(f"non-finite state at step {step} (t={time!r})")
        self.step = step
        self.time = time


class ConfigError(SpdeDistError, ValueError):
    """An experiment config failed validation; carries the offending field path."""

    def __init__(self, path, message):
        where = "/".join(str(p) for p in path) or "<root>"
        super().__init__(f"{where}: {message}")
        self.path = tuple(path)
