"""Distance bounds for deterministic and stochastic evolution equations.

Mild solutions of semilinear PDEs and SPDEs, distances to closed sets of
the state space, and numerical checks of Nagumo-type distance bounds,
including Wong-Zakai approximations and four worked models.
"""
__version__ = "0.1.0"

from .errors import (  # noqa: E402
    BoundaryConditionError,
    ChartError,
    ConditionError,
    ConfigError,
    DegenerateGridError,
    DivergenceError,
    DomainError,
    GridMismatchError,
    IncompleteCurveError,
    SpaceMismatchError,
    SpdeDistError,
)

__all__ = [
    "__version__",
    "SpdeDistError",
    "GridMismatchError",
    "IncompleteCurveError",
    "DegenerateGridError",
    "BoundaryConditionError",
    "SpaceMismatchError",
    "ConditionError",
    "ChartError",
    "DomainError",
    "DivergenceError",
    "ConfigError",
]
