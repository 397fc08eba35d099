"""Finite-volume IMEX Runge-Kutta solver for 1-D option-pricing PDEs."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigurationError,
    DomainError,
    GridError,
    NumericalBlowupError,
    SingularSystemError,
    UnsupportedModelError,
)
from .mesh import Grid, State, build_grid, l1_error, project_initial  # noqa: E402
from .models import (  # noqa: E402
    Boundary,
    ConservativeModel,
    MarketData,
    barrier_market,
    black_scholes_barrier_model,
    xva_market,
    xva_model,
)

__all__ = [
    "__version__",
    "Boundary",
    "ConfigurationError",
    "ConservativeModel",
    "DomainError",
    "Grid",
    "GridError",
    "MarketData",
    "NumericalBlowupError",
    "SingularSystemError",
    "State",
    "UnsupportedModelError",
    "barrier_market",
    "black_scholes_barrier_model",
    "build_grid",
    "l1_error",
    "project_initial",
    "xva_market",
    "xva_model",
]
