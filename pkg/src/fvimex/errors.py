"""Exception types raised across the package."""


class GridError(ValueError):
    """Degenerate interval or too few cells for the reconstruction stencil."""


class DomainError(ValueError):
    """Argument outside the domain of a closed-form formula."""


class ConfigurationError(ValueError):
    """Invalid model or run configuration."""


class UnsupportedModelError(ValueError):
    """Model outside what the implicit diffusion assembly can handle."""


class SingularSystemError(ArithmeticError):
    """Zero pivot met while solving a linear system."""


class NumericalBlowupError(ArithmeticError):
    """Non-finite value produced during a solve.

    ``cell`` is the first offending cell index, ``stage`` the Runge-Kutta
    stage (when known).
    """

    def __init__(self, message: str, cell: int | None = None, stage: int | None = None):
        super().__init__(message)
        self.cell = cell
        self.stage = stage
