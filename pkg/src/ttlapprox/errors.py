"""Exception types shared across the package."""

__all__ = ["ConfigError", "NumericsError", "QuadratureError"]


class ConfigError(ValueError):
    """Invalid configuration or parameters supplied by the caller."""


class NumericsError(RuntimeError):
    """A numerical routine failed to reach its accuracy target."""


class QuadratureError(NumericsError):
    """Quadrature did not converge; carries the achieved error bound."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved
