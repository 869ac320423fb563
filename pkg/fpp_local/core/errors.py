class FppLocalError(Exception):
    """Base class for all errors raised by fpp-local."""


class ModelError(FppLocalError, ValueError):
    """A probability law is degenerate or the requested regime does not apply."""


class ConvergenceError(FppLocalError):
    """An iterative solver stopped before reaching its tolerance."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


class CapExceededError(FppLocalError):
    """A node, vertex or wall-clock cap was hit."""


class ConfigError(FppLocalError):
    """The experiment configuration cannot be parsed or is inconsistent."""
