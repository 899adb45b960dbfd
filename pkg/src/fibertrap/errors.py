"""Exception types shared across the package."""


class FibertrapError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(FibertrapError):
    """Invalid configuration: parse failure, unknown key, or physical constraint violation."""

    def __init__(self, message, line=None, key=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
        self.key = key


class CutoffError(FibertrapError):
    """A requested mode does not propagate at the given V parameter."""

    def __init__(self, mode_name, v, v_cutoff):
        super().__init__(
            f"mode {mode_name} is below cutoff: V = {v:.4f} < V_c = {v_cutoff:.4f}"
        )
        self.mode_name = mode_name
        self.v = v
        self.v_cutoff = v_cutoff


class ConvergenceError(FibertrapError):
    """An iterative numerical routine failed to converge."""


class IntegrationError(ConvergenceError):
    """Quadrature failed to reach the requested tolerance; carries the best estimate."""

    def __init__(self, message, best_estimate):
        super().__init__(f"{message} (best estimate {best_estimate!r})")
        self.best_estimate = best_estimate


class NoTrapError(FibertrapError):
    """No interior potential minimum exists in the seeded search region."""


class SaddleError(FibertrapError):
    """A stationary point was found but it is not a minimum (non-positive curvature)."""
