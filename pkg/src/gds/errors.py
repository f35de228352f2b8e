"""Exception types shared across the simulator."""


class ConfigError(Exception):
    """Raised when a scenario/manifest document fails validation.

    ``path`` is the dotted location of the offending field, e.g.
    ``"operator.angular_noise"``.
    """

    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class SimulationFault(RuntimeError):
    """Raised when the control loop reaches an unrecoverable state
    (non-finite signals, illegal state-machine transition, ...)."""


class GeometryError(ValueError):
    """Raised for degenerate geometric input (rank-deficient point sets,
    off-surface queries, parallel reference vectors with no fallback)."""
