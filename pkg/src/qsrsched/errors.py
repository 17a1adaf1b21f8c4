class QsrError(Exception):
    """Base class for all library errors."""


class DimensionError(QsrError, ValueError):
    pass


class InvalidParameterError(QsrError, ValueError):
    pass


class RankZeroError(QsrError, ValueError):
    """Raised for S = 0 where a nonzero matrix is needed; use the free construction."""


class PreconditionError(QsrError):
    """A composition theorem's hypothesis does not hold for the given inputs."""


class SolverError(QsrError):
    """A Lyapunov/Riccati solve could not be carried out."""


class InfeasibleError(QsrError):
    """The certificate search found no feasible point."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class SimulationDiverged(QsrError):
    def __init__(self, t, norm):
        super().__init__(f"state diverged at t={t:.6g} s (|x|={norm:.3e})")
        self.t = t
        self.norm = norm


class ConfigError(QsrError, ValueError):
    """Malformed scenario or data file; carries file:line context when known."""
