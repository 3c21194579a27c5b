"""Exception types shared across the package."""


class InvalidParameterError(ValueError):
    """A constructor or operation received an out-of-range parameter."""


class GeometryError(ValueError):
    """Requested geometry is degenerate or self-intersecting."""


class MeshFormatError(ValueError):
    """A mesh2d text stream violates the format."""


class SignalDomainError(ValueError):
    """A signal was evaluated outside its time domain."""


class DimensionError(ValueError):
    """A requested reduced dimension exceeds what the discrete space admits."""


class NumericalBreakdownError(RuntimeError):
    """Orthogonalization or factorization lost too much accuracy."""


class SingularSystemError(RuntimeError):
    """A linear system that should be regular turned out singular."""


class InsufficientHistoryError(ValueError):
    """A diagnostic needs more time snapshots than were provided."""


class ConfigError(ValueError):
    """Configuration file rejected; carries the full list of violations."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))
