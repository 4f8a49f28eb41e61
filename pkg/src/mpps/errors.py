"""Exception types raised across the package."""


class MppsError(Exception):
    """Base class for all package errors."""


class NotFound(MppsError):
    """No near-return at the requested precision exists in the orbit."""

    def __init__(self, delta, searched):
        self.delta = delta
        self.searched = searched
        super().__init__(
            f"no return with precision {delta:g} among {searched} shifts; "
            "lengthen the orbit"
        )


class CoverageError(MppsError):
    """An evaluation was requested outside the range covered by the data."""


class OutOfRange(CoverageError):
    """A signal was evaluated outside its covered time range."""

    def __init__(self, t, lo, hi):
        self.t = t
        super().__init__(f"t={t!r} outside covered range [{lo!r}, {hi!r})")


class InsufficientRange(MppsError):
    pass


class StepFailure(MppsError):
    """The adaptive integrator could not meet the requested tolerance."""


class ConditionFailed(MppsError):
    """A theorem hypothesis required by the caller does not hold."""


class SingularPeriodMap(MppsError):
    """I - X(omega, 0) is numerically singular (a multiplier is close to 1)."""


class NoContraction(MppsError):
    """Picard iterates failed to contract."""

    def __init__(self, message, distances=()):
        self.distances = list(distances)
        super().__init__(message)


class DomainExit(MppsError):
    """The state left the ball ||x|| < H on which the nonlinearity is defined."""

    def __init__(self, t, norm, radius):
        self.t = t
        self.norm = norm
        self.radius = radius
        super().__init__(f"|x|={norm:.6g} >= H={radius:.6g} at t={t:.6g}")


class ConfigurationError(MppsError):
    """Declared recurrence types match no supported composition rule."""


class ConfigError(MppsError):
    """A system configuration document failed to parse or validate."""

    def __init__(self, message, field=None, line=None):
        self.message = message
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field:
            where.append(f"field {field}")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)
