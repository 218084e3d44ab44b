"""Exception hierarchy for torsionkit."""


class TorsionKitError(Exception):
    """Base class for all errors raised by torsionkit."""


class ValidationError(TorsionKitError, ValueError):
    """Bad input: wrong shapes, grid mismatch, malformed config."""


class NumericalError(TorsionKitError):
    """A numerical precondition failed during a computation."""


class MetricError(NumericalError):
    """Metric is not symmetric positive definite at some point."""


class ChartExitError(NumericalError):
    """An integrated trajectory left the chart domain."""


class SingularSpeedError(NumericalError):
    """Curve speed dropped below the regularity threshold."""


class FrenetViolation(NumericalError):
    """Curvature dips below the Frenet threshold somewhere on the curve.

    ``intervals`` holds ``(t_start, t_end)`` parameter intervals where the
    curvature is below threshold.
    """

    def __init__(self, message, intervals=()):
        super().__init__(message)
        self.intervals = list(intervals)


class NotTorsionDefining(NumericalError):
    """No continuous unit field parallel to the torsion vector exists."""

    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class NonOrientableDirection(NumericalError):
    """Direction field on a closed curve comes back with the opposite sign."""


class NotARotation(NumericalError):
    """Normal field is not a rotation of the reference normal."""


class CurveNotOnSurface(ValidationError):
    """Curve deviates from the hypersurface by more than the tolerance."""

    def __init__(self, message, deviation=None):
        super().__init__(message)
        self.deviation = deviation


class InconsistentTests(NumericalError):
    """Two independent line-of-curvature tests disagree."""


class WNotParallel(NumericalError):
    """Torsion direction field is not parallel in the complement distribution."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class SeamMismatch(NumericalError):
    """Closed-curve construction cannot close: total torsion not in 2*pi*Z."""

    def __init__(self, message, total=None, nearest_n=None):
        super().__init__(message)
        self.total = total
        self.nearest_n = nearest_n


class ConvexContradiction(NumericalError):
    """Convexity holds but the winding/cosine checks fail."""
