"""Exception types shared across the package."""


class CdtwError(Exception):
    """Base class for all errors raised by this package."""


class InvalidK(CdtwError):
    """Polygon parameter k must be an even integer >= 4."""


class SingularTransform(CdtwError):
    """The 2x2 transform of the unit polygon is not invertible."""


class InvalidEpsilon(CdtwError):
    """Approximation parameter eps must be positive."""


class InvalidCurve(CdtwError):
    """Curve violates its invariants (too short, repeated or non-finite vertices)."""


class OutOfDomain(CdtwError):
    """Argument lies outside the domain of a parametrization or function."""


class Undefined(CdtwError):
    """Operation undefined for this input (e.g. cone index of the origin)."""


class EmptyRectangle(CdtwError):
    """The two points do not span a rectangle (x must be <= y coordinatewise)."""


class InvalidDirection(CdtwError):
    """Direction vector must be nonzero."""


class InvalidSegment(CdtwError):
    """Segment endpoints are not coordinatewise monotone."""


class EmptyEnvelope(CdtwError):
    """Lower envelope of an empty candidate set."""


class OrderViolation(CdtwError):
    """Stack suffix update received pieces violating the propagation order."""


class DomainMismatch(CdtwError):
    """Optimum functions do not cover the domains required by a propagation."""


class NotABaseBorder(CdtwError):
    """Border is not on the bottom or left side of the parameter space."""


class GridTooLarge(CdtwError):
    """Requested discretization exceeds the configured node budget."""


class SingularPoint(CdtwError):
    """Closed-form derivative is singular at this parameter value."""
