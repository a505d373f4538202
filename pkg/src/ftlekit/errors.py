"""Exception hierarchy shared by every module in the package."""


class FtleError(Exception):
    """Base class for all errors raised by ftlekit."""


class ValidationError(FtleError):
    """A domain object or argument violates one of its invariants."""


class HorizonError(FtleError):
    """The integration horizon T is zero (or inconsistent with the step sign)."""


class DegenerateStencilError(FtleError):
    """A point has no neighbor on some axis, so no gradient stencil exists there."""

    def __init__(self, point: int, axis: int):
        self.point = point
        self.axis = axis
        super().__init__(f"point {point} has no forward or backward neighbor on axis {axis}")


class DomainError(FtleError):
    """A position lies outside the flow's domain, or a trajectory left it.

    ``point`` is the seed-point index when the error comes from flowmap
    generation; ``step`` is the integration step at which the exit happened.
    Either may be None for a plain out-of-domain query.
    """

    def __init__(self, message: str, point: int | None = None, step: int | None = None):
        self.point = point
        self.step = step
        super().__init__(message)


class FormatError(FtleError):
    """A byte stream or file does not conform to the on-disk format."""


class BadMagicError(FormatError):
    """The file does not start with the expected magic bytes."""


class UnsupportedVersionError(FormatError):
    """The file declares a format version this build cannot read."""


class TruncatedFileError(FormatError):
    """The file ends before the payload its header promises."""


class DimensionMismatchError(FormatError):
    """The file declares a spatial dimension other than 2 or 3."""
