"""Exception types raised across the toolkit."""


class FisheyeError(Exception):
    """Base class for all fisheyekit errors."""


class NotMonotoneError(FisheyeError):
    """The radial profile r_c(r_d) is not strictly increasing on the checked range."""

    def __init__(self, radius: float, message: str | None = None):
        self.radius = float(radius)
        super().__init__(message or f"radial profile non-increasing near r={radius:.6g}")


class NoBracketError(FisheyeError):
    """The requested rectified radius exceeds the profile value at the bracket end."""


class ConvergenceError(FisheyeError):
    """Root search failed to reach the requested residual tolerance."""


class InvalidTransformError(FisheyeError):
    """A crop-and-resize transform does not fit inside the source frame."""


class DimensionMismatchError(FisheyeError):
    """Array shapes disagree where equal shapes are required."""


class EmptyMaskError(FisheyeError):
    """A validity mask selects no pixels."""


class TooSmallError(FisheyeError):
    """An image is smaller than the metric window."""


class MapFormatError(FisheyeError):
    """Base class for map-file serialization errors."""


class BadMagicError(MapFormatError):
    """Map file does not start with the expected magic bytes."""


class BadVersionError(MapFormatError):
    """Map file declares an unsupported format version."""


class BadHeaderError(MapFormatError):
    """Map file header fields are malformed (kind, reserved, or channels)."""


class KindMismatchError(MapFormatError):
    """Map file holds a different kind of map than the caller expects."""


class TruncatedError(MapFormatError):
    """Map file ends before the declared payload is complete."""


class SchemaError(FisheyeError):
    """A manifest record violates the record schema."""


class RejectionExhaustedError(FisheyeError):
    """Parameter sampling failed to find a monotone draw within the attempt budget."""


class InsufficientSourcesError(FisheyeError):
    """Dataset synthesis was given no source images."""
