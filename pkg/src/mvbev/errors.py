"""Error taxonomy shared across the toolkit.

Every domain failure raises one of these instead of a bare ValueError so
callers (and the CLI) can distinguish usage problems from data problems.
"""


class MvbevError(ValueError):
    """Base class for all domain errors raised by this package."""


# geometry
class DepthNonPositive(MvbevError):
    """Point is at or behind the camera plane."""


class RayParallelToPlane(MvbevError):
    """Viewing ray never meets the requested horizontal plane."""


class IntersectionBehindCamera(MvbevError):
    """Ray-plane intersection lies behind the camera."""


# grids / arrays
class ShapeMismatch(MvbevError):
    """Array shape or frame tag is inconsistent with the operation."""


# boxes
class NonPositiveSize(MvbevError):
    """A box width/length/height must be strictly positive."""


# orientation
class BadBinCount(MvbevError):
    """Multi-bin encoding needs at least two intervals."""


class MalformedDistribution(MvbevError):
    """Bin probabilities are not a valid distribution."""


class DegenerateRay(MvbevError):
    """Object sits on the camera's ground footprint; ray azimuth undefined."""


# perspective pooling
class AllVerticesBehindCamera(MvbevError):
    """No box vertex projects in front of the camera."""


class EmptyROI(MvbevError):
    """ROI does not intersect the image."""


# losses
class LengthMismatch(MvbevError):
    """Paired arrays differ in length."""


class BadLabel(MvbevError):
    """Class label index is out of range."""


class NoPositivesWithOffsets(MvbevError):
    """Offset terms supplied but the batch has no positive anchors."""


# simulator
class PlacementInfeasible(MvbevError):
    """Rejection sampling failed to place all objects."""


# dataset io
class ParseError(MvbevError):
    """File does not match the expected schema (message names the field)."""


class ValidationError(MvbevError):
    """File parsed but violates a domain invariant."""
