"""Exception types shared across the package."""


class HypersentError(ValueError):
    """Base class for all errors raised by this package."""


class FormatError(HypersentError):
    """A file does not conform to the interchange format."""


class DimensionError(HypersentError):
    """Declared and actual array dimensions disagree."""


class ShapeError(HypersentError):
    """Arguments have inconsistent shapes."""


class DegenerateInputError(HypersentError):
    """Input is too small or empty for the requested operation."""


class UnsupportedCombinationError(HypersentError):
    """The requested option combination is not defined (e.g. Ward + cosine)."""


class DomainError(HypersentError):
    """Value outside the mathematical domain of the operation."""
