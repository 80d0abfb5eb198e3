"""Exception hierarchy.

Every error raised by the package derives from :class:`TempordError`.
Configuration and input problems also derive from :class:`ValueError` so
callers that only know the builtin hierarchy still catch them.
"""


class TempordError(Exception):
    """Base class for all package errors."""


# configuration / record validation
class ConfigError(TempordError, ValueError):
    pass


class SegmentTooLong(ConfigError):
    pass


class SegmentTooShort(ConfigError):
    pass


class EmptyShiftRange(ConfigError):
    pass


class BadThreshold(ConfigError):
    pass


class RateMismatch(ConfigError):
    pass


class MisalignedGrid(ConfigError):
    pass


class NoOverlap(ConfigError):
    pass


class InvalidSeries(TempordError, ValueError):
    pass


# preprocessing
class RateTooLow(TempordError, ValueError):
    pass


class NoBeatsFound(TempordError):
    pass


class TooFewBeats(TempordError, ValueError):
    pass


class BadFactor(TempordError, ValueError):
    pass


class DegenerateSegment(TempordError, ValueError):
    """Constant segment cannot be standardized."""


class ParseError(TempordError, ValueError):
    pass


class NonUniformSampling(ParseError):
    pass


class MissingColumn(ParseError):
    pass


# metrics
class DegenerateX(TempordError, ValueError):
    pass


class DegenerateY(TempordError, ValueError):
    pass


class LengthMismatch(TempordError, ValueError):
    pass


# synthesis
class OffGridLag(TempordError, ValueError):
    pass
