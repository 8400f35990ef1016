"""Exception hierarchy shared by every pipeline stage."""


class CurationError(Exception):
    """Base class for all errors raised by uvcurate."""


# frame_io
class StreamError(CurationError):
    pass


class MissingSignature(StreamError):
    pass


class MissingDimension(StreamError):
    pass


class UnsupportedChroma(StreamError):
    pass


class MalformedRational(StreamError):
    pass


class TruncatedFrame(StreamError):
    pass


class BadFrameMarker(StreamError):
    pass


# scene_split / stat_filters / purification
class DimensionMismatch(CurationError, ValueError):
    pass


class ShortClip(CurationError, ValueError):
    pass


class InvalidBox(CurationError, ValueError):
    pass


class FrameTooSmall(CurationError, ValueError):
    pass


class EmptyClip(CurationError, ValueError):
    pass


class TooFewFrames(CurationError, ValueError):
    pass


class IncompleteScores(CurationError, ValueError):
    pass


# clip_logic
class NonPositiveDuration(CurationError, ValueError):
    pass


class NotLongClip(CurationError, ValueError):
    pass


# captions
class IncompleteCaptions(CurationError, ValueError):
    pass


class EmptySummary(CurationError):
    pass


# providers
class ProviderError(CurationError):
    pass


class ProviderUnavailable(ProviderError):
    pass


class ProviderMalformedResponse(ProviderError):
    pass


# manifest / config / synth
class SchemaViolation(CurationError, ValueError):
    pass


class ConfigError(CurationError, ValueError):
    pass


class ContradictorySpec(CurationError, ValueError):
    pass


class IdMismatch(CurationError, ValueError):
    pass
