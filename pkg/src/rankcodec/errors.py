"""Exception hierarchy shared by the whole toolkit.

Every error the library raises on purpose derives from RankCodecError, so
callers (the CLI in particular) can map failures to exit codes without
pattern-matching message strings.
"""


class RankCodecError(Exception):
    """Base class for all toolkit errors."""


class RemoteUnavailable(RankCodecError):
    """The remote prediction endpoint could not be reached or died mid-call."""


class VocabMismatch(RankCodecError):
    """Two components disagree about the token vocabulary."""


class ProtocolError(RankCodecError):
    """The remote endpoint answered, but not with a valid protocol message."""


class CorruptStream(RankCodecError):
    """An encoded payload cannot be decoded."""


class LengthMismatch(RankCodecError):
    """A payload decoded cleanly but to the wrong number of symbols."""


class NotAContainer(RankCodecError):
    """The bytes handed to the demuxer do not start with the container magic."""


class Truncated(RankCodecError):
    """A container ends before its declared payload lengths are satisfied."""


class UnsupportedVersion(RankCodecError):
    """A container declares a format version this build does not read."""


class InvalidHeader(RankCodecError):
    """A container header is self-inconsistent."""


class NoOverlap(RankCodecError):
    """Two rate-distortion curves share no quality interval."""


class DegenerateCurve(RankCodecError):
    """A rate-distortion curve cannot support a cubic fit."""


class InvalidReading(RankCodecError):
    """A metric reading is non-finite or outside its normalized range."""


class EmptyInput(RankCodecError):
    """An operation that needs at least one record received none."""
