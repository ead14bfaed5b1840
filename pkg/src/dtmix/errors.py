"""Exception hierarchy shared by every dtmix module."""


class DtmixError(Exception):
    """Base class for all dtmix domain errors."""


class InvalidVolume(DtmixError):
    pass


class ShapeMismatch(DtmixError):
    pass


class SpacingMismatch(DtmixError):
    pass


class DimsMismatch(DtmixError):
    pass


class EmptyBackground(DtmixError):
    pass


class EmptyForeground(DtmixError):
    pass


class InfeasibleThresholds(DtmixError):
    pass


class DegenerateMix(DtmixError):
    pass


class ClassCountMismatch(DtmixError):
    pass


class ZeroCount(DtmixError):
    pass


class BadMagic(DtmixError):
    pass


class UnsupportedDatatype(DtmixError):
    pass


class TruncatedFile(DtmixError):
    pass


class NonFiniteData(DtmixError):
    pass


class BadHeader(DtmixError):
    pass


class BadLabel(DtmixError):
    pass


class EmptyManifest(DtmixError):
    pass


class InconsistentRecord(DtmixError):
    pass


class IoFailure(DtmixError):
    pass
