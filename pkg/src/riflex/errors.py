"""Exception types raised across the toolkit."""


class RiflexError(ValueError):
    """Base class for all toolkit errors."""


class InvalidDimensionError(RiflexError):
    pass


class InvalidBaseError(RiflexError):
    pass


class DimensionMismatchError(RiflexError):
    pass


class DegenerateDimensionError(RiflexError):
    """NTK scaling is undefined for a rotary dimension of 2."""


class MissingBaseError(RiflexError):
    """The operation needs the base a spectrum was generated from."""


class InvalidThresholdsError(RiflexError):
    pass


class TimestepRangeError(RiflexError):
    pass


class IndexRangeError(RiflexError):
    pass


class DegenerateIntrinsicError(RiflexError):
    """theta_1 is 1 for every base, so it cannot be moved by changing the base."""


class UnknownAxisError(RiflexError):
    pass


class NoRepetitionFoundError(RiflexError):
    pass


class FrameDataError(RiflexError):
    pass


class ConfigError(RiflexError):
    pass
