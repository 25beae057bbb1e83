"""Exception hierarchy shared across the package."""


class SkipflowError(Exception):
    pass


# imaging


class ImageFormatError(SkipflowError, ValueError):
    """Malformed Netpbm data. ``offset`` is the byte position of the problem."""

    def __init__(self, message: str, offset: int = 0):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class MalformedHeader(ImageFormatError):
    pass


class TruncatedData(ImageFormatError):
    pass


class UnsupportedMaxval(ImageFormatError):
    pass


class MalformedPbm(ImageFormatError):
    pass


class TooManyLevels(SkipflowError, ValueError):
    pass


class ImageTooSmall(SkipflowError, ValueError):
    pass


class OutOfBounds(SkipflowError, ValueError):
    pass


# optflow


class DimensionMismatch(SkipflowError, ValueError):
    pass


# tracking core


class EmptyInput(SkipflowError, ValueError):
    pass


class NoEligiblePixels(SkipflowError):
    pass


class DegenerateVariance(SkipflowError):
    pass


class AllPointsLost(SkipflowError):
    pass


# pipeline


class NonMonotonicFrameIndex(SkipflowError, ValueError):
    pass


class MissingDetections(SkipflowError, ValueError):
    pass


# mot io


class ParseError(SkipflowError, ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class NegativeDimensions(ParseError):
    pass


class UnsortedInput(SkipflowError, ValueError):
    pass


class ConfigError(SkipflowError, ValueError):
    def __init__(self, message: str, key: str):
        super().__init__(f"{key}: {message}")
        self.key = key


class UnknownKey(ConfigError):
    pass


class InvalidValue(ConfigError):
    pass


# metrics / synth


class EmptyGroundTruth(SkipflowError, ValueError):
    pass


class ObjectLeavesImage(SkipflowError, ValueError):
    pass
