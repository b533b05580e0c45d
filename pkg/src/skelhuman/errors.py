"""Exception types raised across the package."""


class SkelHumanError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(SkelHumanError, ValueError):
    pass


class DegenerateImage(SkelHumanError, ValueError):
    """An image has zero intensity variance, so correlation is undefined."""


class EmptyMask(SkelHumanError, ValueError):
    pass


class NotThin(SkelHumanError, ValueError):
    """A skeleton raster contains a 2x2 block of foreground pixels."""


class TooFewEndpoints(SkelHumanError, ValueError):
    pass


class Unreachable(SkelHumanError, ValueError):
    pass


class ConfigError(SkelHumanError, ValueError):
    pass


class InvalidScore(SkelHumanError, ValueError):
    pass


class NonMonotoneFrameId(SkelHumanError, ValueError):
    pass


class SpecTooSmall(SkelHumanError, ValueError):
    pass
