"""Exception hierarchy shared across the package."""


class CurvePowError(Exception):
    """Base class for every error raised by curvepow."""


class DivisionByZero(CurvePowError, ZeroDivisionError):
    pass


class InvalidPoint(CurvePowError, ValueError):
    pass


class SingularCurve(CurvePowError, ValueError):
    pass


class TooLarge(CurvePowError, ValueError):
    """An input exceeds a size guard of an oracle-grade routine."""


class EncodingError(CurvePowError, ValueError):
    pass


class GenerationExhausted(CurvePowError, RuntimeError):
    pass


class ResourceLimit(CurvePowError, MemoryError):
    pass


class NotInInterval(CurvePowError, ValueError):
    pass


class InternalError(CurvePowError, RuntimeError):
    pass


class NoCandidates(CurvePowError, ValueError):
    pass


class ChainFormatError(CurvePowError, ValueError):
    """A chain file record could not be parsed.

    ``height`` is the index of the earliest bad record.
    """

    def __init__(self, height: int, message: str):
        super().__init__(f"record {height}: {message}")
        self.height = height
