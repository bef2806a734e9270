"""Exception hierarchy shared by every module in the package."""


class QfheError(Exception):
    """Base class for all errors raised by qfhe."""


class InvalidDimensions(QfheError, ValueError):
    pass


class IndexOutOfRange(QfheError, IndexError):
    pass


class DimensionMismatch(QfheError, ValueError):
    pass


class DegenerateCnot(QfheError, ValueError):
    pass


class RPairCountMismatch(QfheError, ValueError):
    pass


class WeightSumError(QfheError, ValueError):
    pass


class TooLarge(QfheError, ValueError):
    pass


class UnsupportedProgram(QfheError, ValueError):
    pass


class ParseError(QfheError, ValueError):
    """Malformed circuit, key or state text.

    ``line`` and ``col`` are 1-based and may be ``None`` when the position
    cannot be recovered.
    """

    def __init__(self, message, line=None, col=None):
        self.message = message
        self.line = line
        self.col = col
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", col {col}" if col is not None else "") + ")"
        super().__init__(message + where)


class ProtocolDesync(QfheError, RuntimeError):
    pass


class CustodyViolation(QfheError, RuntimeError):
    pass


class EncodingRegisterMismatch(QfheError, RuntimeError):
    pass
