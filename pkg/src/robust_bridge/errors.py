"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`BridgeError`.
Input-validation errors additionally derive from :class:`ValueError` so callers
that only know about the builtin still catch them.
"""


class BridgeError(Exception):
    pass


class ParameterError(BridgeError, ValueError):
    pass


class NonPositiveReversion(ParameterError):
    pass


class NegativeSource(ParameterError):
    pass


class NonPositiveVolatility(ParameterError):
    pass


class UnboundedCoefficient(ParameterError):
    pass


class OutOfDomain(BridgeError, ValueError):
    pass


class InvalidGrid(BridgeError, ValueError):
    pass


class InvalidPsi(BridgeError, ValueError):
    pass


class NoConvergence(BridgeError, ArithmeticError):
    pass


class InconsistentInput(BridgeError, ValueError):
    pass


class NotBracketed(BridgeError, ValueError):
    pass


class MissingRiccati(BridgeError, ValueError):
    pass


class BlowUpInput(BridgeError, ValueError):
    pass


class BenchmarkEnsemble(BridgeError, ValueError):
    pass


class ParseError(BridgeError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EmptyInput(BridgeError, ValueError):
    pass


class NonMonotoneTime(BridgeError, ValueError):
    pass


class DegenerateData(BridgeError, ValueError):
    pass
