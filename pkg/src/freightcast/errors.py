"""Exception hierarchy.

Every error raised on purpose by the library derives from
:class:`FreightcastError`. The three intermediate classes map onto the CLI
exit codes: configuration problems exit with 2, data problems with 3 and
numerical failures with 4.
"""


class FreightcastError(Exception):
    exit_code = 1


class ConfigError(FreightcastError):
    exit_code = 2


class DataError(FreightcastError, ValueError):
    exit_code = 3


class NumericalFailure(FreightcastError, ArithmeticError):
    exit_code = 4


# series_core
class DomainError(DataError):
    """A value lies outside the domain of a transformation."""


class LengthError(DataError):
    """A series is too short (or an argument list has the wrong length)."""


class EmptyMonthError(DataError):
    """A calendar month inside the covered range received no weekly values."""


class RangeError(DataError):
    """A requested window falls outside the series index."""


# diagnostics
class DegenerateError(DataError):
    """Input has zero variance (or is otherwise degenerate)."""


class InsufficientDataError(DataError):
    pass


class DegreeOfFreedomError(DataError):
    pass


# sarimax engine
class NumericalError(NumericalFailure):
    """Kalman filter covariance lost positive definiteness."""


class ConvergenceError(NumericalFailure):
    pass


class SingularHessianError(NumericalFailure):
    pass


class InstabilityError(NumericalFailure):
    """Explosive or non-stationary autoregressive dynamics."""


class ExogMissingError(DataError):
    pass


# model selection
class AllCandidatesFailedError(NumericalFailure):
    pass


# scenario lab
class AlignmentError(DataError):
    pass


class WindowError(DataError):
    pass


# ingestion
class ParseError(DataError):
    def __init__(self, message, row=None, column=None):
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.row = row
        self.column = column


class GapError(DataError):
    def __init__(self, message, missing=None):
        super().__init__(message)
        self.missing = missing


class NegativeValueError(DomainError):
    pass


class NetworkError(DataError):
    pass
