"""Exception hierarchy shared by every epimix module."""


class EpimixError(Exception):
    """Base class for all library errors."""

    exit_code = 1


class SeriesError(EpimixError, ValueError):
    exit_code = 3


class NegativeValue(SeriesError):
    pass


class TooShort(SeriesError):
    pass


class ParameterError(EpimixError, ValueError):
    exit_code = 2


class DataError(EpimixError):
    exit_code = 3


class MalformedHeader(DataError):
    pass


class UnparseableCell(DataError):
    def __init__(self, row: int, column: str, value: str):
        self.row = row
        self.column = column
        self.value = value
        super().__init__(f"row {row}, column {column!r}: cannot parse {value!r}")


class WindowOutOfRange(DataError):
    pass


class NonConvergence(EpimixError):
    exit_code = 4

    def __init__(self, message: str, iterations: int = 0):
        self.iterations = iterations
        super().__init__(message)


class AllZeroActuals(EpimixError, ValueError):
    exit_code = 3


class UnknownMethod(EpimixError, ValueError):
    exit_code = 2
