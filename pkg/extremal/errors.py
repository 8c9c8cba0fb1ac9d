"""
Exceptions raised by extremal

Everything derives from the builtin type a caller would expect
(ValueError for bad inputs, RuntimeError for failed iterations)
so `except ValueError` keeps working for code that does not know about us.
"""
from typing import Any, Optional


class ExtremalError(Exception):
    pass


class ParameterDomainError(ExtremalError, ValueError):
    pass


class NotRegularlyVaryingError(ParameterDomainError):
    pass


class ConfigurationError(ExtremalError, ValueError):
    pass


class DataError(ExtremalError, ValueError):
    def __init__(self, message: str, line: Optional[int] = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ShapeError(DataError):
    pass


class InsufficientTailDataError(DataError):
    pass


class UndefinedConditionalError(DataError):
    pass


class DegenerateError(ExtremalError, ArithmeticError):
    pass


class OptimizationError(ExtremalError, RuntimeError):
    def __init__(self, message: str, last_iterate: Any = None):
        super().__init__(message)
        self.last_iterate = last_iterate


# exit codes of the command line front end
EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


def exit_code_for(error: BaseException) -> int:
    # input and output files alike
    if isinstance(error, OSError):
        return EXIT_DATA
    if isinstance(error, ConfigurationError):
        return EXIT_CONFIG
    if isinstance(error, DataError):
        return EXIT_DATA
    if isinstance(error, (OptimizationError, DegenerateError)):
        return EXIT_NUMERICAL
    if isinstance(error, ParameterDomainError):
        return EXIT_CONFIG
    return EXIT_NUMERICAL
