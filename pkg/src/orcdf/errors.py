"""Exception hierarchy.

Input problems derive from :class:`InputError`, numerical breakdowns from
:class:`NumericalError`; the CLI maps them to exit codes 2 and 3.
"""


class OrcdfError(Exception):
    """Base class for all package errors."""


class InputError(OrcdfError, ValueError):
    pass


class NumericalError(OrcdfError, ArithmeticError):
    pass


class InvalidObservation(InputError):
    pass


class AxisEmpty(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class GridTooLarge(InputError):
    pass


class SampleTooSmall(InputError):
    pass


class EmptySearchSpace(InputError):
    pass


class EnumerationTooLarge(InputError):
    pass


class InconsistentCensoring(InputError):
    pass


class StructureMismatch(InputError):
    pass


class ParseError(InputError):
    """Malformed CSV content; carries the 1-based line and column name."""

    def __init__(self, line, column, reason):
        self.line = line
        self.column = column
        self.reason = reason
        super().__init__(f"line {line}, column {column!r}: {reason}")


class EmptyFile(InputError):
    pass


class RaggedRow(ParseError):
    pass


class QuadratureNonConvergence(NumericalError):
    pass


class ZeroDenominator(NumericalError):
    pass


class DegenerateNormalizer(NumericalError):
    pass


class IdentifiabilityWarning(UserWarning):
    """A parameter is not identified at the reported maximizer."""
