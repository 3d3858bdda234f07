"""Exception hierarchy.

Input/schema problems derive from :class:`InputError` (CLI exit code 2),
numerical or degenerate-data problems from :class:`NumericalError`
(exit code 3).
"""


class AnisoUQError(Exception):
    exit_code = 1


class InputError(AnisoUQError, ValueError):
    exit_code = 2


class NumericalError(AnisoUQError, ArithmeticError):
    exit_code = 3


class InvalidInput(InputError):
    pass


class MissingColumn(InputError):
    def __init__(self, name):
        super().__init__(f"missing column: {name!r}")
        self.name = name


class ParseError(InputError):
    def __init__(self, row, col, message=""):
        text = f"cannot parse row {row}, column {col!r}"
        if message:
            text += f": {message}"
        super().__init__(text)
        self.row = row
        self.col = col


class SchemaMismatch(InputError):
    pass


class DegenerateTurbulence(NumericalError):
    pass


class OutsideTriangle(NumericalError):
    pass


class RealizabilityViolation(NumericalError):
    pass


class InsufficientData(NumericalError):
    pass


class UndefinedCorrelation(NumericalError):
    pass
