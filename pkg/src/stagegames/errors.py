"""Exception hierarchy.

Two families: :class:`ValidationError` for bad inputs (CLI exit code 2) and
:class:`NumericalFailure` for computations that could not complete (exit code 3).
"""


class StageGamesError(Exception):
    exit_code = 1


class ValidationError(StageGamesError, ValueError):
    exit_code = 2


class NumericalFailure(StageGamesError, ArithmeticError):
    exit_code = 3


class DimensionMismatch(ValidationError):
    pass


class GameFormatError(ValidationError):
    pass


class KernelRowSum(ValidationError):
    pass


class NegativeOffDiagonal(ValidationError):
    pass


class PositiveDiagonal(ValidationError):
    pass


class NotRowStochastic(ValidationError):
    pass


class NotADistribution(ValidationError):
    pass


class InvalidWeightFunction(ValidationError):
    pass


class InvalidPartition(ValidationError):
    pass


class NonPositiveStep(InvalidPartition):
    pass


class NonDivergentTail(InvalidPartition):
    pass


class StepTooLarge(ValidationError):
    pass


class OutOfRange(ValidationError):
    pass


class GridTooCoarse(ValidationError):
    pass


class GridTooLarge(ValidationError):
    pass


class RateMismatch(ValidationError):
    pass


class DegenerateDiscount(ValidationError):
    pass


class TruncationUnreachable(NumericalFailure):
    pass
