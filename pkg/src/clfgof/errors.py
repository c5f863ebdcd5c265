"""Exception hierarchy.

``ValidationError`` subclasses signal bad user input (CLI exit code 2);
``NumericalError`` subclasses signal solver trouble (CLI exit code 3).
"""


class ClfGofError(Exception):
    pass


class ValidationError(ClfGofError, ValueError):
    pass


class NumericalError(ClfGofError, ArithmeticError):
    pass


class NegativeProbability(ValidationError):
    pass


class DegenerateSum(ValidationError):
    pass


class InvalidDataset(ValidationError):
    pass


class ClassifierFailure(ValidationError):
    pass


class BadFoldCount(ValidationError):
    pass


class EmptySubset(ValidationError):
    pass


class EmptyInput(ValidationError):
    pass


class SingleClassInput(ValidationError):
    pass


class UnboundedBasis(ValidationError):
    pass


class NonPositiveLambda(ValidationError):
    pass


class TooFewEvaluations(ValidationError):
    pass


class OutOfRange(ValidationError):
    pass


class RowCountMismatch(ValidationError):
    pass


class BadHeader(ValidationError):
    pass


class NumericalFailure(NumericalError):
    pass


class MaxSweepsExceeded(RuntimeWarning):
    """Coordinate descent hit its sweep budget; the best iterate is returned."""
