"""Exception hierarchy.

Two families matter to callers: :class:`ValidationError` for malformed
input (bad shapes, unknown labels, infeasible marginals) and
:class:`MathematicalError` for well-formed input that violates a
mathematical hypothesis (a relation that is not cyclically monotone,
fixed prices that no antiderivative can honour). The command line maps
them to exit codes 1 and 2.
"""


class OptPriceError(Exception):
    """Base class for every error raised by the package."""


class ValidationError(OptPriceError, ValueError):
    """Input does not satisfy a structural invariant."""


class MathematicalError(OptPriceError):
    """Input is well formed but violates a mathematical hypothesis."""


class ImproperFunction(ValidationError):
    pass


class SpaceMismatch(ValidationError):
    pass


class EmptyRelation(ValidationError):
    pass


class LimitExceeded(ValidationError):
    pass


class IndexNotInDomain(ValidationError):
    pass


class InfeasibleMarginals(ValidationError):
    pass


class ConstraintNotFullDomain(ValidationError):
    pass


class EmptyRestriction(ValidationError):
    pass


class FrozenPairsNotInSupport(ValidationError):
    pass


class DisconnectedGraph(ValidationError):
    pass


class ParseError(ValidationError):
    """Problem file could not be tokenised; carries line and column."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where += ": "
        super().__init__(where + message)


class NotCyclicallyMonotone(MathematicalError):
    """Raised with the violating cycle attached as ``witness``."""

    def __init__(self, message, witness=None, cycle_sum=None):
        super().__init__(message)
        self.witness = witness
        self.cycle_sum = cycle_sum


class InconsistentConstraints(MathematicalError):
    pass


class DualInconsistent(MathematicalError):
    pass


class NotLipschitzOnS(MathematicalError):
    pass


class ConstraintViolation(MathematicalError):
    pass
