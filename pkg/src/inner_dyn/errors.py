"""Exception and warning classes.

Two families matter to callers: :class:`PreconditionError` (bad input, a
hypothesis of the mathematics is violated; CLI exit code 2) and
:class:`NumericError` (a computation failed to converge or lost accuracy;
CLI exit code 3).
"""


class InnerDynError(Exception):
    """Base class for all library errors."""


class PreconditionError(InnerDynError, ValueError):
    """An input violates a documented precondition."""


class DomainError(PreconditionError):
    """A point or parameter lies outside the domain of an operation."""


class OrderMismatchError(PreconditionError):
    """Two truncated objects have incompatible truncation orders."""


class SpecError(PreconditionError):
    """An inner-function or measure specification violates its invariants."""


class MobiusError(PreconditionError):
    """The operation requires a non-Möbius map."""


class BoundaryFixedPointError(PreconditionError):
    """The Denjoy–Wolff point lies on the unit circle."""


class SingularityError(DomainError):
    """Evaluation at (or numerically at) a singular atom."""


class UndefinedLogDerivative(DomainError):
    """``z phi'(z)/phi(z)`` requested at a zero of ``phi``.

    The derivative itself is still available as :attr:`derivative`.
    """

    def __init__(self, message, derivative):
        super().__init__(message)
        self.derivative = derivative


class DegenerateVarianceError(PreconditionError):
    """The asymptotic variance vanishes, so no limit theorem can be tested."""


class NumericError(InnerDynError, ArithmeticError):
    """A numerical procedure failed."""


class NoSpectralGapError(NumericError):
    """No isolated dominant eigenvalue was detected."""


class ResourceError(InnerDynError):
    """A computation would exceed its resource budget."""


class ConditioningWarning(UserWarning):
    """A result was computed in a regime where round-off is amplified."""
