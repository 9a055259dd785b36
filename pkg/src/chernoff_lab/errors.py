"""Exception hierarchy for chernoff_lab.

Every library error derives from :class:`ChernoffLabError` so callers (and the
CLI) can separate numerical/validation failures from programming errors.
"""


class ChernoffLabError(Exception):
    """Base class of all library errors."""


class NonFinite(ChernoffLabError, ValueError):
    """An input or intermediate matrix contains NaN or Inf."""


class Overflow(ChernoffLabError, ArithmeticError):
    """A result left the representable floating point range."""


class DegenerateInput(ChernoffLabError, ValueError):
    """All singular values fell below the truncation threshold."""


class DimMismatch(ChernoffLabError, ValueError):
    """Operand dimensions do not match."""


class NoConvergence(ChernoffLabError):
    """An iterative estimate hit its term budget without meeting tolerance.

    The last estimate and its residual are kept on the exception.
    """

    def __init__(self, msg, estimate=None, residual=None):
        super().__init__(msg)
        self.estimate = estimate
        self.residual = residual


class NotUnitary(ChernoffLabError, ValueError):
    pass


class NotProjector(ChernoffLabError, ValueError):
    pass


class NotContraction(ChernoffLabError, ValueError):
    pass


class TooLarge(ChernoffLabError, ValueError):
    pass


class NegativeTime(ChernoffLabError, ValueError):
    pass


class MethodUnavailable(ChernoffLabError):
    pass


class InvalidSchedule(ChernoffLabError, ValueError):
    pass


class NotDivisible(ChernoffLabError, ValueError):
    pass


class OddN(ChernoffLabError, ValueError):
    pass


class HypothesisViolated(ChernoffLabError, ValueError):
    """The norm precondition of a bound check does not hold."""


class ParseError(ChernoffLabError, ValueError):
    """A config file could not be parsed; message carries line/field context."""


class ValidationError(ChernoffLabError, ValueError):
    """A parsed config violates one of its invariants."""
