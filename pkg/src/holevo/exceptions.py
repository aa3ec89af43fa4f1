"""Exception hierarchy.

Input problems derive from :class:`ValidationError` (a ``ValueError``);
numerical failures derive from :class:`NumericalError`. The CLI maps the two
families to distinct exit codes.
"""


class HolevoError(Exception):
    """Base class for all library errors."""


class ValidationError(HolevoError, ValueError):
    pass


class NumericalError(HolevoError, ArithmeticError):
    pass


class NotHermitian(ValidationError):
    pass


class NotPSD(ValidationError):
    pass


class BadTrace(ValidationError):
    pass


class BadNorm(ValidationError):
    pass


class BadProbabilities(ValidationError):
    pass


class DimMismatch(ValidationError):
    pass


class DimOverflow(ValidationError):
    pass


class MixedStates(ValidationError):
    """A pure-state-only operation received a mixed state."""


class NotCommuting(ValidationError):
    pass


class DomainError(ValidationError):
    pass


class Infeasible(ValidationError):
    pass


class NoCost(ValidationError):
    pass


class TooFewElements(ValidationError):
    pass


class NoConvergence(NumericalError):
    """Iteration limit reached.

    The best iterate found so far is attached as ``result``.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class NoBracket(NumericalError):
    pass


class QuadratureFailure(NumericalError):
    def __init__(self, message, error_estimate=None):
        super().__init__(message)
        self.error_estimate = error_estimate
