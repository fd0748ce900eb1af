"""
Error types raised by the solver services.

Every error derives from ``RieszAdiError`` and from the built-in exception
that best describes it, so callers may catch either.
"""


class RieszAdiError(Exception):
    """Base class for all solver errors."""


class OrderDomainError(RieszAdiError, ValueError):
    """A fractional order outside the admissible range."""


class ScalePoleError(OrderDomainError):
    """The Riesz scale 1/(2cos(pi*gamma/2)) evaluated at its pole gamma = 1."""


class ArgumentError(RieszAdiError, ValueError):
    pass


class ShapeError(RieszAdiError, ValueError):
    pass


class DegenerateMatrixError(RieszAdiError, ValueError):
    pass


class ComplexSpectrumError(RieszAdiError, ValueError):
    pass


class DomainError(RieszAdiError, ValueError):
    """A closed-form function evaluated outside its domain."""


class ProblemSpecError(RieszAdiError, ValueError):
    pass


class ConfigurationError(RieszAdiError, ValueError):
    pass


class UnknownProblemError(RieszAdiError, KeyError):
    def __str__(self) -> str:
        # KeyError quotes its argument, keep the message readable.
        return str(self.args[0]) if self.args else "unknown problem"


class SingularityError(RieszAdiError, ArithmeticError):
    pass


class DivergenceError(RieszAdiError, ArithmeticError):
    pass


class OracleCapacityError(RieszAdiError, RuntimeError):
    pass


class DegenerateRateError(RieszAdiError, ValueError):
    pass


class RefinementLevelError(RieszAdiError, RuntimeError):
    """A refinement level failed; ``level`` is the step size of that level."""

    def __init__(self, level: float, cause: Exception):
        self.level = level
        self.cause = cause
        super().__init__(f"refinement level {level!r} failed: {cause}")
