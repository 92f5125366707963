"""Exception types raised across the package."""


class ToricNKError(Exception):
    """Base class for all package errors."""


class DegreeOverflowError(ToricNKError, ValueError):
    pass


class DomainError(ToricNKError, ValueError):
    """A point lies outside the domain where a family or solution is defined."""


class EvaluationError(ToricNKError, ArithmeticError):
    """A scalar field returned a non-finite value."""


class OutsideU0Error(ToricNKError, ValueError):
    """The structure forms are undefined because eps^2 <= 0."""


class DegenerateStructureError(ToricNKError, ArithmeticError):
    """omega^3 vanishes, so J = 6K/omega^3 cannot be formed."""


class SingularityError(ToricNKError, ArithmeticError):
    """The radial ODE denominator q^2 t - 2 t^2 is (numerically) zero."""


class PreconditionError(ToricNKError, ValueError):
    pass
