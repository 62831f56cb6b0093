"""Exception types raised across the package."""


class PoissonSteinError(Exception):
    """Base class for all package errors."""


class NumericalDomainError(PoissonSteinError, ArithmeticError):
    """An integrand or functional produced a non-finite value."""


class MethodUnsupportedError(PoissonSteinError):
    """The requested numerical method cannot handle the problem size."""


class DensityTooPeakedError(PoissonSteinError):
    """Rejection sampling acceptance rate fell below the configured floor."""


class DomainError(PoissonSteinError, ValueError):
    """An argument lies outside the admissible domain."""


class DuplicatePointError(DomainError):
    """A point configuration contains two bitwise-identical points."""


class ContractionIndexError(PoissonSteinError, IndexError):
    """Contraction indices (r, l) are invalid for the kernel orders."""


class NotDegenerateError(PoissonSteinError, ValueError):
    """A kernel expected to be completely degenerate is not."""


class NotNormalizedError(PoissonSteinError, ValueError):
    """A kernel or expansion violates the unit-variance normalization."""


class EmptySampleError(PoissonSteinError, ValueError):
    """A statistic was requested on an empty sample."""
