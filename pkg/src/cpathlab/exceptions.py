"""Exception hierarchy for cpathlab.

Input-side errors also derive from ValueError and solver-side errors from RuntimeError,
so callers may catch either the cpathlab base class or the builtin category.
"""

from typing import Optional


class CpathLabError(Exception):
    """Base class of every error raised by cpathlab."""


class ValidationError(CpathLabError, ValueError):
    """Raised when an input has the wrong shape, is not symmetric or is otherwise malformed."""


class InstanceNotFoundError(ValidationError):
    """Raised when a registry name does not resolve to a builtin instance."""


class DomainError(CpathLabError, ValueError):
    """Raised when a matrix is outside the cone an operation requires.

    Attributes:
        value: The offending quantity, usually the smallest eigenvalue.

    """

    def __init__(self, message: str, value: Optional[float] = None):
        """Initialize the error with a message and the offending value."""
        super().__init__(message)
        self.value = value


class InteriorityError(DomainError):
    """Raised when G(x) or Y is not strictly positive definite where an interior point is required."""


class ConvergenceError(CpathLabError, RuntimeError):
    """Raised when an iterative method hits its iteration cap or its line search collapses.

    Attributes:
        residual: Last residual reached.
        iterations: Number of iterations performed.

    """

    def __init__(self, message: str, residual: Optional[float] = None, iterations: Optional[int] = None):
        """Initialize the error with the last residual and the iteration count."""
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class SingularSystemError(CpathLabError, RuntimeError):
    """Raised when a Newton matrix is numerically singular.

    Attributes:
        sigma_min: Smallest singular value of the matrix.

    """

    def __init__(self, message: str, sigma_min: Optional[float] = None):
        """Initialize the error with the smallest singular value."""
        super().__init__(message)
        self.sigma_min = sigma_min


class InconsistentSystemError(CpathLabError, RuntimeError):
    """Raised when a linear system that must be consistent has no solution.

    Used when no KKT multiplier exists, when the limiting tangent system has an empty
    solution set and when the feasibility phase cannot reach h(x) = 0.

    Attributes:
        residual: Least-squares residual of the system.

    """

    def __init__(self, message: str, residual: Optional[float] = None):
        """Initialize the error with the least-squares residual."""
        super().__init__(message)
        self.residual = residual


class AssumptionViolationError(CpathLabError, RuntimeError):
    """Raised when a computation detects that strict complementarity or the second-order condition fails."""


class PathTracingError(CpathLabError, RuntimeError):
    """Raised by the path tracer when a solver fails at some barrier parameter.

    Attributes:
        mu: Barrier parameter at which the failure happened.

    """

    def __init__(self, message: str, mu: float):
        """Initialize the error with the failing barrier parameter."""
        super().__init__(message)
        self.mu = mu
