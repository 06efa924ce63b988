class SchmidtKitError(Exception):
    """Base class for errors raised by schmidtkit."""

    code = "error"


class ValidationError(SchmidtKitError, ValueError):
    """Input violates a documented precondition or schema."""

    code = "validation_error"


class ConvergenceError(SchmidtKitError, RuntimeError):
    """A numerical routine failed to converge or to meet its residual bound."""

    code = "non_convergence"
