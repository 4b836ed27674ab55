"""Exception hierarchy shared by every drzero module.

Validation problems map to CLI exit code 1, numerical failures to exit code 2.
"""


class DrZeroError(Exception):
    """Base class for all drzero errors."""

    code = "drzero_error"
    exit_code = 1

    def to_dict(self) -> dict[str, str]:
        return {"error": self.code, "message": str(self)}


class ValidationError(DrZeroError):
    code = "validation_error"


class DomainError(ValidationError):
    """Raised when a point lies outside dom f or outside the Lyapunov domain D."""

    code = "domain_error"


class ConfigError(ValidationError):
    code = "config_error"


class Unsupported(DrZeroError):
    """Raised when an operation is not defined for a model or point."""

    code = "unsupported"


class SelectionError(ValidationError):
    code = "selection_error"


class NumericalFailure(DrZeroError):
    code = "numerical_failure"
    exit_code = 2


class SearchFailure(NumericalFailure):
    code = "search_failure"


class SingularJacobian(NumericalFailure):
    code = "singular_jacobian"


class SingularUpdate(NumericalFailure):
    code = "singular_update"


class DerivativeSingular(NumericalFailure):
    code = "derivative_singular"


class InsufficientTail(NumericalFailure):
    code = "insufficient_tail"
