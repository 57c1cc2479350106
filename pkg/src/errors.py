"""
Exception types shared by the analytics, optimizer, simulator and CLI layers.

The entry script maps these onto exit codes: ValidationError -> 1,
NumericalError -> 2.
"""


class ValidationError(ValueError):
    """Invalid parameters, policy, chain or configuration.

    Carries every problem found, so a config file can be fixed in one pass.
    """

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class CapacityError(ValidationError):
    """Exhaustive enumeration would exceed the policy-count guard."""


class NumericalError(RuntimeError):
    """An iterative method did not converge."""

    def __init__(self, message, residual=None):
        self.residual = residual
        if residual is not None:
            message = f"{message} (residual {residual:.3e})"
        super().__init__(message)
