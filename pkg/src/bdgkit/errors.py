"""Exception types shared across the package.

The CLI maps these onto exit codes: validation/structural problems are
usage errors (exit 2), numerical failures discovered at run time (gap
violations, loss of positivity) are exit 3.
"""


class StructuralError(ValueError):
    """Inconsistent shapes, incompatible lattice dimensions, bad arguments."""


class ValidationError(ValueError):
    """Input violates a documented precondition (e.g. non-Hermitian h)."""


class DomainError(ValueError):
    """Operand outside the mathematical domain of an operation."""


class StabilityError(RuntimeError):
    """A = JH fails the positivity required by the requested operation."""


class GapViolationError(RuntimeError):
    """A spectral gap assumed by the caller is absent or too small."""

    def __init__(self, message, offending=None):
        super().__init__(message)
        self.offending = offending


class DisorderedModelError(RuntimeError):
    """Operation requires a translation-invariant model."""


class ConfigError(ValueError):
    """Malformed job configuration."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field
