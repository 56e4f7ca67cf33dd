"""Exception hierarchy shared across the package.

Exit-code mapping lives in the CLI: usage errors exit 1, data/validation
errors exit 2, numerical failures exit 3.
"""


class OodFilterError(Exception):
    """Base class for all package errors."""


class ValidationError(OodFilterError):
    """Input data violates a documented precondition or invariant."""


class FeatureFormatError(ValidationError):
    """A feature file is malformed (bad header, truncated payload, ...)."""


class InsufficientDataError(ValidationError):
    """Too few samples to perform the requested operation."""


class NumericalError(OodFilterError):
    """A numerical routine failed (e.g. non-PD matrix after shrinkage)."""
