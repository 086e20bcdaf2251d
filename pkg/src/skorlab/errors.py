"""Exception types shared across the package."""


class SkorlabError(Exception):
    """Base class for all package-specific errors."""


class DomainError(SkorlabError, ValueError):
    """An argument is outside the mathematical domain of the operation."""


class ValidationError(SkorlabError, ValueError):
    """Input data violates a structural invariant (bad file, bad config)."""
