"""Exception types raised across the package."""


class QuvaError(Exception):
    """Base class for package errors."""


class ValidationError(QuvaError, ValueError):
    """Input failed a contract check (shape, normalisation, unitarity)."""


class ConsistencyError(QuvaError, RuntimeError):
    """An identity that must hold exactly was violated (assembly bug)."""


class NumericalError(QuvaError, RuntimeError):
    """A numerical routine failed (singular kernel, divergence)."""
