"""Exception and warning types shared across the package."""


class ModnucError(Exception):
    """Base class for all package errors."""


class DomainError(ModnucError, ValueError):
    """An argument lies outside the domain where the quantity is defined."""


class ConfigError(ModnucError, ValueError):
    """Invalid configuration (grid parameters, model strings, CLI fields)."""

    def __init__(self, message, field=None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field


class CapacityError(ModnucError):
    """A Fock space operation would exceed the particle-number truncation."""


class QuadratureError(ModnucError):
    """A numerical integral did not converge or its integrand is not integrable."""


class ConditioningError(ModnucError):
    """A sampled set of vectors is numerically rank deficient."""


class NumericalError(ModnucError):
    """A dense linear-algebra routine failed."""


class TailLossWarning(UserWarning):
    """Norm mass was lost beyond the rapidity cutoff."""
