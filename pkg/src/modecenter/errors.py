"""Exception hierarchy shared by every module."""


class ModeCenterError(Exception):
    """Base class for all package errors."""


class DomainError(ModeCenterError, ValueError):
    """An argument lies outside the domain of a function."""


class ConfigurationError(ModeCenterError, ValueError):
    """Data or settings cannot support the requested computation."""


class NumericError(ModeCenterError, ArithmeticError):
    """A numerical procedure failed to reach its accuracy target."""


class DegenerateDensityError(NumericError):
    """The variance functional has a vanishing denominator."""
