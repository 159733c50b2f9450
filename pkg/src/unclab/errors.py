"""Exception hierarchy shared by every module."""


class UnclabError(Exception):
    """Base class for library errors."""


class InvalidInputError(UnclabError, ValueError):
    """Values or parameters outside the domain of an operation."""


class IncompatibleRepresentationError(UnclabError, TypeError):
    """Two functions cannot be paired on a common discretization."""


class NotApplicableError(UnclabError):
    """The hypothesis of a check does not hold for this input."""


class DegenerateInputError(UnclabError):
    """Input lies on the extremal cone where a quantity is undefined."""


class UnsupportedConversionError(UnclabError):
    """Requested resampling has no implementation."""
