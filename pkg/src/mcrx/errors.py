"""Exception hierarchy shared by all mcrx modules."""


class McrxError(Exception):
    """Base class for every error raised by the package."""


class DomainError(McrxError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ModelParameterError(McrxError, ValueError):
    """A parameter set drives a model outside its valid region."""


class FitProblemError(McrxError, ValueError):
    """A fit problem is malformed (too little data, bad bounds, ...)."""


class ConfigError(McrxError):
    """Invalid or incomplete experiment configuration."""


class DataError(McrxError):
    """Malformed or inconsistent input data (CSV traces, bit files)."""
