"""Exception hierarchy shared by every module."""


class AdrError(Exception):
    """Base class for all package errors."""


class DimensionError(AdrError, ValueError):
    pass


class NonFiniteError(AdrError, ValueError):
    pass


class InvalidParameterError(AdrError, ValueError):
    """Raised when a resolvent or formula is asked for outside its validity domain."""


class InvalidProblemError(AdrError, ValueError):
    pass


class OracleScopeError(AdrError, ValueError):
    pass


class StepPolicyError(AdrError, RuntimeError):
    pass


class FitError(AdrError, ValueError):
    pass


class EstimateError(AdrError, RuntimeError):
    pass


class ArgumentError(AdrError, ValueError):
    pass


class ConfigError(AdrError, ValueError):
    pass
