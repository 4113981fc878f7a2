"""Exception hierarchy shared by the estimators, environments and CLI."""


class DynspecError(Exception):
    """Base class for every error raised by this package."""


class DomainError(DynspecError, ValueError):
    """An argument lies outside the domain of the operation."""


class ConfigError(DynspecError, ValueError):
    """A configuration violates its invariants or the sample-size requirement."""


class BudgetError(DynspecError, RuntimeError):
    """The requested number of pulls exceeds the configured budget."""


class EnvironmentExhausted(DynspecError, RuntimeError):
    """The environment reached its horizon and cannot answer more pulls."""


class DataError(DynspecError, LookupError):
    """A reward buffer does not cover the time indices an estimator needs."""
