"""Exception types shared across the package."""


class DomainError(ValueError):
    """An operation was called with inputs outside its documented domain."""


class ConfigError(ValueError):
    """A configuration object, preset file, or data file is invalid."""


class DivergenceError(RuntimeError):
    """Training produced a non-finite loss and was aborted."""
