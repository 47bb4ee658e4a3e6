"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConfigError(ValueError):
    """A run configuration or grid specification is unusable."""


class NumericsError(RuntimeError):
    """An iterative procedure failed to converge or a solve went bad."""
