class DomainError(ValueError):
    """An input lies outside the domain of an operation."""


class ConfigError(ValueError):
    """A run configuration could not be parsed or validated."""
