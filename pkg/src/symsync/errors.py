class ConfigError(ValueError):
    """Raised when a configuration violates one of its constraints."""
