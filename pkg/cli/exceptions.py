# cli/exceptions.py


class ConfigError(ValueError):
    """A run config that cannot be read or does not validate."""

    def __init__(self, errors):
        self.errors = list(errors) if not isinstance(errors, str) else [errors]
        super().__init__("invalid config: " + "; ".join(self.errors))
