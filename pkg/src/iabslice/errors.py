"""Exception types raised across the package."""


class DomainError(ValueError):
    """An argument is outside the domain an operation accepts."""


class InvalidTopologyError(DomainError):
    pass


class GenerationError(RuntimeError):
    """The profile generator cannot satisfy its configured guarantees."""


class ProfileParseError(ValueError):
    def __init__(self, path, line, message):
        self.path = str(path)
        self.line = line
        super().__init__(f"{self.path}:{line}: {message}")


class UsageError(RuntimeError):
    """An object was used in a state that does not allow the call."""


class ConfigError(ValueError):
    pass
