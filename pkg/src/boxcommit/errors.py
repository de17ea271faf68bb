"""Exception types shared across the package."""


class ValidationError(ValueError):
    """A probability table or other input is malformed."""


class ProtocolViolation(RuntimeError):
    """A strategy took an action its schedule does not permit."""


class ConfigurationError(ValueError):
    """An analysis was asked for something the scenario does not define."""


class InapplicableStrategy(ValueError):
    """A strategy was paired with a protocol it cannot attack."""


class GuardLimitExceeded(RuntimeError):
    """An exact computation would exceed its configured size limit."""

    def __init__(self, what: str, size: int, limit: int):
        super().__init__(f"{what} size {size} exceeds the limit {limit}")
        self.what = what
        self.size = size
        self.limit = limit
