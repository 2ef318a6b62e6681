class BenchError(ValueError):
    """Base class for benchmark errors."""


class EmptyResults(BenchError):
    """A metric was asked for over no results."""


class ConfigError(BenchError):
    """Experiment configuration failed validation."""

    def __init__(self, message, errors=None):
        super().__init__(message)
        self.errors = errors or {}
