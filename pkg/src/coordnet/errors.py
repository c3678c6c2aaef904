"""Exception types raised by coordnet."""


class CoordnetError(Exception):
    """Base class for all coordnet errors."""


class InputError(CoordnetError):
    """An input file is missing or unreadable."""


class CorruptInputError(InputError):
    """Too many records in an input file failed validation."""

    def __init__(self, message, samples=()):
        super().__init__(message)
        self.samples = list(samples)


class ConfigurationError(CoordnetError):
    """Invalid parameters or configuration."""


class StageError(CoordnetError):
    """A pipeline stage failed; ``stage`` names it."""

    def __init__(self, stage, message):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
