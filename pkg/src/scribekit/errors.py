"""Exception types shared across the package."""


class ScribekitError(Exception):
    """Base class for all scribekit errors."""


class ValidationError(ScribekitError, ValueError):
    """A domain invariant was violated (duplicate ids, empty texts, bad shapes)."""


class ParseError(ScribekitError, ValueError):
    """Structured text could not be parsed; message carries location info."""

    def __init__(self, message: str, *, line: int | None = None, offset: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        elif offset is not None:
            message = f"offset {offset}: {message}"
        super().__init__(message)
        self.line = line
        self.offset = offset


class ConfigError(ScribekitError, ValueError):
    """A required configuration piece is missing or inconsistent."""


class CorruptionError(ScribekitError, ValueError):
    """Stored data failed an integrity check (e.g. quantized codes out of range)."""
