"""Exception types shared across the package."""


class HebbnetError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(HebbnetError, ValueError):
    """A network, pooling, or experiment configuration is invalid."""


class IdxFormatError(HebbnetError, ValueError):
    """An IDX byte stream is malformed.

    Carries the byte offset at which parsing failed, when known.
    """

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class DataError(HebbnetError, ValueError):
    """A dataset cannot satisfy a request (e.g. not enough examples of a digit)."""
