"""Exception types shared across the package."""


class BoatlandError(Exception):
    pass


class ConfigError(BoatlandError):
    """Bad configuration file or bad command-line arguments (exit code 2)."""


class CheckpointError(BoatlandError):
    """Malformed checkpoint file; carries the byte offset of the problem."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class NumericError(BoatlandError):
    """Non-finite values where finite ones are required (exit code 4)."""


class BusClosed(BoatlandError):
    """Publish or receive attempted on a closed vision bus."""
