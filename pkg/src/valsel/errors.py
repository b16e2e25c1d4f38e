"""Exception types shared across the library."""


class DataError(Exception):
    """A dataset, schema, or config file is unusable; the message names the location."""


class ConfigError(DataError):
    """An experiment config failed validation; all offending fields in one message."""


class DegenerateDataError(ValueError):
    """A statistical routine received constant input it cannot score."""


class DivergenceError(RuntimeError):
    """Training produced a non-finite parameter or activation."""

    def __init__(self, epoch: int, detail: str = "non-finite value"):
        self.epoch = epoch
        super().__init__(f"training diverged at epoch {epoch}: {detail}")
