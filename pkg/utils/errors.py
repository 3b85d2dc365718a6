"""
Error types shared by every package in the library.

Library code raises these; the experiment scheduler catches them per
configuration and turns them into a failed run.
"""

from typing import Optional, Sequence


class WpunnError(Exception):
    """Base class for all library errors."""


class DimensionError(WpunnError):
    """Shapes of two operands do not fit together."""


class ArgumentError(WpunnError):
    """An argument is outside its legal range."""


class ConfigurationError(WpunnError):
    """A window, layer or experiment configuration is invalid."""


class NumericError(WpunnError):
    """A value became non-finite or overflowed a guard."""


class TrainingDivergedError(NumericError):
    """Loss became non-finite during training."""

    def __init__(self, epoch: int, batch: int, loss: float):
        self.epoch = epoch
        self.batch = batch
        self.loss = loss
        super().__init__(f"loss became non-finite ({loss}) at epoch {epoch}, batch {batch}")


class DomainError(WpunnError):
    """Input lies outside the mathematical domain of an operation."""


class ContractError(WpunnError):
    """An API was used against its contract (e.g. backward on a spent tape)."""


class FormatError(WpunnError):
    """A data file is malformed."""

    def __init__(self, message: str, offset: Optional[int] = None, row: Optional[int] = None):
        self.offset = offset
        self.row = row
        where = ""
        if offset is not None:
            where = f" (byte offset {offset})"
        elif row is not None:
            where = f" (row {row})"
        super().__init__(f"{message}{where}")


class DataMissingError(WpunnError):
    """Required data files are not present."""

    def __init__(self, paths: Sequence[str]):
        self.paths = list(paths)
        listing = "\n".join(f"  - {p}" for p in self.paths)
        super().__init__(f"missing data files, expected:\n{listing}")
