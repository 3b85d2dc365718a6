"""
Monthly CO2 series: CSV loader, train/test split and normalization.

CSV format: header ``year,month,ppm``, one row per month, no gaps.
Normalization is a z-score computed from the training split only.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Tuple

import numpy as np
import pandas as pd

from tensor_core.tensor import Tensor, as_array
from utils.errors import ArgumentError, DataMissingError, FormatError

CO2_COLUMNS = ["year", "month", "ppm"]
CO2_FILE = "co2.csv"
TRAIN_FRACTION = 0.75


@dataclass
class SeriesDataset:
    """Raw values plus the (mean, std) of the training split."""

    values: Tensor
    mean: float
    std: float
    train_size: int

    @classmethod
    def from_values(cls, values: Tensor, train_fraction: float = TRAIN_FRACTION) -> "SeriesDataset":
        """
        Raises:
            ArgumentError: If the series is empty or the training split has no variance
        """
        raw = as_array(values).reshape(-1)
        if raw.size == 0:
            raise ArgumentError("series is empty")
        train_size = split_point(raw.size, train_fraction)
        train = raw[:train_size]
        std = float(np.std(train))
        if not std > 0:
            raise ArgumentError("training split has zero variance; cannot normalize")
        return cls(Tensor(raw), float(np.mean(train)), std, train_size)

    @property
    def train(self) -> Tensor:
        return Tensor(self.values.array[:self.train_size])

    @property
    def test(self) -> Tensor:
        return Tensor(self.values.array[self.train_size:])

    def normalize(self, values: Tensor) -> Tensor:
        return Tensor.wrap((as_array(values) - self.mean) / self.std)

    def denormalize(self, values: Tensor) -> Tensor:
        return Tensor.wrap(as_array(values) * self.std + self.mean)


def split_point(length: int, fraction: float = TRAIN_FRACTION) -> int:
    """Number of leading values used for training."""
    if not 0 < fraction < 1:
        raise ArgumentError(f"train fraction must lie in (0, 1), got {fraction}")
    return int(length * fraction)


def split_series(values: Tensor, fraction: float = TRAIN_FRACTION) -> Tuple[Tensor, Tensor]:
    """(first fraction, remainder)."""
    raw = as_array(values).reshape(-1)
    cut = split_point(raw.size, fraction)
    return Tensor(raw[:cut]), Tensor(raw[cut:])


def load_co2(csv_path: Path, train_fraction: float = TRAIN_FRACTION) -> SeriesDataset:
    """
    Load a monthly ``year,month,ppm`` CSV.

    Raises:
        DataMissingError: If the file does not exist
        FormatError: On a missing column, non-numeric value or month gap (row = file line)
    """
    csv_path = Path(csv_path)
    if not csv_path.exists():
        raise DataMissingError([str(csv_path)])
    frame = pd.read_csv(csv_path, dtype=str, skipinitialspace=True)
    frame.columns = [str(c).strip() for c in frame.columns]
    for column in CO2_COLUMNS:
        if column not in frame.columns:
            raise FormatError(f"missing column '{column}' in {csv_path}", row=1)
    numeric = {}
    for column in CO2_COLUMNS:
        converted = pd.to_numeric(frame[column], errors="coerce")
        bad = converted.isna()
        if bad.any():
            line = int(bad.to_numpy().argmax()) + 2
            raise FormatError(f"non-numeric {column} '{frame[column].iloc[line - 2]}'", row=line)
        numeric[column] = converted.to_numpy()
    years = numeric["year"].astype(int)
    months = numeric["month"].astype(int)
    for i in range(1, len(frame)):
        expected = (years[i - 1] + 1, 1) if months[i - 1] == 12 else (years[i - 1], months[i - 1] + 1)
        if (years[i], months[i]) != expected:
            raise FormatError(
                f"month gap: {years[i - 1]}-{months[i - 1]:02d} followed by {years[i]}-{months[i]:02d}", row=i + 2
            )
    return SeriesDataset.from_values(Tensor(numeric["ppm"].astype(np.float64)), train_fraction)
