"""
Standardized metric rows and experiment reports.

Every training run and diagnostic emits rows with the same columns, so the
CSV writer, the plots and the summaries never need to know which experiment
produced them.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import pandas as pd

from utils.errors import ArgumentError

CSV_COLUMNS = ["experiment-id", "config-label", "epoch", "train-loss", "test-metric", "wall-seconds"]


def create_metric_row(
    experiment_id: str,
    config_label: str,
    epoch: int,
    train_loss: Optional[float],
    test_metric: Optional[float] = None,
    wall_seconds: Optional[float] = None,
) -> Dict[str, Any]:
    """
    Create a standardized metric row.

    Args:
        experiment_id: Experiment name (e.g., "mnist-stride", "poly")
        config_label: Sweep configuration (e.g., "w4-s2", "wpunn-d03")
        epoch: Epoch number; 0 is the untrained network
        train_loss: Mean training loss for the epoch
        test_metric: Misclassification %, MSE or check error, if measured
        wall_seconds: Elapsed training time, if timing is recorded

    Returns:
        Dictionary keyed by CSV_COLUMNS
    """
    return {
        "experiment-id": experiment_id,
        "config-label": config_label,
        "epoch": int(epoch),
        "train-loss": None if train_loss is None else float(train_loss),
        "test-metric": None if test_metric is None else float(test_metric),
        "wall-seconds": None if wall_seconds is None else float(wall_seconds),
    }


def validate_metric_row(row: Dict[str, Any]) -> bool:
    """
    Validate that a row carries every column with sensible types.

    Returns:
        True if valid, False otherwise
    """
    for column in CSV_COLUMNS:
        if column not in row:
            return False
    if not isinstance(row["epoch"], int) or row["epoch"] < 0:
        return False
    for column in ("train-loss", "test-metric", "wall-seconds"):
        if row[column] is not None and not isinstance(row[column], (int, float)):
            return False
    return bool(row["experiment-id"]) and bool(row["config-label"])


@dataclass
class Series:
    """One named curve or point set for a figure."""

    label: str
    xs: List[float]
    ys: List[float]
    style: str = "line"


@dataclass
class Figure:
    title: str
    x_label: str
    y_label: str
    series: List[Series] = field(default_factory=list)


@dataclass
class ExperimentReport:
    """Config echo, metric rows and a summary for one run."""

    experiment_id: str
    label: str
    config: Dict[str, Any] = field(default_factory=dict)
    rows: List[Dict[str, Any]] = field(default_factory=list)
    summary: Dict[str, Any] = field(default_factory=dict)
    figure: Optional[Figure] = None
    failures: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    @property
    def name(self) -> str:
        return f"{self.experiment_id}-{self.label}"

    def add_row(self, row: Dict[str, Any]):
        if not validate_metric_row(row):
            raise ArgumentError(f"invalid metric row: {row}")
        self.rows.append(row)

    def extend(self, other: "ExperimentReport"):
        for row in other.rows:
            self.add_row(row)

    def sorted_rows(self) -> List[Dict[str, Any]]:
        return sorted(self.rows, key=lambda r: (r["config-label"], r["epoch"]))

    def final_rows(self) -> Dict[str, Dict[str, Any]]:
        """Last-epoch row per config label."""
        finals: Dict[str, Dict[str, Any]] = {}
        for row in self.sorted_rows():
            finals[row["config-label"]] = row
        return finals

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.sorted_rows(), columns=CSV_COLUMNS)

    def to_csv(self, path: Path) -> Path:
        """Write rows sorted by (config-label, epoch); identical reports give identical bytes."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False, float_format="%.12g", lineterminator="\n")
        return path
