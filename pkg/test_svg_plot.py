"""
SVG rendering of experiment reports.
"""

import numpy as np
import pytest

from data_loaders.co2 import SeriesDataset
from experiments.co2_forecast import forecast_figure
from tensor_core.tensor import Tensor
from utils.errors import ArgumentError
from utils.report_schema import ExperimentReport, Figure, Series, create_metric_row
from utils.svg_plot import emit_plot, epoch_series


def window_sweep_report():
    report = ExperimentReport("mnist-window", "seed0")
    for w in range(2, 9):
        for epoch in range(4):
            report.add_row(create_metric_row("mnist-window", f"w{w}-s1", epoch, 2.0 / (epoch + 1), 10.0 - epoch + w))
    report.figure = Figure("MNIST test error, s=1, varying w", "epoch", "test misclassification (%)")
    return report


def test_one_series_per_configuration():
    svg = emit_plot(window_sweep_report(), "epochs")
    assert svg.lstrip().startswith("<?xml")
    assert 'id="series-6"' in svg
    assert 'id="series-7"' not in svg
    assert "test misclassification (%)" in svg


def test_plots_are_deterministic(tmp_path):
    path = tmp_path / "plots" / "mnist-window-seed0.svg"
    first = emit_plot(window_sweep_report(), "epochs", path)
    assert emit_plot(window_sweep_report(), "epochs") == first
    assert path.read_text(encoding="utf-8") == first


def test_epoch_series_skips_unmeasured_epochs():
    report = ExperimentReport("poly", "seed0")
    report.add_row(create_metric_row("poly", "relu-d01-r0", 0, 1.0, 0.9))
    report.add_row(create_metric_row("poly", "relu-d01-r0", 1, 0.8))
    report.add_row(create_metric_row("poly", "relu-d01-r0", 2, 0.7, 0.6))
    (series,) = epoch_series(report)
    assert (series.xs, series.ys) == ([0, 2], [0.9, 0.6])


def test_degree_plot_uses_the_report_figure():
    report = ExperimentReport("poly", "seed0")
    report.figure = Figure(
        "Held-out MSE by polynomial degree",
        "degree",
        "test MSE",
        [Series("WPUNN", [1, 2, 3], [0.1, 0.2, 0.3]), Series("leaky ReLU", [1, 2, 3], [0.2, 0.3, 0.5])],
    )
    svg = emit_plot(report, "degree")
    assert 'id="series-1"' in svg
    assert "Held-out MSE by polynomial degree" in svg


def test_forecast_plot():
    dataset = SeriesDataset.from_values(Tensor(315.0 + np.arange(24) / 4.0))
    figure = forecast_figure(dataset, {"wpunn": [320.0] * 6, "lstm": [321.0] * 6})
    assert [series.label for series in figure.series] == [
        "training data", "withheld data", "WPUNN forecast", "LSTM forecast"
    ]
    report = ExperimentReport("co2", "seed0", figure=figure)
    assert 'id="series-3"' in emit_plot(report, "forecast")


def test_nothing_to_plot():
    with pytest.raises(ArgumentError):
        emit_plot(ExperimentReport("poly", "seed0"), "epochs")
    with pytest.raises(ArgumentError):
        emit_plot(window_sweep_report(), "histogram")
    report = window_sweep_report()
    report.figure = None
    with pytest.raises(ArgumentError):
        emit_plot(report, "degree")
