"""
CO2 forecasting: the gated windowed-product network against an LSTM.

Both models learn one-step-ahead prediction on the z-scored first 75% of
the monthly series, then forecast the remaining 25% closed-loop. Errors are
measured on the ppm scale after de-normalizing.
"""

from pathlib import Path
from typing import Dict, List, Tuple

import numpy as np

from data_loaders.co2 import CO2_FILE, SeriesDataset, load_co2
from experiments.sweep import announce, epoch_printer, merge_reports, run_configurations
from layers.network import LayerKind, LayerSpec, Network, NetworkSpec, count_parameters, dense, gated_stage
from tensor_core.tensor import Tensor, as_array
from training.trainer import TrainConfig, forecast, train_recurrent
from utils.config import ExperimentConfig
from utils.errors import ArgumentError, DataMissingError
from utils.report_schema import ExperimentReport, Figure, Series

GATED_WIDTH = 50
LSTM_WIDTH = 100
MSE_FLAG_RATIO = 3.0
MODELS = ("lstm", "wpunn")
MODEL_NAMES = {"wpunn": "WPUNN forecast", "lstm": "LSTM forecast"}


def co2_gated_spec() -> NetworkSpec:
    """Two gated stages (dense -> 100, sigmoid, window 2/2 fed back) and a dense output."""
    return NetworkSpec(1, (*gated_stage(0, GATED_WIDTH), *gated_stage(3, GATED_WIDTH), dense(1)))


def co2_lstm_spec() -> NetworkSpec:
    lstm = LayerSpec(LayerKind.LSTM, width=LSTM_WIDTH)
    return NetworkSpec(1, (lstm, lstm, dense(1)))


MODEL_SPECS = {"wpunn": co2_gated_spec, "lstm": co2_lstm_spec}


def detrended_correlation(a: Tensor, b: Tensor) -> float:
    """
    Pearson correlation after removing a least-squares line from each series.

    Raises:
        ArgumentError: If the lengths differ or are shorter than 3
    """
    x, y = as_array(a).reshape(-1), as_array(b).reshape(-1)
    if x.size != y.size:
        raise ArgumentError(f"series lengths differ: {x.size} and {y.size}")
    if x.size < 3:
        raise ArgumentError(f"detrending needs at least 3 points, got {x.size}")
    t = np.arange(x.size, dtype=np.float64)
    residuals = []
    for values in (x, y):
        slope, intercept = np.polyfit(t, values, 1)
        residuals.append(values - (slope * t + intercept))
    rx, ry = residuals
    denominator = np.sqrt(np.sum(rx * rx) * np.sum(ry * ry))
    if denominator == 0:
        return 0.0
    return float(np.sum(rx * ry) / denominator)


def holdout_forecast(network: Network, dataset: SeriesDataset) -> np.ndarray:
    """Closed-loop forecast over the test split, on the ppm scale."""
    warmup = dataset.normalize(dataset.train)
    predicted = forecast(network, warmup, dataset.test.size)
    return as_array(dataset.denormalize(predicted))


def forecast_errors(predicted: np.ndarray, dataset: SeriesDataset) -> Tuple[float, float]:
    """(MSE on the ppm scale, MSE on the normalized scale)."""
    actual = dataset.test.array
    raw = float(np.mean((predicted - actual) ** 2))
    return raw, raw / dataset.std ** 2


def co2_path(data_dir: Path) -> Path:
    return Path(data_dir) / CO2_FILE


def train_co2_model(
    experiment_id: str,
    model: str,
    csv_path: str,
    train_config: TrainConfig,
    quiet: bool = True,
) -> ExperimentReport:
    dataset = load_co2(Path(csv_path))

    def evaluator(network: Network) -> float:
        return forecast_errors(holdout_forecast(network, dataset), dataset)[0]

    network, report = train_recurrent(
        MODEL_SPECS[model](),
        dataset.normalize(dataset.train),
        train_config,
        evaluator=evaluator,
        experiment_id=experiment_id,
        config_label=model,
        progress=epoch_printer(model, quiet, every=train_config.eval_every),
    )
    predicted = holdout_forecast(network, dataset)
    raw, normalized = forecast_errors(predicted, dataset)
    report.summary["forecast"] = predicted.tolist()
    report.summary["mse"] = raw
    report.summary["normalized_mse"] = normalized
    report.summary["detrended_correlation"] = detrended_correlation(Tensor(predicted), dataset.test)
    return report


def run_co2(config: ExperimentConfig) -> ExperimentReport:
    """
    Train both forecasters and compare their holdout forecasts.

    Raises:
        DataMissingError: If the CO2 CSV is absent
    """
    csv_path = co2_path(config.data_path)
    if not csv_path.exists():
        raise DataMissingError([str(csv_path)])
    dataset = load_co2(csv_path)
    announce(
        config.quiet,
        f"🌍 {dataset.values.size} months: {dataset.train_size} for training, {dataset.test.size} held out",
    )
    train_config = TrainConfig(
        learning_rate=config.learning_rate,
        epochs=config.epochs,
        bptt_length=config.bptt_length,
        seed=config.seed,
        loss="mse",
        eval_every=config.eval_every,
        timing=config.timing,
    )
    configurations = [
        (model, {"experiment_id": config.experiment_id, "model": model, "csv_path": str(csv_path),
                 "train_config": train_config, "quiet": config.quiet})
        for model in MODELS
    ]
    results = run_configurations(train_co2_model, configurations, config.workers, config.quiet)
    runs: Dict[str, ExperimentReport] = {label: run for label, run, _ in results if run is not None}
    report = merge_reports(config.experiment_id, config.label, results)
    report.config = config.echo()
    for label in runs:
        report.summary.pop(f"{label}.forecast", None)
    report.summary["parameters"] = {model: count_parameters(build()) for model, build in MODEL_SPECS.items()}
    report.summary["mse"] = {model: run.summary["mse"] for model, run in runs.items()}
    report.summary["normalized_mse"] = {model: run.summary["normalized_mse"] for model, run in runs.items()}
    report.summary["detrended_correlation"] = {
        model: run.summary["detrended_correlation"] for model, run in runs.items()
    }
    report.summary["training_wall_seconds"] = {model: run.summary["wall_seconds"] for model, run in runs.items()}
    if "wpunn" in runs and "lstm" in runs:
        flagged = runs["wpunn"].summary["mse"] > MSE_FLAG_RATIO * runs["lstm"].summary["mse"]
        report.summary["wpunn_mse_flag"] = flagged
        if flagged:
            announce(config.quiet, f"⚠️  WPUNN MSE exceeds {MSE_FLAG_RATIO:g}x the LSTM MSE")
    report.figure = forecast_figure(dataset, {model: run.summary["forecast"] for model, run in runs.items()})
    return report


def forecast_figure(dataset: SeriesDataset, forecasts: Dict[str, List[float]]) -> Figure:
    train_x = list(range(dataset.train_size))
    test_x = list(range(dataset.train_size, dataset.values.size))
    series = [
        Series("training data", train_x, dataset.train.tolist(), style="points"),
        Series("withheld data", test_x, dataset.test.tolist(), style="points"),
    ]
    for model in ("wpunn", "lstm"):
        if model in forecasts:
            series.append(Series(MODEL_NAMES[model], test_x, list(forecasts[model])))
    return Figure("Mauna Loa CO2 forecasts", "month", "CO2 (ppm)", series)
