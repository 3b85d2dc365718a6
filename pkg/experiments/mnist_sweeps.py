"""
MNIST stride and window sweeps.

Both sweeps train the same six-layer classifier

    dense 784 -> 300, window(w, s), dense -> 100, window(w, s), dense -> 10, log-softmax

once per configuration and record the test misclassification rate per epoch.
The stride sweep fixes w and varies s; the window sweep fixes s and varies w.
"""

from functools import lru_cache
from pathlib import Path
from statistics import mean, pvariance
from typing import List, Optional, Tuple

from data_loaders.mnist import ClassificationDataset, load_mnist_splits, mnist_paths
from experiments.sweep import announce, epoch_printer, merge_reports, run_configurations
from layers.network import LayerKind, LayerSpec, NetworkSpec, count_parameters, dense, window
from training.trainer import TrainConfig, train_feedforward
from utils.config import ExperimentConfig
from utils.errors import ConfigurationError, DataMissingError
from utils.report_schema import ExperimentReport, Figure

STRIDES = (1, 2, 3, 4)
WINDOWS = (2, 3, 4, 5, 6, 7, 8)
DEFAULT_STRIDE_WINDOW = 4
DEFAULT_WINDOW_STRIDE = 1
MIN_TEST_SUBSET = 1000


def mnist_topology(w: int, s: int) -> NetworkSpec:
    spec = NetworkSpec(
        784,
        (dense(300), window(w, s), dense(100), window(w, s), dense(10), LayerSpec(LayerKind.LOG_SOFTMAX)),
    )
    spec.layer_widths()
    return spec


def check_mnist_data(data_dir: Path):
    """
    Raises:
        DataMissingError: Listing every expected file that is absent
    """
    missing = [str(p) for p in mnist_paths(data_dir).values() if not p.exists()]
    if missing:
        raise DataMissingError(missing)


def holdout_size(train_subset: int, test_size: int) -> int:
    return min(test_size, max(train_subset // 6, MIN_TEST_SUBSET))


@lru_cache(maxsize=2)
def load_splits(data_dir: str, subset: Optional[int]) -> Tuple[ClassificationDataset, ClassificationDataset]:
    train, test = load_mnist_splits(Path(data_dir))
    if subset is not None:
        train = train.subset(min(subset, len(train)))
        test = test.subset(holdout_size(len(train), len(test)))
    return train, test


def train_configuration(
    experiment_id: str,
    config_label: str,
    w: int,
    s: int,
    data_dir: str,
    subset: Optional[int],
    train_config: TrainConfig,
    quiet: bool = True,
) -> ExperimentReport:
    train, test = load_splits(data_dir, subset)
    _, report = train_feedforward(
        mnist_topology(w, s),
        train,
        train_config,
        eval_set=test,
        experiment_id=experiment_id,
        config_label=config_label,
        progress=epoch_printer(config_label, quiet),
    )
    return report


def _train_config(config: ExperimentConfig) -> TrainConfig:
    return TrainConfig(
        learning_rate=config.learning_rate,
        batch_size=config.batch_size,
        epochs=config.epochs,
        seed=config.seed,
        loss="nll",
        eval_every=config.eval_every,
        timing=config.timing,
    )


def _sweep(config: ExperimentConfig, pairs: List[Tuple[int, int]], title: str) -> ExperimentReport:
    check_mnist_data(config.data_path)
    train_config = _train_config(config)
    configurations = [
        (
            f"w{w}-s{s}",
            {
                "experiment_id": config.experiment_id,
                "config_label": f"w{w}-s{s}",
                "w": w,
                "s": s,
                "data_dir": str(config.data_path),
                "subset": config.subset,
                "train_config": train_config,
                "quiet": config.quiet,
            },
        )
        for w, s in pairs
    ]
    results = run_configurations(train_configuration, configurations, config.workers, config.quiet)
    report = merge_reports(config.experiment_id, config.label, results)
    report.config = config.echo()
    report.figure = Figure(title, "epoch", "test misclassification (%)")
    finals = {label: row["test-metric"] for label, row in report.final_rows().items()}
    report.summary["final_test_error"] = finals
    if finals:
        values = list(finals.values())
        report.summary["mean_final_test_error"] = mean(values)
        report.summary["variance_final_test_error"] = pvariance(values)
        report.summary["spread_final_test_error"] = max(values) - min(values)
    report.summary["parameters"] = {f"w{w}-s{s}": count_parameters(mnist_topology(w, s)) for w, s in pairs}
    return report


def run_mnist_stride(config: ExperimentConfig) -> ExperimentReport:
    """
    Train once per stride at a fixed window size.

    Raises:
        ConfigurationError: If s > w
        DataMissingError: If the MNIST files are absent
    """
    w = config.w or DEFAULT_STRIDE_WINDOW
    strides = [config.s] if config.s is not None else [s for s in STRIDES if s <= w]
    if any(s > w for s in strides):
        raise ConfigurationError(f"stride must satisfy s <= w, got w={w}, s={strides[0]}")
    announce(config.quiet, f"🔢 Stride sweep at w={w}: s in {strides}")
    return _sweep(config, [(w, s) for s in strides], f"MNIST test error, w={w}, varying s")


def run_mnist_window(config: ExperimentConfig) -> ExperimentReport:
    """
    Train once per window size at a fixed stride.

    Raises:
        ConfigurationError: If s > w
        DataMissingError: If the MNIST files are absent
    """
    s = config.s or DEFAULT_WINDOW_STRIDE
    windows = [config.w] if config.w is not None else [w for w in WINDOWS if w >= s]
    if any(s > w for w in windows):
        raise ConfigurationError(f"stride must satisfy s <= w, got w={windows[0]}, s={s}")
    announce(config.quiet, f"🔢 Window sweep at s={s}: w in {windows}")
    return _sweep(config, [(w, s) for w in windows], f"MNIST test error, s={s}, varying w")
