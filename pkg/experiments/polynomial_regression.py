"""
Polynomial regression: a windowed-product network against a leaky ReLU
network of the same shape.

For each degree d a random polynomial in x, y is drawn, 1000 training and
1000 held-out points are sampled from it, and both models are trained on
the same data with mean squared error. The product model replaces every
activation of the ReLU model with a w = s = 2 window, which halves the
width feeding the next dense layer and so roughly halves the parameters.
"""

from collections import defaultdict
from statistics import mean
from typing import Dict, List

from data_loaders.polynomial import MAX_DEGREE, generate_polynomial, sample_polynomial
from experiments.sweep import announce, epoch_printer, merge_reports, run_configurations
from layers.network import LayerKind, LayerSpec, NetworkSpec, count_parameters, dense, window
from tensor_core.rng import Rng
from training.trainer import TrainConfig, train_feedforward
from utils.config import ExperimentConfig
from utils.errors import ConfigurationError
from utils.report_schema import ExperimentReport, Figure, Series

WPUNN_PARAMETERS = 2776
RELU_PARAMETERS = 5301
SAMPLE_COUNT = 1000
HIDDEN_WIDTH = 50
POLYNOMIAL_STREAM = 7
MODELS = ("relu", "wpunn")
MODEL_NAMES = {"wpunn": "WPUNN", "relu": "leaky ReLU"}


def poly_wpunn_spec() -> NetworkSpec:
    return NetworkSpec(
        2,
        (
            dense(HIDDEN_WIDTH),
            window(2, 2),
            dense(HIDDEN_WIDTH),
            window(2, 2),
            dense(HIDDEN_WIDTH),
            window(2, 2),
            dense(1),
        ),
    )


def poly_relu_spec() -> NetworkSpec:
    leaky = LayerSpec(LayerKind.LEAKY_RELU, slope=0.1)
    return NetworkSpec(
        2,
        (dense(HIDDEN_WIDTH), leaky, dense(HIDDEN_WIDTH), leaky, dense(HIDDEN_WIDTH), leaky, dense(1)),
    )


MODEL_SPECS = {"wpunn": poly_wpunn_spec, "relu": poly_relu_spec}
EXPECTED_PARAMETERS = {"wpunn": WPUNN_PARAMETERS, "relu": RELU_PARAMETERS}


def check_parameter_counts() -> Dict[str, int]:
    """
    Raises:
        ConfigurationError: If either model deviates from its expected parameter count
    """
    counts = {model: count_parameters(build()) for model, build in MODEL_SPECS.items()}
    for model, count in counts.items():
        if count != EXPECTED_PARAMETERS[model]:
            raise ConfigurationError(
                f"{model} network has {count} parameters, expected {EXPECTED_PARAMETERS[model]}"
            )
    return counts


def config_label(model: str, degree: int, repeat: int) -> str:
    return f"{model}-d{degree:02d}-r{repeat}"


def polynomial_data(seed: int, degree: int, repeat: int, samples: int = SAMPLE_COUNT):
    """(polynomial, train set, test set); identical for both models of a (degree, repeat) pair."""
    rng = Rng(seed).derive(POLYNOMIAL_STREAM).derive(degree * 1000 + repeat)
    polynomial = generate_polynomial(degree, rng)
    return polynomial, sample_polynomial(polynomial, samples, rng), sample_polynomial(polynomial, samples, rng)


def train_polynomial(
    experiment_id: str,
    model: str,
    degree: int,
    repeat: int,
    seed: int,
    train_config: TrainConfig,
    samples: int = SAMPLE_COUNT,
    quiet: bool = True,
) -> ExperimentReport:
    label = config_label(model, degree, repeat)
    polynomial, train, test = polynomial_data(seed, degree, repeat, samples)
    _, report = train_feedforward(
        MODEL_SPECS[model](),
        train,
        train_config,
        eval_set=test,
        experiment_id=experiment_id,
        config_label=label,
        progress=epoch_printer(label, quiet, every=100),
    )
    report.summary["terms"] = polynomial.term_count
    return report


def run_poly(config: ExperimentConfig) -> ExperimentReport:
    """
    Train both models for every degree (or config.d) and repeat.

    Raises:
        ConfigurationError: If a model's parameter count is off
    """
    counts = check_parameter_counts()
    announce(config.quiet, f"🧮 Parameter counts: WPUNN {counts['wpunn']}, leaky ReLU {counts['relu']}")
    degrees = [config.d] if config.d is not None else list(range(1, MAX_DEGREE + 1))
    configurations = []
    for degree in degrees:
        for repeat in range(config.repeats):
            train_config = TrainConfig(
                learning_rate=config.learning_rate,
                batch_size=config.batch_size,
                epochs=config.epochs,
                seed=config.seed + repeat,
                loss="mse",
                eval_every=config.eval_every,
                timing=config.timing,
            )
            for model in MODELS:
                kwargs = {
                    "experiment_id": config.experiment_id,
                    "model": model,
                    "degree": degree,
                    "repeat": repeat,
                    "seed": config.seed,
                    "train_config": train_config,
                    "quiet": config.quiet,
                }
                configurations.append((config_label(model, degree, repeat), kwargs))
    results = run_configurations(train_polynomial, configurations, config.workers, config.quiet)
    report = merge_reports(config.experiment_id, config.label, results)
    report.config = config.echo()
    report.summary["parameters"] = counts

    errors: Dict[str, Dict[int, List[float]]] = {model: defaultdict(list) for model in MODELS}
    wall: Dict[str, float] = defaultdict(float)
    for label, run, error in results:
        if run is None:
            continue
        model, degree_part, _ = label.split("-")
        errors[model][int(degree_part[1:])].append(run.sorted_rows()[-1]["test-metric"])
        wall[model] += run.summary.get("wall_seconds", 0.0)
    mean_errors = {model: {d: mean(values) for d, values in sorted(per.items())} for model, per in errors.items()}
    report.summary["mean_test_mse"] = mean_errors
    report.summary["training_wall_seconds"] = dict(wall)
    report.summary["wpunn_better_degrees"] = [
        d for d in degrees if d in mean_errors["wpunn"] and d in mean_errors["relu"]
        and mean_errors["wpunn"][d] < mean_errors["relu"][d]
    ]
    report.figure = Figure(
        "Held-out MSE by polynomial degree",
        "degree",
        "test MSE",
        [
            Series(MODEL_NAMES[model], list(mean_errors[model]), list(mean_errors[model].values()))
            for model in ("wpunn", "relu")
        ],
    )
    return report
