"""
Training loops: shuffled mini-batches for feedforward networks, truncated
backpropagation through time for recurrent ones, and closed-loop
forecasting.

Runs are deterministic given the seed: parameters come from stream 0 of the
seed's generator, and the shuffle for epoch e from stream EPOCH_STREAM + e,
so a permutation depends only on (seed, epoch).
"""

import time
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np

from autodiff import ops
from autodiff.tape import Tape
from layers.network import Network, NetworkSpec, as_batch
from tensor_core.rng import Rng
from tensor_core.tensor import Tensor, as_array
from training.adam import AdamState, adam_step
from training.losses import misclassification_rate, record_mse, record_nll
from utils.errors import ArgumentError, ConfigurationError, NumericError, TrainingDivergedError
from utils.report_schema import ExperimentReport, create_metric_row

PARAMETER_STREAM = 0
EPOCH_STREAM = 1000
EVAL_CHUNK = 1000

LOSS_KINDS = ("nll", "mse")

Progress = Callable[[int, float, Optional[float]], None]
Evaluator = Callable[[Network], float]


@dataclass
class TrainConfig:
    """Hyperparameters of one training run."""

    learning_rate: float
    batch_size: int = 32
    epochs: int = 20
    bptt_length: int = 36
    seed: int = 0
    loss: str = "nll"
    eval_every: int = 1
    timing: bool = False

    def __post_init__(self):
        if self.batch_size < 1:
            raise ArgumentError(f"batch size must be >= 1, got {self.batch_size}")
        if self.epochs < 1:
            raise ArgumentError(f"epoch count must be >= 1, got {self.epochs}")
        if self.bptt_length < 1:
            raise ArgumentError(f"BPTT length must be >= 1, got {self.bptt_length}")
        if self.eval_every < 1:
            raise ArgumentError(f"eval_every must be >= 1, got {self.eval_every}")
        if self.loss not in LOSS_KINDS:
            raise ArgumentError(f"loss must be one of {LOSS_KINDS}, got '{self.loss}'")
        if self.learning_rate < 0:
            raise ArgumentError(f"learning rate must be >= 0, got {self.learning_rate}")


def epoch_order(seed: int, epoch: int, n: int) -> List[int]:
    """Shuffled sample order for one epoch."""
    return Rng(seed).derive(EPOCH_STREAM + epoch).permutation(n)


def _supervision(dataset, loss: str) -> Union[List[int], np.ndarray]:
    if loss == "nll":
        return list(dataset.labels)
    return as_array(dataset.targets).reshape(-1, 1)


def _record_loss(tape: Tape, out: int, target, loss: str) -> int:
    if loss == "nll":
        return record_nll(tape, out, target)
    return record_mse(tape, out, Tensor.wrap(target))


def evaluate(network: Network, dataset, loss: str, chunk: int = EVAL_CHUNK) -> Tuple[float, float]:
    """
    Loss and test metric of a feedforward network over a dataset.

    Returns:
        (mean loss, metric) where metric is misclassification % for "nll"
        and mean squared error for "mse"
    """
    features = as_array(dataset.features)
    supervision = _supervision(dataset, loss)
    n = features.shape[0]
    if n == 0:
        raise ArgumentError("cannot evaluate on an empty dataset")
    loss_total = 0.0
    wrong = 0.0
    for start in range(0, n, chunk):
        out = network.predict(Tensor.wrap(features[start:start + chunk])).array
        if loss == "nll":
            labels = np.asarray(supervision[start:start + chunk])
            loss_total += float(-out[np.arange(labels.size), labels].sum())
            wrong += misclassification_rate(out, labels) * labels.size / 100.0
        else:
            diff = out - supervision[start:start + chunk]
            loss_total += float(np.sum(diff * diff))
    mean_loss = loss_total / n
    metric = wrong / n * 100.0 if loss == "nll" else mean_loss
    return mean_loss, metric


def _gradients(tape: Tape, bound: Dict[str, int]) -> Dict[str, np.ndarray]:
    return {name: tape.nodes[index].adjoint for name, index in bound.items()}


def train_feedforward(
    spec: NetworkSpec,
    dataset,
    config: TrainConfig,
    eval_set=None,
    experiment_id: str = "train",
    config_label: str = "default",
    progress: Optional[Progress] = None,
    network: Optional[Network] = None,
) -> Tuple[Network, ExperimentReport]:
    """
    Train with shuffled mini-batches and Adam.

    Args:
        spec: Feedforward network description
        dataset: Object with ``features`` [n x d] and ``labels`` (nll) or ``targets`` (mse)
        config: Hyperparameters
        eval_set: Optional held-out dataset for the per-epoch test metric
        experiment_id: Report experiment id
        config_label: Report config label
        progress: Optional callback (epoch, train loss, test metric)
        network: Start from these parameters instead of a fresh initialization

    Returns:
        (trained network, report with one row per epoch, epoch 0 = untrained)

    Raises:
        ArgumentError: On an empty dataset or invalid config
        TrainingDivergedError: If the loss becomes non-finite
    """
    features = as_array(dataset.features)
    n = features.shape[0]
    if n == 0:
        raise ArgumentError("training dataset is empty")
    if network is None:
        network = Network.initialize(spec, Rng(config.seed).derive(PARAMETER_STREAM))
    supervision = _supervision(dataset, config.loss)
    adam = AdamState(config.learning_rate)
    report = ExperimentReport(experiment_id, config_label)
    started = time.perf_counter()

    def record_epoch(epoch: int, train_loss: float):
        test_metric = None
        if eval_set is not None and (epoch % config.eval_every == 0 or epoch == config.epochs):
            _, test_metric = evaluate(network, eval_set, config.loss)
        wall = time.perf_counter() - started if config.timing else None
        report.add_row(create_metric_row(experiment_id, config_label, epoch, train_loss, test_metric, wall))
        if progress is not None:
            progress(epoch, train_loss, test_metric)

    record_epoch(0, evaluate(network, dataset, config.loss)[0])
    for epoch in range(1, config.epochs + 1):
        order = epoch_order(config.seed, epoch, n)
        total = 0.0
        for batch, start in enumerate(range(0, n, config.batch_size)):
            index = order[start:start + config.batch_size]
            if config.loss == "nll":
                target = [supervision[i] for i in index]
            else:
                target = supervision[index]
            try:
                tape = Tape()
                bound = network.bind(tape)
                out = network.forward(tape, tape.leaf(Tensor.wrap(features[index])), bound)
                loss = _record_loss(tape, out, target, config.loss)
                loss_value = tape.value(loss).item()
                tape.backward(loss)
                network.params = adam_step(adam, network.params, _gradients(tape, bound))
            except TrainingDivergedError:
                raise
            except NumericError as e:
                raise TrainingDivergedError(epoch, batch, float("nan")) from e
            total += loss_value * len(index)
        record_epoch(epoch, total / n)
    report.summary["wall_seconds"] = time.perf_counter() - started
    report.summary["parameters"] = network.parameter_count
    return network, report


def _check_single_output(spec: NetworkSpec):
    if spec.output_width != 1:
        raise ConfigurationError(f"sequence models need output width 1, got {spec.output_width}")


def one_step_predictions(network: Network, series: np.ndarray) -> np.ndarray:
    """Open-loop prediction of series[t + 1] from series[: t + 1]."""
    state = network.initial_state(1)
    predictions = np.empty(series.size - 1)
    for t in range(series.size - 1):
        out, state = network.step_values(Tensor([[series[t]]]), state)
        predictions[t] = out.item()
    return predictions


def train_recurrent(
    spec: NetworkSpec,
    series: Tensor,
    config: TrainConfig,
    evaluator: Optional[Evaluator] = None,
    experiment_id: str = "train",
    config_label: str = "default",
    progress: Optional[Progress] = None,
) -> Tuple[Network, ExperimentReport]:
    """
    One-step-ahead training with truncated BPTT.

    The series is cut into consecutive windows of ``bptt_length`` steps.
    Within a window gradients flow through time; the state is carried into
    the next window as a constant and reset to zero at each epoch.

    Args:
        spec: Recurrent network with output width 1
        series: Rank-1 training series (already normalized)
        config: Hyperparameters (``loss`` is ignored, always MSE)
        evaluator: Optional callable returning the test metric for a network

    Raises:
        ArgumentError: If the series is shorter than bptt_length + 1
        TrainingDivergedError: If the loss becomes non-finite
    """
    values = as_array(series).reshape(-1)
    if values.size < config.bptt_length + 1:
        raise ArgumentError(f"series length {values.size} must be >= BPTT length + 1 ({config.bptt_length + 1})")
    _check_single_output(spec)
    network = Network.initialize(spec, Rng(config.seed).derive(PARAMETER_STREAM))
    adam = AdamState(config.learning_rate)
    report = ExperimentReport(experiment_id, config_label)
    steps = values.size - 1
    started = time.perf_counter()

    def record_epoch(epoch: int, train_loss: float):
        test_metric = None
        if evaluator is not None and (epoch % config.eval_every == 0 or epoch == config.epochs):
            test_metric = evaluator(network)
        wall = time.perf_counter() - started if config.timing else None
        report.add_row(create_metric_row(experiment_id, config_label, epoch, train_loss, test_metric, wall))
        if progress is not None:
            progress(epoch, train_loss, test_metric)

    initial = one_step_predictions(network, values)
    record_epoch(0, float(np.mean((initial - values[1:]) ** 2)))
    for epoch in range(1, config.epochs + 1):
        state = network.initial_state(1)
        total = 0.0
        for batch, start in enumerate(range(0, steps, config.bptt_length)):
            stop = min(start + config.bptt_length, steps)
            try:
                tape = Tape()
                bound = network.bind(tape)
                nodes = {name: tape.leaf(value, name) for name, value in state.items()}
                outputs = []
                for t in range(start, stop):
                    out, nodes = network.step(tape, tape.leaf(Tensor([[values[t]]])), bound, nodes)
                    outputs.append(out)
                predicted = ops.concat(tape, outputs)
                loss = record_mse(tape, predicted, Tensor(values[start + 1:stop + 1].reshape(1, -1)))
                loss_value = tape.value(loss).item()
                tape.backward(loss)
                network.params = adam_step(adam, network.params, _gradients(tape, bound))
            except TrainingDivergedError:
                raise
            except NumericError as e:
                raise TrainingDivergedError(epoch, batch, float("nan")) from e
            state = {name: tape.value(index) for name, index in nodes.items()}
            total += loss_value * (stop - start)
        record_epoch(epoch, total / steps)
    report.summary["wall_seconds"] = time.perf_counter() - started
    report.summary["parameters"] = network.parameter_count
    return network, report


def forecast(network: Network, warmup: Tensor, horizon: int) -> Tensor:
    """
    Closed-loop forecast.

    The warmup values set the state; the prediction after the last warmup
    value is the first forecast, and every later step is fed the previous
    forecast.

    Raises:
        ArgumentError: If warmup is empty or horizon < 1
    """
    values = as_array(warmup).reshape(-1)
    if values.size == 0:
        raise ArgumentError("forecast needs a non-empty warmup")
    if horizon < 1:
        raise ArgumentError(f"forecast horizon must be >= 1, got {horizon}")
    state = network.initial_state(1)
    for value in values:
        out, state = network.step_values(as_batch(Tensor([value])), state)
    predictions = np.empty(horizon)
    predictions[0] = out.item()
    for h in range(1, horizon):
        out, state = network.step_values(Tensor([[predictions[h - 1]]]), state)
        predictions[h] = out.item()
    return Tensor.wrap(predictions)
