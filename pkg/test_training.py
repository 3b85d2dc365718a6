"""
Adam, the loss functions, and the feedforward and recurrent training loops.
"""

import math

import numpy as np
import pytest

from autodiff.tape import Tape
from data_loaders.mnist import ClassificationDataset
from data_loaders.polynomial import RegressionDataset
from layers.activations import log_softmax
from layers.network import LayerKind, LayerSpec, Network, NetworkSpec, dense, gated_stage, window
from tensor_core.rng import Rng
from tensor_core.tensor import Tensor
from training.adam import AdamState, adam_step
from training.losses import misclassification_rate, mse_loss, nll_loss, record_mse
from training.trainer import TrainConfig, epoch_order, forecast, one_step_predictions, train_feedforward, train_recurrent
from utils.errors import ArgumentError, ConfigurationError, DimensionError, NumericError, TrainingDivergedError


# Adam

def test_zero_gradient_leaves_parameters_unchanged():
    params = {"p": Tensor([1.0, -2.0])}
    updated = adam_step(AdamState(0.1), params, {"p": np.zeros(2)})
    assert updated["p"].tolist() == [1.0, -2.0]


def test_first_step_moves_by_the_learning_rate():
    updated = adam_step(AdamState(0.01), {"p": Tensor([0.0, 0.0])}, {"p": np.array([5.0, -0.2])})
    assert updated["p"].tolist() == pytest.approx([-0.01, 0.01], rel=1e-6)


def test_adam_minimizes_a_quadratic():
    state = AdamState(0.1)
    params = {"p": Tensor([0.0])}
    for _ in range(200):
        params = adam_step(state, params, {"p": 2.0 * (params["p"].array - 3.0)})
    assert abs(params["p"].item() - 3.0) < 0.05
    assert state.t == 200


def test_zero_learning_rate_keeps_parameters_fixed():
    state = AdamState(0.0)
    params = {"p": Tensor([[1.0, 2.0]])}
    for _ in range(5):
        params = adam_step(state, params, {"p": np.array([[0.3, -4.0]])})
    assert params["p"].tolist() == [[1.0, 2.0]]


def test_adam_rejects_bad_gradients():
    with pytest.raises(NumericError) as error:
        adam_step(AdamState(0.1), {"hidden": Tensor([1.0])}, {"hidden": np.array([np.inf])})
    assert "hidden" in str(error.value)
    with pytest.raises(DimensionError):
        adam_step(AdamState(0.1), {"p": Tensor([1.0])}, {"p": np.zeros(2)})


# Losses

def test_loss_examples():
    assert nll_loss(log_softmax(Tensor.zeros(10)), 3) == pytest.approx(math.log(10))
    assert mse_loss(Tensor([1.0, 3.0]), Tensor([1.0, 1.0])) == 2.0
    with pytest.raises(ArgumentError):
        nll_loss(Tensor.zeros(10), 10)
    with pytest.raises(DimensionError):
        mse_loss(Tensor([1.0]), Tensor([1.0, 2.0]))


def test_record_mse_gradient():
    tape = Tape()
    pred = tape.leaf(Tensor([1.0, 3.0]))
    loss = record_mse(tape, pred, Tensor([1.0, 1.0]))
    tape.backward(loss)
    assert tape.value(loss).item() == 2.0
    assert tape.adjoint(pred).tolist() == [0.0, 2.0]


def test_misclassification_rate():
    log_probs = np.log(np.array([[0.9, 0.1], [0.2, 0.8], [0.6, 0.4], [0.3, 0.7]]))
    assert misclassification_rate(log_probs, [0, 1, 1, 1]) == 25.0


# Configuration

def test_train_config_validation():
    with pytest.raises(ArgumentError):
        TrainConfig(learning_rate=0.01, epochs=0)
    with pytest.raises(ArgumentError):
        TrainConfig(learning_rate=0.01, loss="hinge")
    with pytest.raises(ArgumentError):
        TrainConfig(learning_rate=0.01, batch_size=0)


def test_epoch_order_depends_only_on_seed_and_epoch():
    assert epoch_order(3, 1, 50) == epoch_order(3, 1, 50)
    assert sorted(epoch_order(3, 2, 50)) == list(range(50))
    assert epoch_order(3, 1, 50) != epoch_order(3, 2, 50)


# Feedforward training

def toy_classification(n=64, seed=0):
    rng = Rng(seed)
    points = np.array([[-1.0 + 2.0 * rng.random(), -1.0 + 2.0 * rng.random()] for _ in range(n)])
    labels = [int(x > 0) for x, _ in points]
    return ClassificationDataset(Tensor(points), labels, 2)


def toy_classifier():
    return NetworkSpec(2, (dense(8), window(2, 2), dense(2), LayerSpec(LayerKind.LOG_SOFTMAX)))


def test_training_reduces_the_loss():
    data = toy_classification()
    config = TrainConfig(learning_rate=0.05, batch_size=8, epochs=30, seed=1)
    network, report = train_feedforward(toy_classifier(), data, config, eval_set=data, config_label="toy")
    rows = report.sorted_rows()
    assert [row["epoch"] for row in rows] == list(range(31))
    assert rows[-1]["train-loss"] < rows[0]["train-loss"]
    assert rows[-1]["test-metric"] <= rows[0]["test-metric"]
    assert all(row["wall-seconds"] is None for row in rows)
    assert report.summary["parameters"] == network.parameter_count == 24 + 10


def separable_points(n=20):
    rng = Rng(11)
    side = [1.0 if i % 2 else -1.0 for i in range(n)]
    points = np.array([[s * (0.2 + 0.8 * rng.random()), -1.0 + 2.0 * rng.random()] for s in side])
    return ClassificationDataset(Tensor(points), [int(s > 0) for s in side], 2)


def test_separable_toy_set_is_learned_within_50_epochs():
    data = separable_points()
    spec = NetworkSpec(2, (dense(2), LayerSpec(LayerKind.LOG_SOFTMAX)))
    config = TrainConfig(learning_rate=0.1, batch_size=4, epochs=50, seed=0)
    _, report = train_feedforward(spec, data, config, eval_set=data)
    assert report.sorted_rows()[-1]["test-metric"] == 0.0


def test_training_is_deterministic():
    data = toy_classification(32, seed=4)
    config = TrainConfig(learning_rate=0.01, batch_size=5, epochs=3, seed=9)
    first, first_report = train_feedforward(toy_classifier(), data, config, eval_set=data)
    second, second_report = train_feedforward(toy_classifier(), data, config, eval_set=data)
    assert first_report.rows == second_report.rows
    for name, value in first.params.items():
        assert value.tolist() == second.params[name].tolist()


def test_eval_every_still_measures_the_final_epoch():
    data = toy_classification(16)
    config = TrainConfig(learning_rate=0.01, batch_size=4, epochs=5, eval_every=2)
    _, report = train_feedforward(toy_classifier(), data, config, eval_set=data)
    measured = [row["epoch"] for row in report.sorted_rows() if row["test-metric"] is not None]
    assert measured == [0, 2, 4, 5]


def test_regression_training_uses_mse():
    rng = Rng(2)
    points = np.array([[rng.random(), rng.random()] for _ in range(40)])
    data = RegressionDataset(Tensor(points), Tensor(points[:, 0] * points[:, 1]))
    spec = NetworkSpec(2, (dense(4), window(2, 2), dense(1)))
    config = TrainConfig(learning_rate=0.01, batch_size=10, epochs=20, loss="mse")
    _, report = train_feedforward(spec, data, config, eval_set=data)
    rows = report.sorted_rows()
    assert rows[-1]["test-metric"] < rows[0]["test-metric"]


def test_empty_dataset_is_rejected():
    empty = RegressionDataset(Tensor(np.zeros((0, 2))), Tensor(np.zeros(0)))
    with pytest.raises(ArgumentError):
        train_feedforward(NetworkSpec(2, (dense(1),)), empty, TrainConfig(learning_rate=0.01, loss="mse"))


def test_diverged_training_error_names_the_position():
    error = TrainingDivergedError(3, 7, float("nan"))
    assert error.epoch == 3 and error.batch == 7
    assert isinstance(error, NumericError)


# Recurrent training and forecasting

def small_gated():
    return NetworkSpec(1, (*gated_stage(0, 3), dense(1)))


def test_recurrent_training_fits_a_constant_series():
    series = Tensor(np.full(40, 0.5))
    config = TrainConfig(learning_rate=0.01, epochs=40, bptt_length=12, seed=3)
    network, report = train_recurrent(small_gated(), series, config)
    rows = report.sorted_rows()
    assert len(rows) == 41
    assert rows[-1]["train-loss"] < rows[0]["train-loss"]
    assert network.is_recurrent


def test_constant_series_converges_to_the_constant():
    series = Tensor(np.full(120, 0.5))
    config = TrainConfig(learning_rate=0.01, epochs=100, bptt_length=12, seed=3)
    network, report = train_recurrent(small_gated(), series, config)
    assert report.sorted_rows()[-1]["train-loss"] < 1e-4
    predicted = forecast(network, series, 12).array
    assert np.all(np.abs(predicted - 0.5) < 0.02)


def seasonal_split(periods=12):
    t = np.arange(12 * periods)
    values = np.sin(2.0 * np.pi * t / 12.0)
    cut = values.size * 3 // 4
    return values[:cut], values[cut:]


def test_gated_network_forecasts_a_sine():
    train, test = seasonal_split()
    spec = NetworkSpec(1, (*gated_stage(0, 10), dense(1)))
    config = TrainConfig(learning_rate=0.01, epochs=400, bptt_length=12, seed=0)
    network, _ = train_recurrent(spec, Tensor(train), config)
    predicted = forecast(network, Tensor(train), test.size).array
    assert np.mean((predicted - test) ** 2) < 0.05


def test_same_seed_gives_identical_forecasts():
    train, _ = seasonal_split(4)
    config = TrainConfig(learning_rate=0.01, epochs=5, bptt_length=12, seed=8)
    first, _ = train_recurrent(small_gated(), Tensor(train), config)
    second, _ = train_recurrent(small_gated(), Tensor(train), config)
    assert forecast(first, Tensor(train), 6).tolist() == forecast(second, Tensor(train), 6).tolist()


def test_recurrent_training_with_an_lstm():
    lstm = NetworkSpec(1, (LayerSpec(LayerKind.LSTM, width=4), dense(1)))
    series = Tensor(np.sin(np.arange(30) / 3.0))
    config = TrainConfig(learning_rate=0.01, epochs=3, bptt_length=8)
    calls = []
    network, report = train_recurrent(lstm, series, config, evaluator=lambda net: calls.append(1) or 0.5)
    assert len(calls) == 4
    assert report.sorted_rows()[-1]["test-metric"] == 0.5


def test_recurrent_training_guards():
    config = TrainConfig(learning_rate=0.01, epochs=1, bptt_length=36)
    with pytest.raises(ArgumentError):
        train_recurrent(small_gated(), Tensor(np.zeros(36)), config)
    with pytest.raises(ConfigurationError):
        train_recurrent(NetworkSpec(1, (*gated_stage(0, 3), dense(2))), Tensor(np.zeros(40)), config)


def test_forecast_shapes_and_guards():
    network = Network.initialize(small_gated(), Rng(0))
    assert forecast(network, Tensor([0.1, 0.2, 0.3]), 5).shape == (5,)
    with pytest.raises(ArgumentError):
        forecast(network, Tensor(np.zeros(0)), 3)
    with pytest.raises(ArgumentError):
        forecast(network, Tensor([0.1]), 0)


def test_first_forecast_is_the_one_step_prediction():
    network = Network.initialize(small_gated(), Rng(5))
    warmup = np.array([0.3, -0.1, 0.4, 0.2])
    predicted = one_step_predictions(network, np.append(warmup, 0.0))
    assert forecast(network, Tensor(warmup), 1).item() == pytest.approx(predicted[-1], abs=1e-12)
