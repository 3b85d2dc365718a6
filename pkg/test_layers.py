"""
Windowed aggregation, dense and product-unit layers, activations, gated
blocks, LSTM cells and the network container.
"""

import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from autodiff import ops
from autodiff.grad_check import grad_check
from autodiff.tape import Tape
from layers.activations import leaky_relu, log_softmax, sigmoid
from layers.dense import DenseLayer, dense_forward
from layers.network import (
    LayerKind,
    LayerSpec,
    Network,
    NetworkSpec,
    count_parameters,
    dense,
    format_network_spec,
    gated_stage,
    parse_network_spec,
    window,
)
from layers.product_unit import ProductUnitLayer, punn_forward
from layers.recurrent import LSTM_GATES, GatedBlock, LstmCell, gated_block_step, lstm_step
from layers.window import Aggregator, WindowConfig, output_width, record_windowed, windowed_backward, windowed_forward
from tensor_core.rng import Rng, uniform
from tensor_core.tensor import Tensor
from utils.errors import ConfigurationError, ContractError, DimensionError, DomainError, NumericError


# Windowed aggregation

def test_output_width_examples():
    assert output_width(300, WindowConfig(4, 4)) == 75
    assert output_width(4, WindowConfig(2, 2)) == 2
    assert output_width(300, WindowConfig(2, 1)) == 299
    assert output_width(5, WindowConfig(2, 2)) == 2


def test_invalid_window_configurations():
    with pytest.raises(ConfigurationError):
        WindowConfig(4, 5)
    with pytest.raises(ConfigurationError):
        WindowConfig(0, 1)
    with pytest.raises(ConfigurationError):
        output_width(3, WindowConfig(4, 1))


def test_windowed_forward_examples():
    x = Tensor([1, 2, 3, 4])
    assert windowed_forward(x, WindowConfig(2, 2)).tolist() == [2, 12]
    assert windowed_forward(x, WindowConfig(2, 2, Aggregator.MAX)).tolist() == [2, 4]
    assert windowed_forward(Tensor.ones(7), WindowConfig(3, 2)).tolist() == [1, 1, 1]


def test_windowed_forward_on_a_batch():
    x = Tensor([[1, 2, 3, 4], [2, 2, 0.5, 4]])
    assert windowed_forward(x, WindowConfig(2, 2)).tolist() == [[2, 12], [4, 2]]


def test_windowed_backward_examples():
    assert windowed_backward(Tensor([0, 5]), WindowConfig(2, 2), Tensor([1])).tolist() == [5, 0]
    assert windowed_backward(Tensor([2, 3, 4]), WindowConfig(3, 1), Tensor([1])).tolist() == [12, 8, 6]


def test_overlapping_windows_accumulate_gradients():
    grad = windowed_backward(Tensor([1, 2, 3]), WindowConfig(2, 1), Tensor([1, 1]))
    assert grad.tolist() == [2, 1 + 3, 2]


def test_gradient_at_a_zero_is_the_product_of_the_others():
    grad = windowed_backward(Tensor([3, 0, -2, 5]), WindowConfig(4, 4), Tensor([1]))
    assert grad.is_finite()
    assert grad.tolist() == [0, -30, 0, 0]


def test_max_backward_routes_to_lowest_index_on_ties():
    grad = windowed_backward(Tensor([4, 4, 1, 1]), WindowConfig(2, 2, Aggregator.MAX), Tensor([1, 2]))
    assert grad.tolist() == [1, 0, 2, 0]


def test_backward_rejects_mismatched_upstream():
    with pytest.raises(DimensionError):
        windowed_backward(Tensor([1, 2, 3, 4]), WindowConfig(2, 2), Tensor([1, 2, 3]))


def test_window_forward_guards():
    with pytest.raises(NumericError):
        windowed_forward(Tensor([1e100, 1e100]), WindowConfig(2, 2))
    with pytest.raises(NumericError):
        windowed_forward(Tensor([1.0, np.nan]), WindowConfig(2, 2))


def test_window_product_is_not_linear():
    cfg = WindowConfig(2, 2)
    ones = windowed_forward(Tensor([1, 1]), cfg).item()
    twos = windowed_forward(Tensor([2, 2]), cfg).item()
    # f(x + x) != f(x) + f(x) and f(2x) != 2 f(x)
    assert twos == 4.0
    assert ones + ones == 2.0


@settings(max_examples=100, deadline=None)
@given(st.integers(min_value=1, max_value=40), st.data())
def test_output_length_matches_width_algebra(n, data):
    w = data.draw(st.integers(min_value=1, max_value=n))
    s = data.draw(st.integers(min_value=1, max_value=w))
    cfg = WindowConfig(w, s)
    x = Tensor(np.linspace(0.5, 1.5, n))
    assert windowed_forward(x, cfg).shape == (output_width(n, cfg),)
    assert windowed_forward(x, WindowConfig(w, s, Aggregator.MAX)).shape == (output_width(n, cfg),)


def test_max_matches_pooling_reference():
    rng = Rng(21)
    for _ in range(100):
        n = 2 + rng.below(15)
        w = 1 + rng.below(n)
        s = 1 + rng.below(w)
        x = uniform(rng, n, -2.0, 2.0)
        expected = [max(x.array[start:start + w]) for start in range(0, n - w + 1, s)]
        assert windowed_forward(x, WindowConfig(w, s, Aggregator.MAX)).tolist() == expected


@pytest.mark.parametrize("w,s", [(2, 2), (2, 1), (4, 1), (4, 4), (8, 1)])
def test_window_gradient_matches_finite_differences(w, s):
    rng = Rng(w * 10 + s)
    cfg = WindowConfig(w, s)
    n = w + 2 * s
    for _ in range(5):
        magnitudes = 0.1 + 1.9 * uniform(rng, n, 0.0, 1.0).array
        signs = np.where(uniform(rng, n, 0.0, 1.0).array < 0.5, -1.0, 1.0)
        selected = np.zeros(output_width(n, cfg))
        selected[rng.below(selected.size)] = 1.0

        def f(tape, x):
            return ops.weighted_sum(tape, record_windowed(tape, x, cfg), selected)

        assert grad_check(f, Tensor(magnitudes * signs)) <= 1e-6


# Dense and product units

def test_dense_examples():
    x = Tensor([1.5, -2.0, 0.25])
    assert dense_forward(DenseLayer(Tensor(np.eye(3)), Tensor.zeros(3)), x).tolist() == x.tolist()
    assert dense_forward(DenseLayer(Tensor.zeros(2, 3), Tensor([4, 5])), x).tolist() == [4, 5]
    with pytest.raises(DimensionError):
        dense_forward(DenseLayer(Tensor.zeros(2, 2), Tensor.zeros(2)), x)


def test_dense_matches_loop_oracle():
    rng = Rng(2)
    layer = DenseLayer.initialize(5, 4, rng)
    x = uniform(rng, 5, -1.0, 1.0)
    w, b = layer.weights.array, layer.biases.array
    expected = [sum(w[i][j] * x.array[j] for j in range(5)) + b[i] for i in range(4)]
    assert np.max(np.abs(dense_forward(layer, x).array - expected)) <= 1e-12


def test_dense_initialization_bounds():
    layer = DenseLayer.initialize(16, 8, Rng(1))
    assert np.all(np.abs(layer.weights.array) <= 0.25)
    assert not layer.biases.array.any()
    assert layer.parameter_count == 16 * 8 + 8


def test_product_unit_examples():
    assert punn_forward(ProductUnitLayer(Tensor([[1, 1]])), Tensor([2, 3])).tolist() == pytest.approx([6])
    assert punn_forward(ProductUnitLayer(Tensor.zeros(2, 3)), Tensor([2, 3, 4])).tolist() == [1, 1]
    assert punn_forward(ProductUnitLayer(Tensor([[0.5, 1]])), Tensor([2, 4])).item() == pytest.approx(math.sqrt(2) * 4)


def test_product_unit_rejects_non_positive_inputs():
    with pytest.raises(DomainError):
        punn_forward(ProductUnitLayer(Tensor([[1, 1]])), Tensor([2, 0]))
    with pytest.raises(DomainError):
        punn_forward(ProductUnitLayer(Tensor([[1, 1]])), Tensor([2, -1]))


def test_full_window_equals_unit_exponent_product_unit():
    assert windowed_forward(Tensor([1, 1, 1]), WindowConfig(3, 3)).item() == 1.0
    assert punn_forward(ProductUnitLayer(Tensor.ones(1, 3)), Tensor([1, 1, 1])).item() == pytest.approx(1.0)
    assert windowed_forward(Tensor([2, 3, 4]), WindowConfig(3, 3)).item() == 24.0
    rng = Rng(50)
    for _ in range(50):
        n = 1 + rng.below(8)
        x = uniform(rng, n, 0.1, 2.0)
        whole = windowed_forward(x, WindowConfig(n, n)).item()
        unit = punn_forward(ProductUnitLayer(Tensor.ones(1, n)), x).item()
        assert abs(whole - unit) <= 1e-10 * max(abs(whole), 1.0)


# Activations

def test_activation_examples():
    assert sigmoid(Tensor([0.0])).item() == 0.5
    assert leaky_relu(Tensor([-2.0]), 0.1).item() == pytest.approx(-0.2)
    assert leaky_relu(Tensor([3.0])).item() == 3.0
    assert sigmoid(Tensor([-1000.0, 1000.0])).is_finite()


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(min_value=-50, max_value=50), min_size=1, max_size=12))
def test_log_softmax_normalizes(values):
    assert abs(np.exp(log_softmax(Tensor(values)).array).sum() - 1.0) <= 1e-12


# Gated blocks and LSTM cells

def zero_block(in_width, out_width):
    return GatedBlock(DenseLayer(Tensor.zeros(2 * out_width, in_width + out_width), Tensor.zeros(2 * out_width)))


def test_gated_block_with_zero_parameters_outputs_a_quarter():
    block = zero_block(3, 4)
    assert gated_block_step(block, Tensor([1, 2, 3])).tolist() == [0.25] * 4
    assert gated_block_step(block, Tensor([-1, 0, 5])).tolist() == [0.25] * 4


def test_gated_block_rejects_wrong_width():
    with pytest.raises(DimensionError):
        gated_block_step(zero_block(3, 4), Tensor([1, 2]))


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=10000), st.lists(st.floats(min_value=-30, max_value=30), min_size=2, max_size=2))
def test_gated_block_output_stays_in_unit_interval(seed, x):
    block = GatedBlock.initialize(2, 3, Rng(seed))
    for _ in range(3):
        out = gated_block_step(block, Tensor(x)).array
        assert np.all((out >= 0.0) & (out <= 1.0))


def test_gated_block_step_gradient():
    block = GatedBlock.initialize(2, 3, Rng(6))
    y_prev = Tensor([0.2, 0.5, 0.7])
    weights = np.array([0.3, -0.6, 0.9])

    def f(tape, x):
        return ops.weighted_sum(tape, block.record_step(tape, x, tape.leaf(y_prev)), weights)

    assert grad_check(f, Tensor([0.8, -1.3])) <= 1e-6


def zero_cell(in_width, hidden):
    gates = {name: DenseLayer(Tensor.zeros(hidden, in_width + hidden), Tensor.zeros(hidden)) for name in LSTM_GATES}
    return LstmCell(gates)


def test_lstm_with_zero_parameters_keeps_hidden_at_zero():
    cell = zero_cell(2, 3)
    for _ in range(3):
        assert lstm_step(cell, Tensor([1.0, -4.0])).tolist() == [0.0, 0.0, 0.0]


def test_saturated_gates_preserve_the_cell_state():
    cell = zero_cell(1, 2)
    cell.gates["forget"] = DenseLayer(Tensor.zeros(2, 3), Tensor([50.0, 50.0]))
    cell.gates["input"] = DenseLayer(Tensor.zeros(2, 3), Tensor([-50.0, -50.0]))
    cell.gates["candidate"] = DenseLayer(Tensor.ones(2, 3), Tensor.zeros(2))
    cell.cell = Tensor([0.5, -0.3])
    for value in (1.0, -2.0, 3.0):
        lstm_step(cell, Tensor([value]))
    assert np.allclose(cell.cell.array, [0.5, -0.3], atol=1e-12)


def test_lstm_initialization_sets_forget_bias():
    cell = LstmCell.initialize(3, 4, Rng(0))
    assert cell.gates["forget"].biases.tolist() == [1.0] * 4
    assert cell.parameter_count == 4 * ((3 + 4) * 4 + 4)
    with pytest.raises(DimensionError):
        lstm_step(cell, Tensor([1.0]))


def test_lstm_hidden_stays_in_range():
    cell = LstmCell.initialize(2, 5, Rng(3))
    for t in range(10):
        h = lstm_step(cell, Tensor([10.0 * math.sin(t), -7.0])).array
        assert np.all(np.abs(h) <= 1.0)


# Networks

def poly_wpunn():
    return NetworkSpec(2, (dense(50), window(2, 2), dense(50), window(2, 2), dense(50), window(2, 2), dense(1)))


def test_parameter_counts():
    leaky = LayerSpec(LayerKind.LEAKY_RELU)
    relu = NetworkSpec(2, (dense(50), leaky, dense(50), leaky, dense(50), leaky, dense(1)))
    assert count_parameters(poly_wpunn()) == 2776
    assert count_parameters(relu) == 5301
    assert count_parameters(NetworkSpec(3, (dense(2),))) == 8


def test_window_layers_add_no_parameters():
    plain = NetworkSpec(8, (dense(8), dense(2)))
    windowed = NetworkSpec(8, (dense(8), window(2, 2), dense(2)))
    assert count_parameters(plain) == 72 + 18
    assert count_parameters(windowed) == 72 + 10
    assert count_parameters(NetworkSpec(8, (dense(8), window(1, 1), dense(2)))) == count_parameters(plain)


def test_invalid_specs_are_configuration_errors():
    with pytest.raises(ConfigurationError):
        count_parameters(NetworkSpec(4, (dense(3), window(4, 4))))
    with pytest.raises(ConfigurationError):
        NetworkSpec(4, (LayerSpec(LayerKind.SIGMOID, recurrent=0),)).layer_widths()
    with pytest.raises(ConfigurationError):
        NetworkSpec(4, ()).layer_widths()


def test_text_format_round_trip():
    spec = NetworkSpec(1, (*gated_stage(0, 5), LayerSpec(LayerKind.LEAKY_RELU, slope=0.2), dense(1)))
    assert parse_network_spec(format_network_spec(spec)) == spec


def test_text_format_fixture():
    spec = parse_network_spec((Path(__file__).parent / "testdata" / "poly_wpunn.net").read_text(encoding="utf-8"))
    assert spec == poly_wpunn()
    assert count_parameters(spec) == 2776


def test_text_format_errors_name_the_line():
    with pytest.raises(ConfigurationError) as error:
        parse_network_spec("input width=2\ndense width=3\nconv width=2\n")
    assert "line 3" in str(error.value)
    with pytest.raises(ConfigurationError):
        parse_network_spec("dense width=3\n")


def test_recurrent_wiring_widens_the_target_layer():
    spec = NetworkSpec(1, (*gated_stage(0, 4), dense(1)))
    assert spec.layer_widths()[0] == (1 + 4, 8)
    assert spec.is_recurrent
    network = Network.initialize(spec, Rng(0))
    assert network.parameter_count == count_parameters(spec)


def test_forward_on_recurrent_network_is_a_contract_error():
    network = Network.initialize(NetworkSpec(1, (*gated_stage(0, 2), dense(1))), Rng(0))
    tape = Tape()
    with pytest.raises(ContractError):
        network.forward(tape, tape.leaf(Tensor([[1.0]])), network.bind(tape))


def test_step_values_carries_state_explicitly():
    network = Network.initialize(NetworkSpec(1, (*gated_stage(0, 3), dense(1))), Rng(4))
    state = network.initial_state(1)
    first, after_one = network.step_values(Tensor([[0.5]]), state)
    again, _ = network.step_values(Tensor([[0.5]]), state)
    assert first.tolist() == again.tolist()
    second, _ = network.step_values(Tensor([[0.5]]), after_one)
    assert second.tolist() != first.tolist()


def test_predict_is_deterministic_and_batched():
    network = Network.initialize(poly_wpunn(), Rng(9))
    x = Tensor([[0.1, -0.4], [0.7, 0.2], [-0.9, 0.5]])
    out = network.predict(x)
    assert out.shape == (3, 1)
    assert out.tolist() == network.predict(x).tolist()
    with pytest.raises(DimensionError):
        network.predict(Tensor([[1.0, 2.0, 3.0]]))


def test_network_rejects_mismatched_parameters():
    spec = NetworkSpec(3, (dense(2),))
    with pytest.raises(ConfigurationError):
        Network(spec, {"0.weights": Tensor.zeros(2, 3)})
    with pytest.raises(DimensionError):
        Network(spec, {"0.weights": Tensor.zeros(3, 3), "0.biases": Tensor.zeros(2)})
