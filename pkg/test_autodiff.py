"""
Tape recording, the reverse pass and the finite-difference checker.
"""

import inspect

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import autodiff
from autodiff import ops
from autodiff.grad_check import grad_check
from autodiff.tape import OpKind, Tape, backward
from layers.activations import record_log_softmax, record_sigmoid
from layers.dense import DenseLayer, record_dense
from layers.window import WindowConfig, record_windowed
from tensor_core.rng import Rng
from tensor_core.tensor import Tensor
from training.losses import record_nll
from utils.errors import ContractError, NumericError


def test_sum_gives_all_ones_adjoint():
    tape = Tape()
    v = tape.leaf(Tensor([1.0, -2.0, 3.0]))
    backward(tape, ops.sum_all(tape, v))
    assert tape.adjoint(v).tolist() == [1.0, 1.0, 1.0]


def test_unreachable_leaf_keeps_zero_adjoint():
    tape = Tape()
    used = tape.leaf(Tensor([2.0]))
    unused = tape.leaf(Tensor([5.0, 6.0]))
    tape.backward(ops.scale(tape, used, 3.0))
    assert tape.adjoint(used).tolist() == [3.0]
    assert tape.adjoint(unused).tolist() == [0.0, 0.0]


def test_adjoints_start_at_zero():
    tape = Tape()
    a = tape.leaf(Tensor([1.0, 2.0]))
    b = ops.multiply(tape, a, a)
    assert not tape.nodes[a].adjoint.any() and not tape.nodes[b].adjoint.any()


def test_repeated_operand_accumulates():
    tape = Tape()
    a = tape.leaf(Tensor([3.0]))
    tape.backward(ops.multiply(tape, a, a))
    assert tape.adjoint(a).tolist() == [6.0]


def test_non_scalar_root_is_a_contract_error():
    tape = Tape()
    a = tape.leaf(Tensor([1.0, 2.0]))
    with pytest.raises(ContractError):
        tape.backward(a)


def test_second_backward_is_forbidden():
    tape = Tape()
    a = tape.leaf(Tensor([1.0]))
    root = ops.scale(tape, a, 2.0)
    tape.backward(root)
    with pytest.raises(ContractError):
        tape.backward(root)
    with pytest.raises(ContractError):
        tape.leaf(Tensor([1.0]))


def test_record_rejects_unknown_parent_and_non_finite_values():
    tape = Tape()
    with pytest.raises(ContractError):
        tape.record(OpKind.SCALE, (3,), np.array([1.0]), lambda g: (g,))
    a = tape.leaf(Tensor([1.0]))
    with pytest.raises(NumericError):
        tape.record(OpKind.SCALE, (a,), np.array([np.inf]), lambda g: (g,))


def test_concat_and_slice_route_gradients():
    tape = Tape()
    a = tape.leaf(Tensor([1.0, 2.0]))
    b = tape.leaf(Tensor([3.0]))
    joined = ops.concat(tape, [a, b])
    tail = ops.slice_features(tape, joined, 1, 3)
    tape.backward(ops.weighted_sum(tape, tail, np.array([10.0, 20.0])))
    assert tape.adjoint(a).tolist() == [0.0, 10.0]
    assert tape.adjoint(b).tolist() == [20.0]


def test_grad_check_on_square_is_exact():
    def square(tape, x):
        return ops.sum_all(tape, ops.multiply(tape, x, x))

    assert grad_check(square, Tensor([3.0]), 1e-5) <= 1e-8


def test_constant_function_has_zero_gradient():
    def constant(tape, x):
        return tape.leaf(Tensor([4.0]))

    assert grad_check(constant, Tensor([1.0, 2.0])) == 0.0


def test_non_finite_function_raises_numeric_error():
    def explode(tape, x):
        return tape.record(OpKind.SCALE, (x,), tape.array(x) * np.inf, lambda g: (g,))

    with pytest.raises(NumericError):
        grad_check(explode, Tensor([1.0]))


def test_package_exports_leave_the_checker_module_reachable():
    assert inspect.ismodule(autodiff.grad_check)
    assert autodiff.check_gradients is grad_check


def test_windowed_product_gradient_matches_central_differences():
    rng = Rng(4)
    x = np.array([0.5, -1.2, 1.7, 0.3, -0.8, 1.1])
    weights = np.array([rng.random() for _ in range(5)])
    cfg = WindowConfig(2, 1)

    def f(tape, leaf):
        return ops.weighted_sum(tape, record_windowed(tape, leaf, cfg), weights)

    assert grad_check(f, Tensor(x)) <= 1e-6


def test_small_classifier_gradient_matches_central_differences():
    """dense, window, dense, window, dense, log-softmax, as in the MNIST classifier."""
    rng = Rng(8)
    layers = [DenseLayer.initialize(12, 10, rng), DenseLayer.initialize(5, 6, rng), DenseLayer.initialize(3, 3, rng)]
    point = Tensor([0.2 + rng.random() for _ in range(12)])

    def f(tape, x):
        current = x
        for index, layer in enumerate(layers):
            current = record_dense(tape, current, tape.leaf(layer.weights), tape.leaf(layer.biases))
            if index < 2:
                current = record_windowed(tape, current, WindowConfig(2, 2))
        return record_nll(tape, record_log_softmax(tape, current), [1])

    assert grad_check(f, point) <= 1e-5


@settings(max_examples=25, deadline=None)
@given(
    st.floats(min_value=-3.0, max_value=3.0),
    st.floats(min_value=-3.0, max_value=3.0),
    st.lists(st.floats(min_value=-2.0, max_value=2.0), min_size=3, max_size=3),
)
def test_adjoints_are_linear(a, b, values):
    def gradient(alpha, beta):
        tape = Tape()
        x = tape.leaf(Tensor(values))
        f = ops.sum_all(tape, record_sigmoid(tape, x))
        g = ops.sum_all(tape, ops.multiply(tape, x, x))
        tape.backward(ops.add(tape, ops.scale(tape, f, alpha), ops.scale(tape, g, beta)))
        return tape.nodes[x].adjoint.copy()

    combined = gradient(a, b)
    separate = a * gradient(1.0, 0.0) + b * gradient(0.0, 1.0)
    assert np.allclose(combined, separate, rtol=1e-12, atol=1e-12)
