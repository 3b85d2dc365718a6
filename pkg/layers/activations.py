"""
Elementwise activations and log-softmax.
"""

import numpy as np

from autodiff.tape import OpKind, Tape
from tensor_core.tensor import Tensor, as_array

DEFAULT_LEAK = 0.1


def _sigmoid(x: np.ndarray) -> np.ndarray:
    # split by sign so exp never overflows
    out = np.empty_like(x)
    positive = x >= 0
    out[positive] = 1.0 / (1.0 + np.exp(-x[positive]))
    z = np.exp(x[~positive])
    out[~positive] = z / (1.0 + z)
    return out


def _log_softmax(x: np.ndarray) -> np.ndarray:
    shifted = x - x.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def sigmoid(x: Tensor) -> Tensor:
    return Tensor.wrap(_sigmoid(as_array(x)))


def tanh(x: Tensor) -> Tensor:
    return Tensor.wrap(np.tanh(as_array(x)))


def leaky_relu(x: Tensor, leak: float = DEFAULT_LEAK) -> Tensor:
    """x where x > 0, leak * x elsewhere."""
    values = as_array(x)
    return Tensor.wrap(np.where(values > 0, values, leak * values))


def log_softmax(x: Tensor) -> Tensor:
    """x - log(sum(exp(x))) along the last axis, max-shifted."""
    return Tensor.wrap(_log_softmax(as_array(x)))


def record_sigmoid(tape: Tape, x: int) -> int:
    out = _sigmoid(tape.array(x))
    return tape.record(OpKind.SIGMOID, (x,), out, lambda g: (g * out * (1.0 - out),))


def record_tanh(tape: Tape, x: int) -> int:
    out = np.tanh(tape.array(x))
    return tape.record(OpKind.TANH, (x,), out, lambda g: (g * (1.0 - out * out),))


def record_leaky_relu(tape: Tape, x: int, leak: float = DEFAULT_LEAK) -> int:
    values = tape.array(x)
    slope = np.where(values > 0, 1.0, leak)
    return tape.record(OpKind.LEAKY_RELU, (x,), values * slope, lambda g: (g * slope,))


def record_log_softmax(tape: Tape, x: int) -> int:
    out = _log_softmax(tape.array(x))
    probs = np.exp(out)

    def vjp(g):
        return (g - probs * g.sum(axis=-1, keepdims=True),)

    return tape.record(OpKind.LOG_SOFTMAX, (x,), out, vjp)
