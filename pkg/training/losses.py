"""
Loss functions: negative log-likelihood over log-probabilities and mean
squared error. Plain-value versions for evaluation, tape versions for
training (batch mean).
"""

from typing import Sequence

import numpy as np

from autodiff.tape import OpKind, Tape
from tensor_core.tensor import Tensor, as_array
from utils.errors import ArgumentError, DimensionError


def nll_loss(log_probs: Tensor, label: int) -> float:
    """
    -log_probs[label].

    Raises:
        ArgumentError: If label is outside [0, C)
    """
    values = as_array(log_probs)
    if not 0 <= label < values.shape[-1]:
        raise ArgumentError(f"label {label} outside [0, {values.shape[-1]})")
    return float(-values[..., label].reshape(-1)[0])


def mse_loss(pred: Tensor, target: Tensor) -> float:
    """
    Mean of squared differences.

    Raises:
        DimensionError: If the shapes differ
    """
    p, t = as_array(pred), as_array(target)
    if p.shape != t.shape:
        raise DimensionError(f"mse shape mismatch: {list(p.shape)} and {list(t.shape)}")
    if p.size == 0:
        return 0.0
    return float(np.mean((p - t) ** 2))


def _label_array(labels: Sequence[int], batch: int, classes: int) -> np.ndarray:
    index = np.asarray(labels, dtype=np.int64).reshape(-1)
    if index.size != batch:
        raise DimensionError(f"{index.size} labels for a batch of {batch}")
    if index.size and (index.min() < 0 or index.max() >= classes):
        raise ArgumentError(f"labels must lie in [0, {classes})")
    return index


def record_nll(tape: Tape, log_probs: int, labels: Sequence[int]) -> int:
    """Mean negative log-likelihood over a batch [batch x C] (or one row [C])."""
    values = tape.array(log_probs)
    batch_values = values.reshape(-1, values.shape[-1])
    index = _label_array(labels, batch_values.shape[0], batch_values.shape[1])
    rows = np.arange(index.size)
    loss = -batch_values[rows, index].mean()

    def vjp(g):
        grad = np.zeros(batch_values.shape)
        grad[rows, index] = -g[0] / index.size
        return (grad.reshape(values.shape),)

    return tape.record(OpKind.NLL, (log_probs,), np.array([loss]), vjp)


def record_mse(tape: Tape, pred: int, target: Tensor) -> int:
    """Mean squared error against a constant target of the same shape."""
    p, t = tape.array(pred), as_array(target)
    if p.shape != t.shape:
        raise DimensionError(f"mse shape mismatch: {list(p.shape)} and {list(t.shape)}")
    diff = p - t
    count = max(diff.size, 1)
    return tape.record(OpKind.MSE, (pred,), np.array([np.sum(diff * diff) / count]), lambda g: (g[0] * 2.0 * diff / count,))


def misclassification_rate(log_probs: np.ndarray, labels: Sequence[int]) -> float:
    """Percentage of rows whose argmax differs from the label."""
    predicted = np.argmax(log_probs, axis=-1)
    labels = np.asarray(labels).reshape(-1)
    if labels.size == 0:
        return 0.0
    return float(np.mean(predicted != labels) * 100.0)
