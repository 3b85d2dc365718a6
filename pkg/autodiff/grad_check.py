"""
Finite-difference gradient checker.

A checked function takes a tape and the index of a leaf holding the point,
records a scalar result and returns its index. The analytic gradient comes
from one backward pass; the numeric one from central differences, each
evaluated on its own fresh tape.
"""

from typing import Callable

import numpy as np

from autodiff.tape import Tape
from tensor_core.tensor import Tensor
from utils.errors import ArgumentError, NumericError

ScalarFunction = Callable[[Tape, int], int]

DEFAULT_STEP = 1e-5
ERROR_FLOOR = 1e-8


def evaluate(f: ScalarFunction, point: np.ndarray) -> float:
    tape = Tape()
    root = f(tape, tape.leaf(Tensor(point)))
    value = tape.value(root).item()
    if not np.isfinite(value):
        raise NumericError(f"checked function is non-finite at {point.tolist()}")
    return value


def analytic_gradient(f: ScalarFunction, point: Tensor) -> np.ndarray:
    tape = Tape()
    leaf = tape.leaf(point)
    tape.backward(f(tape, leaf))
    return tape.nodes[leaf].adjoint.copy()


def numeric_gradient(f: ScalarFunction, point: Tensor, step: float = DEFAULT_STEP) -> np.ndarray:
    """Central-difference estimate of the gradient at point."""
    if step <= 0:
        raise ArgumentError(f"step must be positive, got {step}")
    base = point.array.astype(np.float64, copy=True)
    flat = base.reshape(-1)
    grad = np.zeros(flat.shape)
    for i in range(flat.size):
        original = flat[i]
        flat[i] = original + step
        upper = evaluate(f, base)
        flat[i] = original - step
        lower = evaluate(f, base)
        flat[i] = original
        grad[i] = (upper - lower) / (2.0 * step)
    return grad.reshape(base.shape)


def relative_errors(analytic: np.ndarray, numeric: np.ndarray) -> np.ndarray:
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), ERROR_FLOOR)
    return np.abs(analytic - numeric) / scale


def grad_check(f: ScalarFunction, point: Tensor, step: float = DEFAULT_STEP) -> float:
    """
    Compare the tape gradient of f at point with central differences.

    Args:
        f: Function recording a scalar on the given tape
        point: Where to differentiate
        step: Finite-difference step

    Returns:
        max over coordinates of |analytic - numeric| / max(|analytic|, |numeric|, 1e-8)

    Raises:
        ArgumentError: If step is not positive
        NumericError: If f is non-finite at a perturbed point
    """
    if step <= 0:
        raise ArgumentError(f"step must be positive, got {step}")
    analytic = analytic_gradient(f, point)
    numeric = numeric_gradient(f, point, step)
    if analytic.size == 0:
        return 0.0
    return float(np.max(relative_errors(analytic, numeric)))
