"""
Adam optimizer with bias correction.
"""

from dataclasses import dataclass, field
from typing import Dict, Mapping, Union

import numpy as np

from tensor_core.tensor import Tensor, as_array
from utils.errors import DimensionError, NumericError

BETA1 = 0.9
BETA2 = 0.999
EPSILON = 1e-8

Gradient = Union[Tensor, np.ndarray]


@dataclass
class AdamState:
    """First/second moments per parameter plus the step counter."""

    learning_rate: float
    beta1: float = BETA1
    beta2: float = BETA2
    epsilon: float = EPSILON
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)
    t: int = 0


def adam_step(state: AdamState, params: Mapping[str, Tensor], grads: Mapping[str, Gradient]) -> Dict[str, Tensor]:
    """
    Apply one Adam update.

        m <- b1 m + (1 - b1) g
        v <- b2 v + (1 - b2) g^2
        p <- p - lr * m_hat / (sqrt(v_hat) + eps)

    Args:
        state: Moments and counter, updated in place
        params: Current parameters by name
        grads: Gradients by name, same shapes as params

    Returns:
        New parameter tensors by name

    Raises:
        NumericError: If a gradient has non-finite entries (names the parameter)
        DimensionError: If a gradient shape does not match its parameter
    """
    for name, param in params.items():
        grad = as_array(grads[name])
        if grad.shape != param.shape:
            raise DimensionError(f"gradient for {name} has shape {list(grad.shape)}, expected {list(param.shape)}")
        if not np.all(np.isfinite(grad)):
            raise NumericError(f"non-finite gradient for parameter {name}")
    state.t += 1
    correction1 = 1.0 - state.beta1 ** state.t
    correction2 = 1.0 - state.beta2 ** state.t
    updated: Dict[str, Tensor] = {}
    for name, param in params.items():
        grad = as_array(grads[name])
        m = state.m.get(name)
        if m is None:
            m = state.m[name] = np.zeros(param.shape)
            state.v[name] = np.zeros(param.shape)
        v = state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * grad
        v *= state.beta2
        v += (1.0 - state.beta2) * grad * grad
        step = state.learning_rate * (m / correction1) / (np.sqrt(v / correction2) + state.epsilon)
        updated[name] = Tensor.wrap(param.array - step)
    return updated
