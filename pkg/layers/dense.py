"""
Fully-connected layer: a weighted sum of the inputs plus a bias.
"""

import math
from dataclasses import dataclass

import numpy as np

from autodiff.tape import OpKind, Tape
from tensor_core.rng import Rng, uniform_matrix
from tensor_core.tensor import Tensor, as_array
from utils.errors import DimensionError


@dataclass
class DenseLayer:
    """Weights [out x in] and biases [out]."""

    weights: Tensor
    biases: Tensor

    def __post_init__(self):
        if self.weights.rank != 2 or self.biases.rank != 1 or self.biases.shape[0] != self.weights.shape[0]:
            raise DimensionError(
                f"dense weights {list(self.weights.shape)} do not match biases {list(self.biases.shape)}"
            )

    @classmethod
    def initialize(cls, in_width: int, out_width: int, rng: Rng) -> "DenseLayer":
        """Weights uniform in +-sqrt(1/fan_in), biases zero."""
        bound = math.sqrt(1.0 / in_width)
        return cls(uniform_matrix(rng, out_width, in_width, -bound, bound), Tensor.zeros(out_width))

    @property
    def in_width(self) -> int:
        return self.weights.shape[1]

    @property
    def out_width(self) -> int:
        return self.weights.shape[0]

    @property
    def parameter_count(self) -> int:
        return self.out_width * self.in_width + self.out_width


def dense_parameter_count(in_width: int, out_width: int) -> int:
    return out_width * in_width + out_width


def _affine(x: np.ndarray, weights: np.ndarray, biases: np.ndarray) -> np.ndarray:
    if x.shape[-1] != weights.shape[1]:
        raise DimensionError(f"dense input width {x.shape[-1]} does not match weights {list(weights.shape)}")
    return x @ weights.T + biases


def dense_forward(layer: DenseLayer, x: Tensor) -> Tensor:
    """weights . x + biases, for a vector or a batch of row vectors."""
    return Tensor.wrap(_affine(as_array(x), layer.weights.array, layer.biases.array))


def record_dense(tape: Tape, x: int, weights: int, biases: int) -> int:
    """Record an affine map of node x with parameter nodes weights and biases."""
    xv, wv, bv = tape.array(x), tape.array(weights), tape.array(biases)
    out = _affine(xv, wv, bv)

    def vjp(g):
        if xv.ndim == 1:
            return g @ wv, np.outer(g, xv), g
        return g @ wv, g.T @ xv, g.sum(axis=0)

    return tape.record(OpKind.DENSE, (x, weights, biases), out, vjp)
