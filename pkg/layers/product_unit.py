"""
Classic product unit: each output is prod_i x_i ** theta_i, with the
weights used as exponents.

Evaluated as exp(sum_i theta_i * ln x_i), so inputs must be strictly
positive. The layer is a diagnostic baseline for the windowed product;
with all-ones exponents over the whole input it equals a single window
of size N.
"""

from dataclasses import dataclass

import numpy as np

from autodiff.tape import OpKind, Tape
from tensor_core.rng import Rng, uniform_matrix
from tensor_core.tensor import Tensor, as_array
from utils.errors import DimensionError, DomainError, NumericError


@dataclass
class ProductUnitLayer:
    """Exponents theta [out x in]."""

    exponents: Tensor

    @classmethod
    def initialize(cls, in_width: int, out_width: int, rng: Rng) -> "ProductUnitLayer":
        return cls(uniform_matrix(rng, out_width, in_width, -1.0, 1.0))

    @property
    def parameter_count(self) -> int:
        return self.exponents.size


def _log_inputs(x: np.ndarray) -> np.ndarray:
    if not np.all(x > 0):
        raise DomainError("product unit inputs must be strictly positive")
    return np.log(x)


def _power_product(x: np.ndarray, theta: np.ndarray) -> np.ndarray:
    if x.shape[-1] != theta.shape[1]:
        raise DimensionError(f"product unit input width {x.shape[-1]} does not match exponents {list(theta.shape)}")
    with np.errstate(over="ignore"):
        out = np.exp(_log_inputs(x) @ theta.T)
    if not np.all(np.isfinite(out)):
        raise NumericError("product unit output overflowed")
    return out


def punn_forward(layer: ProductUnitLayer, x: Tensor) -> Tensor:
    """
    Raises:
        DomainError: If any input is <= 0
    """
    return Tensor.wrap(_power_product(as_array(x), layer.exponents.array))


def record_punn(tape: Tape, x: int, exponents: int) -> int:
    xv, theta = tape.array(x), tape.array(exponents)
    out = _power_product(xv, theta)
    logs = np.log(xv)

    def vjp(g):
        weighted = g * out
        grad_x = (weighted @ theta) / xv
        if xv.ndim == 1:
            return grad_x, np.outer(weighted, logs)
        return grad_x, weighted.T @ logs

    return tape.record(OpKind.PRODUCT_UNIT, (x, exponents), out, vjp)
