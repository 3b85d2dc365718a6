"""
Generic differentiable operations recorded on a Tape.

Layer-specific operations (dense, windowed product, activations, ...) live
next to their layers; this module holds the arithmetic glue they share.
"""

from typing import Sequence

import numpy as np

from autodiff.tape import OpKind, Tape
from utils.errors import DimensionError


def _same_shape(tape: Tape, a: int, b: int, op: str):
    shape_a, shape_b = tape.value(a).shape, tape.value(b).shape
    if shape_a != shape_b:
        raise DimensionError(f"{op} shape mismatch: {list(shape_a)} and {list(shape_b)}")


def add(tape: Tape, a: int, b: int) -> int:
    _same_shape(tape, a, b, "add")
    return tape.record(OpKind.ADD, (a, b), tape.array(a) + tape.array(b), lambda g: (g, g))


def multiply(tape: Tape, a: int, b: int) -> int:
    """Elementwise product."""
    _same_shape(tape, a, b, "multiply")
    x, y = tape.array(a), tape.array(b)
    return tape.record(OpKind.MULTIPLY, (a, b), x * y, lambda g: (g * y, g * x))


def scale(tape: Tape, a: int, factor: float) -> int:
    factor = float(factor)
    return tape.record(OpKind.SCALE, (a,), tape.array(a) * factor, lambda g: (g * factor,))


def sum_all(tape: Tape, a: int) -> int:
    """Sum of every element, as a [1] tensor."""
    x = tape.array(a)
    return tape.record(OpKind.SUM, (a,), np.array([x.sum()]), lambda g: (np.full(x.shape, g[0]),))


def weighted_sum(tape: Tape, a: int, weights: np.ndarray) -> int:
    """Scalar sum of elementwise products with a constant array."""
    x = tape.array(a)
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != x.shape:
        raise DimensionError(f"weighted_sum shape mismatch: {list(x.shape)} and {list(weights.shape)}")
    return tape.record(OpKind.SUM, (a,), np.array([np.sum(x * weights)]), lambda g: (g[0] * weights,))


def concat(tape: Tape, parts: Sequence[int]) -> int:
    """Concatenate along the feature (last) axis."""
    arrays = [tape.array(p) for p in parts]
    ranks = {a.ndim for a in arrays}
    if len(ranks) != 1 or (arrays[0].ndim == 2 and len({a.shape[0] for a in arrays}) != 1):
        raise DimensionError(f"concat shape mismatch: {[list(a.shape) for a in arrays]}")
    bounds = np.cumsum([0] + [a.shape[-1] for a in arrays])

    def vjp(g):
        return [g[..., bounds[i]:bounds[i + 1]] for i in range(len(arrays))]

    return tape.record(OpKind.CONCAT, tuple(parts), np.concatenate(arrays, axis=-1), vjp)


def slice_features(tape: Tape, a: int, start: int, stop: int) -> int:
    """Take features [start, stop) along the last axis."""
    x = tape.array(a)
    if not 0 <= start < stop <= x.shape[-1]:
        raise DimensionError(f"slice [{start}, {stop}) outside width {x.shape[-1]}")

    def vjp(g):
        grad = np.zeros(x.shape)
        grad[..., start:stop] = g
        return (grad,)

    return tape.record(OpKind.SLICE, (a,), x[..., start:stop].copy(), vjp)
