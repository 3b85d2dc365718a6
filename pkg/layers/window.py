"""
Windowed aggregation layer: the weightless windowed product unit and its
max-pooling variant.

A window of w consecutive inputs is aggregated into one output, and
consecutive windows start s inputs apart (zero-based offsets 0, s, 2s, ...).
Only full windows are emitted, so an input of width N gives
floor((N - w) / s) + 1 outputs; trailing inputs that do not fill a window
are unused.

The product gradient at input j of a window is the product of the other
w - 1 elements of that window, computed with exclusive prefix/suffix
products. No division is involved, so zero inputs are handled exactly.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from autodiff.tape import OpKind, Tape
from tensor_core.tensor import Tensor, as_array
from utils.errors import ConfigurationError, DimensionError, NumericError

# Window products beyond this magnitude are treated as overflow.
OVERFLOW_LIMIT = 1e150


class Aggregator(str, Enum):
    PRODUCT = "product"
    MAX = "max"


@dataclass(frozen=True)
class WindowConfig:
    """Window size w, stride s and aggregation function."""

    w: int
    s: int
    aggregator: Aggregator = Aggregator.PRODUCT

    def __post_init__(self):
        object.__setattr__(self, "aggregator", Aggregator(self.aggregator))
        if self.w < 1:
            raise ConfigurationError(f"window size must be >= 1, got w={self.w}")
        if not 1 <= self.s <= self.w:
            raise ConfigurationError(f"stride must satisfy 1 <= s <= w, got w={self.w}, s={self.s}")


def output_width(n: int, cfg: WindowConfig) -> int:
    """
    Number of full windows over an input of width n.

    Raises:
        ConfigurationError: If w > n or s > w
    """
    if cfg.s > cfg.w:
        raise ConfigurationError(f"stride s={cfg.s} exceeds window w={cfg.w}")
    if cfg.w > n:
        raise ConfigurationError(f"window w={cfg.w} exceeds input width {n}")
    return (n - cfg.w) // cfg.s + 1


def window_starts(n: int, cfg: WindowConfig) -> np.ndarray:
    return np.arange(output_width(n, cfg)) * cfg.s


def _gather(x: np.ndarray, cfg: WindowConfig) -> np.ndarray:
    """Windows of x along the last axis, shape (..., M, w)."""
    starts = window_starts(x.shape[-1], cfg)
    index = starts[:, None] + np.arange(cfg.w)[None, :]
    return x[..., index]


def _check_input(x: np.ndarray):
    if x.ndim not in (1, 2):
        raise DimensionError(f"window input must have rank 1 or 2, got shape {list(x.shape)}")
    if not np.all(np.isfinite(x)):
        raise NumericError("window input contains non-finite values")


def windowed_forward(x: Tensor, cfg: WindowConfig) -> Tensor:
    """
    Aggregate each window of x (rank 1, or rank 2 row by row).

    Args:
        x: Input tensor [N] or [batch x N]
        cfg: Window configuration

    Returns:
        Tensor [M] or [batch x M] with M = output_width(N, cfg)

    Raises:
        NumericError: On non-finite input or a product beyond the overflow guard
    """
    values = as_array(x)
    _check_input(values)
    windows = _gather(values, cfg)
    if cfg.aggregator is Aggregator.MAX:
        return Tensor.wrap(windows.max(axis=-1))
    with np.errstate(over="ignore"):
        out = windows.prod(axis=-1)
    if not np.all(np.abs(out) <= OVERFLOW_LIMIT):
        raise NumericError(f"window product exceeded {OVERFLOW_LIMIT:g} (w={cfg.w}, s={cfg.s})")
    return Tensor.wrap(out)


def _complement_products(windows: np.ndarray) -> np.ndarray:
    """For each window slot, the product of every other slot."""
    ones = np.ones(windows.shape[:-1] + (1,))
    prefix = np.concatenate([ones, np.cumprod(windows[..., :-1], axis=-1)], axis=-1)
    reversed_windows = windows[..., ::-1]
    suffix = np.concatenate([ones, np.cumprod(reversed_windows[..., :-1], axis=-1)], axis=-1)[..., ::-1]
    return prefix * suffix


def windowed_backward(x: Tensor, cfg: WindowConfig, upstream: Tensor) -> Tensor:
    """
    Gradient of the windowed aggregation with respect to its input.

    For the product, grad(x_j) sums upstream_i times the product of the other
    elements of every window i containing j; overlapping windows (s < w)
    accumulate. For max, each window's upstream value goes to its argmax,
    ties going to the lowest index.

    Raises:
        DimensionError: If upstream does not match the forward output shape
    """
    values = as_array(x)
    grad_out = as_array(upstream)
    starts = window_starts(values.shape[-1], cfg)
    expected = values.shape[:-1] + (starts.size,)
    if grad_out.shape != expected:
        raise DimensionError(f"upstream shape {list(grad_out.shape)} does not match window output {list(expected)}")
    windows = _gather(values, cfg)
    grad = np.zeros(values.shape)
    if cfg.aggregator is Aggregator.MAX:
        positions = starts + windows.argmax(axis=-1)
        if values.ndim == 1:
            np.add.at(grad, positions, grad_out)
        else:
            rows = np.arange(values.shape[0])[:, None]
            np.add.at(grad, (rows, positions), grad_out)
        return Tensor.wrap(grad)
    local = grad_out[..., None] * _complement_products(windows)
    for j in range(cfg.w):
        # window starts are distinct, so a plain fancy-index add is safe per offset
        grad[..., starts + j] += local[..., j]
    return Tensor.wrap(grad)


def record_windowed(tape: Tape, x: int, cfg: WindowConfig) -> int:
    """Record a windowed aggregation of node x on the tape."""
    value = tape.value(x)
    out = windowed_forward(value, cfg)
    kind = OpKind.WINDOW_MAX if cfg.aggregator is Aggregator.MAX else OpKind.WINDOW_PRODUCT
    return tape.record(kind, (x,), out, lambda g: (windowed_backward(value, cfg, g).array,))
