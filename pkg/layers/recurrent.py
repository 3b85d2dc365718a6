"""
Recurrent cells: the windowed-product gated block and an LSTM baseline.

Gated block (N outputs):
    z = concat(x_t, y_{t-1})  ->  dense to 2N  ->  sigmoid  ->  windowed product, w = s = 2
Each output is the product of two adjacent sigmoid values, one acting as the
gate of the other.

LSTM cell (no peepholes):
    z = concat(x_t, h_{t-1})
    i, f, o = sigmoid(W_i z + b_i), sigmoid(W_f z + b_f), sigmoid(W_o z + b_o)
    g = tanh(W_g z + b_g)
    c_t = f * c_{t-1} + i * g
    h_t = o * tanh(c_t)
"""

from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from autodiff import ops
from autodiff.tape import Tape
from layers.activations import record_sigmoid, record_tanh
from layers.dense import DenseLayer, dense_parameter_count, record_dense
from layers.window import Aggregator, WindowConfig, record_windowed
from tensor_core.rng import Rng
from tensor_core.tensor import Tensor
from utils.errors import DimensionError

GATE_WINDOW = WindowConfig(2, 2, Aggregator.PRODUCT)
LSTM_GATES = ("input", "forget", "output", "candidate")
FORGET_BIAS = 1.0


def gated_parameter_count(in_width: int, out_width: int) -> int:
    return dense_parameter_count(in_width + out_width, 2 * out_width)


def lstm_parameter_count(in_width: int, hidden: int) -> int:
    return len(LSTM_GATES) * dense_parameter_count(in_width + hidden, hidden)


def record_gated_step(tape: Tape, x: int, y_prev: int, weights: int, biases: int) -> int:
    """Record one gated-block step; returns the node of y_t."""
    joined = ops.concat(tape, [x, y_prev])
    squashed = record_sigmoid(tape, record_dense(tape, joined, weights, biases))
    return record_windowed(tape, squashed, GATE_WINDOW)


def record_lstm_step(
    tape: Tape, x: int, h_prev: int, c_prev: int, gates: Dict[str, Tuple[int, int]]
) -> Tuple[int, int]:
    """
    Record one LSTM step.

    Args:
        gates: gate name -> (weights node, biases node) for every name in LSTM_GATES

    Returns:
        (h_t node, c_t node)
    """
    joined = ops.concat(tape, [x, h_prev])

    def gate(name):
        weights, biases = gates[name]
        return record_dense(tape, joined, weights, biases)

    i = record_sigmoid(tape, gate("input"))
    f = record_sigmoid(tape, gate("forget"))
    o = record_sigmoid(tape, gate("output"))
    g = record_tanh(tape, gate("candidate"))
    c = ops.add(tape, ops.multiply(tape, f, c_prev), ops.multiply(tape, i, g))
    h = ops.multiply(tape, o, record_tanh(tape, c))
    return h, c


def _as_row(x: Tensor) -> np.ndarray:
    return x.array if x.rank == 1 else x.array.reshape(-1)


@dataclass
class GatedBlock:
    """Gated block with its previous output y_{t-1} as state."""

    dense: DenseLayer
    state: Optional[Tensor] = None

    def __post_init__(self):
        if self.dense.out_width % 2 != 0:
            raise DimensionError(f"gated block dense width {self.dense.out_width} must be even")
        if self.dense.in_width <= self.out_width:
            raise DimensionError(
                f"gated block dense input {self.dense.in_width} must exceed the recurrent width {self.out_width}"
            )
        if self.state is None:
            self.reset()

    @classmethod
    def initialize(cls, in_width: int, out_width: int, rng: Rng) -> "GatedBlock":
        return cls(DenseLayer.initialize(in_width + out_width, 2 * out_width, rng))

    @property
    def out_width(self) -> int:
        return self.dense.out_width // 2

    @property
    def in_width(self) -> int:
        return self.dense.in_width - self.out_width

    def reset(self):
        self.state = Tensor.zeros(self.out_width)

    def record_step(self, tape: Tape, x: int, y_prev: int) -> int:
        weights = tape.leaf(self.dense.weights, "weights")
        biases = tape.leaf(self.dense.biases, "biases")
        return record_gated_step(tape, x, y_prev, weights, biases)

    def step(self, x_t: Tensor) -> Tensor:
        """Advance one step and return y_t."""
        x_row = _as_row(x_t)
        if x_row.size != self.in_width:
            raise DimensionError(f"gated block expects input width {self.in_width}, got {x_row.size}")
        tape = Tape()
        out = self.record_step(tape, tape.leaf(Tensor(x_row)), tape.leaf(self.state))
        self.state = tape.value(out)
        return self.state


@dataclass
class LstmCell:
    """LSTM cell with hidden and cell state."""

    gates: Dict[str, DenseLayer]
    hidden: Optional[Tensor] = None
    cell: Optional[Tensor] = None
    _width: int = field(init=False, default=0)

    def __post_init__(self):
        missing = [name for name in LSTM_GATES if name not in self.gates]
        if missing:
            raise DimensionError(f"LSTM cell is missing gates {missing}")
        widths = {layer.out_width for layer in self.gates.values()}
        inputs = {layer.in_width for layer in self.gates.values()}
        if len(widths) != 1 or len(inputs) != 1:
            raise DimensionError("LSTM gate layers must share their shapes")
        self._width = widths.pop()
        if self.hidden is None or self.cell is None:
            self.reset()

    @classmethod
    def initialize(cls, in_width: int, hidden: int, rng: Rng) -> "LstmCell":
        gates = {name: DenseLayer.initialize(in_width + hidden, hidden, rng) for name in LSTM_GATES}
        forget = gates["forget"]
        gates["forget"] = DenseLayer(forget.weights, Tensor(np.full(hidden, FORGET_BIAS)))
        return cls(gates)

    @property
    def hidden_width(self) -> int:
        return self._width

    @property
    def in_width(self) -> int:
        return self.gates["input"].in_width - self._width

    @property
    def parameter_count(self) -> int:
        return sum(layer.parameter_count for layer in self.gates.values())

    def reset(self):
        self.hidden = Tensor.zeros(self._width)
        self.cell = Tensor.zeros(self._width)

    def record_step(self, tape: Tape, x: int, h_prev: int, c_prev: int) -> Tuple[int, int]:
        nodes = {
            name: (tape.leaf(layer.weights, f"{name}.weights"), tape.leaf(layer.biases, f"{name}.biases"))
            for name, layer in self.gates.items()
        }
        return record_lstm_step(tape, x, h_prev, c_prev, nodes)

    def step(self, x_t: Tensor) -> Tensor:
        """Advance one step and return h_t."""
        x_row = _as_row(x_t)
        if x_row.size != self.in_width:
            raise DimensionError(f"LSTM cell expects input width {self.in_width}, got {x_row.size}")
        tape = Tape()
        h, c = self.record_step(tape, tape.leaf(Tensor(x_row)), tape.leaf(self.hidden), tape.leaf(self.cell))
        self.hidden, self.cell = tape.value(h), tape.value(c)
        return self.hidden


def gated_block_step(block: GatedBlock, x_t: Tensor) -> Tensor:
    return block.step(x_t)


def lstm_step(cell: LstmCell, x_t: Tensor) -> Tensor:
    return cell.step(x_t)
