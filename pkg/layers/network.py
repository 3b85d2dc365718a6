"""
Declarative network description and the sequential/recurrent container.

A NetworkSpec is an input width plus an ordered list of LayerSpec entries.
A layer with ``recurrent=k`` feeds its output from the previous time step
into layer k (zero-based, k <= its own index, and layer k must be dense);
layer k's input is then concat(previous layer output, fed-back output).
LSTM layers keep their own hidden and cell state.

Text format (one layer per line, ``#`` starts a comment):

    input width=1
    dense width=100
    sigmoid
    window w=2 s=2 recurrent=0
    dense width=1

Keys: width, w, s, aggregator (product|max), slope (leaky_relu), recurrent.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

from autodiff import ops
from autodiff.tape import Tape
from layers.activations import DEFAULT_LEAK, record_leaky_relu, record_log_softmax, record_sigmoid, record_tanh
from layers.dense import DenseLayer, dense_parameter_count, record_dense
from layers.product_unit import ProductUnitLayer, record_punn
from layers.recurrent import LSTM_GATES, LstmCell, lstm_parameter_count, record_lstm_step
from layers.window import Aggregator, WindowConfig, output_width, record_windowed
from tensor_core.rng import Rng
from tensor_core.tensor import Tensor
from utils.errors import ConfigurationError, ContractError, DimensionError


class LayerKind(str, Enum):
    DENSE = "dense"
    WINDOW = "window"
    PUNN = "punn"
    SIGMOID = "sigmoid"
    TANH = "tanh"
    LEAKY_RELU = "leaky_relu"
    LOG_SOFTMAX = "log_softmax"
    LSTM = "lstm"


WIDTH_KINDS = {LayerKind.DENSE, LayerKind.PUNN, LayerKind.LSTM}


@dataclass(frozen=True)
class LayerSpec:
    kind: LayerKind
    width: Optional[int] = None
    w: Optional[int] = None
    s: Optional[int] = None
    aggregator: Aggregator = Aggregator.PRODUCT
    slope: float = DEFAULT_LEAK
    recurrent: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", LayerKind(self.kind))
        object.__setattr__(self, "aggregator", Aggregator(self.aggregator))

    @property
    def window(self) -> WindowConfig:
        if self.w is None or self.s is None:
            raise ConfigurationError("window layer needs both w and s")
        return WindowConfig(self.w, self.s, self.aggregator)


def dense(width: int) -> LayerSpec:
    return LayerSpec(LayerKind.DENSE, width=width)


def window(w: int, s: int, aggregator: Aggregator = Aggregator.PRODUCT, recurrent: Optional[int] = None) -> LayerSpec:
    return LayerSpec(LayerKind.WINDOW, w=w, s=s, aggregator=aggregator, recurrent=recurrent)


def gated_stage(dense_index: int, out_width: int) -> List[LayerSpec]:
    """Dense to 2N, sigmoid, and a w = s = 2 product fed back into the dense layer."""
    return [dense(2 * out_width), LayerSpec(LayerKind.SIGMOID), window(2, 2, recurrent=dense_index)]


@dataclass(frozen=True)
class NetworkSpec:
    input_width: int
    layers: Tuple[LayerSpec, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))

    def recurrent_targets(self) -> Dict[int, int]:
        """target layer index -> source layer index."""
        targets: Dict[int, int] = {}
        for index, layer in enumerate(self.layers):
            if layer.recurrent is None:
                continue
            target = layer.recurrent
            if not 0 <= target <= index:
                raise ConfigurationError(f"layer {index}: recurrent target {target} must be in [0, {index}]")
            if self.layers[target].kind is not LayerKind.DENSE:
                raise ConfigurationError(f"layer {index}: recurrent target {target} must be a dense layer")
            if target in targets:
                raise ConfigurationError(f"layer {target} already receives a recurrent connection")
            targets[target] = index
        return targets

    @property
    def is_recurrent(self) -> bool:
        return any(layer.recurrent is not None or layer.kind is LayerKind.LSTM for layer in self.layers)

    def layer_widths(self) -> List[Tuple[int, int]]:
        """
        (input width, output width) of every layer, including recurrent widening.

        Raises:
            ConfigurationError: If any adjacent widths are incompatible
        """
        if self.input_width < 1:
            raise ConfigurationError(f"input width must be >= 1, got {self.input_width}")
        if not self.layers:
            raise ConfigurationError("network has no layers")
        widths: List[Tuple[int, int]] = []
        current = self.input_width
        for index, layer in enumerate(self.layers):
            if layer.kind in WIDTH_KINDS:
                if layer.width is None or layer.width < 1:
                    raise ConfigurationError(f"layer {index} ({layer.kind.value}) needs width >= 1")
                out = layer.width
            elif layer.kind is LayerKind.WINDOW:
                try:
                    out = output_width(current, layer.window)
                except ConfigurationError as e:
                    raise ConfigurationError(f"layer {index}: {e}") from e
            else:
                out = current
            widths.append((current, out))
            current = out
        for target, source in self.recurrent_targets().items():
            in_width, out = widths[target]
            widths[target] = (in_width + widths[source][1], out)
        return widths

    @property
    def output_width(self) -> int:
        return self.layer_widths()[-1][1]


def count_parameters(spec: NetworkSpec) -> int:
    """
    Number of trainable scalars; windows and activations contribute 0.

    Raises:
        ConfigurationError: If the network description is invalid
    """
    total = 0
    for layer, (in_width, out) in zip(spec.layers, spec.layer_widths()):
        if layer.kind is LayerKind.DENSE:
            total += dense_parameter_count(in_width, out)
        elif layer.kind is LayerKind.PUNN:
            total += in_width * out
        elif layer.kind is LayerKind.LSTM:
            total += lstm_parameter_count(in_width, out)
    return total


def parameter_shapes(spec: NetworkSpec) -> Dict[str, Tuple[int, ...]]:
    shapes: Dict[str, Tuple[int, ...]] = {}
    for index, (layer, (in_width, out)) in enumerate(zip(spec.layers, spec.layer_widths())):
        if layer.kind is LayerKind.DENSE:
            shapes[f"{index}.weights"] = (out, in_width)
            shapes[f"{index}.biases"] = (out,)
        elif layer.kind is LayerKind.PUNN:
            shapes[f"{index}.exponents"] = (out, in_width)
        elif layer.kind is LayerKind.LSTM:
            for gate in LSTM_GATES:
                shapes[f"{index}.{gate}.weights"] = (out, in_width + out)
                shapes[f"{index}.{gate}.biases"] = (out,)
    return shapes


def parse_network_spec(text: str) -> NetworkSpec:
    """
    Parse the text format described in the module docstring.

    Raises:
        ConfigurationError: On unknown kinds or keys, naming the line
    """
    input_width: Optional[int] = None
    layers: List[LayerSpec] = []
    for number, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        kind, *pairs = line.split()
        values: Dict[str, str] = {}
        for pair in pairs:
            if "=" not in pair:
                raise ConfigurationError(f"line {number}: expected key=value, got '{pair}'")
            key, value = pair.split("=", 1)
            values[key] = value
        try:
            if kind == "input":
                input_width = int(values["width"])
                continue
            options = {}
            for key in ("width", "w", "s", "recurrent"):
                if key in values:
                    options[key] = int(values.pop(key))
            if "aggregator" in values:
                options["aggregator"] = Aggregator(values.pop("aggregator"))
            if "slope" in values:
                options["slope"] = float(values.pop("slope"))
            if values:
                raise ConfigurationError(f"unknown keys {sorted(values)}")
            layers.append(LayerSpec(LayerKind(kind), **options))
        except (KeyError, ValueError, ConfigurationError) as e:
            raise ConfigurationError(f"line {number}: invalid layer '{line}': {e}") from e
    if input_width is None:
        raise ConfigurationError("network spec has no 'input width=...' line")
    spec = NetworkSpec(input_width, tuple(layers))
    spec.layer_widths()
    return spec


def format_network_spec(spec: NetworkSpec) -> str:
    lines = [f"input width={spec.input_width}"]
    for layer in spec.layers:
        parts = [layer.kind.value]
        if layer.width is not None:
            parts.append(f"width={layer.width}")
        if layer.kind is LayerKind.WINDOW:
            parts.append(f"w={layer.w}")
            parts.append(f"s={layer.s}")
            if layer.aggregator is not Aggregator.PRODUCT:
                parts.append(f"aggregator={layer.aggregator.value}")
        if layer.kind is LayerKind.LEAKY_RELU and layer.slope != DEFAULT_LEAK:
            parts.append(f"slope={layer.slope!r}")
        if layer.recurrent is not None:
            parts.append(f"recurrent={layer.recurrent}")
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


class Network:
    """A NetworkSpec with parameter values."""

    def __init__(self, spec: NetworkSpec, params: Dict[str, Tensor]):
        expected = parameter_shapes(spec)
        missing = sorted(set(expected) - set(params))
        extra = sorted(set(params) - set(expected))
        if missing or extra:
            raise ConfigurationError(f"parameters do not match spec (missing {missing}, unexpected {extra})")
        for name, shape in expected.items():
            if params[name].shape != shape:
                raise DimensionError(f"parameter {name} has shape {list(params[name].shape)}, expected {list(shape)}")
        self.spec = spec
        self.params = dict(params)
        self._widths = spec.layer_widths()
        self._targets = spec.recurrent_targets()

    @classmethod
    def initialize(cls, spec: NetworkSpec, rng: Rng) -> "Network":
        """Draw parameters layer by layer in spec order."""
        params: Dict[str, Tensor] = {}
        for index, (layer, (in_width, out)) in enumerate(zip(spec.layers, spec.layer_widths())):
            if layer.kind is LayerKind.DENSE:
                weights = DenseLayer.initialize(in_width, out, rng)
                params[f"{index}.weights"] = weights.weights
                params[f"{index}.biases"] = weights.biases
            elif layer.kind is LayerKind.PUNN:
                params[f"{index}.exponents"] = ProductUnitLayer.initialize(in_width, out, rng).exponents
            elif layer.kind is LayerKind.LSTM:
                cell = LstmCell.initialize(in_width, out, rng)
                for gate, gate_layer in cell.gates.items():
                    params[f"{index}.{gate}.weights"] = gate_layer.weights
                    params[f"{index}.{gate}.biases"] = gate_layer.biases
        return cls(spec, params)

    @property
    def parameter_count(self) -> int:
        return sum(p.size for p in self.params.values())

    @property
    def is_recurrent(self) -> bool:
        return self.spec.is_recurrent

    def bind(self, tape: Tape) -> Dict[str, int]:
        """Record every parameter as a leaf; returns name -> node index."""
        return {name: tape.leaf(value, name) for name, value in self.params.items()}

    def initial_state(self, batch: int = 1) -> Dict[str, Tensor]:
        """Zero state for every recurrent source and LSTM layer."""
        state: Dict[str, Tensor] = {}
        for index, (layer, (_, out)) in enumerate(zip(self.spec.layers, self._widths)):
            if layer.recurrent is not None:
                state[f"{index}.out"] = Tensor.zeros(batch, out)
            if layer.kind is LayerKind.LSTM:
                state[f"{index}.h"] = Tensor.zeros(batch, out)
                state[f"{index}.c"] = Tensor.zeros(batch, out)
        return state

    def _run(self, tape: Tape, x: int, bound: Dict[str, int], state: Dict[str, int]) -> Tuple[int, Dict[str, int]]:
        if tape.value(x).shape[-1] != self.spec.input_width:
            raise DimensionError(f"network expects input width {self.spec.input_width}, got {list(tape.value(x).shape)}")
        current = x
        new_state: Dict[str, int] = {}
        for index, layer in enumerate(self.spec.layers):
            if index in self._targets:
                current = ops.concat(tape, [current, state[f"{self._targets[index]}.out"]])
            kind = layer.kind
            if kind is LayerKind.DENSE:
                current = record_dense(tape, current, bound[f"{index}.weights"], bound[f"{index}.biases"])
            elif kind is LayerKind.WINDOW:
                current = record_windowed(tape, current, layer.window)
            elif kind is LayerKind.PUNN:
                current = record_punn(tape, current, bound[f"{index}.exponents"])
            elif kind is LayerKind.SIGMOID:
                current = record_sigmoid(tape, current)
            elif kind is LayerKind.TANH:
                current = record_tanh(tape, current)
            elif kind is LayerKind.LEAKY_RELU:
                current = record_leaky_relu(tape, current, layer.slope)
            elif kind is LayerKind.LOG_SOFTMAX:
                current = record_log_softmax(tape, current)
            elif kind is LayerKind.LSTM:
                gates = {g: (bound[f"{index}.{g}.weights"], bound[f"{index}.{g}.biases"]) for g in LSTM_GATES}
                h, c = record_lstm_step(tape, current, state[f"{index}.h"], state[f"{index}.c"], gates)
                new_state[f"{index}.h"] = h
                new_state[f"{index}.c"] = c
                current = h
            if layer.recurrent is not None:
                new_state[f"{index}.out"] = current
        return current, new_state

    def forward(self, tape: Tape, x: int, bound: Dict[str, int]) -> int:
        """
        Feedforward evaluation of node x.

        Raises:
            ContractError: If the network is recurrent (use step instead)
        """
        if self.is_recurrent:
            raise ContractError("recurrent networks are evaluated with step()")
        out, _ = self._run(tape, x, bound, {})
        return out

    def step(self, tape: Tape, x: int, bound: Dict[str, int], state: Dict[str, int]) -> Tuple[int, Dict[str, int]]:
        """
        One recurrent time step.

        Args:
            state: State name -> node index on this tape (see initial_state)

        Returns:
            (output node, new state name -> node index)
        """
        return self._run(tape, x, bound, state)

    def predict(self, x: Tensor) -> Tensor:
        """Inference for a feedforward network; nothing is retained."""
        tape = Tape()
        return tape.value(self.forward(tape, tape.leaf(x), self.bind(tape)))

    def step_values(self, x: Tensor, state: Dict[str, Tensor]) -> Tuple[Tensor, Dict[str, Tensor]]:
        """Inference time step on plain values; state is passed explicitly."""
        tape = Tape()
        nodes = {name: tape.leaf(value, name) for name, value in state.items()}
        out, new_state = self.step(tape, tape.leaf(x), self.bind(tape), nodes)
        return tape.value(out), {name: tape.value(index) for name, index in new_state.items()}


def stack_parameters(layers: Sequence[Tuple[int, DenseLayer]]) -> Dict[str, Tensor]:
    """Parameter dict for dense layers given as (layer index, layer)."""
    params: Dict[str, Tensor] = {}
    for index, layer in layers:
        params[f"{index}.weights"] = layer.weights
        params[f"{index}.biases"] = layer.biases
    return params


def as_batch(x: Tensor) -> Tensor:
    """Rank-1 input as a one-row batch."""
    return Tensor(x.array.reshape(1, -1)) if x.rank == 1 else x
