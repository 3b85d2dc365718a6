# Layer kinds and the network container
from layers.window import Aggregator, WindowConfig, output_width, windowed_backward, windowed_forward
from layers.dense import DenseLayer, dense_forward
from layers.product_unit import ProductUnitLayer, punn_forward
from layers.recurrent import GatedBlock, LstmCell, gated_block_step, lstm_step
from layers.network import LayerKind, LayerSpec, Network, NetworkSpec, count_parameters

__all__ = [
    "Aggregator", "WindowConfig", "output_width", "windowed_forward", "windowed_backward",
    "DenseLayer", "dense_forward", "ProductUnitLayer", "punn_forward",
    "GatedBlock", "LstmCell", "gated_block_step", "lstm_step",
    "LayerKind", "LayerSpec", "Network", "NetworkSpec", "count_parameters",
]
