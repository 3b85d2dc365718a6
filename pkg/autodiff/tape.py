"""
Tape-based reverse-mode automatic differentiation.

Every forward pass builds a fresh Tape. Operations append a Node holding
the cached forward value, the indices of its parents and a vector-Jacobian
product closure. Because parents are always recorded before their children,
append order is a topological order and the backward pass simply walks the
tape in reverse.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from tensor_core.tensor import Tensor
from utils.errors import ContractError, NumericError

# Maps the node's adjoint to one gradient per parent (None = no contribution).
VectorJacobian = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


class OpKind(Enum):
    """Operation tags recorded on tape nodes."""

    LEAF = "leaf"
    ADD = "add"
    MULTIPLY = "multiply"
    SCALE = "scale"
    SUM = "sum"
    CONCAT = "concat"
    SLICE = "slice"
    DENSE = "dense"
    WINDOW_PRODUCT = "window_product"
    WINDOW_MAX = "window_max"
    PRODUCT_UNIT = "product_unit"
    SIGMOID = "sigmoid"
    TANH = "tanh"
    LEAKY_RELU = "leaky_relu"
    LOG_SOFTMAX = "log_softmax"
    NLL = "nll"
    MSE = "mse"


@dataclass
class Node:
    """One recorded operation."""

    kind: OpKind
    parents: Tuple[int, ...]
    value: Tensor
    adjoint: np.ndarray
    vjp: Optional[VectorJacobian] = None
    name: Optional[str] = None


@dataclass
class Tape:
    """Append-only record of a forward computation."""

    nodes: List[Node] = field(default_factory=list)
    spent: bool = False

    def leaf(self, value: Union[Tensor, np.ndarray, Sequence[float], float], name: Optional[str] = None) -> int:
        """
        Record an input or parameter.

        Returns:
            Index of the new node
        """
        tensor = value if isinstance(value, Tensor) else Tensor(value)
        return self._append(Node(OpKind.LEAF, (), tensor, np.zeros(tensor.shape), None, name))

    def record(
        self,
        kind: OpKind,
        parents: Sequence[int],
        value: Union[Tensor, np.ndarray],
        vjp: VectorJacobian,
    ) -> int:
        """
        Record the result of an operation.

        Args:
            kind: Operation tag
            parents: Indices of the operands, all already on this tape
            value: Forward result
            vjp: Closure mapping this node's adjoint to parent gradients

        Raises:
            NumericError: If the forward value contains non-finite entries
            ContractError: If a parent index is not on the tape yet
        """
        tensor = value if isinstance(value, Tensor) else Tensor.wrap(value)
        if not tensor.is_finite():
            raise NumericError(f"{kind.value} produced non-finite values")
        for parent in parents:
            if not 0 <= parent < len(self.nodes):
                raise ContractError(f"{kind.value} refers to node {parent}, tape has {len(self.nodes)} nodes")
        return self._append(Node(kind, tuple(parents), tensor, np.zeros(tensor.shape), vjp))

    def _append(self, node: Node) -> int:
        if self.spent:
            raise ContractError("cannot record on a tape after backward(); build a new tape")
        self.nodes.append(node)
        return len(self.nodes) - 1

    def value(self, index: int) -> Tensor:
        return self.nodes[index].value

    def array(self, index: int) -> np.ndarray:
        return self.nodes[index].value.array

    def adjoint(self, index: int) -> Tensor:
        return Tensor(self.nodes[index].adjoint)

    def backward(self, root: int):
        """
        Fill every node's adjoint with d(root)/d(node).

        A tape supports a single backward pass; adjoints are reset by
        building a new tape on the next forward pass.

        Raises:
            ContractError: If root is not a single scalar or the tape is spent
        """
        if self.spent:
            raise ContractError("backward() already ran on this tape")
        root_node = self.nodes[root]
        if root_node.value.shape != (1,):
            raise ContractError(f"backward root must have shape [1], got {list(root_node.value.shape)}")
        self.spent = True
        root_node.adjoint[...] = 1.0
        for index in range(root, -1, -1):
            node = self.nodes[index]
            if node.vjp is None or not node.adjoint.any():
                continue
            grads = node.vjp(node.adjoint)
            for parent, grad in zip(node.parents, grads):
                if grad is None:
                    continue
                target = self.nodes[parent].adjoint
                if grad.shape != target.shape:
                    raise ContractError(
                        f"{node.kind.value} returned gradient {list(grad.shape)} for a parent of shape {list(target.shape)}"
                    )
                target += grad


def backward(tape: Tape, root: int):
    """Run the reverse pass from a scalar root node."""
    tape.backward(root)
