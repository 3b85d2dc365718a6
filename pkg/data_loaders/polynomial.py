"""
Random two-variable polynomials, sampled regression data, and networks that
represent a polynomial exactly.

Monomial order: by total degree, then by descending power of x:
    1, x, y, x^2, xy, y^2, x^3, x^2 y, ...

Flat construction (window = stride = max degree w):
    dense 2 -> w*K   each term's block copies x a times, y b times and fills
                     the other slots with constant 1 (zero weights, bias 1)
    window w, s = w  one product per term
    dense K -> 1     weights are the coefficients, bias 0

Product-tree construction (only w = s = 2 windows):
    each term is padded with constant-1 slots to a power-of-two width P and
    reduced by log2(P) rounds of (window 2/2, identity dense).
"""

from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np

from layers.dense import DenseLayer
from layers.network import LayerSpec, NetworkSpec, dense, stack_parameters, window
from tensor_core.rng import Rng
from tensor_core.tensor import Tensor
from utils.errors import ArgumentError

MAX_DEGREE = 10


@dataclass(frozen=True)
class Term:
    a: int
    b: int
    coefficient: float

    @property
    def degree(self) -> int:
        return self.a + self.b


@dataclass(frozen=True)
class Polynomial:
    """One term per monomial x^a y^b with a + b <= degree."""

    degree: int
    terms: Tuple[Term, ...]

    @property
    def term_count(self) -> int:
        return len(self.terms)


@dataclass
class RegressionDataset:
    """Features [n x 2] (x, y) and targets [n]."""

    features: Tensor
    targets: Tensor

    def __post_init__(self):
        if self.targets.shape[0] != self.features.shape[0]:
            raise ArgumentError(f"{self.targets.shape[0]} targets for {self.features.shape[0]} rows")

    def __len__(self) -> int:
        return self.features.shape[0]


def monomial_exponents(degree: int) -> List[Tuple[int, int]]:
    """All (a, b) with a + b <= degree, in the documented order."""
    return [(total - b, b) for total in range(degree + 1) for b in range(total + 1)]


def generate_polynomial(degree: int, rng: Rng) -> Polynomial:
    """
    Coefficients uniform in [-1, 1), drawn in monomial order.

    Raises:
        ArgumentError: If degree is outside [0, MAX_DEGREE]
    """
    if not 0 <= degree <= MAX_DEGREE:
        raise ArgumentError(f"degree must lie in [0, {MAX_DEGREE}], got {degree}")
    terms = tuple(Term(a, b, -1.0 + 2.0 * rng.random()) for a, b in monomial_exponents(degree))
    return Polynomial(degree, terms)


def evaluate_polynomial(p: Polynomial, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Direct evaluation: sum of coefficient * x^a * y^b."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    total = np.zeros(np.broadcast(x, y).shape)
    for term in p.terms:
        total = total + term.coefficient * x ** term.a * y ** term.b
    return total


def sample_polynomial(p: Polynomial, n: int, rng: Rng) -> RegressionDataset:
    """
    n points with x and y uniform in [-1, 1), drawn x then y per row.

    Raises:
        ArgumentError: If n < 1
    """
    if n < 1:
        raise ArgumentError(f"sample count must be >= 1, got {n}")
    points = np.array([[-1.0 + 2.0 * rng.random(), -1.0 + 2.0 * rng.random()] for _ in range(n)])
    targets = evaluate_polynomial(p, points[:, 0], points[:, 1])
    return RegressionDataset(Tensor.wrap(points), Tensor.wrap(targets))


def _copy_layer(p: Polynomial, width: int) -> DenseLayer:
    """Dense 2 -> width*K routing x, y and constant 1 into each term's block."""
    k = p.term_count
    weights = np.zeros((width * k, 2))
    biases = np.zeros(width * k)
    for index, term in enumerate(p.terms):
        base = index * width
        weights[base:base + term.a, 0] = 1.0
        weights[base + term.a:base + term.degree, 1] = 1.0
        biases[base + term.degree:base + width] = 1.0
    return DenseLayer(Tensor.wrap(weights), Tensor.wrap(biases))


def _coefficient_layer(p: Polynomial) -> DenseLayer:
    coefficients = np.array([[term.coefficient for term in p.terms]])
    return DenseLayer(Tensor.wrap(coefficients), Tensor.zeros(1))


def build_exact_network(p: Polynomial) -> Tuple[NetworkSpec, Dict[str, Tensor]]:
    """Flat three-layer network computing p exactly."""
    width = max(p.degree, 1)
    k = p.term_count
    spec = NetworkSpec(2, (dense(width * k), window(width, width), dense(1)))
    params = stack_parameters([(0, _copy_layer(p, width)), (2, _coefficient_layer(p))])
    return spec, params


def build_product_tree_network(p: Polynomial) -> Tuple[NetworkSpec, Dict[str, Tensor]]:
    """Network computing p with w = s = 2 windows only, depth ceil(log2(degree))."""
    width = 1
    while width < max(p.degree, 1):
        width *= 2
    k = p.term_count
    layers: List[LayerSpec] = [dense(width * k)]
    dense_layers = [(0, _copy_layer(p, width))]
    current = width * k
    while current > k:
        layers.append(window(2, 2))
        current //= 2
        if current > k:
            dense_layers.append((len(layers), DenseLayer(Tensor.wrap(np.eye(current)), Tensor.zeros(current))))
            layers.append(dense(current))
    dense_layers.append((len(layers), _coefficient_layer(p)))
    layers.append(dense(1))
    spec = NetworkSpec(2, tuple(layers))
    return spec, stack_parameters(dense_layers)
