# Tensor storage and the deterministic generator
from tensor_core.tensor import Tensor, matvec
from tensor_core.rng import Rng, uniform

__all__ = ["Tensor", "matvec", "Rng", "uniform"]
