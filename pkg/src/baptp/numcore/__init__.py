"""Dense tensor kernels, reverse-mode differentiation and Adam."""
from . import tensor as ops
from .optim import AdamState, adam_step
from .rng import make_rng
from .tensor import Graph, Node, NonFiniteError, ShapeError, Tensor, as_tensor, backward

__all__ = [
    "AdamState", "Graph", "Node", "NonFiniteError", "ShapeError", "Tensor",
    "adam_step", "as_tensor", "backward", "make_rng", "ops",
]
