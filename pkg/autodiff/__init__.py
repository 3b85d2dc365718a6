# Reverse-mode differentiation over tensor_core values
from autodiff.tape import Node, OpKind, Tape, backward
from autodiff.grad_check import grad_check as check_gradients

__all__ = ["Node", "OpKind", "Tape", "backward", "check_gradients"]
