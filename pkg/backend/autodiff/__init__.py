"""
DAG-WGAN Studio - Autodiff Module
=================================
Reverse-mode automatic differentiation over dense float64 matrices,
closed under differentiation for the ops a Wasserstein critic needs.
"""

from . import models as ops
from .engine import (
    check_gradients,
    evaluate,
    evaluate_many,
    finite_difference,
    grad,
    gradient,
    gradient_norm_penalty_grad,
    gradient_penalty,
    relative_error,
    topological_nodes,
    value_and_gradient,
)
from .models import Expression, OpKind, Tensor, as_tensor, constant, variable

__all__ = [
    "ops",
    "Expression",
    "OpKind",
    "Tensor",
    "as_tensor",
    "constant",
    "variable",
    "evaluate",
    "evaluate_many",
    "grad",
    "gradient",
    "value_and_gradient",
    "gradient_penalty",
    "gradient_norm_penalty_grad",
    "finite_difference",
    "relative_error",
    "check_gradients",
    "topological_nodes",
]
