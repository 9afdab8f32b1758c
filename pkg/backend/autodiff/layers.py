"""
DAG-WGAN Studio - Dense Layers
==============================
Multi-layer perceptrons expressed on the autodiff core.

An MlpParams holds numeric weights; ``variables``/``named`` give the matching
variable Expressions and bindings under a name prefix so the same network can
be differentiated, updated by an optimizer and written to a checkpoint.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from backend.errors import NonFiniteError, ShapeMismatchError

from . import models as ops
from .models import Expression, Tensor


class Activation(str, Enum):
    IDENTITY = "identity"
    TANH = "tanh"
    LEAKY_RELU = "leaky_relu"
    SIGMOID = "sigmoid"


LayerVars = Sequence[Tuple[Expression, Expression]]


@dataclass
class MlpParams:
    """Layers of (weight in x out, bias 1 x out); no layers means the identity map"""
    weights: List[Tensor] = field(default_factory=list)
    biases: List[Tensor] = field(default_factory=list)
    activations: List[Activation] = field(default_factory=list)

    def __post_init__(self):
        if not len(self.weights) == len(self.biases) == len(self.activations):
            raise ShapeMismatchError("weights, biases and activations must have equal length")
        self.activations = [Activation(a) for a in self.activations]
        self.weights = [np.asarray(w, dtype=np.float64) for w in self.weights]
        self.biases = [np.asarray(b, dtype=np.float64).reshape(1, -1) for b in self.biases]
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.shape[1] != w.shape[1]:
                raise ShapeMismatchError(f"layer {k}: weight {w.shape} and bias {b.shape} disagree")
            if k > 0 and self.weights[k - 1].shape[1] != w.shape[0]:
                raise ShapeMismatchError(
                    f"layer {k}: input width {w.shape[0]} does not chain with "
                    f"previous output width {self.weights[k - 1].shape[1]}"
                )
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise NonFiniteError(f"layer {k} has non-finite parameters")

    @classmethod
    def identity(cls) -> "MlpParams":
        return cls()

    @classmethod
    def initialize(cls, dims: Sequence[int], activations: Sequence[Activation],
                   rng: np.random.Generator) -> "MlpParams":
        """Glorot-uniform weights, zero biases; dims = [in, hidden..., out]"""
        weights, biases = [], []
        for fan_in, fan_out in zip(dims[:-1], dims[1:]):
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
            biases.append(np.zeros((1, fan_out)))
        return cls(weights, biases, list(activations))

    @property
    def is_identity(self) -> bool:
        return not self.weights

    @property
    def num_layers(self) -> int:
        return len(self.weights)

    def named(self, prefix: str) -> Dict[str, Tensor]:
        out = {}
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            out[f"{prefix}.W{k}"] = w
            out[f"{prefix}.b{k}"] = b
        return out

    def variables(self, prefix: str) -> List[Tuple[Expression, Expression]]:
        return [
            (ops.variable(f"{prefix}.W{k}", w.shape), ops.variable(f"{prefix}.b{k}", b.shape))
            for k, (w, b) in enumerate(zip(self.weights, self.biases))
        ]

    def with_values(self, prefix: str, values: Mapping[str, Tensor]) -> "MlpParams":
        return MlpParams(
            [values.get(f"{prefix}.W{k}", w) for k, w in enumerate(self.weights)],
            [values.get(f"{prefix}.b{k}", b) for k, b in enumerate(self.biases)],
            list(self.activations),
        )


def activate(x: Expression, kind: Activation, leaky_slope: float = 0.2) -> Expression:
    if kind is Activation.IDENTITY:
        return x
    if kind is Activation.TANH:
        return ops.tanh(x)
    if kind is Activation.SIGMOID:
        return ops.sigmoid(x)
    return ops.leaky_relu(x, leaky_slope)


def dense(x: Expression, weight: Expression, bias: Expression) -> Expression:
    return x @ weight + ops.repeat_rows(bias, x.shape[0])


DropoutMask = Union[Expression, np.ndarray]


def mlp_expr(x: Expression, layers: LayerVars, activations: Sequence[Activation],
             leaky_slope: float = 0.2, masks: Optional[Sequence[DropoutMask]] = None,
             dropout_p: float = 0.0) -> Expression:
    """Apply the network row-wise.

    ``masks`` holds one keep-mask per hidden layer. A numeric mask goes
    through dropout-apply (scaled by 1/(1-p)); an Expression mask is taken
    as already scaled and multiplied in, so one graph can serve many masks.
    """
    h = x
    last = len(layers) - 1
    for k, ((w, b), kind) in enumerate(zip(layers, activations)):
        h = activate(dense(h, w, b), Activation(kind), leaky_slope)
        if masks is not None and k < last:
            mask = masks[k]
            h = h * mask if isinstance(mask, Expression) else ops.dropout_apply(h, mask, dropout_p)
    return h
