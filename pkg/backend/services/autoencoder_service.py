"""
DAG-WGAN Studio - SCM Autoencoder
=================================
Structural-causal-model autoencoder whose weighted adjacency A is the graph
being learned.

Features:
- Encoder Z = (I - A^T) f1(X), decoder f2((I - A^T)^-1 Z) via LU solve
- f1/f2 shared across nodes, acting on the per-node feature axis
- Continuous (mean output) and discrete (row softmax over padded one-hot
  blocks) decoders
- Reconstruction, latent and cross-entropy losses (batch means)

Batch layout: a batch of n samples is an n x (m*d) matrix, node-major, so
column i*d + k is feature k of node i.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field, model_validator

from backend.autodiff import evaluate, evaluate_many, ops
from backend.autodiff.layers import Activation, LayerVars, MlpParams, mlp_expr
from backend.autodiff.models import Expression, Tensor
from backend.errors import ShapeMismatchError

logger = logging.getLogger("scm-autoencoder")

# Logit offset for padded one-hot positions; softmax maps them to exactly 0.
PAD_LOGIT = -1.0e9


# =============================================================================
# CONFIGURATION
# =============================================================================

class DataMode(str, Enum):
    CONTINUOUS = "continuous"
    DISCRETE = "discrete"


class MlpKind(str, Enum):
    MLP = "mlp"
    IDENTITY = "identity"


class AdjacencyInit(str, Enum):
    ZEROS = "zeros"
    SYMMETRIC_RANDOM = "symmetric_random"


class AeConfig(BaseModel):
    num_nodes: int = Field(ge=2)
    node_dim: int = Field(default=1, ge=1)
    hidden_dims: List[int] = Field(default_factory=lambda: [64])
    data_mode: DataMode = DataMode.CONTINUOUS
    mlp_kind: MlpKind = MlpKind.MLP
    activation: Activation = Activation.TANH
    a_init: AdjacencyInit = AdjacencyInit.ZEROS
    a_init_scale: float = Field(default=0.1, gt=0)
    cardinalities: Optional[List[int]] = None
    max_condition: float = Field(default=1e8, gt=1)

    @model_validator(mode="after")
    def _check_cardinalities(self) -> "AeConfig":
        if any(h < 1 for h in self.hidden_dims):
            raise ValueError("hidden_dims must be positive")
        if self.cardinalities is not None:
            if len(self.cardinalities) != self.num_nodes:
                raise ValueError("need one cardinality per node")
            if max(self.cardinalities) > self.node_dim or min(self.cardinalities) < 1:
                raise ValueError("cardinalities must lie in [1, node_dim]")
        if self.data_mode is DataMode.DISCRETE and self.mlp_kind is MlpKind.IDENTITY \
                and self.node_dim == 1:
            raise ValueError("discrete mode needs node_dim >= 2")
        return self

    @property
    def width(self) -> int:
        return self.num_nodes * self.node_dim

    def padding_mask(self) -> Tensor:
        """1 x (m*d) row: 1 where a one-hot position is real, 0 where padded"""
        mask = np.ones((self.num_nodes, self.node_dim))
        if self.cardinalities is not None:
            for j, card in enumerate(self.cardinalities):
                mask[j, card:] = 0.0
        return mask.reshape(1, -1)


# =============================================================================
# MODEL
# =============================================================================

@dataclass
class ScmAutoencoder:
    """Adjacency plus the shared per-node networks f1 and f2"""
    config: AeConfig
    A: Tensor
    f1: MlpParams = field(default_factory=MlpParams.identity)
    f2: MlpParams = field(default_factory=MlpParams.identity)

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=np.float64)
        m, d = self.config.num_nodes, self.config.node_dim
        if self.A.shape != (m, m):
            raise ShapeMismatchError(f"A has shape {self.A.shape}, expected ({m}, {m})")
        for name, net in (("f1", self.f1), ("f2", self.f2)):
            if not net.is_identity and (net.weights[0].shape[0] != d
                                        or net.weights[-1].shape[1] != d):
                raise ShapeMismatchError(f"{name} must map node_dim={d} to node_dim={d}")

    @classmethod
    def initialize(cls, config: AeConfig, rng: np.random.Generator) -> "ScmAutoencoder":
        m, d = config.num_nodes, config.node_dim
        if config.a_init is AdjacencyInit.ZEROS:
            A = np.zeros((m, m))
        else:
            A = rng.uniform(-config.a_init_scale, config.a_init_scale, size=(m, m))
            np.fill_diagonal(A, 0.0)
        if config.mlp_kind is MlpKind.IDENTITY:
            f1 = f2 = MlpParams.identity()
        else:
            dims = [d, *config.hidden_dims, d]
            acts = [config.activation] * len(config.hidden_dims) + [Activation.IDENTITY]
            f1 = MlpParams.initialize(dims, acts, rng)
            f2 = MlpParams.initialize(dims, acts, rng)
        return cls(config=config, A=A, f1=f1, f2=f2)

    def parameters(self) -> Dict[str, Tensor]:
        return {"A": self.A, **self.f1.named("f1"), **self.f2.named("f2")}

    def with_parameters(self, values: Dict[str, Tensor]) -> "ScmAutoencoder":
        return ScmAutoencoder(
            config=self.config,
            A=values.get("A", self.A),
            f1=self.f1.with_values("f1", values),
            f2=self.f2.with_values("f2", values),
        )

    def variables(self) -> "AeVariables":
        return AeVariables(
            A=ops.variable("A", self.A.shape),
            f1=self.f1.variables("f1"),
            f2=self.f2.variables("f2"),
            f1_act=list(self.f1.activations),
            f2_act=list(self.f2.activations),
        )

    def copy(self) -> "ScmAutoencoder":
        return self.with_parameters({k: v.copy() for k, v in self.parameters().items()})


@dataclass
class AeVariables:
    A: Expression
    f1: LayerVars
    f2: LayerVars
    f1_act: List[Activation]
    f2_act: List[Activation]

    def all(self) -> List[Expression]:
        out = [self.A]
        for w, b in [*self.f1, *self.f2]:
            out.extend([w, b])
        return out


# =============================================================================
# EXPRESSION BUILDERS
# =============================================================================

def _per_node(x: Expression, m: int, d: int, layers: LayerVars,
              activations: Sequence[Activation]) -> Expression:
    if not layers:
        return x
    n = x.shape[0]
    stacked = ops.reshape(x, (n * m, d))
    return ops.reshape(mlp_expr(stacked, layers, activations), (n, m * d))


def _node_major_to_dim_major(m: int, d: int) -> List[int]:
    return [i * d + k for k in range(d) for i in range(m)]


def _dim_major_to_node_major(m: int, d: int) -> List[int]:
    return [k * m + i for i in range(m) for k in range(d)]


def _to_node_rows(x: Expression, m: int, d: int) -> Expression:
    """n x (m*d) node-major -> (n*d) x m, one row per (sample, feature)"""
    n = x.shape[0]
    if d > 1:
        x = ops.permute_columns(x, _node_major_to_dim_major(m, d))
    return ops.reshape(x, (n * d, m))


def _from_node_rows(x: Expression, n: int, m: int, d: int) -> Expression:
    x = ops.reshape(x, (n, d * m))
    if d > 1:
        x = ops.permute_columns(x, _dim_major_to_node_major(m, d))
    return x


def mixing_matrix(A: Expression) -> Expression:
    """I - A^T"""
    return ops.identity(A.shape[0]) - A.T


def encode_expr(X: Expression, params: AeVariables, m: int, d: int) -> Expression:
    """Z = (I - A^T) f1(X), per sample"""
    n = X.shape[0]
    Y = _to_node_rows(_per_node(X, m, d, params.f1, params.f1_act), m, d)
    # row-vector form: z_row = y_row (I - A)
    Z = Y @ (ops.identity(m) - params.A)
    return _from_node_rows(Z, n, m, d)


def decode_expr(Z: Expression, params: AeVariables, config: AeConfig) -> Expression:
    """f2((I - A^T)^-1 Z); row softmax per node block in discrete mode"""
    m, d = config.num_nodes, config.node_dim
    n = Z.shape[0]
    Zr = _to_node_rows(Z, m, d)
    solved = ops.linear_solve(mixing_matrix(params.A), Zr.T, config.max_condition).T
    out = _per_node(_from_node_rows(solved, n, m, d), m, d, params.f2, params.f2_act)
    if config.data_mode is DataMode.CONTINUOUS:
        return out
    logits = ops.reshape(out, (n * m, d))
    pad = 1.0 - config.padding_mask().reshape(m, d)
    if np.any(pad):
        logits = logits + ops.constant(np.tile(pad * PAD_LOGIT, (n, 1)))
    return ops.reshape(ops.softmax_rows(logits), (n, m * d))


def reconstruction_expr(X: Expression, M: Expression) -> Expression:
    """1/2 sum (X - M)^2 per sample, batch mean"""
    return ops.sum_all(ops.square(X - M)) * (0.5 / X.shape[0])


def latent_expr(Z: Expression) -> Expression:
    return ops.sum_all(ops.square(Z)) * (0.5 / Z.shape[0])


def cross_entropy_expr(X_onehot: Expression, P: Expression, floor: float = 1e-12) -> Expression:
    return -(ops.sum_all(X_onehot * ops.log(P, floor)) * (1.0 / X_onehot.shape[0]))


@dataclass
class AeObjective:
    """Expressions of one autoencoder pass over a bound batch ``X``"""
    X: Expression
    Z: Expression
    output: Expression
    data_loss: Expression
    latent_loss: Expression

    @property
    def total(self) -> Expression:
        return self.data_loss + self.latent_loss


def autoencoder_objective(model: ScmAutoencoder, n: int,
                          params: Optional[AeVariables] = None,
                          input_name: str = "X") -> Tuple[AeObjective, AeVariables]:
    """L_R = reconstruction (or cross-entropy) + latent regularizer"""
    cfg = model.config
    params = params or model.variables()
    X = ops.variable(input_name, (n, cfg.width))
    Z = encode_expr(X, params, cfg.num_nodes, cfg.node_dim)
    out = decode_expr(Z, params, cfg)
    if cfg.data_mode is DataMode.CONTINUOUS:
        data_loss = reconstruction_expr(X, out)
    else:
        data_loss = cross_entropy_expr(X, out)
    return AeObjective(X=X, Z=Z, output=out, data_loss=data_loss,
                       latent_loss=latent_expr(Z)), params


# =============================================================================
# NUMERIC API
# =============================================================================

def _as_batch(X, m: int, d: int, name: str = "X") -> Tuple[Tensor, tuple]:
    """(n, m, d), (n, m*d) or a single (m, d) sample -> n x (m*d)"""
    arr = np.asarray(X, dtype=np.float64)
    shape = arr.shape
    if arr.ndim == 3 and shape[1:] == (m, d):
        return arr.reshape(shape[0], m * d), shape
    if arr.ndim == 2 and shape == (m, d):
        return arr.reshape(1, m * d), shape
    if arr.ndim == 2 and shape[1] == m * d:
        return arr, shape
    raise ShapeMismatchError(f"{name} has shape {shape}; expected (n, {m}, {d}) or (n, {m * d})")


def _bindings(model: ScmAutoencoder, **extra: Tensor) -> Dict[str, Tensor]:
    return {**model.parameters(), **extra}


def encode(X, model: ScmAutoencoder) -> np.ndarray:
    cfg = model.config
    flat, shape = _as_batch(X, cfg.num_nodes, cfg.node_dim)
    params = model.variables()
    Xv = ops.variable("X", flat.shape)
    Z = evaluate(encode_expr(Xv, params, cfg.num_nodes, cfg.node_dim),
                 _bindings(model, X=flat))
    return Z.reshape(shape)


def decode(Z, model: ScmAutoencoder) -> np.ndarray:
    """M_X (continuous) or P_X (discrete); raises SingularSystemError for a bad A"""
    cfg = model.config
    flat, shape = _as_batch(Z, cfg.num_nodes, cfg.node_dim, "Z")
    params = model.variables()
    Zv = ops.variable("Z", flat.shape)
    return evaluate(decode_expr(Zv, params, cfg), _bindings(model, Z=flat)).reshape(shape)


def reconstruct(X, model: ScmAutoencoder) -> np.ndarray:
    cfg = model.config
    flat, shape = _as_batch(X, cfg.num_nodes, cfg.node_dim)
    objective, _ = autoencoder_objective(model, flat.shape[0])
    return evaluate(objective.output, _bindings(model, X=flat)).reshape(shape)


def autoencoder_losses(X, model: ScmAutoencoder) -> Dict[str, float]:
    cfg = model.config
    flat, _ = _as_batch(X, cfg.num_nodes, cfg.node_dim)
    objective, _ = autoencoder_objective(model, flat.shape[0])
    data, latent = evaluate_many([objective.data_loss, objective.latent_loss],
                                 _bindings(model, X=flat))
    return {"data": float(data[0, 0]), "latent": float(latent[0, 0])}


def _sample_rows(x) -> Tensor:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim <= 2:
        return arr.reshape(1, -1)
    return arr.reshape(arr.shape[0], -1)


def reconstruction_loss(X, M_X) -> float:
    """Batch mean of 1/2 sum (X - M_X)^2; a 2-D input is one sample"""
    x, mx = _sample_rows(X), _sample_rows(M_X)
    if x.shape != mx.shape:
        raise ShapeMismatchError(f"X {np.shape(X)} and M_X {np.shape(M_X)} differ")
    Xv, Mv = ops.variable("X", x.shape), ops.variable("M", mx.shape)
    return float(evaluate(reconstruction_expr(Xv, Mv), {"X": x, "M": mx})[0, 0])


def latent_regularizer(M_Z) -> float:
    z = _sample_rows(M_Z)
    Zv = ops.variable("Z", z.shape)
    return float(evaluate(latent_expr(Zv), {"Z": z})[0, 0])


def cross_entropy_loss(X_onehot, P_X) -> float:
    x, p = _sample_rows(X_onehot), _sample_rows(P_X)
    if x.shape != p.shape:
        raise ShapeMismatchError(f"X {np.shape(X_onehot)} and P_X {np.shape(P_X)} differ")
    Xv, Pv = ops.variable("X", x.shape), ops.variable("P", p.shape)
    return float(evaluate(cross_entropy_expr(Xv, Pv), {"X": x, "P": p})[0, 0])
