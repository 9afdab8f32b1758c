"""
DAG-WGAN Studio - Wasserstein Critic
====================================
Packed MLP critic with leaky-ReLU, dropout and gradient penalty.

Features:
- PacGAN-style packing of consecutive samples into one critic input
- Critic loss mean D(fake) - mean D(real) + lambda * GP, interpolates drawn
  per packed row
- Generator loss -mean D(fake)
- Dropout masks and interpolation weights drawn from an explicit RNG, so a
  fixed seed gives a deterministic loss
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field

from backend.autodiff import evaluate, gradient_penalty, ops
from backend.autodiff.layers import Activation, MlpParams, mlp_expr
from backend.autodiff.models import Expression, Tensor
from backend.errors import ShapeMismatchError

logger = logging.getLogger("wgan-critic")

PREFIX = "critic"


# =============================================================================
# CONFIGURATION
# =============================================================================

class CriticConfig(BaseModel):
    pac: int = Field(default=10, ge=1)
    hidden_dims: List[int] = Field(default_factory=lambda: [256, 256])
    leaky_slope: float = Field(default=0.2, gt=0, lt=1)
    dropout_p: float = Field(default=0.5, ge=0, lt=1)
    gp_lambda: float = Field(default=10.0, gt=0)
    gp_use_dropout: bool = False


# =============================================================================
# PARAMETERS
# =============================================================================

def critic_parameters(sample_width: int, cfg: CriticConfig,
                      rng: np.random.Generator) -> MlpParams:
    """Input width pac * sample_width, leaky-ReLU hidden layers, linear scalar output"""
    dims = [cfg.pac * sample_width, *cfg.hidden_dims, 1]
    acts = [Activation.LEAKY_RELU] * len(cfg.hidden_dims) + [Activation.IDENTITY]
    return MlpParams.initialize(dims, acts, rng)


def critic_variables(params: MlpParams):
    return params.variables(PREFIX)


def critic_bindings(params: MlpParams) -> Dict[str, Tensor]:
    return params.named(PREFIX)


def hidden_widths(params: MlpParams) -> List[int]:
    return [w.shape[1] for w in params.weights[:-1]]


# =============================================================================
# PACKING
# =============================================================================

def packed_rows(n: int, pac: int) -> int:
    return n // pac


def pack(batch, pac: int) -> np.ndarray:
    """Concatenate consecutive groups of ``pac`` samples; leftover rows are dropped"""
    arr = np.asarray(batch, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    arr = arr.reshape(arr.shape[0], -1)
    n = arr.shape[0]
    if n == 0:
        raise ShapeMismatchError("cannot pack an empty batch")
    rows = packed_rows(n, pac)
    if rows == 0:
        raise ShapeMismatchError(f"batch of {n} samples is smaller than pac={pac}")
    if n % pac:
        logger.warning(f"pack: dropping {n % pac} trailing sample(s) ({n} not divisible by {pac})")
    return arr[: rows * pac].reshape(rows, pac * arr.shape[1])


def pack_expr(x: Expression, pac: int) -> Expression:
    n, width = x.shape
    rows = packed_rows(n, pac)
    if rows == 0:
        raise ShapeMismatchError(f"batch of {n} samples is smaller than pac={pac}")
    if n % pac:
        keep = np.eye(n)[: rows * pac]
        x = ops.constant(keep) @ x
    return ops.reshape(x, (rows, pac * width))


# =============================================================================
# RANDOMNESS
# =============================================================================

def sample_dropout_masks(rows: int, widths: Sequence[int], p: float,
                         rng: np.random.Generator) -> List[np.ndarray]:
    """Bernoulli(1-p) keep-masks, one per hidden layer"""
    return [(rng.random((rows, w)) >= p).astype(np.float64) for w in widths]


def sample_interpolation(rows: int, rng: np.random.Generator) -> np.ndarray:
    return rng.random((rows, 1))


def interpolate(real: np.ndarray, fake: np.ndarray, eps: np.ndarray) -> np.ndarray:
    """x_hat = eps * real + (1 - eps) * fake, eps broadcast along each packed row"""
    eps = np.asarray(eps, dtype=np.float64).reshape(-1, 1)
    return eps * real + (1.0 - eps) * fake


# =============================================================================
# EXPRESSIONS
# =============================================================================

def critic_expr(packed: Expression, layers, cfg: CriticConfig,
                masks: Optional[Sequence] = None) -> Expression:
    acts = [Activation.LEAKY_RELU] * (len(layers) - 1) + [Activation.IDENTITY]
    if cfg.dropout_p == 0:
        masks = None
    return mlp_expr(packed, layers, acts, cfg.leaky_slope, masks, cfg.dropout_p)


@dataclass
class CriticObjective:
    """Critic loss over bound packed real/fake rows and interpolates"""
    real: Expression
    fake: Expression
    interp: Expression
    masks: List[Expression]
    gp_masks: List[Expression]
    layers: list
    wasserstein: Expression
    penalty: Expression
    loss: Expression


def critic_objective(rows: int, width: int, params: MlpParams,
                     cfg: CriticConfig) -> CriticObjective:
    """Graph for L_D with dropout masks as bound (already scaled) variables"""
    layers = critic_variables(params)
    real = ops.variable("critic.real", (rows, width))
    fake = ops.variable("critic.fake", (rows, width))
    interp = ops.variable("critic.interp", (rows, width))
    widths = hidden_widths(params)
    use_dropout = cfg.dropout_p > 0
    masks = [ops.variable(f"critic.mask{k}", (rows, w)) for k, w in enumerate(widths)] \
        if use_dropout else []
    gp_masks = [ops.variable(f"critic.gpmask{k}", (rows, w)) for k, w in enumerate(widths)] \
        if use_dropout and cfg.gp_use_dropout else []
    d_real = critic_expr(real, layers, cfg, masks or None)
    d_fake = critic_expr(fake, layers, cfg, masks or None)
    wasserstein = ops.mean(d_real) - ops.mean(d_fake)
    penalty = gradient_penalty(critic_expr(interp, layers, cfg, gp_masks or None), interp)
    loss = -wasserstein + penalty * cfg.gp_lambda
    return CriticObjective(real=real, fake=fake, interp=interp, masks=masks, gp_masks=gp_masks,
                           layers=layers, wasserstein=wasserstein, penalty=penalty, loss=loss)


def critic_step_bindings(objective: CriticObjective, real: np.ndarray, fake: np.ndarray,
                         cfg: CriticConfig, rng: np.random.Generator) -> Dict[str, Tensor]:
    """Fresh masks and interpolation weights for one critic evaluation"""
    rows = real.shape[0]
    eps = sample_interpolation(rows, rng)
    out = {"critic.real": real, "critic.fake": fake,
           "critic.interp": interpolate(real, fake, eps)}
    scale = 1.0 / (1.0 - cfg.dropout_p)
    widths = [m.shape[1] for m in objective.masks]
    for k, mask in enumerate(sample_dropout_masks(rows, widths, cfg.dropout_p, rng)):
        out[f"critic.mask{k}"] = mask * scale
    widths = [m.shape[1] for m in objective.gp_masks]
    for k, mask in enumerate(sample_dropout_masks(rows, widths, cfg.dropout_p, rng)):
        out[f"critic.gpmask{k}"] = mask * scale
    return out


def generator_expr(fake_packed: Expression, params: MlpParams, cfg: CriticConfig) -> Expression:
    """-mean D(fake); dropout off"""
    return -ops.mean(critic_expr(fake_packed, critic_variables(params), cfg))


# =============================================================================
# NUMERIC API
# =============================================================================

def critic_score(packed, params: MlpParams, cfg: CriticConfig,
                 dropout_masks: Optional[Sequence[np.ndarray]] = None) -> np.ndarray:
    """One score per packed row; masks are raw 0/1 keep-masks"""
    x = np.asarray(packed, dtype=np.float64)
    x = x.reshape(x.shape[0], -1)
    if x.shape[1] != params.weights[0].shape[0]:
        raise ShapeMismatchError(
            f"critic expects width {params.weights[0].shape[0]}, got {x.shape[1]}"
        )
    xv = ops.variable("critic.input", x.shape)
    expr = critic_expr(xv, critic_variables(params), cfg, dropout_masks)
    return evaluate(expr, {**critic_bindings(params), "critic.input": x})[:, 0]


def critic_loss(x_real, x_fake, params: MlpParams, cfg: CriticConfig,
                rng: np.random.Generator) -> float:
    """L_D on packed rows of equal count"""
    real, fake = _packed_pair(x_real, x_fake)
    objective = critic_objective(real.shape[0], real.shape[1], params, cfg)
    bindings = {**critic_bindings(params),
                **critic_step_bindings(objective, real, fake, cfg, rng)}
    return float(evaluate(objective.loss, bindings)[0, 0])


def generator_loss(x_fake, params: MlpParams, cfg: CriticConfig) -> float:
    fake = np.asarray(x_fake, dtype=np.float64)
    fake = fake.reshape(fake.shape[0], -1)
    xv = ops.variable("critic.fake", fake.shape)
    return float(evaluate(generator_expr(xv, params, cfg),
                          {**critic_bindings(params), "critic.fake": fake})[0, 0])


def estimate_wasserstein(x_real, x_fake, params: MlpParams, cfg: CriticConfig) -> float:
    """mean D(real) - mean D(fake), dropout off"""
    real, fake = _packed_pair(x_real, x_fake)
    return float(np.mean(critic_score(real, params, cfg))
                 - np.mean(critic_score(fake, params, cfg)))


def _packed_pair(x_real, x_fake) -> Tuple[np.ndarray, np.ndarray]:
    real = np.asarray(x_real, dtype=np.float64)
    fake = np.asarray(x_fake, dtype=np.float64)
    real, fake = real.reshape(real.shape[0], -1), fake.reshape(fake.shape[0], -1)
    if real.shape != fake.shape:
        raise ShapeMismatchError(f"real {real.shape} and fake {fake.shape} packed batches differ")
    return real, fake
