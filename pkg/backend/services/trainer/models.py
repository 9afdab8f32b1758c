"""
DAG-WGAN Studio - Trainer Data Models
=====================================
Configuration, optimizer state and results of constrained training.
"""

import math
import os
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from backend.autodiff.layers import Activation, MlpParams
from backend.autodiff.models import Tensor
from backend.services.autoencoder_service import (
    AdjacencyInit,
    AeConfig,
    DataMode,
    MlpKind,
    ScmAutoencoder,
)
from backend.services.critic_service import CriticConfig


# =============================================================================
# CONFIGURATION
# =============================================================================

class TrainerConfig:
    """Runtime defaults"""
    LOG_EVERY_EPOCHS = int(os.getenv("DAGWGAN_LOG_EVERY", "50"))


class FakeSource(str, Enum):
    """What the critic sees as fake data"""
    PRIOR = "prior"
    RECONSTRUCTION = "reconstruction"


class TrainConfig(BaseModel):
    """Flat training configuration; unknown keys are rejected"""
    model_config = ConfigDict(extra="forbid")

    # outer / inner loops
    epochs_per_outer: int = Field(default=300, ge=1)
    max_outer_iters: int = Field(default=20, ge=1)
    n_critic: int = Field(default=5, ge=1)
    batch_size: int = Field(default=256, ge=1)
    seed: int = Field(default=0, ge=0, lt=2 ** 64)
    standardize_flag: bool = False

    # optimizer
    lr: float = Field(default=3e-3, gt=0)
    lr_decay: float = Field(default=0.75, gt=0, le=1)
    adam_beta1: float = Field(default=0.9, ge=0, lt=1)
    adam_beta2: float = Field(default=0.999, ge=0, lt=1)
    adam_eps: float = Field(default=1e-8, gt=0)

    # augmented Lagrangian
    h_tolerance: float = Field(default=1e-8, gt=0, lt=1e-2)
    rho_init: float = Field(default=1.0, gt=0)
    rho_max: float = Field(default=1e16, gt=0)
    rho_growth: float = Field(default=10.0, gt=1)
    progress_ratio: float = Field(default=0.25, gt=0, lt=1)
    multiplier_init: float = Field(default=0.0, ge=0)
    alpha: Optional[float] = Field(default=None, gt=0)

    # objective
    gen_loss_weight: float = Field(default=1.0, ge=0)
    freeze_critic: bool = False
    fake_source: FakeSource = FakeSource.PRIOR
    edge_threshold: float = Field(default=0.3, ge=0)

    # autoencoder
    ae_hidden_dims: List[int] = Field(default_factory=lambda: [64])
    ae_mlp_kind: MlpKind = MlpKind.MLP
    ae_activation: Activation = Activation.TANH
    a_init: AdjacencyInit = AdjacencyInit.ZEROS

    # critic
    pac: int = Field(default=10, ge=1)
    critic_hidden_dims: List[int] = Field(default_factory=lambda: [256, 256])
    leaky_slope: float = Field(default=0.2, gt=0, lt=1)
    dropout_p: float = Field(default=0.5, ge=0, lt=1)
    gp_lambda: float = Field(default=10.0, gt=0)
    gp_use_dropout: bool = False

    # persistence
    checkpoint_every: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def _check_batch(self) -> "TrainConfig":
        if self.batch_size < self.pac:
            raise ValueError(f"batch_size ({self.batch_size}) must be at least pac ({self.pac})")
        if self.rho_init > self.rho_max:
            raise ValueError("rho_init must not exceed rho_max")
        return self

    def ae_config(self, num_nodes: int, node_dim: int = 1,
                  data_mode: DataMode = DataMode.CONTINUOUS,
                  cardinalities: Optional[List[int]] = None) -> AeConfig:
        return AeConfig(
            num_nodes=num_nodes,
            node_dim=node_dim,
            hidden_dims=self.ae_hidden_dims,
            data_mode=data_mode,
            mlp_kind=self.ae_mlp_kind,
            activation=self.ae_activation,
            a_init=self.a_init,
            cardinalities=cardinalities,
        )

    def critic_config(self) -> CriticConfig:
        return CriticConfig(
            pac=self.pac,
            hidden_dims=self.critic_hidden_dims,
            leaky_slope=self.leaky_slope,
            dropout_p=self.dropout_p,
            gp_lambda=self.gp_lambda,
            gp_use_dropout=self.gp_use_dropout,
        )


# =============================================================================
# OPTIMIZER & CONSTRAINT STATE
# =============================================================================

@dataclass
class AdamState:
    first_moment: Dict[str, Tensor] = field(default_factory=dict)
    second_moment: Dict[str, Tensor] = field(default_factory=dict)
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    lr: float = 1e-3

    @classmethod
    def fresh(cls, params: Dict[str, Tensor], lr: float, beta1: float = 0.9,
              beta2: float = 0.999, eps: float = 1e-8) -> "AdamState":
        return cls(
            first_moment={k: np.zeros_like(v) for k, v in params.items()},
            second_moment={k: np.zeros_like(v) for k, v in params.items()},
            beta1=beta1, beta2=beta2, eps=eps, lr=lr,
        )

    def named(self, prefix: str) -> Dict[str, Tensor]:
        out = {f"{prefix}.m.{k}": v for k, v in self.first_moment.items()}
        out.update({f"{prefix}.v.{k}": v for k, v in self.second_moment.items()})
        return out


@dataclass
class AugLagState:
    multiplier: float = 0.0
    penalty_rho: float = 1.0
    h_prev: float = math.inf
    outer_iter: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


# =============================================================================
# RECORDS & RESULTS
# =============================================================================

HISTORY_COLUMNS = ["outer_iter", "epoch", "L_D", "L_G", "L_R", "h", "lr", "multiplier", "rho"]


@dataclass
class EpochRecord:
    outer_iter: int
    epoch: int
    L_D: float
    L_G: float
    L_R: float
    h: float
    lr: float
    multiplier: float
    rho: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TrainResult:
    model: ScmAutoencoder
    critic: MlpParams
    learned_A: Tensor
    graph: FrozenSet[Tuple[int, int]]
    history: List[EpochRecord]
    converged: bool
    auglag: AugLagState
    final_h: float
    critic_adam: Optional[AdamState] = None
    ae_adam: Optional[AdamState] = None

    def summary(self) -> dict:
        return {
            "converged": self.converged,
            "final_h": self.final_h,
            "num_edges": len(self.graph),
            "outer_iters": self.auglag.outer_iter,
            "epochs": len(self.history),
        }
