"""
DAG-WGAN Studio - Trainer Module
================================
Constrained adversarial training of the SCM autoencoder.
"""

from .models import (
    HISTORY_COLUMNS,
    AdamState,
    AugLagState,
    EpochRecord,
    FakeSource,
    TrainConfig,
    TrainerConfig,
    TrainResult,
)
from .service import (
    CriticGraph,
    GeneratorGraph,
    TrainingService,
    TrainingSession,
    adam_step,
    augmented_lagrangian_loop,
    build_critic_graph,
    build_generator_graph,
    get_training_service,
    initial_model,
    inner_epoch,
    lr_schedule,
    standardize,
    update_auglag,
)

__all__ = [
    # Config
    "TrainConfig",
    "TrainerConfig",
    "FakeSource",
    # State
    "AdamState",
    "AugLagState",
    "EpochRecord",
    "TrainResult",
    "HISTORY_COLUMNS",
    # Operations
    "adam_step",
    "lr_schedule",
    "update_auglag",
    "inner_epoch",
    "augmented_lagrangian_loop",
    "initial_model",
    "standardize",
    "build_generator_graph",
    "build_critic_graph",
    "GeneratorGraph",
    "CriticGraph",
    "TrainingSession",
    # Service
    "TrainingService",
    "get_training_service",
]
