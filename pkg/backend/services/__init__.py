"""
DAG-WGAN Studio - Services Module
=================================
Service layer for causal structure learning with an adversarially
regularized SCM autoencoder.

Core Services:
- graph_service: acyclicity penalty, thresholding, SHD
- sem_synth_service: random DAGs, linear/nonlinear SEMs, discrete BNs
- autoencoder_service: (I - A^T) encoder/decoder with per-node MLPs
- critic_service: packed Wasserstein critic with gradient penalty
- trainer: augmented Lagrangian loop with alternating critic/generator steps
- metrics_service: SHD summaries, dimension-wise probability, generation
- dataset_service: CSV/graph/manifest/checkpoint IO
"""

# =============================================================================
# CORE SERVICES
# =============================================================================

from .graph_service import (
    AcyclicityConfig,
    BinaryDag,
    GraphConfig,
    acyclicity_expr,
    acyclicity_grad,
    acyclicity_h,
    finalize_adjacency,
    is_dag,
    shd,
    threshold_graph,
    to_binary_dag,
    topological_order,
)

from .sem_synth_service import (
    DiscreteBnSpec,
    DiscreteSimSpec,
    SemSpec,
    SemVariant,
    SyntheticDataset,
    TransferKind,
    assign_weights,
    random_discrete_bn,
    sample_discrete_bn,
    sample_er_dag,
    sample_sem,
    simulate_dataset,
    simulate_discrete_dataset,
)

from .autoencoder_service import (
    AeConfig,
    DataMode,
    MlpKind,
    ScmAutoencoder,
    autoencoder_losses,
    cross_entropy_loss,
    decode,
    encode,
    latent_regularizer,
    reconstruct,
    reconstruction_loss,
)

from .critic_service import (
    CriticConfig,
    critic_loss,
    critic_parameters,
    critic_score,
    estimate_wasserstein,
    generator_loss,
    pack,
)

# =============================================================================
# TRAINING & EVALUATION
# =============================================================================

from .trainer import (
    TrainConfig,
    TrainingService,
    TrainResult,
    augmented_lagrangian_loop,
    get_training_service,
)

from .metrics_service import (
    DimProbReport,
    RunSummary,
    dimension_wise_probability,
    evaluate_graphs,
    generate_samples,
    summarize_runs,
)

from .dataset_service import (
    Checkpoint,
    DatasetManifest,
    load_checkpoint,
    load_graph,
    load_manifest_data,
    save_checkpoint,
    save_graph,
)


# =============================================================================
# EXPORTS
# =============================================================================

__all__ = [
    # Graph
    "AcyclicityConfig",
    "BinaryDag",
    "GraphConfig",
    "acyclicity_expr",
    "acyclicity_grad",
    "acyclicity_h",
    "finalize_adjacency",
    "is_dag",
    "shd",
    "threshold_graph",
    "to_binary_dag",
    "topological_order",

    # Synthesis
    "DiscreteBnSpec",
    "DiscreteSimSpec",
    "SemSpec",
    "SemVariant",
    "SyntheticDataset",
    "TransferKind",
    "assign_weights",
    "random_discrete_bn",
    "sample_discrete_bn",
    "sample_er_dag",
    "sample_sem",
    "simulate_dataset",
    "simulate_discrete_dataset",

    # Autoencoder
    "AeConfig",
    "DataMode",
    "MlpKind",
    "ScmAutoencoder",
    "autoencoder_losses",
    "cross_entropy_loss",
    "decode",
    "encode",
    "latent_regularizer",
    "reconstruct",
    "reconstruction_loss",

    # Critic
    "CriticConfig",
    "critic_loss",
    "critic_parameters",
    "critic_score",
    "estimate_wasserstein",
    "generator_loss",
    "pack",

    # Trainer
    "TrainConfig",
    "TrainingService",
    "TrainResult",
    "augmented_lagrangian_loop",
    "get_training_service",

    # Metrics
    "DimProbReport",
    "RunSummary",
    "dimension_wise_probability",
    "evaluate_graphs",
    "generate_samples",
    "summarize_runs",

    # Data IO
    "Checkpoint",
    "DatasetManifest",
    "load_checkpoint",
    "load_graph",
    "load_manifest_data",
    "save_checkpoint",
    "save_graph",
]
