"""
DAG-WGAN Studio - Synthetic Benchmark Generator
===============================================
Ground-truth graphs and datasets for structure-learning benchmarks.

Features:
- Erdős–Rényi DAGs with a given expected degree (random topological order)
- Weighted SEM sampling: linear, nonlinear1 (A^T h(x)), nonlinear2
  (2 sin(A^T(x+0.5)) + A^T cos(x+0.5))
- Discrete Bayesian networks with Dirichlet CPTs and ancestral sampling
- Chunked generation with per-chunk child seeds: output never depends on
  the number of workers
"""

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field, model_validator

from backend.autodiff.models import Tensor
from backend.errors import DataFormatError, GraphFormatError
from backend.services.graph_service import (
    BinaryDag,
    as_adjacency,
    is_dag,
    threshold_graph,
    topological_order,
)

logger = logging.getLogger("sem-synth")


# =============================================================================
# CONFIGURATION
# =============================================================================

class SynthConfig:
    """Generator defaults"""
    DEFAULT_SAMPLES = int(os.getenv("DAGWGAN_DEFAULT_SAMPLES", "5000"))
    CHUNK_SIZE = 1024
    MAX_WORKERS = int(os.getenv("DAGWGAN_SYNTH_WORKERS", "1"))


# =============================================================================
# DATA MODELS
# =============================================================================

class SemVariant(str, Enum):
    LINEAR = "linear"
    NONLINEAR1 = "nonlinear1"
    NONLINEAR2 = "nonlinear2"


class TransferKind(str, Enum):
    """h(x) used by the nonlinear1 variant"""
    COS_PLUS_ONE = "cos_plus_one"
    TANH = "tanh"
    SIGMOID = "sigmoid"


TRANSFERS: Dict[TransferKind, Callable[[np.ndarray], np.ndarray]] = {
    TransferKind.COS_PLUS_ONE: lambda x: np.cos(x + 1.0),
    TransferKind.TANH: np.tanh,
    TransferKind.SIGMOID: lambda x: 0.5 * (1.0 + np.tanh(0.5 * x)),
}


class SemSpec(BaseModel):
    """Everything needed to regenerate a continuous benchmark"""
    m: int = Field(ge=1)
    variant: SemVariant = SemVariant.LINEAR
    noise_std: float = Field(default=1.0, gt=0)
    weight_low: float = Field(default=0.5, gt=0)
    weight_high: float = Field(default=2.0, gt=0)
    expected_degree: float = Field(default=3.0, gt=0)
    seed: int = Field(default=0, ge=0, lt=2 ** 64)
    transfer: TransferKind = TransferKind.COS_PLUS_ONE

    @model_validator(mode="after")
    def _check_ranges(self) -> "SemSpec":
        if not self.weight_low < self.weight_high:
            raise ValueError("weight_low must be smaller than weight_high")
        if self.m > 1 and not self.expected_degree < self.m:
            raise ValueError("expected_degree must be smaller than m")
        return self


class DiscreteSimSpec(BaseModel):
    """Provenance of a synthetic discrete benchmark"""
    m: int = Field(ge=1)
    cardinality: int = Field(default=3, ge=2)
    expected_degree: float = Field(default=3.0, gt=0)
    concentration: float = Field(default=1.0, gt=0)
    seed: int = Field(default=0, ge=0, lt=2 ** 64)


@dataclass
class DiscreteBnSpec:
    """Discrete Bayesian network: one CPT per node, rows indexed by parent codes"""
    dag: BinaryDag
    cardinalities: List[int]
    cpts: List[np.ndarray]

    def __post_init__(self):
        if len(self.cardinalities) != self.dag.m or len(self.cpts) != self.dag.m:
            raise DataFormatError(
                f"need one cardinality and one CPT per node ({self.dag.m} nodes)"
            )
        for j in range(self.dag.m):
            cpt = np.asarray(self.cpts[j], dtype=np.float64)
            rows = int(np.prod([self.cardinalities[p] for p in self.dag.parents(j)]))
            if cpt.shape != (rows, self.cardinalities[j]):
                raise DataFormatError(
                    f"CPT of node {j} has shape {cpt.shape}, expected "
                    f"({rows}, {self.cardinalities[j]})"
                )
            if np.any(cpt < 0) or not np.allclose(cpt.sum(axis=1), 1.0, rtol=0, atol=1e-9):
                raise DataFormatError(
                    f"CPT of node {j} has a row that is not a probability distribution",
                    ["Each CPT row must be nonnegative and sum to 1"],
                )
            self.cpts[j] = cpt


@dataclass
class SyntheticDataset:
    dag: BinaryDag
    weights: Tensor
    data: np.ndarray


def make_rng(seed: Optional[int]) -> np.random.Generator:
    return np.random.default_rng(seed)


# =============================================================================
# GRAPHS
# =============================================================================

def sample_er_dag(m: int, expected_degree: float, rng: np.random.Generator) -> BinaryDag:
    """ER skeleton with p = degree/(m-1), oriented along a random node order"""
    if m < 1:
        raise GraphFormatError(f"need at least one node, got m={m}")
    if m == 1:
        return BinaryDag(m=1, edges=frozenset())
    p = min(1.0, expected_degree / (m - 1))
    upper = np.triu(rng.random((m, m)) < p, k=1)
    rank_to_node = rng.permutation(m)
    edges = frozenset(
        (int(rank_to_node[i]), int(rank_to_node[j])) for i, j in zip(*np.nonzero(upper))
    )
    return BinaryDag(m=m, edges=edges)


def assign_weights(dag: BinaryDag, weight_low: float, weight_high: float,
                   rng: np.random.Generator) -> Tensor:
    """Edge weights uniform on ±[low, high]; non-edges exactly zero"""
    A = np.zeros((dag.m, dag.m))
    edges = sorted(dag.edges)
    if not edges:
        return A
    magnitudes = rng.uniform(weight_low, weight_high, size=len(edges))
    signs = rng.choice(np.array([-1.0, 1.0]), size=len(edges))
    rows, cols = zip(*edges)
    A[list(rows), list(cols)] = signs * magnitudes
    return A


# =============================================================================
# CONTINUOUS SEMS
# =============================================================================

def _sem_chunk(A: Tensor, order: Sequence[int], variant: SemVariant, rows: int,
               noise_std: float, seed: int, transfer: TransferKind) -> np.ndarray:
    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, noise_std, size=(rows, A.shape[0]))
    X = np.zeros_like(noise)
    h = TRANSFERS[transfer]
    for j in order:
        col = A[:, j]
        if variant is SemVariant.LINEAR:
            X[:, j] = X @ col + noise[:, j]
        elif variant is SemVariant.NONLINEAR1:
            X[:, j] = h(X) @ col + noise[:, j]
        else:
            X[:, j] = (2.0 * np.sin((X + 0.5) @ col) + np.cos(X + 0.5) @ col
                       + noise[:, j])
    return X


def sample_sem(A, variant: SemVariant, n: int, noise_std: float, rng: np.random.Generator,
               transfer: TransferKind = TransferKind.COS_PLUS_ONE,
               workers: int = SynthConfig.MAX_WORKERS) -> np.ndarray:
    """n samples in topological order; x_j driven by column j of A plus Gaussian noise"""
    A = as_adjacency(A)
    variant = SemVariant(variant)
    m = A.shape[0]
    support = threshold_graph(A, 0.0) | {(i, i) for i in range(m) if A[i, i] != 0}
    if any(i == j for i, j in support) or not is_dag(support, m):
        raise GraphFormatError(
            "support of A is cyclic; SEM sampling needs a DAG",
            ["Threshold and project the learned graph before simulating"],
        )
    if noise_std < 0:
        raise ValueError(f"noise_std must be nonnegative, got {noise_std}")
    order = topological_order(support, m)

    chunk = SynthConfig.CHUNK_SIZE
    sizes = [min(chunk, n - start) for start in range(0, n, chunk)]
    seeds = rng.integers(0, 2 ** 63 - 1, size=len(sizes))
    if not sizes:
        return np.zeros((0, m))

    def run(k: int) -> np.ndarray:
        return _sem_chunk(A, order, variant, sizes[k], noise_std, int(seeds[k]), transfer)

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        parts = list(pool.map(run, range(len(sizes))))
    X = np.vstack(parts)
    logger.debug(f"sampled {variant.value} SEM: n={n}, m={m}, chunks={len(sizes)}")
    return X


def simulate_dataset(spec: SemSpec, n: int = SynthConfig.DEFAULT_SAMPLES) -> SyntheticDataset:
    """Graph, weights and data from a SemSpec, using one seeded stream"""
    rng = make_rng(spec.seed)
    dag = sample_er_dag(spec.m, spec.expected_degree, rng)
    A = assign_weights(dag, spec.weight_low, spec.weight_high, rng)
    X = sample_sem(A, spec.variant, n, spec.noise_std, rng, transfer=spec.transfer)
    logger.info(f"Simulated {spec.variant.value} dataset: m={spec.m}, n={n}, "
                f"edges={dag.num_edges}, seed={spec.seed}")
    return SyntheticDataset(dag=dag, weights=A, data=X)


# =============================================================================
# DISCRETE BAYESIAN NETWORKS
# =============================================================================

def random_discrete_bn(dag: BinaryDag, cardinality: int, rng: np.random.Generator,
                       concentration: float = 1.0) -> DiscreteBnSpec:
    """Dirichlet(concentration) CPT rows for every parent configuration"""
    cards = [int(cardinality)] * dag.m
    cpts = []
    for j in range(dag.m):
        rows = int(np.prod([cards[p] for p in dag.parents(j)]))
        cpts.append(rng.dirichlet(np.full(cards[j], concentration), size=rows))
    return DiscreteBnSpec(dag=dag, cardinalities=cards, cpts=cpts)


def sample_discrete_bn(spec: DiscreteBnSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    """Ancestral sampling; returns an n x m matrix of integer codes"""
    m = spec.dag.m
    codes = np.zeros((n, m), dtype=np.int64)
    for j in topological_order(spec.dag.edges, m):
        parents = spec.dag.parents(j)
        row = np.zeros(n, dtype=np.int64)
        for p in parents:
            row = row * spec.cardinalities[p] + codes[:, p]
        cum = np.cumsum(spec.cpts[j], axis=1)
        cum[:, -1] = 1.0
        u = rng.random(n)
        picked = (u[:, None] >= cum[row]).sum(axis=1)
        codes[:, j] = np.minimum(picked, spec.cardinalities[j] - 1)
    return codes


def simulate_discrete_dataset(spec: DiscreteSimSpec, n: int = SynthConfig.DEFAULT_SAMPLES):
    """(DiscreteBnSpec, codes) from a DiscreteSimSpec"""
    rng = make_rng(spec.seed)
    dag = sample_er_dag(spec.m, spec.expected_degree, rng)
    bn = random_discrete_bn(dag, spec.cardinality, rng, spec.concentration)
    codes = sample_discrete_bn(bn, n, rng)
    logger.info(f"Simulated discrete BN dataset: m={spec.m}, n={n}, "
                f"edges={dag.num_edges}, seed={spec.seed}")
    return bn, codes
