"""
DAG-WGAN Studio - Graph Tools
=============================
Adjacency-matrix utilities for structure learning.

Features:
- Acyclicity function h(A) = tr[(I + alpha A∘A)^m] - m (value, expression, gradient)
- Edge thresholding of a learned weighted adjacency
- DAG verification and topological order (networkx)
- Structural Hamming Distance (reversal counts 1)
"""

import logging
import os
from dataclasses import dataclass
from typing import FrozenSet, Iterable, List, Optional, Tuple

import networkx as nx
import numpy as np

from backend.autodiff import evaluate, gradient, ops
from backend.autodiff.models import Expression, Tensor, as_tensor
from backend.errors import AcyclicityOverflowError, GraphFormatError, NonFiniteError

logger = logging.getLogger("graph-tools")

Edge = Tuple[int, int]
EdgeSet = FrozenSet[Edge]


# =============================================================================
# CONFIGURATION
# =============================================================================

class GraphConfig:
    """Graph evaluation defaults"""
    EDGE_THRESHOLD = float(os.getenv("DAGWGAN_EDGE_THRESHOLD", "0.3"))


# =============================================================================
# DATA MODELS
# =============================================================================

@dataclass(frozen=True)
class AcyclicityConfig:
    """alpha scales A∘A inside the matrix power; None means 1/m"""
    alpha: Optional[float] = None

    def __post_init__(self):
        if self.alpha is not None and not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")

    def resolve(self, m: int) -> float:
        return self.alpha if self.alpha is not None else 1.0 / m


@dataclass(frozen=True)
class BinaryDag:
    """Unweighted acyclic graph over nodes 0..m-1"""
    m: int
    edges: EdgeSet

    def __post_init__(self):
        object.__setattr__(self, "edges", frozenset((int(i), int(j)) for i, j in self.edges))
        _check_indices(self.edges, self.m)
        loops = sorted(e for e in self.edges if e[0] == e[1])
        if loops:
            raise GraphFormatError(f"self-loop(s) {loops} in a DAG")
        if not is_dag(self.edges, self.m):
            raise GraphFormatError("edge set contains a directed cycle")

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def parents(self, j: int) -> List[int]:
        return sorted(i for i, k in self.edges if k == j)

    def adjacency(self) -> Tensor:
        out = np.zeros((self.m, self.m))
        for i, j in self.edges:
            out[i, j] = 1.0
        return out

    def to_networkx(self) -> nx.DiGraph:
        return _digraph(self.edges, self.m)


def as_adjacency(A, name: str = "A") -> Tensor:
    arr = as_tensor(A, name)
    if arr.shape[0] != arr.shape[1]:
        raise GraphFormatError(f"{name} must be square, got {arr.shape}")
    return arr


# =============================================================================
# ACYCLICITY
# =============================================================================

def acyclicity_expr(A: Expression, alpha: float) -> Expression:
    """Expression for tr[(I + alpha A∘A)^m] - m"""
    m = A.shape[0]
    inner = ops.identity(m) + (A * A) * alpha
    return ops.trace(ops.matrix_power(inner, m)) - ops.constant([[float(m)]])


def acyclicity_h(A, cfg: Optional[AcyclicityConfig] = None) -> float:
    """Zero exactly when the support of A is acyclic; nonnegative otherwise"""
    A = as_adjacency(A)
    m = A.shape[0]
    alpha = (cfg or AcyclicityConfig()).resolve(m)
    A_var = ops.variable("A", A.shape)
    try:
        return float(evaluate(acyclicity_expr(A_var, alpha), {"A": A})[0, 0])
    except NonFiniteError as e:
        raise AcyclicityOverflowError(
            f"acyclicity power overflowed for m={m}, alpha={alpha:g}",
            [f"Lower alpha below {alpha:g}", "Rescale A toward smaller weights"],
        ) from e


def acyclicity_grad(A, cfg: Optional[AcyclicityConfig] = None) -> Tensor:
    A = as_adjacency(A)
    alpha = (cfg or AcyclicityConfig()).resolve(A.shape[0])
    A_var = ops.variable("A", A.shape)
    return gradient(acyclicity_expr(A_var, alpha), [A_var], {"A": A})[0]


# =============================================================================
# EDGE SETS
# =============================================================================

def _check_indices(edges: Iterable[Edge], m: int):
    for i, j in edges:
        if not (0 <= i < m and 0 <= j < m):
            raise GraphFormatError(
                f"edge ({i}, {j}) is out of range for {m} nodes",
                ["Node indices are 0-based", "Check the declared node count"],
            )


def _digraph(edges: Iterable[Edge], m: int) -> nx.DiGraph:
    g = nx.DiGraph()
    g.add_nodes_from(range(m))
    g.add_edges_from(edges)
    return g


def threshold_graph(A, tau: float = GraphConfig.EDGE_THRESHOLD) -> EdgeSet:
    """Edges (i, j), i != j, with |A[i][j]| > tau (possibly cyclic)"""
    if tau < 0:
        raise ValueError(f"tau must be nonnegative, got {tau}")
    A = as_adjacency(A)
    mask = np.abs(A) > tau
    np.fill_diagonal(mask, False)
    return frozenset((int(i), int(j)) for i, j in zip(*np.nonzero(mask)))


def finalize_adjacency(A) -> Tensor:
    """Copy of A with the diagonal hard-zeroed before evaluation"""
    out = as_adjacency(A).copy()
    np.fill_diagonal(out, 0.0)
    return out


def is_dag(edges: Iterable[Edge], m: int) -> bool:
    edges = list(edges)
    _check_indices(edges, m)
    return nx.is_directed_acyclic_graph(_digraph(edges, m))


def topological_order(edges: Iterable[Edge], m: int) -> List[int]:
    edges = list(edges)
    _check_indices(edges, m)
    try:
        return list(nx.lexicographical_topological_sort(_digraph(edges, m)))
    except nx.NetworkXUnfeasible as e:
        raise GraphFormatError("graph has a directed cycle; no topological order") from e


def to_binary_dag(edges: Iterable[Edge], m: int) -> BinaryDag:
    return BinaryDag(m=m, edges=frozenset(edges))


# =============================================================================
# STRUCTURAL HAMMING DISTANCE
# =============================================================================

def _pair_state(edges: EdgeSet, i: int, j: int) -> int:
    """0 absent, 1 i->j, 2 j->i, 3 both directions"""
    return (1 if (i, j) in edges else 0) | (2 if (j, i) in edges else 0)


def shd(g1: Iterable[Edge], g2: Iterable[Edge], m: int) -> int:
    """+1 per pair present in exactly one graph, +1 per pair oriented differently"""
    g1, g2 = frozenset(g1), frozenset(g2)
    _check_indices(g1, m)
    _check_indices(g2, m)
    pairs = {(min(i, j), max(i, j)) for i, j in g1 | g2 if i != j}
    distance = 0
    for i, j in pairs:
        if _pair_state(g1, i, j) != _pair_state(g2, i, j):
            distance += 1
    return distance
