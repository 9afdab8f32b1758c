"""
DAG-WGAN Studio - Graph Tools Tests
===================================
Acyclicity function, thresholding, DAG checks and SHD.

Run: pytest tests/test_graph_tools.py -v
"""

import itertools

import numpy as np
import pytest

from backend.errors import GraphFormatError
from backend.services.graph_service import (
    AcyclicityConfig,
    BinaryDag,
    acyclicity_grad,
    acyclicity_h,
    finalize_adjacency,
    is_dag,
    shd,
    threshold_graph,
    to_binary_dag,
    topological_order,
)


# =============================================================================
# ACYCLICITY
# =============================================================================

class TestAcyclicity:
    """Tests for h(A) and its gradient"""

    def test_zero_matrix(self):
        """Test h(0) = 0"""
        assert acyclicity_h(np.zeros((4, 4))) == 0.0

    def test_two_cycle(self):
        """Test h of a 2-cycle with alpha = 1 is 2"""
        A = np.array([[0.0, 1.0], [1.0, 0.0]])
        assert acyclicity_h(A, AcyclicityConfig(alpha=1.0)) == pytest.approx(2.0)

    def test_upper_triangular_is_acyclic(self, rng):
        """Test strictly upper triangular weights give h = 0"""
        A = np.triu(rng.uniform(0.5, 2.0, size=(5, 5)), k=1)
        assert acyclicity_h(A) == pytest.approx(0.0, abs=1e-9)

    def test_self_loop_is_positive(self):
        """Test a weighted diagonal entry makes h positive"""
        A = np.zeros((3, 3))
        A[1, 1] = 0.5
        assert acyclicity_h(A) > 0

    def test_cycle_is_positive(self):
        """Test a 3-cycle has h > 0 for the default alpha"""
        A = np.zeros((3, 3))
        A[0, 1] = A[1, 2] = A[2, 0] = 1.0
        assert acyclicity_h(A) > 0

    def test_permuted_dags_are_acyclic(self):
        """Test h <= 1e-8 on 1000 relabelled weighted DAGs with 2 to 10 nodes"""
        gen = np.random.default_rng(2024)
        for _ in range(1000):
            m = int(gen.integers(2, 11))
            mask = np.triu(gen.random((m, m)) < 0.5, k=1)
            W = gen.uniform(0.1, 2.0, size=(m, m)) * gen.choice([-1.0, 1.0], size=(m, m))
            perm = gen.permutation(m)
            A = (W * mask)[perm][:, perm]
            assert acyclicity_h(A) <= 1e-8

    def test_planted_cycles_are_detected(self):
        """Test h > 1e-6 on 1000 relabelled dense DAGs with one back edge added"""
        gen = np.random.default_rng(2025)
        for _ in range(1000):
            m = int(gen.integers(2, 11))
            W = gen.uniform(0.1, 2.0, size=(m, m)) * gen.choice([-1.0, 1.0], size=(m, m))
            A = np.triu(W, k=1)
            i, j = sorted(gen.choice(m, size=2, replace=False))
            # A[i, j] is already nonzero, so this closes a 2-cycle
            A[j, i] = gen.uniform(0.1, 2.0) * gen.choice([-1.0, 1.0])
            perm = gen.permutation(m)
            assert acyclicity_h(A[perm][:, perm]) > 1e-6

    def test_gradient_zero_at_origin(self):
        """Test grad h(0) = 0"""
        np.testing.assert_array_equal(acyclicity_grad(np.zeros((3, 3))), np.zeros((3, 3)))

    def test_gradient_matches_closed_form(self, rng):
        """Test grad h = 2 alpha m ((I + alpha A∘A)^(m-1))^T ∘ A"""
        A = rng.uniform(-0.5, 0.5, size=(4, 4))
        alpha = 0.25
        m = 4
        inner = np.eye(m) + alpha * A * A
        expected = 2 * alpha * m * np.linalg.matrix_power(inner, m - 1).T * A
        np.testing.assert_allclose(acyclicity_grad(A, AcyclicityConfig(alpha)), expected,
                                   rtol=1e-10)

    def test_alpha_must_be_positive(self):
        """Test alpha <= 0 is rejected"""
        with pytest.raises(ValueError):
            AcyclicityConfig(alpha=0.0)

    def test_non_square_rejected(self):
        """Test A must be square"""
        with pytest.raises(GraphFormatError):
            acyclicity_h(np.zeros((2, 3)))


# =============================================================================
# THRESHOLDING
# =============================================================================

class TestThreshold:
    """Tests for edge extraction"""

    A = np.array([
        [0.0, 0.5, 0.0],
        [0.0, 0.0, 0.29],
        [0.0, 0.0, 0.0],
    ])

    def test_above_threshold(self):
        """Test tau = 0.3 keeps only |0.5|"""
        assert threshold_graph(self.A, 0.3) == {(0, 1)}

    def test_threshold_is_strict(self):
        """Test an entry equal to tau is dropped"""
        assert threshold_graph(self.A, 0.5) == frozenset()

    def test_infinite_threshold(self):
        """Test tau = inf gives the empty graph"""
        assert threshold_graph(self.A, float("inf")) == frozenset()

    def test_negative_weights_use_magnitude(self):
        """Test |A[i][j]| is compared"""
        A = np.array([[0.0, -0.8], [0.0, 0.0]])
        assert threshold_graph(A, 0.3) == {(0, 1)}

    def test_diagonal_ignored(self):
        """Test self-loops are never emitted"""
        assert threshold_graph(np.eye(3) * 5, 0.3) == frozenset()

    def test_negative_tau_rejected(self):
        """Test tau < 0 is an error"""
        with pytest.raises(ValueError):
            threshold_graph(self.A, -0.1)

    def test_finalize_zeroes_diagonal(self):
        """Test the final adjacency has no self weight and A is untouched"""
        A = np.full((2, 2), 0.7)
        out = finalize_adjacency(A)
        np.testing.assert_array_equal(np.diag(out), [0.0, 0.0])
        assert A[0, 0] == 0.7


# =============================================================================
# DAG CHECKS
# =============================================================================

class TestDagChecks:
    """Tests for acyclicity of edge sets"""

    def test_chain_is_dag(self):
        """Test 0 -> 1 -> 2"""
        assert is_dag({(0, 1), (1, 2)}, 3)

    def test_cycle_is_not_dag(self):
        """Test 0 -> 1 -> 2 -> 0"""
        assert not is_dag({(0, 1), (1, 2), (2, 0)}, 3)

    def test_empty_graph_is_dag(self):
        """Test no edges"""
        assert is_dag(set(), 4)

    def test_topological_order_respects_edges(self):
        """Test parents come before children"""
        edges = {(2, 0), (0, 1), (3, 1)}
        order = topological_order(edges, 4)
        pos = {v: k for k, v in enumerate(order)}
        assert all(pos[i] < pos[j] for i, j in edges)
        assert sorted(order) == [0, 1, 2, 3]

    def test_topological_order_of_cycle(self):
        """Test a cyclic graph has no order"""
        with pytest.raises(GraphFormatError):
            topological_order({(0, 1), (1, 0)}, 2)

    def test_out_of_range_edge(self):
        """Test indices must lie in 0..m-1"""
        with pytest.raises(GraphFormatError, match="out of range"):
            is_dag({(0, 3)}, 3)

    def test_binary_dag_rejects_self_loop(self):
        """Test self-loops are invalid"""
        with pytest.raises(GraphFormatError, match="self-loop"):
            BinaryDag(m=2, edges={(1, 1)})

    def test_binary_dag_rejects_cycle(self):
        """Test cycles are invalid"""
        with pytest.raises(GraphFormatError, match="cycle"):
            to_binary_dag({(0, 1), (1, 0)}, 2)

    def test_binary_dag_adjacency_and_parents(self):
        """Test the binary adjacency and parent lists"""
        dag = to_binary_dag({(0, 2), (1, 2)}, 3)
        assert dag.num_edges == 2
        assert dag.parents(2) == [0, 1]
        assert dag.adjacency()[0, 2] == 1.0
        assert dag.to_networkx().number_of_nodes() == 3


# =============================================================================
# STRUCTURAL HAMMING DISTANCE
# =============================================================================

def _shd_oracle(g1, g2, m):
    """Count differing node pairs by enumeration"""
    distance = 0
    for i, j in itertools.combinations(range(m), 2):
        a = ((i, j) in g1, (j, i) in g1)
        b = ((i, j) in g2, (j, i) in g2)
        if any(a) != any(b) or (any(a) and a != b):
            distance += 1
    return distance


class TestShd:
    """Tests for Structural Hamming Distance"""

    def test_identical(self):
        """Test SHD(G, G) = 0"""
        g = {(0, 1), (1, 2)}
        assert shd(g, g, 3) == 0

    def test_reversal_counts_once(self):
        """Test one reversed edge gives 1"""
        assert shd({(0, 1)}, {(1, 0)}, 2) == 1

    def test_missing_edges(self):
        """Test two missing edges give 2"""
        assert shd({(0, 1), (1, 2)}, set(), 3) == 2

    def test_symmetric(self):
        """Test SHD(G1, G2) = SHD(G2, G1)"""
        g1 = {(0, 1), (2, 1), (0, 3)}
        g2 = {(1, 0), (2, 3)}
        assert shd(g1, g2, 4) == shd(g2, g1, 4)

    def test_matches_enumeration(self):
        """Test against pair-by-pair enumeration on 200 random DAG pairs"""
        gen = np.random.default_rng(99)
        for _ in range(200):
            m = int(gen.integers(2, 8))
            perm1, perm2 = gen.permutation(m), gen.permutation(m)
            g1 = {(int(perm1[i]), int(perm1[j])) for i, j in itertools.combinations(range(m), 2)
                  if gen.random() < 0.4}
            g2 = {(int(perm2[i]), int(perm2[j])) for i, j in itertools.combinations(range(m), 2)
                  if gen.random() < 0.4}
            assert shd(g1, g2, m) == _shd_oracle(g1, g2, m)

    def test_out_of_range(self):
        """Test edges must fit the declared node count"""
        with pytest.raises(GraphFormatError):
            shd({(0, 5)}, set(), 3)
