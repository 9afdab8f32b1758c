"""
DAG-WGAN Studio - Data I/O Tests
================================
CSV tables, one-hot encoding, graph files, manifests, configs and checkpoints.

Run: pytest tests/test_data_io.py -v
"""

import json

import numpy as np
import pandas as pd
import pytest

from backend.errors import ConfigError, DataFormatError, GraphFormatError
from backend.services.dataset_service import (
    Checkpoint,
    DatasetManifest,
    load_checkpoint,
    load_codes,
    load_continuous,
    load_graph,
    load_manifest,
    load_manifest_data,
    load_train_config,
    one_hot_decode,
    one_hot_encode,
    output_dir,
    probability_columns,
    save_checkpoint,
    save_continuous,
    save_graph,
    save_manifest,
    training_artifacts,
    write_discrete_benchmark,
    write_history,
    write_training_outputs,
)
from backend.services.sem_synth_service import DiscreteSimSpec
from backend.services.trainer import HISTORY_COLUMNS, TrainConfig, get_training_service


# =============================================================================
# CSV TABLES
# =============================================================================

class TestCsv:
    """Tests for continuous and code tables"""

    def test_load_continuous(self, tmp_path):
        """Test a header row and two data rows"""
        path = tmp_path / "d.csv"
        path.write_text("a,b\n1,2\n3,4\n")
        np.testing.assert_array_equal(load_continuous(path), [[1.0, 2.0], [3.0, 4.0]])

    def test_short_row(self, tmp_path):
        """Test a row with fewer fields names its line"""
        path = tmp_path / "d.csv"
        path.write_text("a,b\n1,2\n3\n")
        with pytest.raises(DataFormatError, match="line 3"):
            load_continuous(path)

    def test_long_row(self, tmp_path):
        """Test a row with more fields than the header"""
        path = tmp_path / "d.csv"
        path.write_text("a,b\n1,2\n3,4,5\n")
        with pytest.raises(DataFormatError):
            load_continuous(path)

    def test_non_numeric_cell(self, tmp_path):
        """Test the offending line and column are reported"""
        path = tmp_path / "d.csv"
        path.write_text("x0,x1,x2\n1,2,3\n4,5,6\n7,8,abc\n")
        with pytest.raises(DataFormatError, match=r"line 4, column 3 \('x2'\)"):
            load_continuous(path)

    def test_empty_file(self, tmp_path):
        """Test an empty file is rejected"""
        path = tmp_path / "d.csv"
        path.write_text("")
        with pytest.raises(DataFormatError, match="empty"):
            load_continuous(path)

    def test_header_only(self, tmp_path):
        """Test a header without rows"""
        path = tmp_path / "d.csv"
        path.write_text("a,b\n")
        with pytest.raises(DataFormatError, match="no data rows"):
            load_continuous(path)

    def test_missing_file(self, tmp_path):
        """Test a missing path"""
        with pytest.raises(DataFormatError, match="no such file"):
            load_continuous(tmp_path / "nope.csv")

    def test_save_is_lossless(self, tmp_path, rng):
        """Test 17 significant digits survive a write"""
        data = rng.normal(size=(4, 3))
        np.testing.assert_array_equal(load_continuous(save_continuous(tmp_path / "x.csv", data)),
                                      data)

    def test_codes_must_be_integers(self, tmp_path):
        """Test fractional category codes are rejected"""
        path = tmp_path / "c.csv"
        path.write_text("a,b\n0,1\n1,0.5\n")
        with pytest.raises(DataFormatError, match="category code"):
            load_codes(path)


# =============================================================================
# ONE-HOT
# =============================================================================

class TestOneHot:
    """Tests for padded one-hot blocks"""

    def test_encode_padded(self):
        """Test codes [0, 2] with cardinalities [2, 3]"""
        out = one_hot_encode([[0, 2]], [2, 3])
        np.testing.assert_array_equal(out, [[1, 0, 0, 0, 0, 1]])

    def test_code_out_of_range(self):
        """Test a code at or above the cardinality"""
        with pytest.raises(DataFormatError, match="out of range"):
            one_hot_encode([[0, 5]], [2, 3])

    def test_cardinality_count(self):
        """Test one cardinality per column"""
        with pytest.raises(DataFormatError):
            one_hot_encode([[0, 1]], [2])

    def test_decode_inverts_encode(self, rng):
        """Test argmax decoding recovers the codes"""
        cards = [2, 4, 3]
        codes = np.column_stack([rng.integers(0, c, size=20) for c in cards])
        np.testing.assert_array_equal(one_hot_decode(one_hot_encode(codes, cards), cards), codes)

    def test_probability_columns(self):
        """Test binary nodes give one column, larger nodes one per non-zero category"""
        probs = np.array([[0.3, 0.7, 0.0, 0.2, 0.5, 0.3]])
        cols, names = probability_columns(probs, [2, 3])
        assert names == ["x0", "x1_1", "x1_2"]
        np.testing.assert_allclose(cols, [[0.7, 0.5, 0.3]])

    def test_load_discrete(self, tmp_path):
        """Test a codes CSV loads straight to one-hot rows"""
        path = tmp_path / "codes.csv"
        path.write_text("a,b\n1,0\n0,2\n")
        from backend.services.dataset_service import load_discrete
        np.testing.assert_array_equal(load_discrete(path, [2, 3]),
                                      [[0, 1, 0, 1, 0, 0], [1, 0, 0, 0, 0, 1]])


# =============================================================================
# GRAPH FILES
# =============================================================================

class TestGraphFiles:
    """Tests for edge lists and adjacency CSVs"""

    def test_edge_list(self, tmp_path):
        """Test 'i j weight' lines"""
        path = tmp_path / "g.txt"
        path.write_text("0 1 1.5\n")
        graph = load_graph(path)
        assert graph.m == 2
        assert graph.weights[0, 1] == 1.5
        assert graph.edges == {(0, 1)}

    def test_declared_node_count(self, tmp_path):
        """Test '# nodes=m' pads isolated nodes"""
        path = tmp_path / "g.txt"
        path.write_text("# nodes=4\n0 1\n")
        graph = load_graph(path)
        assert graph.m == 4
        assert graph.weights[0, 1] == 1.0

    def test_zero_adjacency(self, tmp_path):
        """Test an all-zero adjacency CSV has no edges"""
        path = tmp_path / "a.csv"
        path.write_text("0,0,0\n0,0,0\n0,0,0\n")
        graph = load_graph(path)
        assert graph.m == 3
        assert graph.edges == frozenset()

    def test_self_loop(self, tmp_path):
        """Test self-loops are rejected in DAG files"""
        path = tmp_path / "g.txt"
        path.write_text("0 0 1.0\n")
        with pytest.raises(GraphFormatError, match="self-loop"):
            load_graph(path)

    def test_cycle(self, tmp_path):
        """Test cyclic edge lists are rejected unless dag=False"""
        path = tmp_path / "g.txt"
        path.write_text("0 1\n1 0\n")
        with pytest.raises(GraphFormatError, match="cycle"):
            load_graph(path)
        assert load_graph(path, dag=False).edges == {(0, 1), (1, 0)}

    def test_malformed_line(self, tmp_path):
        """Test the line number of a bad edge"""
        path = tmp_path / "g.txt"
        path.write_text("0 1\n1 x\n")
        with pytest.raises(GraphFormatError, match=":2:"):
            load_graph(path)

    def test_non_square_adjacency(self, tmp_path):
        """Test adjacency CSVs must be square"""
        path = tmp_path / "a.csv"
        path.write_text("0,1,0\n0,0,0\n")
        with pytest.raises(GraphFormatError, match="square"):
            load_graph(path)

    def test_unknown_format(self, tmp_path):
        """Test only the two formats are accepted"""
        with pytest.raises(GraphFormatError):
            save_graph(tmp_path / "g.bin", np.zeros((2, 2)), "graphml")

    @pytest.mark.parametrize("fmt,name", [("edge-list", "g.txt"), ("adjacency-csv", "g.csv")])
    def test_weights_preserved(self, tmp_path, fmt, name):
        """Test weights are written with full precision"""
        A = np.array([[0.0, 1.0 / 3.0, 0.0], [0.0, 0.0, -2.5], [0.0, 0.0, 0.0]])
        graph = load_graph(save_graph(tmp_path / name, A, fmt), fmt)
        np.testing.assert_array_equal(graph.weights, A)


# =============================================================================
# MANIFESTS & CONFIG
# =============================================================================

class TestManifests:
    """Tests for dataset manifests and benchmarks on disk"""

    def test_continuous_benchmark(self, continuous_benchmark):
        """Test the written benchmark loads with its truth graph"""
        manifest, data = load_manifest_data(continuous_benchmark)
        assert data.shape == (60, 4)
        assert manifest.sem_spec.seed == 3
        truth = load_graph(manifest.resolve(continuous_benchmark.parent,
                                            manifest.truth_graph_path))
        assert truth.m == 4

    def test_discrete_benchmark(self, tmp_path):
        """Test discrete manifests yield one-hot data"""
        spec = DiscreteSimSpec(m=3, cardinality=3, expected_degree=1.0, seed=1)
        manifest, data = load_manifest_data(write_discrete_benchmark(tmp_path / "d", spec, 40))
        assert manifest.cardinalities == [3, 3, 3]
        assert data.shape == (40, 9)
        np.testing.assert_array_equal(data.reshape(40, 3, 3).sum(axis=2), 1.0)

    def test_missing_referenced_file(self, tmp_path):
        """Test manifests must point at existing files"""
        path = save_manifest(tmp_path / "manifest.json",
                             DatasetManifest(data_path="nope.csv", num_nodes=2, num_samples=3))
        with pytest.raises(DataFormatError, match="does not exist"):
            load_manifest(path)

    def test_invalid_manifest(self, tmp_path):
        """Test schema violations are reported"""
        path = tmp_path / "manifest.json"
        path.write_text(json.dumps({"data_path": "d.csv", "num_nodes": 0, "num_samples": 3}))
        with pytest.raises(DataFormatError, match="invalid manifest"):
            load_manifest(path)

    def test_declared_shape_checked(self, tmp_path):
        """Test data must match the declared sample and node counts"""
        save_continuous(tmp_path / "d.csv", np.zeros((5, 2)))
        path = save_manifest(tmp_path / "manifest.json",
                             DatasetManifest(data_path="d.csv", num_nodes=3, num_samples=5))
        with pytest.raises(DataFormatError, match="declares"):
            load_manifest_data(path)

    def test_output_dir_from_env(self, setup_test_env):
        """Test the default output directory follows DAGWGAN_OUTPUT_DIR"""
        assert output_dir() == setup_test_env
        assert str(output_dir("elsewhere")) == "elsewhere"


class TestTrainConfigFiles:
    """Tests for flat YAML training configs"""

    def test_load(self, smoke_config_file):
        """Test keys override defaults"""
        cfg = load_train_config(smoke_config_file)
        assert cfg.epochs_per_outer == 2
        assert cfg.critic_hidden_dims == [8]
        assert cfg.lr == TrainConfig().lr

    def test_no_file_means_defaults(self):
        """Test None gives the defaults"""
        assert load_train_config(None) == TrainConfig()

    def test_nested_sections_rejected(self, tmp_path):
        """Test configs are flat"""
        path = tmp_path / "c.yaml"
        path.write_text("critic:\n  pac: 4\n")
        with pytest.raises(ConfigError, match="nested"):
            load_train_config(path)

    def test_unknown_key_rejected(self, tmp_path):
        """Test misspelt keys fail with the key name"""
        path = tmp_path / "c.yaml"
        path.write_text("epochz: 3\n")
        with pytest.raises(ConfigError) as exc:
            load_train_config(path)
        assert any("epochz" in s for s in exc.value.suggestions)

    def test_not_a_mapping(self, tmp_path):
        """Test a YAML list is rejected"""
        path = tmp_path / "c.yaml"
        path.write_text("- 1\n- 2\n")
        with pytest.raises(ConfigError, match="mapping"):
            load_train_config(path)

    def test_shipped_configs_load(self):
        """Test the configs under config/ are valid"""
        from pathlib import Path

        root = Path(__file__).parent.parent / "config"
        for path in sorted(root.glob("*.yaml")):
            load_train_config(path)


# =============================================================================
# CHECKPOINTS & TRAINING OUTPUTS
# =============================================================================

class TestCheckpoints:
    """Tests for .npz checkpoints"""

    def test_round_trip_is_bit_exact(self, tmp_path, chain_data, tiny_train_config):
        """Test parameters, optimizer state and metadata survive save/load"""
        result = get_training_service().train(chain_data[:100], tiny_train_config, 3)
        paths = write_training_outputs(tmp_path / "run.npz", result, tiny_train_config)
        ckpt = load_checkpoint(paths["checkpoint"])
        for name, value in result.model.parameters().items():
            np.testing.assert_array_equal(ckpt.model.parameters()[name], value)
        for name, value in result.critic.named("critic").items():
            np.testing.assert_array_equal(ckpt.critic.named("critic")[name], value)
        assert ckpt.train_config == tiny_train_config
        assert ckpt.auglag == result.auglag
        assert ckpt.ae_adam.step == result.ae_adam.step
        np.testing.assert_array_equal(ckpt.ae_adam.first_moment["A"],
                                      result.ae_adam.first_moment["A"])
        assert ckpt.converged == result.converged

    def test_training_outputs(self, tmp_path, chain_data, tiny_train_config):
        """Test history, graph and adjacency files sit next to the checkpoint"""
        result = get_training_service().train(chain_data[:100], tiny_train_config, 3)
        paths = write_training_outputs(tmp_path / "run.npz", result, tiny_train_config)
        assert paths == training_artifacts(tmp_path / "run.npz")
        history = pd.read_csv(paths["history"])
        assert list(history.columns) == HISTORY_COLUMNS
        assert len(history) == len(result.history)
        assert load_graph(paths["graph"], dag=False).edges == result.graph
        np.testing.assert_array_equal(load_graph(paths["adjacency"], dag=False).weights,
                                      result.learned_A)

    def test_model_only_checkpoint(self, tmp_path, rng):
        """Test a checkpoint without critic or optimizer state"""
        from backend.services.autoencoder_service import AeConfig, ScmAutoencoder

        model = ScmAutoencoder.initialize(AeConfig(num_nodes=3, hidden_dims=[4]), rng)
        ckpt = load_checkpoint(save_checkpoint(tmp_path / "m.npz", Checkpoint(model=model)))
        assert ckpt.critic is None
        assert ckpt.ae_adam is None
        np.testing.assert_array_equal(ckpt.model.f1.weights[0], model.f1.weights[0])

    def test_not_a_checkpoint(self, tmp_path):
        """Test arbitrary files are rejected"""
        path = tmp_path / "x.npz"
        path.write_bytes(b"not a zip")
        with pytest.raises(DataFormatError):
            load_checkpoint(path)

    def test_history_columns(self, tmp_path):
        """Test an empty history still has its header"""
        df = pd.read_csv(write_history(tmp_path / "h.csv", []))
        assert list(df.columns) == HISTORY_COLUMNS
