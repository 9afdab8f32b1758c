"""
DAG-WGAN Studio - Test Configuration
====================================
Pytest configuration and shared fixtures.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent.parent))


# =============================================================================
# PYTEST CONFIGURATION
# =============================================================================

def pytest_configure(config):
    """Configure pytest"""
    config.addinivalue_line("markers", "slow: marks tests as slow (deselect with '-m \"not slow\"')")
    config.addinivalue_line("markers", "integration: marks tests as integration tests")


# =============================================================================
# ENVIRONMENT FIXTURES
# =============================================================================

@pytest.fixture(autouse=True)
def setup_test_env(tmp_path, monkeypatch):
    """Point the default output directory at a temp dir"""
    out = tmp_path / "outputs"
    out.mkdir(exist_ok=True)
    monkeypatch.setenv("DAGWGAN_OUTPUT_DIR", str(out))
    return out


@pytest.fixture
def rng():
    """Seeded generator"""
    return np.random.default_rng(1234)


# =============================================================================
# API CLIENT FIXTURES
# =============================================================================

@pytest.fixture
def test_client():
    """Create FastAPI test client"""
    from fastapi.testclient import TestClient
    from backend.api.main import app

    return TestClient(app)


# =============================================================================
# SAMPLE DATA FIXTURES
# =============================================================================

@pytest.fixture
def chain_weights():
    """3-node chain 0 -> 1 -> 2 with weights 1.5"""
    A = np.zeros((3, 3))
    A[0, 1] = 1.5
    A[1, 2] = 1.5
    return A


@pytest.fixture
def chain_data(chain_weights):
    """n=1000 linear-SEM samples from the 3-node chain"""
    from backend.services.sem_synth_service import SemVariant, sample_sem

    return sample_sem(chain_weights, SemVariant.LINEAR, 1000, 1.0, np.random.default_rng(7))


@pytest.fixture
def tiny_train_config():
    """Few epochs, small networks; exercises every code path quickly"""
    from backend.services.trainer import TrainConfig

    return TrainConfig(
        epochs_per_outer=2,
        max_outer_iters=2,
        n_critic=1,
        batch_size=20,
        pac=5,
        ae_hidden_dims=[4],
        critic_hidden_dims=[8],
        dropout_p=0.0,
        seed=0,
    )


@pytest.fixture
def continuous_benchmark(tmp_path):
    """Small linear benchmark written to disk; returns the manifest path"""
    from backend.services.dataset_service import write_continuous_benchmark
    from backend.services.sem_synth_service import SemSpec

    spec = SemSpec(m=4, expected_degree=1.5, seed=3)
    return write_continuous_benchmark(tmp_path / "bench", spec, 60)


@pytest.fixture
def smoke_config_file(tmp_path):
    """Flat YAML config matching tiny_train_config"""
    path = tmp_path / "smoke.yaml"
    path.write_text(
        "epochs_per_outer: 2\n"
        "max_outer_iters: 2\n"
        "n_critic: 1\n"
        "batch_size: 20\n"
        "pac: 5\n"
        "ae_hidden_dims: [4]\n"
        "critic_hidden_dims: [8]\n"
        "dropout_p: 0.0\n"
    )
    return path
