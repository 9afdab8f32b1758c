"""
DAG-WGAN Studio - Critic Tests
==============================
Packing, critic scores, the Wasserstein losses and the gradient penalty.

Run: pytest tests/test_critic.py -v
"""

import logging

import numpy as np
import pytest

from backend.autodiff.layers import MlpParams
from backend.errors import ShapeMismatchError
from backend.services.critic_service import (
    CriticConfig,
    critic_loss,
    critic_parameters,
    critic_score,
    estimate_wasserstein,
    generator_loss,
    interpolate,
    pack,
)


def _constant_critic(width: int, hidden: int, c: float) -> MlpParams:
    """Zero weights everywhere, output bias c"""
    return MlpParams(
        weights=[np.zeros((width, hidden)), np.zeros((hidden, 1))],
        biases=[np.zeros((1, hidden)), np.array([[c]])],
        activations=["leaky_relu", "identity"],
    )


def _sum_critic(width: int) -> MlpParams:
    """D(x) = sum of the packed row"""
    return MlpParams(weights=[np.ones((width, 1))], biases=[np.zeros((1, 1))],
                     activations=["identity"])


# =============================================================================
# PACKING
# =============================================================================

class TestPack:
    """Tests for grouping consecutive samples"""

    def test_even_split(self):
        """Test 4 samples with pac 2 give 2 packed rows"""
        batch = np.arange(8.0).reshape(4, 2)
        np.testing.assert_array_equal(pack(batch, 2), [[0, 1, 2, 3], [4, 5, 6, 7]])

    def test_trailing_samples_dropped(self, caplog):
        """Test 5 samples with pac 2 drop the last one with a warning"""
        batch = np.arange(5.0).reshape(5, 1)
        with caplog.at_level(logging.WARNING, logger="wgan-critic"):
            packed = pack(batch, 2)
        np.testing.assert_array_equal(packed, [[0, 1], [2, 3]])
        assert "dropping 1" in caplog.text

    def test_pac_one_is_identity(self, rng):
        """Test pac = 1 leaves the batch unchanged"""
        batch = rng.normal(size=(3, 4))
        np.testing.assert_array_equal(pack(batch, 1), batch)

    def test_three_dimensional_samples_flatten(self, rng):
        """Test (n, m, d) samples flatten node-major"""
        batch = rng.normal(size=(4, 3, 2))
        assert pack(batch, 2).shape == (2, 12)

    def test_empty_batch(self):
        """Test an empty batch cannot be packed"""
        with pytest.raises(ShapeMismatchError, match="empty"):
            pack(np.zeros((0, 3)), 2)

    def test_batch_smaller_than_pac(self):
        """Test fewer samples than pac"""
        with pytest.raises(ShapeMismatchError, match="smaller than pac"):
            pack(np.zeros((3, 2)), 4)


# =============================================================================
# SCORES
# =============================================================================

class TestCriticScore:
    """Tests for the critic forward pass"""

    def test_zero_weights_give_bias(self, rng):
        """Test all-zero weights score every row with the output bias"""
        params = _constant_critic(4, 8, 1.25)
        scores = critic_score(rng.normal(size=(5, 4)), params, CriticConfig(hidden_dims=[8]))
        np.testing.assert_array_equal(scores, np.full(5, 1.25))

    def test_linear_score(self):
        """Test D(x) = 1·x on x = [3, 4] is 7"""
        cfg = CriticConfig(pac=1, hidden_dims=[])
        assert critic_score([[3.0, 4.0]], _sum_critic(2), cfg)[0] == 7.0

    def test_dropout_off_ignores_masks(self, rng):
        """Test dropout_p = 0 makes the score independent of any masks"""
        cfg = CriticConfig(pac=2, hidden_dims=[6], dropout_p=0.0)
        params = critic_parameters(3, cfg, rng)
        x = rng.normal(size=(4, 6))
        masks = [np.zeros((4, 6))]
        np.testing.assert_array_equal(critic_score(x, params, cfg, masks),
                                      critic_score(x, params, cfg))

    def test_width_checked(self, rng):
        """Test the packed width must match the first layer"""
        cfg = CriticConfig(pac=2, hidden_dims=[4])
        params = critic_parameters(3, cfg, rng)
        with pytest.raises(ShapeMismatchError):
            critic_score(rng.normal(size=(2, 5)), params, cfg)

    def test_parameter_layout(self, rng):
        """Test input width pac * sample width and a scalar output"""
        cfg = CriticConfig(pac=5, hidden_dims=[16, 8])
        params = critic_parameters(4, cfg, rng)
        assert [w.shape for w in params.weights] == [(20, 16), (16, 8), (8, 1)]

    def test_dropout_masks(self, rng):
        """Test one 0/1 mask per hidden layer, keeping about 1 - p"""
        from backend.services.critic_service import sample_dropout_masks
        masks = sample_dropout_masks(200, [16, 8], 0.25, rng)
        assert [mk.shape for mk in masks] == [(200, 16), (200, 8)]
        assert set(np.unique(masks[0])) <= {0.0, 1.0}
        assert masks[0].mean() == pytest.approx(0.75, abs=0.05)


# =============================================================================
# LOSSES
# =============================================================================

class TestCriticLosses:
    """Tests for L_D, L_G and the Wasserstein estimate"""

    def test_constant_critic_loss_is_lambda(self, rng):
        """Test D ≡ c gives L_D = lambda (zero input gradient, penalty 1)"""
        cfg = CriticConfig(pac=2, hidden_dims=[5], gp_lambda=10.0)
        params = _constant_critic(6, 5, 3.0)
        real, fake = rng.normal(size=(4, 6)), rng.normal(size=(4, 6))
        assert critic_loss(real, fake, params, cfg, rng) == pytest.approx(10.0)

    def test_constant_critic_generator_loss(self, rng):
        """Test D ≡ c gives L_G = -c"""
        cfg = CriticConfig(pac=2, hidden_dims=[5])
        params = _constant_critic(6, 5, 3.0)
        assert generator_loss(rng.normal(size=(4, 6)), params, cfg) == pytest.approx(-3.0)

    def test_unit_norm_linear_critic_has_no_penalty(self, rng):
        """Test D(x) = w·x with ||w|| = 1 gives L_D = mean D(fake) - mean D(real)"""
        cfg = CriticConfig(pac=1, hidden_dims=[], gp_lambda=10.0)
        params = MlpParams(weights=[np.array([[0.6], [0.8]])], biases=[np.zeros((1, 1))],
                           activations=["identity"])
        real, fake = rng.normal(size=(6, 2)), rng.normal(size=(6, 2))
        expected = np.mean(fake @ [0.6, 0.8]) - np.mean(real @ [0.6, 0.8])
        assert critic_loss(real, fake, params, cfg, rng) == pytest.approx(expected, abs=1e-9)

    def test_loss_is_seeded(self, rng):
        """Test the same generator state gives the same loss with dropout on"""
        cfg = CriticConfig(pac=2, hidden_dims=[8], dropout_p=0.5, gp_use_dropout=True)
        params = critic_parameters(3, cfg, rng)
        real, fake = rng.normal(size=(4, 6)), rng.normal(size=(4, 6))
        a = critic_loss(real, fake, params, cfg, np.random.default_rng(5))
        b = critic_loss(real, fake, params, cfg, np.random.default_rng(5))
        assert a == b

    def test_mismatched_batches(self, rng):
        """Test real and fake packed batches must have equal shape"""
        cfg = CriticConfig(pac=1, hidden_dims=[])
        with pytest.raises(ShapeMismatchError):
            critic_loss(np.zeros((3, 2)), np.zeros((4, 2)), _sum_critic(2), cfg, rng)

    def test_wasserstein_orders_shifted_data(self):
        """Test a linear critic sees real data shifted by +2 as ~2 ahead"""
        gen = np.random.default_rng(17)
        real = gen.normal(2.0, 1.0, size=(4000, 1))
        fake = gen.normal(0.0, 1.0, size=(4000, 1))
        cfg = CriticConfig(pac=1, hidden_dims=[])
        estimate = estimate_wasserstein(real, fake, _sum_critic(1), cfg)
        assert estimate == pytest.approx(2.0, abs=0.1)

    def test_interpolate(self):
        """Test eps = 1 gives real and eps = 0 gives fake"""
        real, fake = np.ones((2, 3)), np.zeros((2, 3))
        out = interpolate(real, fake, np.array([1.0, 0.0]))
        np.testing.assert_array_equal(out, [[1, 1, 1], [0, 0, 0]])


# =============================================================================
# TRAINING
# =============================================================================

def _fit_critic(shift: float, seed: int, steps: int = 150, rows: int = 256):
    """Adam on L_D with real ~ N(shift, 1) and fake ~ N(0, 1)"""
    from backend.autodiff import gradient
    from backend.services.critic_service import critic_bindings, critic_objective, \
        critic_step_bindings
    from backend.services.trainer import AdamState, adam_step

    gen = np.random.default_rng(seed)
    cfg = CriticConfig(pac=1, hidden_dims=[16], dropout_p=0.0)
    params = critic_parameters(1, cfg, gen)
    obj = critic_objective(rows, 1, params, cfg)
    wrt = [v for layer in obj.layers for v in layer]
    state = AdamState.fresh(critic_bindings(params), lr=1e-2)
    for _ in range(steps):
        real = gen.normal(shift, 1.0, size=(rows, 1))
        fake = gen.normal(0.0, 1.0, size=(rows, 1))
        bindings = {**critic_bindings(params), **critic_step_bindings(obj, real, fake, cfg, gen)}
        grads = gradient(obj.loss, wrt, bindings)
        new, state = adam_step(critic_bindings(params),
                               {v.name: g for v, g in zip(wrt, grads)}, state)
        params = params.with_values("critic", new)
    return params, cfg


class TestCriticTraining:
    """Tests for critics fitted with Adam"""

    def test_loss_gradient_matches_finite_differences(self, rng):
        """Test d L_D / d weights, penalty included, with dropout off"""
        from backend.autodiff import check_gradients
        from backend.services.critic_service import critic_bindings, critic_objective, \
            critic_step_bindings

        cfg = CriticConfig(pac=2, hidden_dims=[6, 4], dropout_p=0.0)
        params = critic_parameters(3, cfg, rng)
        obj = critic_objective(4, 6, params, cfg)
        real, fake = rng.normal(size=(4, 6)), rng.normal(1.0, 1.0, size=(4, 6))
        bindings = {**critic_bindings(params),
                    **critic_step_bindings(obj, real, fake, cfg, np.random.default_rng(3))}
        report = check_gradients(obj.loss, [v for layer in obj.layers for v in layer], bindings)
        assert max(report.values()) < 1e-3

    @pytest.mark.slow
    def test_wasserstein_estimate_orders_distances(self):
        """Test a trained critic ranks N(3,1) farther from N(0,1) than N(0.5,1), over 5 seeds"""
        for seed in range(5):
            estimates = {}
            for shift in (3.0, 0.5):
                params, cfg = _fit_critic(shift, seed)
                gen = np.random.default_rng(100 + seed)
                real = gen.normal(shift, 1.0, size=(4000, 1))
                fake = gen.normal(0.0, 1.0, size=(4000, 1))
                estimates[shift] = estimate_wasserstein(real, fake, params, cfg)
            assert estimates[3.0] > estimates[0.5], f"seed {seed}: {estimates}"
