"""
DAG-WGAN Studio - Training Service
==================================
Alternating critic / autoencoder training under an augmented-Lagrangian
acyclicity constraint.

Features:
- Adam for critic and autoencoder (bias-corrected, explicit state)
- n_critic critic steps per autoencoder step on each minibatch
- L_total = L_R + w * L_G + multiplier * h(A) + rho/2 * h(A)^2
- Outer loop: multiplier += rho * h; rho *= 10 while h stalls above 1/4 of
  its previous value; stop once h < h_tolerance
- Independent RNG streams (init, shuffle, prior, critic) so critic settings
  never change the data order or the autoencoder initialisation
- Per-epoch history, periodic checkpoints, last-good model on divergence
"""

import asyncio
import logging
import math
from dataclasses import dataclass, replace
from functools import partial
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from backend.autodiff import evaluate, evaluate_many, grad, ops
from backend.autodiff.layers import MlpParams
from backend.autodiff.models import Expression, Tensor
from backend.errors import (
    DataFormatError,
    NonFiniteError,
    ShapeMismatchError,
    SingularSystemError,
    TrainingDivergedError,
)
from backend.services.autoencoder_service import (
    AeObjective,
    DataMode,
    ScmAutoencoder,
    autoencoder_objective,
    decode_expr,
)
from backend.services.critic_service import (
    CriticConfig,
    CriticObjective,
    critic_bindings,
    critic_objective,
    critic_parameters,
    critic_step_bindings,
    generator_expr,
    pack,
    pack_expr,
)
from backend.services.graph_service import (
    AcyclicityConfig,
    acyclicity_expr,
    acyclicity_h,
    finalize_adjacency,
    threshold_graph,
)

from .models import (
    AdamState,
    AugLagState,
    EpochRecord,
    FakeSource,
    TrainConfig,
    TrainerConfig,
    TrainResult,
)

logger = logging.getLogger("dag-trainer")

CheckpointCallback = Callable[[TrainResult], None]


# =============================================================================
# OPTIMIZER
# =============================================================================

def adam_step(params: Dict[str, Tensor], grads: Dict[str, Tensor],
              state: AdamState) -> Tuple[Dict[str, Tensor], AdamState]:
    """One bias-corrected Adam update; parameters without a gradient are kept"""
    bad = sorted(k for k, g in grads.items() if not np.all(np.isfinite(g)))
    if bad:
        raise NonFiniteError(
            f"non-finite gradient for {', '.join(bad)} at step {state.step + 1}",
            ["Lower the learning rate", "Standardize the input data"],
        )
    step = state.step + 1
    b1, b2 = state.beta1, state.beta2
    new_params, first, second = {}, dict(state.first_moment), dict(state.second_moment)
    for name, value in params.items():
        g = grads.get(name)
        if g is None:
            new_params[name] = value
            continue
        if g.shape != value.shape:
            raise ShapeMismatchError(f"gradient of {name} has shape {g.shape}, expected {value.shape}")
        m = b1 * first.get(name, np.zeros_like(value)) + (1.0 - b1) * g
        v = b2 * second.get(name, np.zeros_like(value)) + (1.0 - b2) * g * g
        m_hat = m / (1.0 - b1 ** step)
        v_hat = v / (1.0 - b2 ** step)
        new_params[name] = value - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
        first[name], second[name] = m, v
    return new_params, replace(state, first_moment=first, second_moment=second, step=step)


def lr_schedule(outer_iter: int, cfg: TrainConfig) -> float:
    if outer_iter < 0:
        raise ValueError(f"outer_iter must be >= 0, got {outer_iter}")
    return cfg.lr * cfg.lr_decay ** outer_iter


def update_auglag(state: AugLagState, h: float, cfg: TrainConfig) -> AugLagState:
    """multiplier += rho*h, then grow rho if h did not drop below progress_ratio*h_prev"""
    multiplier = state.multiplier + state.penalty_rho * h
    rho = state.penalty_rho
    if h > cfg.progress_ratio * state.h_prev:
        rho = min(cfg.rho_growth * rho, cfg.rho_max)
    return AugLagState(multiplier=multiplier, penalty_rho=rho, h_prev=h,
                       outer_iter=state.outer_iter + 1)


# =============================================================================
# GRAPHS
# =============================================================================

@dataclass
class GeneratorGraph:
    """Autoencoder-side objective for one batch size"""
    objective: AeObjective
    prior: Expression
    fake: Expression
    gen_loss: Optional[Expression]
    h: Expression
    total: Expression
    wrt: List[Expression]
    grads: List[Expression]


@dataclass
class CriticGraph:
    objective: CriticObjective
    wrt: List[Expression]
    grads: List[Expression]


def build_generator_graph(model: ScmAutoencoder, critic: MlpParams, cfg: TrainConfig,
                          critic_cfg: CriticConfig, n: int) -> GeneratorGraph:
    ae_cfg = model.config
    objective, params = autoencoder_objective(model, n)
    prior = ops.variable("prior.Z", (n, ae_cfg.width))
    if cfg.fake_source is FakeSource.PRIOR:
        fake = decode_expr(prior, params, ae_cfg)
    else:
        fake = objective.output
    alpha = AcyclicityConfig(cfg.alpha).resolve(ae_cfg.num_nodes)
    h = acyclicity_expr(params.A, alpha)
    multiplier = ops.variable("auglag.multiplier", (1, 1))
    rho = ops.variable("auglag.rho", (1, 1))
    total = objective.total + multiplier * h + (rho * ops.square(h)) * 0.5
    gen_loss = None
    if cfg.gen_loss_weight > 0:
        gen_loss = generator_expr(pack_expr(fake, critic_cfg.pac), critic, critic_cfg)
        total = total + gen_loss * cfg.gen_loss_weight
    wrt = params.all()
    return GeneratorGraph(objective=objective, prior=prior, fake=fake, gen_loss=gen_loss,
                          h=h, total=total, wrt=wrt, grads=grad(total, wrt))


def build_critic_graph(critic: MlpParams, critic_cfg: CriticConfig, n: int,
                       width: int) -> CriticGraph:
    objective = critic_objective(n // critic_cfg.pac, critic_cfg.pac * width, critic, critic_cfg)
    wrt = [v for layer in objective.layers for v in layer]
    return CriticGraph(objective=objective, wrt=wrt, grads=grad(objective.loss, wrt))


# =============================================================================
# TRAINING SESSION
# =============================================================================

def standardize(data: np.ndarray) -> np.ndarray:
    std = data.std(axis=0)
    std[std == 0] = 1.0
    return (data - data.mean(axis=0)) / std


class TrainingSession:
    """Mutable state of one training run (single-threaded, deterministic)"""

    def __init__(self, model: ScmAutoencoder, data: np.ndarray, cfg: TrainConfig,
                 critic: Optional[MlpParams] = None,
                 on_checkpoint: Optional[CheckpointCallback] = None):
        self.cfg = cfg
        self.critic_cfg = cfg.critic_config()
        self.model = model
        data = np.asarray(data, dtype=np.float64)
        if data.ndim != 2 or data.shape[1] != model.config.width:
            raise ShapeMismatchError(
                f"data has shape {data.shape}; model expects (n, {model.config.width})"
            )
        if data.shape[0] < self.critic_cfg.pac:
            raise DataFormatError(
                f"{data.shape[0]} samples cannot fill one packed critic row (pac={cfg.pac})",
                ["Lower pac or supply more samples"],
            )
        if cfg.standardize_flag:
            if model.config.data_mode is DataMode.DISCRETE:
                logger.warning("standardize_flag ignored for discrete (one-hot) data")
            else:
                data = standardize(data)
        self.data = data

        streams = np.random.SeedSequence(cfg.seed).spawn(4)
        critic_init, shuffle, prior, critic_noise = (np.random.default_rng(s) for s in streams)
        self.shuffle_rng, self.prior_rng, self.critic_rng = shuffle, prior, critic_noise
        self.critic = critic or critic_parameters(model.config.width, self.critic_cfg, critic_init)

        self.ae_adam = AdamState.fresh(model.parameters(), cfg.lr, cfg.adam_beta1,
                                       cfg.adam_beta2, cfg.adam_eps)
        self.critic_adam = AdamState.fresh(critic_bindings(self.critic), cfg.lr, cfg.adam_beta1,
                                           cfg.adam_beta2, cfg.adam_eps)
        self.auglag = AugLagState(multiplier=cfg.multiplier_init, penalty_rho=cfg.rho_init)
        self.history: List[EpochRecord] = []
        self.on_checkpoint = on_checkpoint
        self._acyclicity = AcyclicityConfig(cfg.alpha)
        self._generator_graphs: Dict[int, GeneratorGraph] = {}
        self._critic_graphs: Dict[int, CriticGraph] = {}
        self._warned_trim = False

    # -------------------------------------------------------------------------
    # graphs
    # -------------------------------------------------------------------------

    def _generator_graph(self, n: int) -> GeneratorGraph:
        if n not in self._generator_graphs:
            self._generator_graphs[n] = build_generator_graph(
                self.model, self.critic, self.cfg, self.critic_cfg, n)
        return self._generator_graphs[n]

    def _critic_graph(self, n: int) -> CriticGraph:
        if n not in self._critic_graphs:
            self._critic_graphs[n] = build_critic_graph(
                self.critic, self.critic_cfg, n, self.model.config.width)
        return self._critic_graphs[n]

    def _batches(self) -> List[np.ndarray]:
        n, bs, pac = self.data.shape[0], self.cfg.batch_size, self.critic_cfg.pac
        order = self.shuffle_rng.permutation(n)
        batches = []
        for start in range(0, n, bs):
            idx = order[start:start + bs]
            usable = (len(idx) // pac) * pac
            if usable < len(idx) and not self._warned_trim:
                logger.warning(f"trimming last minibatch to {usable} rows (multiple of pac={pac})")
                self._warned_trim = True
            if usable:
                batches.append(idx[:usable])
        return batches

    # -------------------------------------------------------------------------
    # steps
    # -------------------------------------------------------------------------

    def _bindings(self, batch: np.ndarray) -> Dict[str, Tensor]:
        return {
            **self.model.parameters(),
            **critic_bindings(self.critic),
            "X": batch,
            "auglag.multiplier": np.array([[self.auglag.multiplier]]),
            "auglag.rho": np.array([[self.auglag.penalty_rho]]),
        }

    def _draw_prior(self, n: int) -> np.ndarray:
        return self.prior_rng.standard_normal((n, self.model.config.width))

    def critic_step(self, batch: np.ndarray) -> float:
        n = batch.shape[0]
        gen = self._generator_graph(n)
        graph = self._critic_graph(n)
        bindings = self._bindings(batch)
        if self.cfg.fake_source is FakeSource.PRIOR:
            bindings["prior.Z"] = self._draw_prior(n)
        fake = evaluate(gen.fake, bindings)
        step = critic_step_bindings(graph.objective, pack(batch, self.critic_cfg.pac),
                                    pack(fake, self.critic_cfg.pac), self.critic_cfg,
                                    self.critic_rng)
        loss, *grads = evaluate_many([graph.objective.loss, *graph.grads],
                                     {**critic_bindings(self.critic), **step})
        params, self.critic_adam = adam_step(
            critic_bindings(self.critic),
            {v.name: g for v, g in zip(graph.wrt, grads)},
            self.critic_adam,
        )
        self.critic = self.critic.with_values("critic", params)
        return float(loss[0, 0])

    def generator_step(self, batch: np.ndarray) -> Tuple[float, float]:
        n = batch.shape[0]
        gen = self._generator_graph(n)
        bindings = self._bindings(batch)
        if gen.gen_loss is not None and self.cfg.fake_source is FakeSource.PRIOR:
            bindings["prior.Z"] = self._draw_prior(n)
        heads = [gen.objective.total] + ([gen.gen_loss] if gen.gen_loss is not None else [])
        values = evaluate_many([*heads, *gen.grads], bindings)
        l_r = float(values[0][0, 0])
        l_g = float(values[1][0, 0]) if gen.gen_loss is not None else 0.0
        grads = values[len(heads):]
        params, self.ae_adam = adam_step(
            self.model.parameters(),
            {v.name: g for v, g in zip(gen.wrt, grads)},
            self.ae_adam,
        )
        self.model = self.model.with_parameters(params)
        return l_r, l_g

    def inner_epoch(self, epoch: int) -> EpochRecord:
        l_d, l_g, l_r = [], [], []
        for idx in self._batches():
            batch = self.data[idx]
            if not self.cfg.freeze_critic:
                for _ in range(self.cfg.n_critic):
                    l_d.append(self.critic_step(batch))
            r, g = self.generator_step(batch)
            l_r.append(r)
            l_g.append(g)
        h = acyclicity_h(self.model.A, self._acyclicity)
        record = EpochRecord(
            outer_iter=self.auglag.outer_iter,
            epoch=epoch,
            L_D=float(np.mean(l_d)) if l_d else 0.0,
            L_G=float(np.mean(l_g)),
            L_R=float(np.mean(l_r)),
            h=h,
            lr=self.ae_adam.lr,
            multiplier=self.auglag.multiplier,
            rho=self.auglag.penalty_rho,
        )
        if not all(math.isfinite(v) for v in (record.L_D, record.L_G, record.L_R, record.h)):
            raise NonFiniteError(f"non-finite loss in epoch {epoch}")
        return record

    # -------------------------------------------------------------------------
    # outer loop
    # -------------------------------------------------------------------------

    def result(self, converged: bool, h: float) -> TrainResult:
        A = finalize_adjacency(self.model.A)
        return TrainResult(
            model=self.model,
            critic=self.critic,
            learned_A=A,
            graph=threshold_graph(A, self.cfg.edge_threshold),
            history=list(self.history),
            converged=converged,
            auglag=self.auglag,
            final_h=h,
            critic_adam=self.critic_adam,
            ae_adam=self.ae_adam,
        )

    def run(self) -> TrainResult:
        cfg = self.cfg
        logger.info(
            f"Training on {self.data.shape[0]} samples, m={self.model.config.num_nodes}, "
            f"mode={self.model.config.data_mode.value}, seed={cfg.seed}"
        )
        h = acyclicity_h(self.model.A, self._acyclicity)
        epoch = 0
        last_good, last_critic = self.model.copy(), self.critic
        while True:
            lr = lr_schedule(self.auglag.outer_iter, cfg)
            trained_rho = self.auglag.penalty_rho
            self.ae_adam = replace(self.ae_adam, lr=lr)
            self.critic_adam = replace(self.critic_adam, lr=lr)
            for _ in range(cfg.epochs_per_outer):
                try:
                    record = self.inner_epoch(epoch)
                except (NonFiniteError, SingularSystemError) as e:
                    logger.error(f"Training diverged in epoch {epoch}: {e}")
                    self.model, self.critic = last_good, last_critic
                    raise TrainingDivergedError(
                        f"training diverged in epoch {epoch}: {e}",
                        last_good=last_good,
                        history=list(self.history),
                        partial=self.result(False, acyclicity_h(last_good.A, self._acyclicity)),
                    ) from e
                self.history.append(record)
                last_good, last_critic = self.model.copy(), self.critic
                if TrainerConfig.LOG_EVERY_EPOCHS and epoch % TrainerConfig.LOG_EVERY_EPOCHS == 0:
                    logger.debug(f"epoch {epoch}: L_D={record.L_D:.4g} L_G={record.L_G:.4g} "
                                 f"L_R={record.L_R:.4g} h={record.h:.3e}")
                epoch += 1

            h = acyclicity_h(self.model.A, self._acyclicity)
            self.auglag = update_auglag(self.auglag, h, cfg)
            last = self.history[-1]
            logger.info(
                f"outer {self.auglag.outer_iter}: h={h:.3e} multiplier={self.auglag.multiplier:.4g} "
                f"rho={self.auglag.penalty_rho:.3g} lr={lr:.3g} "
                f"L_D={last.L_D:.4g} L_G={last.L_G:.4g} L_R={last.L_R:.4g}"
            )
            if self.on_checkpoint and cfg.checkpoint_every \
                    and self.auglag.outer_iter % cfg.checkpoint_every == 0:
                self.on_checkpoint(self.result(h < cfg.h_tolerance, h))

            if h < cfg.h_tolerance:
                return self.result(True, h)
            if self.auglag.outer_iter >= cfg.max_outer_iters:
                logger.warning(f"Not converged after {cfg.max_outer_iters} outer iterations "
                               f"(h={h:.3e} >= {cfg.h_tolerance:g})")
                return self.result(False, h)
            # stop only once a full outer iteration has run at the cap
            if trained_rho >= cfg.rho_max:
                logger.warning(f"Penalty reached rho_max={cfg.rho_max:g} with h={h:.3e}")
                return self.result(False, h)


def inner_epoch(session: TrainingSession, epoch: int = 0) -> EpochRecord:
    return session.inner_epoch(epoch)


def augmented_lagrangian_loop(model: ScmAutoencoder, data: np.ndarray, cfg: TrainConfig,
                              critic: Optional[MlpParams] = None,
                              on_checkpoint: Optional[CheckpointCallback] = None) -> TrainResult:
    return TrainingSession(model, data, cfg, critic, on_checkpoint).run()


def initial_model(cfg: TrainConfig, num_nodes: int, node_dim: int = 1,
                  data_mode: DataMode = DataMode.CONTINUOUS,
                  cardinalities: Optional[Sequence[int]] = None) -> ScmAutoencoder:
    """Seeded autoencoder initialisation (its own stream, independent of the critic)"""
    ae_cfg = cfg.ae_config(num_nodes, node_dim, DataMode(data_mode),
                           list(cardinalities) if cardinalities is not None else None)
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 1]))
    return ScmAutoencoder.initialize(ae_cfg, rng)


# =============================================================================
# SERVICE
# =============================================================================

class TrainingService:
    """Entry point used by the CLI and the API"""

    def train(self, data: np.ndarray, cfg: TrainConfig, num_nodes: int, node_dim: int = 1,
              data_mode: DataMode = DataMode.CONTINUOUS,
              cardinalities: Optional[Sequence[int]] = None,
              on_checkpoint: Optional[CheckpointCallback] = None) -> TrainResult:
        model = initial_model(cfg, num_nodes, node_dim, data_mode, cardinalities)
        result = augmented_lagrangian_loop(model, data, cfg, on_checkpoint=on_checkpoint)
        logger.info(f"Training finished: {result.summary()}")
        return result

    async def train_async(self, data: np.ndarray, cfg: TrainConfig, num_nodes: int,
                          **kwargs) -> TrainResult:
        loop = asyncio.get_event_loop()
        return await loop.run_in_executor(
            None, partial(self.train, data, cfg, num_nodes, **kwargs)
        )


_training_service: Optional[TrainingService] = None


def get_training_service() -> TrainingService:
    """Get or create training service instance"""
    global _training_service
    if _training_service is None:
        _training_service = TrainingService()
    return _training_service
