"""
DAG-WGAN Studio - Metrics & Evaluation
======================================
Experiment-grade evaluation of learned graphs and generated data.

Features:
- SHD of a learned graph against ground truth
- Run summaries over seeds: mean, sample std, 1.96 std / sqrt(n) CI
- Dimension-wise probability (per-column means, Pearson correlation)
- Sample generation from a trained model (decoder as generator)
- CSV reports and a standalone SVG scatter with the ideal diagonal
"""

import logging
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import stats

from backend.errors import ConfigError, DataFormatError, ShapeMismatchError
from backend.services.autoencoder_service import DataMode, ScmAutoencoder, decode
from backend.services.graph_service import Edge, shd

logger = logging.getLogger("metrics-eval")


# =============================================================================
# CONFIGURATION
# =============================================================================

class MetricsConfig:
    """Report defaults"""
    CI_Z = 1.96
    SVG_SIZE = (5.0, 5.0)


# =============================================================================
# DATA MODELS
# =============================================================================

@dataclass
class RunSummary:
    values: List[float]
    mean: float
    std: float
    ci_halfwidth: float

    @property
    def n(self) -> int:
        return len(self.values)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class DimProbReport:
    real_means: np.ndarray
    synth_means: np.ndarray
    correlation: Optional[float]
    note: str = ""

    @property
    def correlation_defined(self) -> bool:
        return self.correlation is not None

    @property
    def points(self) -> List[Tuple[float, float]]:
        return [(float(r), float(s)) for r, s in zip(self.real_means, self.synth_means)]

    def to_dict(self) -> dict:
        return {
            "real_means": self.real_means.tolist(),
            "synth_means": self.synth_means.tolist(),
            "correlation": self.correlation,
            "note": self.note,
        }


# =============================================================================
# GRAPHS
# =============================================================================

def evaluate_graphs(learned: Iterable[Edge], truth: Iterable[Edge], m: int) -> Dict[str, int]:
    learned, truth = frozenset(learned), frozenset(truth)
    return {
        "shd": shd(learned, truth, m),
        "num_nodes": m,
        "learned_edges": len(learned),
        "true_edges": len(truth),
    }


def summarize_runs(shd_list: Sequence[float]) -> RunSummary:
    """Mean, sample std (n-1) and a 1.96 std/sqrt(n) half-width"""
    values = [float(v) for v in shd_list]
    if not values:
        raise ValueError("summarize_runs needs at least one value")
    arr = np.array(sorted(values))
    mean = float(arr.mean())
    if len(values) == 1:
        logger.warning("single run: dispersion and confidence interval reported as 0")
        return RunSummary(values=values, mean=mean, std=0.0, ci_halfwidth=0.0)
    std = float(arr.std(ddof=1))
    return RunSummary(values=values, mean=mean, std=std,
                      ci_halfwidth=MetricsConfig.CI_Z * std / math.sqrt(len(values)))


# =============================================================================
# DIMENSION-WISE PROBABILITY
# =============================================================================

def dimension_wise_probability(real, synth) -> DimProbReport:
    """Per-column means of a binary real matrix and a [0, 1] synthetic matrix"""
    real = np.asarray(real, dtype=np.float64)
    synth = np.asarray(synth, dtype=np.float64)
    if real.ndim != 2 or synth.ndim != 2 or real.shape[1] != synth.shape[1]:
        raise ShapeMismatchError(
            f"real {real.shape} and synthetic {synth.shape} need equal column counts"
        )
    if not np.all((real == 0) | (real == 1)):
        raise DataFormatError("real data must be binary (0/1)",
                              ["Pass per-category indicator columns for multi-valued data"])
    if np.any(synth < 0) or np.any(synth > 1):
        raise DataFormatError("synthetic data must lie in [0, 1]")
    real_means, synth_means = real.mean(axis=0), synth.mean(axis=0)
    if np.ptp(real_means) == 0 or np.ptp(synth_means) == 0:
        logger.warning("zero-variance mean vector: correlation undefined")
        return DimProbReport(real_means, synth_means, None,
                             note="correlation undefined: a mean vector has zero variance")
    r, _ = stats.pearsonr(real_means, synth_means)
    return DimProbReport(real_means, synth_means, float(r))


# =============================================================================
# GENERATION
# =============================================================================

def generate_samples(model: Optional[ScmAutoencoder], n: int, rng: np.random.Generator,
                     sample_onehot: bool = False) -> np.ndarray:
    """Decode Z ~ Normal(0, I); discrete models give probability rows or sampled one-hots"""
    if model is None:
        raise ConfigError("no model loaded", ["Load a checkpoint with --model first"])
    cfg = model.config
    if n == 0:
        return np.zeros((0, cfg.width))
    Z = rng.standard_normal((n, cfg.width))
    out = decode(Z, model)
    if cfg.data_mode is DataMode.CONTINUOUS or not sample_onehot:
        return out
    probs = out.reshape(n * cfg.num_nodes, cfg.node_dim)
    cum = np.cumsum(probs, axis=1)
    cum /= cum[:, -1:]
    picked = (rng.random((probs.shape[0], 1)) >= cum).sum(axis=1)
    onehot = np.zeros_like(probs)
    onehot[np.arange(probs.shape[0]), np.minimum(picked, cfg.node_dim - 1)] = 1.0
    return onehot.reshape(n, cfg.width)


# =============================================================================
# REPORTS
# =============================================================================

def write_run_report(path, runs: Dict[str, float], summary: Optional[RunSummary] = None) -> Path:
    """CSV with one row per run, plus mean/std/ci rows"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = [{"run": name, "shd": value} for name, value in sorted(runs.items())]
    summary = summary or summarize_runs(list(runs.values()))
    rows += [
        {"run": "mean", "shd": summary.mean},
        {"run": "std", "shd": summary.std},
        {"run": "ci_halfwidth", "shd": summary.ci_halfwidth},
    ]
    pd.DataFrame(rows, columns=["run", "shd"]).to_csv(path, index=False)
    return path


def write_dimprob_csv(path, report: DimProbReport) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame({
        "dimension": np.arange(len(report.real_means)),
        "real_mean": report.real_means,
        "synth_mean": report.synth_means,
    }).to_csv(path, index=False, float_format="%.17g")
    return path


def write_dimprob_svg(path, report: DimProbReport, title: str = "Dimension-wise probability") -> Path:
    """Scatter of (real mean, synthetic mean) with the y = x reference"""
    import matplotlib

    matplotlib.use("Agg")
    matplotlib.rcParams.update({"svg.hashsalt": "dagwgan", "font.family": "DejaVu Sans"})
    import matplotlib.pyplot as plt

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=MetricsConfig.SVG_SIZE)
    ax.plot([0.0, 1.0], [0.0, 1.0], linestyle="--", color="grey", linewidth=1.0, label="ideal")
    ax.scatter(report.real_means, report.synth_means, s=18, color="tab:blue", label="dimension")
    ax.set_xlim(0.0, 1.0)
    ax.set_ylim(0.0, 1.0)
    ax.set_xlabel("Real data mean")
    ax.set_ylabel("Synthetic data mean")
    corr = f"r = {report.correlation:.4f}" if report.correlation_defined else "r undefined"
    ax.set_title(f"{title} ({corr})")
    ax.grid(True, alpha=0.3)
    ax.legend(loc="upper left", fontsize=8)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    logger.info(f"Wrote dimension-wise scatter to {path}")
    return path
