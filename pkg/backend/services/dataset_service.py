"""
DAG-WGAN Studio - Dataset & Artifact I/O
========================================
File formats shared by the CLI, the API and the benchmark scripts.

Features:
- Continuous data CSV (header row, 17 significant digits, bit-exact round trip)
- Discrete code CSV and padded one-hot encoding / decoding
- Graph files: "i j weight" edge lists and dense adjacency CSV
- Dataset manifests (JSON) with synthetic provenance
- Versioned model checkpoints (.npz arrays + JSON metadata)
- Flat YAML training configs validated by TrainConfig
"""

import json
import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
import yaml
from pydantic import BaseModel, Field, ValidationError

from backend.autodiff.layers import MlpParams
from backend.autodiff.models import Tensor
from backend.errors import ConfigError, DataFormatError, GraphFormatError
from backend.services.autoencoder_service import AeConfig, DataMode, ScmAutoencoder
from backend.services.graph_service import BinaryDag, is_dag
from backend.services.sem_synth_service import (
    DiscreteSimSpec,
    SemSpec,
    simulate_dataset,
    simulate_discrete_dataset,
)
from backend.services.trainer.models import (
    HISTORY_COLUMNS,
    AdamState,
    AugLagState,
    EpochRecord,
    TrainConfig,
    TrainResult,
)

logger = logging.getLogger("dataset-io")

PathLike = Union[str, Path]


# =============================================================================
# CONFIGURATION
# =============================================================================

class DataConfig:
    """I/O defaults"""
    OUTPUT_DIR = Path(os.getenv("DAGWGAN_OUTPUT_DIR", "data/outputs"))
    FLOAT_FORMAT = "%.17g"
    CHECKPOINT_FORMAT = "dagwgan-checkpoint"
    CHECKPOINT_VERSION = 1
    MANIFEST_NAME = "manifest.json"


def output_dir(override: Optional[PathLike] = None) -> Path:
    """Explicit directory, else DAGWGAN_OUTPUT_DIR read at call time"""
    if override is not None:
        return Path(override)
    return Path(os.getenv("DAGWGAN_OUTPUT_DIR", str(DataConfig.OUTPUT_DIR)))


# =============================================================================
# TABLES
# =============================================================================

def _read_table(path: PathLike) -> pd.DataFrame:
    path = Path(path)
    if not path.exists():
        raise DataFormatError(f"{path}: no such file")
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError as e:
        raise DataFormatError(f"{path}: file is empty", ["Expected a header row"]) from e
    except pd.errors.ParserError as e:
        raise DataFormatError(f"{path}: ragged rows ({e})",
                              ["Every row needs as many fields as the header"]) from e
    if not isinstance(df.index, pd.RangeIndex):
        raise DataFormatError(f"{path}: line 2 has more fields than the header")
    short = df.isna().any(axis=1).to_numpy()
    if short.any():
        line = int(np.argmax(short)) + 2
        raise DataFormatError(f"{path}: line {line} has fewer fields than the header")
    if df.empty:
        raise DataFormatError(f"{path}: no data rows")
    return df


def _to_float(df: pd.DataFrame, path: PathLike) -> np.ndarray:
    raw = df.to_numpy(dtype=object)
    try:
        values = raw.astype(np.float64)
    except ValueError:
        values = None
    if values is not None and np.all(np.isfinite(values)):
        return values
    for r, c in np.ndindex(*raw.shape):
        try:
            ok = np.isfinite(float(raw[r, c]))
        except ValueError:
            ok = False
        if not ok:
            raise DataFormatError(
                f"{path}: line {r + 2}, column {c + 1} ({df.columns[c]!r}): "
                f"{raw[r, c]!r} is not a finite number"
            )
    raise DataFormatError(f"{path}: non-numeric data")


def load_continuous(path: PathLike) -> np.ndarray:
    """n x m float matrix from a CSV with a header row"""
    data = _to_float(_read_table(path), path)
    logger.debug(f"Loaded {data.shape[0]}x{data.shape[1]} continuous data from {path}")
    return data


def _header(m: int, header: Optional[Sequence[str]]) -> List[str]:
    if header is None:
        return [f"x{j}" for j in range(m)]
    if len(header) != m:
        raise DataFormatError(f"header has {len(header)} names for {m} columns")
    return list(header)


def save_continuous(path: PathLike, data, header: Optional[Sequence[str]] = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = np.asarray(data, dtype=np.float64)
    pd.DataFrame(data, columns=_header(data.shape[1], header)).to_csv(
        path, index=False, float_format=DataConfig.FLOAT_FORMAT
    )
    return path


def load_codes(path: PathLike) -> np.ndarray:
    """Integer category codes (n x m)"""
    values = _to_float(_read_table(path), path)
    bad = np.argwhere((values != np.round(values)) | (values < 0))
    if len(bad):
        r, c = bad[0]
        raise DataFormatError(
            f"{path}: line {r + 2}, column {c + 1}: {values[r, c]!r} is not a category code"
        )
    return values.astype(np.int64)


def save_discrete(path: PathLike, codes, header: Optional[Sequence[str]] = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    codes = np.asarray(codes, dtype=np.int64)
    pd.DataFrame(codes, columns=_header(codes.shape[1], header)).to_csv(path, index=False)
    return path


# =============================================================================
# ONE-HOT
# =============================================================================

def one_hot_encode(codes, cardinalities: Sequence[int]) -> np.ndarray:
    """Node j occupies columns [j*d, j*d + card_j) of a width m*d row, d = max card"""
    codes = np.asarray(codes, dtype=np.int64)
    n, m = codes.shape
    if len(cardinalities) != m:
        raise DataFormatError(
            f"{m} columns but {len(cardinalities)} cardinalities",
            ["Give one cardinality per variable"],
        )
    d = int(max(cardinalities))
    out = np.zeros((n, m * d))
    for j, card in enumerate(cardinalities):
        bad = np.flatnonzero((codes[:, j] < 0) | (codes[:, j] >= card))
        if len(bad):
            r = int(bad[0])
            raise DataFormatError(
                f"row {r + 1}, column {j + 1}: code {codes[r, j]} out of range "
                f"for cardinality {card}"
            )
        out[np.arange(n), j * d + codes[:, j]] = 1.0
    return out


def one_hot_decode(onehot, cardinalities: Sequence[int]) -> np.ndarray:
    """Argmax within each node's valid block"""
    onehot = np.asarray(onehot, dtype=np.float64)
    m, d = len(cardinalities), int(max(cardinalities))
    if onehot.ndim != 2 or onehot.shape[1] != m * d:
        raise DataFormatError(f"one-hot matrix has shape {onehot.shape}, expected (n, {m * d})")
    blocks = onehot.reshape(onehot.shape[0], m, d)
    codes = np.zeros((onehot.shape[0], m), dtype=np.int64)
    for j, card in enumerate(cardinalities):
        codes[:, j] = np.argmax(blocks[:, j, :card], axis=1)
    return codes


def load_discrete(path: PathLike, cardinalities: Sequence[int]) -> np.ndarray:
    return one_hot_encode(load_codes(path), cardinalities)


def probability_columns(probs, cardinalities: Sequence[int]) -> Tuple[np.ndarray, List[str]]:
    """Per-category probability columns (category 0 omitted: one column per binary node)"""
    m, d = len(cardinalities), int(max(cardinalities))
    blocks = np.asarray(probs, dtype=np.float64).reshape(-1, m, d)
    cols, names = [], []
    for j, card in enumerate(cardinalities):
        for k in range(1, card):
            cols.append(blocks[:, j, k])
            names.append(f"x{j}" if card == 2 else f"x{j}_{k}")
    return np.column_stack(cols) if cols else np.zeros((blocks.shape[0], 0)), names


# =============================================================================
# GRAPHS
# =============================================================================

@dataclass
class GraphFile:
    """Contents of a graph file: node count and weighted adjacency"""
    m: int
    weights: Tensor

    @property
    def edges(self) -> frozenset:
        mask = self.weights != 0
        return frozenset((int(i), int(j)) for i, j in zip(*np.nonzero(mask)))

    def to_dag(self) -> BinaryDag:
        return BinaryDag(m=self.m, edges=self.edges)


def _graph_format(path: Path, fmt: Optional[str]) -> str:
    if fmt is None:
        fmt = "adjacency-csv" if path.suffix.lower() == ".csv" else "edge-list"
    if fmt not in ("edge-list", "adjacency-csv"):
        raise GraphFormatError(f"unknown graph format {fmt!r}",
                               ["Use 'edge-list' or 'adjacency-csv'"])
    return fmt


def _check_dag(weights: Tensor, path: PathLike):
    loops = np.flatnonzero(np.diag(weights))
    if len(loops):
        raise GraphFormatError(f"{path}: self-loop on node {int(loops[0])} in a DAG file")
    edges = [(int(i), int(j)) for i, j in zip(*np.nonzero(weights))]
    if not is_dag(edges, weights.shape[0]):
        raise GraphFormatError(f"{path}: edges contain a directed cycle")


def load_graph(path: PathLike, fmt: Optional[str] = None, dag: bool = True) -> GraphFile:
    """Edge list ("i j [weight]" per line, optional "# nodes=m") or adjacency CSV"""
    path = Path(path)
    if not path.exists():
        raise GraphFormatError(f"{path}: no such file")
    fmt = _graph_format(path, fmt)
    if fmt == "adjacency-csv":
        try:
            weights = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
        except ValueError as e:
            raise GraphFormatError(f"{path}: malformed adjacency CSV ({e})") from e
        if weights.shape[0] != weights.shape[1]:
            raise GraphFormatError(f"{path}: adjacency must be square, got {weights.shape}")
        if not np.all(np.isfinite(weights)):
            raise GraphFormatError(f"{path}: adjacency contains NaN or Inf")
        graph = GraphFile(m=weights.shape[0], weights=weights)
    else:
        graph = _read_edge_list(path)
    if dag:
        _check_dag(graph.weights, path)
    return graph


def _read_edge_list(path: Path) -> GraphFile:
    declared: Optional[int] = None
    triples: List[Tuple[int, int, float]] = []
    seen = set()
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("nodes="):
                try:
                    declared = int(body[len("nodes="):])
                except ValueError as e:
                    raise GraphFormatError(f"{path}:{lineno}: bad node count {body!r}") from e
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise GraphFormatError(f"{path}:{lineno}: expected 'i j weight', got {line!r}")
        try:
            i, j = int(parts[0]), int(parts[1])
            w = float(parts[2]) if len(parts) == 3 else 1.0
        except ValueError as e:
            raise GraphFormatError(f"{path}:{lineno}: not a number in {line!r}") from e
        if i < 0 or j < 0:
            raise GraphFormatError(f"{path}:{lineno}: negative node index")
        if w == 0 or not np.isfinite(w):
            raise GraphFormatError(f"{path}:{lineno}: edge weight must be finite and nonzero")
        if (i, j) in seen:
            raise GraphFormatError(f"{path}:{lineno}: duplicate edge ({i}, {j})")
        seen.add((i, j))
        triples.append((i, j, w))
    m = max((max(i, j) for i, j, _ in triples), default=-1) + 1
    if declared is not None:
        if declared < m:
            raise GraphFormatError(f"{path}: header declares {declared} nodes but edges use {m}")
        m = declared
    weights = np.zeros((m, m))
    for i, j, w in triples:
        weights[i, j] = w
    return GraphFile(m=m, weights=weights)


def save_graph(path: PathLike, graph: Union[Tensor, BinaryDag, GraphFile],
               fmt: Optional[str] = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fmt = _graph_format(path, fmt)
    if isinstance(graph, BinaryDag):
        weights = graph.adjacency()
    elif isinstance(graph, GraphFile):
        weights = graph.weights
    else:
        weights = np.asarray(graph, dtype=np.float64)
    if fmt == "adjacency-csv":
        np.savetxt(path, weights, delimiter=",", fmt=DataConfig.FLOAT_FORMAT)
        return path
    lines = [f"# nodes={weights.shape[0]}"]
    for i, j in zip(*np.nonzero(weights)):
        lines.append(f"{i} {j} {weights[i, j]:.17g}")
    path.write_text("\n".join(lines) + "\n")
    return path


# =============================================================================
# MANIFESTS
# =============================================================================

class DatasetManifest(BaseModel):
    """Where a dataset lives and how it was made; paths relative to the manifest"""
    data_path: str
    data_mode: DataMode = DataMode.CONTINUOUS
    num_nodes: int = Field(ge=1)
    num_samples: int = Field(ge=1)
    cardinalities: Optional[List[int]] = None
    truth_graph_path: Optional[str] = None
    truth_weights_path: Optional[str] = None
    sem_spec: Optional[SemSpec] = None
    discrete_spec: Optional[DiscreteSimSpec] = None

    def resolve(self, base: Path, relative: Optional[str]) -> Optional[Path]:
        if relative is None:
            return None
        p = Path(relative)
        return p if p.is_absolute() else base / p


def save_manifest(path: PathLike, manifest: DatasetManifest) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest.model_dump(mode="json"), indent=2, sort_keys=True) + "\n")
    return path


def load_manifest(path: PathLike) -> DatasetManifest:
    path = Path(path)
    try:
        manifest = DatasetManifest.model_validate_json(path.read_text())
    except FileNotFoundError as e:
        raise DataFormatError(f"{path}: no such manifest") from e
    except ValidationError as e:
        raise DataFormatError(f"{path}: invalid manifest ({e.error_count()} error(s))",
                              [str(err["loc"]) + ": " + err["msg"] for err in e.errors()]) from e
    for rel in (manifest.data_path, manifest.truth_graph_path, manifest.truth_weights_path):
        target = manifest.resolve(path.parent, rel)
        if target is not None and not target.exists():
            raise DataFormatError(f"{path}: referenced file {target} does not exist")
    if manifest.data_mode is DataMode.DISCRETE and manifest.cardinalities is None:
        raise DataFormatError(f"{path}: discrete manifests need cardinalities")
    return manifest


def load_manifest_data(path: PathLike) -> Tuple[DatasetManifest, np.ndarray]:
    """Manifest plus its training matrix (one-hot for discrete data), shape-checked"""
    path = Path(path)
    manifest = load_manifest(path)
    data_file = manifest.resolve(path.parent, manifest.data_path)
    if manifest.data_mode is DataMode.DISCRETE:
        codes = load_codes(data_file)
        raw_cols = codes.shape[1]
        data = one_hot_encode(codes, manifest.cardinalities)
    else:
        data = load_continuous(data_file)
        raw_cols = data.shape[1]
    if raw_cols != manifest.num_nodes or data.shape[0] != manifest.num_samples:
        raise DataFormatError(
            f"{data_file}: {data.shape[0]}x{raw_cols} data, manifest declares "
            f"{manifest.num_samples}x{manifest.num_nodes}"
        )
    return manifest, data


# =============================================================================
# SYNTHETIC BENCHMARKS ON DISK
# =============================================================================

def write_continuous_benchmark(out_dir: PathLike, spec: SemSpec, n: int) -> Path:
    """data.csv, truth.graph.txt, truth_weights.csv and manifest.json; returns manifest path"""
    out = Path(out_dir)
    ds = simulate_dataset(spec, n)
    save_continuous(out / "data.csv", ds.data)
    save_graph(out / "truth.graph.txt", ds.weights, "edge-list")
    save_graph(out / "truth_weights.csv", ds.weights, "adjacency-csv")
    manifest = DatasetManifest(
        data_path="data.csv", data_mode=DataMode.CONTINUOUS, num_nodes=spec.m, num_samples=n,
        truth_graph_path="truth.graph.txt", truth_weights_path="truth_weights.csv",
        sem_spec=spec,
    )
    return save_manifest(out / DataConfig.MANIFEST_NAME, manifest)


def write_discrete_benchmark(out_dir: PathLike, spec: DiscreteSimSpec, n: int) -> Path:
    out = Path(out_dir)
    bn, codes = simulate_discrete_dataset(spec, n)
    save_discrete(out / "data.csv", codes)
    save_graph(out / "truth.graph.txt", bn.dag, "edge-list")
    manifest = DatasetManifest(
        data_path="data.csv", data_mode=DataMode.DISCRETE, num_nodes=spec.m, num_samples=n,
        cardinalities=bn.cardinalities, truth_graph_path="truth.graph.txt",
        discrete_spec=spec,
    )
    return save_manifest(out / DataConfig.MANIFEST_NAME, manifest)


# =============================================================================
# TRAINING CONFIG & HISTORY
# =============================================================================

def load_train_config(path: Optional[PathLike]) -> TrainConfig:
    """Flat YAML mapping of TrainConfig fields; no file means defaults"""
    if path is None:
        return TrainConfig()
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except FileNotFoundError as e:
        raise ConfigError(f"{path}: no such config file") from e
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: not valid YAML ({e})") from e
    raw = raw or {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: expected a key: value mapping")
    nested = sorted(k for k, v in raw.items() if isinstance(v, dict))
    if nested:
        raise ConfigError(f"{path}: nested sections are not supported ({', '.join(nested)})",
                          ["Config files are flat key: value mappings"])
    try:
        return TrainConfig(**raw)
    except ValidationError as e:
        raise ConfigError(
            f"{path}: invalid training config",
            [f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors()],
        ) from e


def write_history(path: PathLike, records: Sequence[EpochRecord]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame([r.to_dict() for r in records], columns=HISTORY_COLUMNS).to_csv(
        path, index=False, float_format=DataConfig.FLOAT_FORMAT
    )
    return path


# =============================================================================
# CHECKPOINTS
# =============================================================================

@dataclass
class Checkpoint:
    model: ScmAutoencoder
    critic: Optional[MlpParams] = None
    train_config: Optional[TrainConfig] = None
    auglag: Optional[AugLagState] = None
    ae_adam: Optional[AdamState] = None
    critic_adam: Optional[AdamState] = None
    converged: Optional[bool] = None


def _adam_meta(state: Optional[AdamState]) -> Optional[dict]:
    if state is None:
        return None
    return {"step": state.step, "beta1": state.beta1, "beta2": state.beta2,
            "eps": state.eps, "lr": state.lr, "names": sorted(state.first_moment)}


def save_checkpoint(path: PathLike, ckpt: Checkpoint) -> Path:
    """Single .npz: parameter arrays plus a JSON metadata string"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    arrays: Dict[str, np.ndarray] = dict(ckpt.model.parameters())
    meta: Dict[str, Any] = {
        "format": DataConfig.CHECKPOINT_FORMAT,
        "version": DataConfig.CHECKPOINT_VERSION,
        "ae_config": ckpt.model.config.model_dump(mode="json"),
        "f1_activations": [a.value for a in ckpt.model.f1.activations],
        "f2_activations": [a.value for a in ckpt.model.f2.activations],
        "critic_activations": None,
        "train_config": ckpt.train_config.model_dump(mode="json") if ckpt.train_config else None,
        "auglag": ckpt.auglag.to_dict() if ckpt.auglag else None,
        "adam": {"ae": _adam_meta(ckpt.ae_adam), "critic": _adam_meta(ckpt.critic_adam)},
        "converged": ckpt.converged,
    }
    if ckpt.critic is not None:
        arrays.update(ckpt.critic.named("critic"))
        meta["critic_activations"] = [a.value for a in ckpt.critic.activations]
    for prefix, state in (("adam.ae", ckpt.ae_adam), ("adam.critic", ckpt.critic_adam)):
        if state is not None:
            arrays.update(state.named(prefix))
    arrays["__metadata__"] = np.array(json.dumps(meta, sort_keys=True))
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)
    return path


def _mlp_from(arrays, prefix: str, activations: List[str]) -> MlpParams:
    return MlpParams(
        [arrays[f"{prefix}.W{k}"] for k in range(len(activations))],
        [arrays[f"{prefix}.b{k}"] for k in range(len(activations))],
        activations,
    )


def _adam_from(arrays, prefix: str, meta: Optional[dict]) -> Optional[AdamState]:
    if meta is None:
        return None
    return AdamState(
        first_moment={k: arrays[f"{prefix}.m.{k}"] for k in meta["names"]},
        second_moment={k: arrays[f"{prefix}.v.{k}"] for k in meta["names"]},
        step=meta["step"], beta1=meta["beta1"], beta2=meta["beta2"],
        eps=meta["eps"], lr=meta["lr"],
    )


def load_checkpoint(path: PathLike) -> Checkpoint:
    path = Path(path)
    if not path.exists():
        raise DataFormatError(f"{path}: no such checkpoint")
    try:
        with np.load(path, allow_pickle=False) as npz:
            arrays = {k: npz[k] for k in npz.files}
    except (OSError, ValueError) as e:
        raise DataFormatError(f"{path}: not a checkpoint file ({e})") from e
    if "__metadata__" not in arrays:
        raise DataFormatError(f"{path}: checkpoint metadata missing")
    meta = json.loads(str(arrays.pop("__metadata__")))
    if meta.get("format") != DataConfig.CHECKPOINT_FORMAT:
        raise DataFormatError(f"{path}: unknown checkpoint format {meta.get('format')!r}")
    if meta.get("version") != DataConfig.CHECKPOINT_VERSION:
        raise DataFormatError(f"{path}: unsupported checkpoint version {meta.get('version')}")
    try:
        model = ScmAutoencoder(
            config=AeConfig(**meta["ae_config"]),
            A=arrays["A"],
            f1=_mlp_from(arrays, "f1", meta["f1_activations"]),
            f2=_mlp_from(arrays, "f2", meta["f2_activations"]),
        )
        critic = None
        if meta.get("critic_activations") is not None:
            critic = _mlp_from(arrays, "critic", meta["critic_activations"])
    except KeyError as e:
        raise DataFormatError(f"{path}: checkpoint is missing array {e}") from e
    return Checkpoint(
        model=model,
        critic=critic,
        train_config=TrainConfig(**meta["train_config"]) if meta.get("train_config") else None,
        auglag=AugLagState(**meta["auglag"]) if meta.get("auglag") else None,
        ae_adam=_adam_from(arrays, "adam.ae", meta["adam"].get("ae")),
        critic_adam=_adam_from(arrays, "adam.critic", meta["adam"].get("critic")),
        converged=meta.get("converged"),
    )


# =============================================================================
# TRAINING OUTPUTS
# =============================================================================

def training_artifacts(out: PathLike) -> Dict[str, Path]:
    """Files written next to a checkpoint"""
    out = Path(out)
    return {
        "checkpoint": out,
        "history": out.with_name(out.stem + ".history.csv"),
        "graph": out.with_name(out.stem + ".graph.txt"),
        "adjacency": out.with_name(out.stem + ".adjacency.csv"),
    }


def write_training_outputs(out: PathLike, result: TrainResult, cfg: TrainConfig) -> Dict[str, Path]:
    """Checkpoint, history CSV, thresholded edge list and full learned adjacency"""
    paths = training_artifacts(out)
    save_checkpoint(paths["checkpoint"], Checkpoint(
        model=result.model, critic=result.critic, train_config=cfg, auglag=result.auglag,
        ae_adam=result.ae_adam, critic_adam=result.critic_adam, converged=result.converged,
    ))
    write_history(paths["history"], result.history)
    kept = np.zeros_like(result.learned_A)
    for i, j in result.graph:
        kept[i, j] = result.learned_A[i, j]
    save_graph(paths["graph"], kept, "edge-list")
    save_graph(paths["adjacency"], result.learned_A, "adjacency-csv")
    logger.info(f"Wrote training outputs next to {paths['checkpoint']}")
    return paths
