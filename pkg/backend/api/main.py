"""
DAG-WGAN Studio - FastAPI Backend
=================================
HTTP surface over the structure-learning services.

Endpoints:
- /api/v1/simulate - Synthetic benchmark datasets (returned inline or written to disk)
- /api/v1/evaluate - SHD of learned graphs, multi-run summaries
- /api/v1/dimprob - Dimension-wise probability of binary data
- /api/v1/train - Background training job from a dataset manifest
- /api/v1/jobs/* - Job queue management
"""

import os
import logging
import uuid
from datetime import datetime
from typing import Optional, List, Dict, Any
from pathlib import Path
from contextlib import asynccontextmanager

from fastapi import FastAPI, HTTPException, BackgroundTasks
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from backend.api.middleware import setup_middleware
from backend.errors import DagWganError, TrainingDivergedError
from backend.services.autoencoder_service import DataMode
from backend.services.dataset_service import (
    load_graph,
    load_manifest,
    load_manifest_data,
    load_train_config,
    output_dir,
    write_continuous_benchmark,
    write_discrete_benchmark,
    write_training_outputs,
)
from backend.services.metrics_service import (
    dimension_wise_probability,
    evaluate_graphs,
    summarize_runs,
)
from backend.services.sem_synth_service import (
    DiscreteSimSpec,
    SemSpec,
    simulate_dataset,
)
from backend.services.trainer import TrainConfig, get_training_service

logging.basicConfig(level=logging.INFO)
logger = logging.getLogger("dagwgan-api")

# =============================================================================
# CONFIGURATION
# =============================================================================

class Config:
    # Inline simulate responses above this many cells are refused
    MAX_INLINE_CELLS = int(os.getenv("DAGWGAN_MAX_INLINE_CELLS", "200000"))
    MAX_JOBS_LISTED = 50

config = Config()

# =============================================================================
# PYDANTIC MODELS
# =============================================================================

class SimulateRequest(BaseModel):
    spec: Optional[SemSpec] = None
    discrete_spec: Optional[DiscreteSimSpec] = None
    n: int = Field(1000, ge=1)
    write_to_disk: bool = False

class SimulateResponse(BaseModel):
    num_nodes: int
    num_samples: int
    edges: List[List[int]]
    weights: Optional[List[List[float]]] = None
    data: Optional[List[List[float]]] = None
    manifest_path: Optional[str] = None

class EvaluateRequest(BaseModel):
    num_nodes: int = Field(..., ge=1)
    truth_edges: List[List[int]]
    learned_edges: Optional[List[List[int]]] = None
    shd_list: Optional[List[float]] = None

class DimProbRequest(BaseModel):
    real: List[List[float]]
    synth: List[List[float]]

class TrainRequest(BaseModel):
    manifest_path: str
    out_path: Optional[str] = None
    config_path: Optional[str] = None
    config: Optional[Dict[str, Any]] = None
    seed: Optional[int] = None

class JobStatus(BaseModel):
    job_id: str
    status: str  # queued, processing, completed, failed
    progress: float  # 0.0 - 1.0
    current_stage: Optional[str]
    result: Optional[Dict[str, Any]]
    error: Optional[str]
    created_at: str
    updated_at: str

# =============================================================================
# JOB QUEUE
# =============================================================================

class JobQueueService:
    """In-process job tracking for background training"""

    def __init__(self):
        self.jobs: Dict[str, JobStatus] = {}

    def create_job(self, job_type: str) -> str:
        """Create new job and return ID"""
        job_id = f"{job_type}_{datetime.now().strftime('%Y%m%d_%H%M%S')}_{uuid.uuid4().hex[:8]}"
        now = datetime.now().isoformat()
        self.jobs[job_id] = JobStatus(
            job_id=job_id,
            status="queued",
            progress=0.0,
            current_stage=None,
            result=None,
            error=None,
            created_at=now,
            updated_at=now
        )
        return job_id

    def update_job(self, job_id: str, **kwargs):
        """Update job status"""
        if job_id in self.jobs:
            job = self.jobs[job_id]
            for key, value in kwargs.items():
                if hasattr(job, key):
                    setattr(job, key, value)
            job.updated_at = datetime.now().isoformat()

    def get_job(self, job_id: str) -> Optional[JobStatus]:
        return self.jobs.get(job_id)

job_queue = JobQueueService()

# =============================================================================
# FASTAPI APPLICATION
# =============================================================================

@asynccontextmanager
async def lifespan(app: FastAPI):
    logger.info(f"DAG-WGAN Studio API started (outputs under {output_dir()})")
    yield
    logger.info("DAG-WGAN Studio API shutting down")

app = FastAPI(
    title="DAG-WGAN Studio API",
    description="Causal structure learning with adversarially regularized SCM autoencoders",
    version="1.0.0",
    lifespan=lifespan
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

setup_middleware(app)

# =============================================================================
# HEALTH & INFO ENDPOINTS
# =============================================================================

@app.get("/")
async def root():
    return {
        "name": "DAG-WGAN Studio",
        "version": "1.0.0",
        "status": "running",
        "endpoints": {
            "simulate": "/api/v1/simulate",
            "evaluate": "/api/v1/evaluate",
            "dimprob": "/api/v1/dimprob",
            "train": "/api/v1/train",
            "jobs": "/api/v1/jobs/*",
            "docs": "/docs"
        }
    }

@app.get("/health")
async def health():
    return {"status": "healthy", "timestamp": datetime.now().isoformat()}

# =============================================================================
# SYNTHESIS & EVALUATION ENDPOINTS
# =============================================================================

def _edge_pairs(edges) -> List[tuple]:
    pairs = []
    for edge in edges:
        if len(edge) != 2:
            raise HTTPException(status_code=422, detail=f"edge {edge} is not an (i, j) pair")
        pairs.append((int(edge[0]), int(edge[1])))
    return pairs

@app.post("/api/v1/simulate", response_model=SimulateResponse)
async def simulate(request: SimulateRequest):
    """Sample a benchmark; large or discrete datasets must be written to disk"""
    if (request.spec is None) == (request.discrete_spec is None):
        raise HTTPException(status_code=422, detail="give exactly one of spec, discrete_spec")

    if request.write_to_disk or request.discrete_spec is not None:
        if request.discrete_spec is not None:
            spec = request.discrete_spec
            out_dir = output_dir() / f"sim_discrete_m{spec.m}_seed{spec.seed}"
            manifest_path = write_discrete_benchmark(out_dir, spec, request.n)
        else:
            spec = request.spec
            out_dir = output_dir() / \
                f"sim_{spec.variant.value}_m{spec.m}_seed{spec.seed}"
            manifest_path = write_continuous_benchmark(out_dir, spec, request.n)
        manifest = load_manifest(manifest_path)
        truth = load_graph(manifest.resolve(manifest_path.parent, manifest.truth_graph_path))
        return SimulateResponse(num_nodes=manifest.num_nodes, num_samples=manifest.num_samples,
                                edges=[list(e) for e in sorted(truth.edges)],
                                manifest_path=str(manifest_path))

    spec = request.spec
    if request.n * spec.m > config.MAX_INLINE_CELLS:
        raise HTTPException(status_code=413,
                            detail="dataset too large to return inline; set write_to_disk")
    ds = simulate_dataset(spec, request.n)
    return SimulateResponse(
        num_nodes=spec.m,
        num_samples=request.n,
        edges=[list(e) for e in sorted(ds.dag.edges)],
        weights=ds.weights.tolist(),
        data=ds.data.tolist(),
    )

@app.post("/api/v1/evaluate")
async def evaluate(request: EvaluateRequest):
    """SHD of one learned graph and/or a summary of per-run SHDs"""
    report: Dict[str, Any] = {}
    if request.learned_edges is not None:
        report.update(evaluate_graphs(_edge_pairs(request.learned_edges),
                                      _edge_pairs(request.truth_edges), request.num_nodes))
    if request.shd_list:
        report["summary"] = summarize_runs(request.shd_list).to_dict()
    if not report:
        raise HTTPException(status_code=422, detail="give learned_edges and/or shd_list")
    return report

@app.post("/api/v1/dimprob")
async def dimprob(request: DimProbRequest):
    return dimension_wise_probability(request.real, request.synth).to_dict()

# =============================================================================
# TRAINING
# =============================================================================

def _train_config(request: TrainRequest) -> TrainConfig:
    cfg = load_train_config(request.config_path)
    if request.config:
        cfg = TrainConfig(**{**cfg.model_dump(), **request.config})
    if request.seed is not None:
        cfg = cfg.model_copy(update={"seed": request.seed})
    return cfg

@app.post("/api/v1/train")
async def train(request: TrainRequest, background_tasks: BackgroundTasks):
    """Queue a training run; poll /api/v1/jobs/{job_id} for the result"""
    cfg = _train_config(request)
    manifest, data = load_manifest_data(request.manifest_path)
    job_id = job_queue.create_job("train")
    out = Path(request.out_path) if request.out_path else \
        output_dir() / "runs" / f"{job_id}.npz"
    background_tasks.add_task(run_training, job_id, manifest, data, cfg, out)
    return {"job_id": job_id, "status": "queued", "checkpoint": str(out)}

async def run_training(job_id: str, manifest, data, cfg: TrainConfig, out: Path):
    job_queue.update_job(job_id, status="processing", current_stage="training", progress=0.1)
    if manifest.data_mode is DataMode.DISCRETE:
        node_dim, cards = max(manifest.cardinalities), manifest.cardinalities
    else:
        node_dim, cards = 1, None
    try:
        result = await get_training_service().train_async(
            data, cfg, manifest.num_nodes, node_dim=node_dim, data_mode=manifest.data_mode,
            cardinalities=cards,
        )
        job_queue.update_job(job_id, current_stage="writing outputs", progress=0.9)
        paths = write_training_outputs(out, result, cfg)
        job_queue.update_job(
            job_id,
            status="completed",
            progress=1.0,
            current_stage=None,
            result={
                **result.summary(),
                "edges": [list(e) for e in sorted(result.graph)],
                "files": {k: str(v) for k, v in paths.items()},
            }
        )
    except TrainingDivergedError as e:
        logger.error(f"Training job {job_id} diverged: {e.message}")
        files = {}
        if e.partial is not None:
            files = {k: str(v) for k, v in write_training_outputs(out, e.partial, cfg).items()}
        job_queue.update_job(job_id, status="failed", error=e.message,
                             result={"suggestions": e.suggestions,
                                     "checkpoint": files.get("checkpoint"), "files": files})
    except DagWganError as e:
        logger.error(f"Training job {job_id} failed: {e.message}")
        job_queue.update_job(job_id, status="failed", error=e.message,
                             result={"suggestions": e.suggestions})
    except Exception as e:
        logger.error(f"Training job {job_id} failed: {e}")
        job_queue.update_job(job_id, status="failed", error=str(e))

# =============================================================================
# JOB MANAGEMENT
# =============================================================================

@app.get("/api/v1/jobs/{job_id}")
async def get_job_status(job_id: str):
    """Get job status and result"""
    job = job_queue.get_job(job_id)
    if not job:
        raise HTTPException(status_code=404, detail="Job not found")
    return job

@app.get("/api/v1/jobs")
async def list_jobs(status: Optional[str] = None, limit: int = Config.MAX_JOBS_LISTED):
    """List all jobs, optionally filtered by status"""
    jobs = list(job_queue.jobs.values())
    if status:
        jobs = [j for j in jobs if j.status == status]
    jobs.sort(key=lambda x: x.created_at, reverse=True)
    return {"jobs": jobs[:limit], "total": len(jobs)}

# =============================================================================
# MAIN ENTRY POINT
# =============================================================================

if __name__ == "__main__":
    import uvicorn
    uvicorn.run(app, host="0.0.0.0", port=8000)
