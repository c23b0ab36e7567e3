"""HTTP service wrapping the pipeline.

Each stage gets one endpoint taking the full run config in the request body;
artifacts land in the config's output directory on the server's filesystem
(client and server are assumed to share one, as with a local workbench).
The CLI calls the same handler functions in-process when no server is given,
so both paths run identical code.
"""
from __future__ import annotations

from typing import Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from . import __version__
from .config import RunConfig
from .data import load_dataset, validate_dataset
from .pipeline import (
    StageError,
    run_pipeline,
    stage_correlate,
    stage_generate,
    stage_score,
    stage_train_eval,
)


class StageRequest(BaseModel):
    config: RunConfig
    seed: Optional[int] = None
    out_dir: Optional[str] = None

    def resolved(self) -> RunConfig:
        updates = {}
        if self.seed is not None:
            updates["seed"] = self.seed
        if self.out_dir is not None:
            updates["out_dir"] = self.out_dir
        return self.config.model_copy(update=updates) if updates else self.config


class ScoreRequest(StageRequest):
    variant: Optional[str] = None
    jobs: int = 1


class TrainEvalRequest(StageRequest):
    top_k: Optional[int] = None
    variant: Optional[str] = None
    jobs: int = 1


class CorrelateRequest(StageRequest):
    metric: Optional[str] = None
    variant: Optional[str] = None


class PipelineRequest(StageRequest):
    top_k: Optional[int] = None
    variant: Optional[str] = None
    metric: Optional[str] = None
    jobs: int = 1


class ManifestRow(BaseModel):
    circuit_id: str
    file: str
    seed: int
    config_digest: str


class GenerateResponse(BaseModel):
    out_dir: str
    n_circuits: int
    manifest: list[ManifestRow]


class ScoreRow(BaseModel):
    circuit_id: str
    cnr: float
    repcap: float
    final_score: float
    config_digest: str


class ScoreResponse(BaseModel):
    out_dir: str
    scorecards: dict[str, list[ScoreRow]]


class MetricRow(BaseModel):
    circuit_id: str
    status: str
    mse: Optional[float] = None
    accuracy: Optional[float] = None
    f1: Optional[float] = None
    pr_auc: Optional[float] = None
    spearman_r: Optional[float] = None


class TrainEvalResponse(BaseModel):
    out_dir: str
    rows: list[MetricRow]


class CorrelationResult(BaseModel):
    variant: str
    metric: str
    rho: float
    n_circuits: int


class CorrelateResponse(BaseModel):
    out_dir: str
    rows: list[CorrelationResult]


class PipelineResponse(BaseModel):
    out_dir: str
    n_circuits: int
    variants: list[str]
    n_trained: int
    correlations: list[CorrelationResult]


class ValidateDataRequest(BaseModel):
    path: str
    task: Optional[str] = None


class ValidateDataResponse(BaseModel):
    path: str
    rows: int
    n_features: int
    train_rows: int
    test_rows: int
    problems: list[str]


def _wrap(stage: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    except (ValueError, OSError) as exc:
        raise HTTPException(status_code=400, detail=f"[{stage}] {exc}") from exc


def handle_generate(request: StageRequest) -> GenerateResponse:
    config = request.resolved()
    manifest = _wrap("generate", stage_generate, config)
    return GenerateResponse(
        out_dir=config.out_dir,
        n_circuits=len(manifest),
        manifest=[ManifestRow(**row) for row in manifest],
    )


def handle_score(request: ScoreRequest) -> ScoreResponse:
    config = request.resolved()
    variants = [request.variant] if request.variant else None
    results = _wrap("score", stage_score, config, variants=variants, jobs=request.jobs)
    return ScoreResponse(
        out_dir=config.out_dir,
        scorecards={
            variant: [ScoreRow(**card.__dict__) for card in cards]
            for variant, cards in results.items()
        },
    )


def handle_train_eval(request: TrainEvalRequest) -> TrainEvalResponse:
    config = request.resolved()
    rows = _wrap(
        "train-eval",
        stage_train_eval,
        config,
        top_k=request.top_k,
        variant=request.variant,
        jobs=request.jobs,
    )
    return TrainEvalResponse(out_dir=config.out_dir, rows=[MetricRow(**r) for r in rows])


def handle_correlate(request: CorrelateRequest) -> CorrelateResponse:
    config = request.resolved()
    metric_names = [request.metric] if request.metric else None
    variants = [request.variant] if request.variant else None
    rows = _wrap("correlate", stage_correlate, config, metric_names=metric_names, variants=variants)
    return CorrelateResponse(out_dir=config.out_dir, rows=[CorrelationResult(**r) for r in rows])


def handle_pipeline(request: PipelineRequest) -> PipelineResponse:
    config = request.resolved()
    metric_names = [request.metric] if request.metric else None
    summary = _wrap(
        "pipeline",
        run_pipeline,
        config,
        top_k=request.top_k,
        variant=request.variant,
        metric_names=metric_names,
        jobs=request.jobs,
    )
    return PipelineResponse(
        out_dir=config.out_dir,
        n_circuits=summary["n_circuits"],
        variants=summary["variants"],
        n_trained=summary["n_trained"],
        correlations=[CorrelationResult(**c) for c in summary["correlations"]],
    )


def handle_validate_data(request: ValidateDataRequest) -> ValidateDataResponse:
    dataset = _wrap("validate-data", load_dataset, request.path)
    problems = validate_dataset(dataset, request.task) if request.task else []
    return ValidateDataResponse(
        path=request.path,
        rows=int(dataset.features.shape[0]),
        n_features=dataset.n_features,
        train_rows=int(dataset.rows("train").size),
        test_rows=int(dataset.rows("test").size),
        problems=problems,
    )


app = FastAPI(title="vqcsearch", version=__version__)


@app.get("/health")
def health() -> dict:
    return {"status": "ok", "version": __version__}


@app.post("/stages/generate", response_model=GenerateResponse)
def post_generate(request: StageRequest) -> GenerateResponse:
    return handle_generate(request)


@app.post("/stages/score", response_model=ScoreResponse)
def post_score(request: ScoreRequest) -> ScoreResponse:
    return handle_score(request)


@app.post("/stages/train-eval", response_model=TrainEvalResponse)
def post_train_eval(request: TrainEvalRequest) -> TrainEvalResponse:
    return handle_train_eval(request)


@app.post("/stages/correlate", response_model=CorrelateResponse)
def post_correlate(request: CorrelateRequest) -> CorrelateResponse:
    return handle_correlate(request)


@app.post("/pipeline", response_model=PipelineResponse)
def post_pipeline(request: PipelineRequest) -> PipelineResponse:
    return handle_pipeline(request)


@app.post("/datasets/validate", response_model=ValidateDataResponse)
def post_validate_data(request: ValidateDataRequest) -> ValidateDataResponse:
    return handle_validate_data(request)
