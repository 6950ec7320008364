"""JSON-over-HTTP experiment service consumed by the sandbox UI."""
from __future__ import annotations

import json
import os
import threading
import time
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field, field_validator

from .core import POLICY_NAMES, PopulationParams
from .experiments import (
    ExperimentSpec,
    data_dir,
    load_artifacts,
    run_experiment,
    write_experiment_outputs,
)
from .oracle import DEFAULT_BLOCK_TARGET, DEFAULT_RATING_TARGETS

API_PREFIX = "/v1"

DEFAULT_LIMITS = {
    "max_horizon_min": 20160,
    "max_seeds": 10,
    "max_policies": len(POLICY_NAMES),
}

POLICY_INFO = [
    {
        "name": "replication",
        "label": "Replication (current system)",
        "description": "Counselors claim a waiting seeker at random and start the chat after an exponential decision delay.",
        "uses_rating_model": False,
        "uses_blocking_model": False,
        "uses_deferred_acceptance": False,
    },
    {
        "name": "fcfs",
        "label": "First-come-first-serve",
        "description": "Preference lists ordered by waiting time on both sides; matched by deferred acceptance.",
        "uses_rating_model": False,
        "uses_blocking_model": False,
        "uses_deferred_acceptance": True,
    },
    {
        "name": "similarity",
        "label": "Similarity-based",
        "description": "Preference lists ordered by cosine similarity of demographic encodings.",
        "uses_rating_model": False,
        "uses_blocking_model": False,
        "uses_deferred_acceptance": True,
    },
    {
        "name": "rating",
        "label": "Rating-based",
        "description": "Preference lists ordered by the predicted 1-5 chat rating.",
        "uses_rating_model": True,
        "uses_blocking_model": False,
        "uses_deferred_acceptance": True,
    },
    {
        "name": "blocking",
        "label": "Blocking-based",
        "description": "Predicted-block pairs sink to the bottom; the rest rank by waiting time.",
        "uses_rating_model": False,
        "uses_blocking_model": True,
        "uses_deferred_acceptance": True,
    },
    {
        "name": "rating_blocking",
        "label": "Rating and blocking combined",
        "description": "Predicted-block pairs score -1, others their predicted rating.",
        "uses_rating_model": True,
        "uses_blocking_model": True,
        "uses_deferred_acceptance": True,
    },
    {
        "name": "filter",
        "label": "Filter-based pools",
        "description": "Teen, gender-minority, and general pools; random pickup within each pool.",
        "uses_rating_model": False,
        "uses_blocking_model": False,
        "uses_deferred_acceptance": False,
    },
]


class ExperimentRequest(BaseModel):
    policies: list[str] = Field(default_factory=lambda: list(POLICY_NAMES))
    seeds: int | list[int] = 5
    horizon_min: int = Field(default=10080, ge=1)
    warmup_min: int = Field(default=60, ge=0)
    recommendation_accept_prob: float = Field(default=0.9, ge=0.0, le=1.0)
    population: dict = Field(default_factory=dict)
    records: Literal["summary", "full"] = "summary"

    @field_validator("policies")
    @classmethod
    def _known_policies(cls, v: list[str]) -> list[str]:
        if not v:
            raise ValueError("policies must be non-empty")
        unknown = [p for p in v if p not in POLICY_NAMES]
        if unknown:
            raise ValueError(f"unknown policies {unknown}; valid: {list(POLICY_NAMES)}")
        if len(set(v)) != len(v):
            raise ValueError("duplicate policies")
        return v

    @field_validator("seeds")
    @classmethod
    def _seeds_ok(cls, v):
        if isinstance(v, int):
            if v < 1:
                raise ValueError("seeds count must be >= 1")
        elif not v:
            raise ValueError("seed list must be non-empty")
        return v


JobState = Literal["queued", "running", "done", "failed", "cancelled"]


@dataclass
class Job:
    id: str
    spec: ExperimentSpec
    out_dir: Path
    state: JobState = "queued"
    completed: int = 0
    total: int = 0
    submitted_at: float = field(default_factory=time.time)
    started_at: float | None = None
    finished_at: float | None = None
    error: str | None = None
    cancel_event: threading.Event = field(default_factory=threading.Event)

    def status_dict(self) -> dict:
        return {
            "id": self.id,
            "state": self.state,
            "progress": {
                "completed": self.completed,
                "total": self.total,
                "fraction": (self.completed / self.total) if self.total else 0.0,
            },
            "submitted_at": self.submitted_at,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
            "error": self.error,
        }


class JobManager:
    """Runs experiments on a bounded worker pool with cooperative cancellation."""

    def __init__(self, artifacts, base_dir: Path, max_concurrent: int | None, capacity: int):
        self.oracle, self.rating_model, self.blocking_model = artifacts
        self.base_dir = base_dir
        self.capacity = capacity
        workers = max_concurrent or max(1, (os.cpu_count() or 2) - 1)
        self.pool = ThreadPoolExecutor(max_workers=workers)
        self.jobs: dict[str, Job] = {}
        self.lock = threading.Lock()

    def active_count(self) -> int:
        with self.lock:
            return sum(1 for j in self.jobs.values() if j.state in ("queued", "running"))

    def submit(self, spec: ExperimentSpec) -> Job:
        job_id = uuid.uuid4().hex[:12]
        job = Job(
            id=job_id,
            spec=spec,
            out_dir=self.base_dir / "experiments" / job_id,
            total=len(spec.policies) * len(spec.seeds),
        )
        with self.lock:
            self.jobs[job_id] = job
        self.pool.submit(self._run_job, job)
        return job

    def _run_job(self, job: Job) -> None:
        with self.lock:
            if job.cancel_event.is_set():
                job.state = "cancelled"
                job.finished_at = time.time()
                return
            job.state = "running"
            job.started_at = time.time()

        def progress(done: int, total: int) -> None:
            job.completed = done
            job.total = total

        try:
            results = run_experiment(
                job.spec,
                self.oracle,
                self.rating_model,
                self.blocking_model,
                progress_cb=progress,
                cancel_check=job.cancel_event.is_set,
            )
            with self.lock:
                if results is None or job.cancel_event.is_set():
                    job.state = "cancelled"
                else:
                    write_experiment_outputs(job.out_dir, job.spec, results)
                    job.state = "done"
                job.finished_at = time.time()
        except Exception as exc:  # surfaced via status, not a crashed worker
            with self.lock:
                job.state = "failed"
                job.error = f"{type(exc).__name__}: {exc}"
                job.finished_at = time.time()

    def cancel(self, job: Job) -> None:
        with self.lock:
            job.cancel_event.set()
            if job.state == "queued":
                job.state = "cancelled"
                job.finished_at = time.time()


def create_app(
    data_dir_override: str | None = None,
    max_concurrent: int | None = None,
    capacity: int = 16,
    ui_dir: str | None = None,
    artifacts=None,
    limits: dict | None = None,
) -> FastAPI:
    base = data_dir(data_dir_override)
    if artifacts is None:
        artifacts = load_artifacts(base)
    limits = {**DEFAULT_LIMITS, **(limits or {}), "capacity": capacity}
    manager = JobManager(artifacts, base, max_concurrent, capacity)
    app = FastAPI(title="matchlab experiment service", version="1.0")
    app.state.manager = manager

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        errors = [
            {
                "field": ".".join(str(p) for p in err["loc"] if p != "body"),
                "message": err["msg"],
            }
            for err in exc.errors()
        ]
        return JSONResponse(status_code=400, content={"errors": errors})

    @app.get(f"{API_PREFIX}/policies")
    def get_policies():
        return {"policies": POLICY_INFO}

    @app.get(f"{API_PREFIX}/defaults")
    def get_defaults():
        return {
            "population": PopulationParams().to_dict(),
            "run": {
                "policies": list(POLICY_NAMES),
                "seeds": 5,
                "horizon_min": 10080,
                "warmup_min": 60,
                "recommendation_accept_prob": 0.9,
            },
            "calibration_targets": {
                "rating_marginal": list(DEFAULT_RATING_TARGETS),
                "block_rate": DEFAULT_BLOCK_TARGET,
            },
            "limits": limits,
        }

    @app.post(f"{API_PREFIX}/experiments", status_code=202)
    def post_experiment(req: ExperimentRequest):
        field_errors = []
        if req.horizon_min > limits["max_horizon_min"]:
            field_errors.append(
                {"field": "horizon_min", "message": f"exceeds limit {limits['max_horizon_min']}"}
            )
        n_seeds = req.seeds if isinstance(req.seeds, int) else len(req.seeds)
        if n_seeds > limits["max_seeds"]:
            field_errors.append(
                {"field": "seeds", "message": f"exceeds limit {limits['max_seeds']}"}
            )
        if field_errors:
            return JSONResponse(status_code=400, content={"errors": field_errors})
        if manager.active_count() >= capacity:
            return JSONResponse(
                status_code=429,
                content={"error": f"experiment queue full (capacity {capacity})"},
            )
        try:
            spec = ExperimentSpec(
                policies=req.policies,
                seeds=req.seeds,
                horizon_min=req.horizon_min,
                warmup_min=req.warmup_min,
                recommendation_accept_prob=req.recommendation_accept_prob,
                population=req.population,
                records=req.records,
            )
        except (ValueError, TypeError) as exc:
            return JSONResponse(
                status_code=400, content={"errors": [{"field": "", "message": str(exc)}]}
            )
        job = manager.submit(spec)
        return {"id": job.id}

    @app.get(f"{API_PREFIX}/experiments/{{job_id}}")
    def get_status(job_id: str):
        job = manager.jobs.get(job_id)
        if job is None:
            return JSONResponse(status_code=404, content={"error": f"unknown experiment {job_id}"})
        return job.status_dict()

    @app.get(f"{API_PREFIX}/experiments/{{job_id}}/results")
    def get_results(job_id: str):
        job = manager.jobs.get(job_id)
        if job is None:
            return JSONResponse(status_code=404, content={"error": f"unknown experiment {job_id}"})
        if job.state != "done":
            return JSONResponse(
                status_code=404,
                content={"error": f"results not available; experiment state is {job.state}"},
            )
        comparison = json.loads((job.out_dir / "comparison.json").read_text(encoding="utf-8"))
        subgroups = json.loads((job.out_dir / "subgroups.json").read_text(encoding="utf-8"))
        return {"id": job.id, "comparison": comparison, "subgroups": subgroups}

    @app.delete(f"{API_PREFIX}/experiments/{{job_id}}")
    def delete_experiment(job_id: str):
        job = manager.jobs.get(job_id)
        if job is None:
            return JSONResponse(status_code=404, content={"error": f"unknown experiment {job_id}"})
        manager.cancel(job)
        return {"id": job.id, "state": job.state}

    if ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
