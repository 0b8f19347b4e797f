"""HTTP API over a pipeline data directory.

Serves the metric-by-batch model grid, trains cells as background jobs,
holds the active selection server-side, and runs generation end to end
(generate, remap, validate) per request. State lives in the data
directory plus in-process job/run stores; restarting the service keeps
trained models but forgets jobs, runs, and the selection.

Routes (all JSON unless noted):

    GET  /api/catalog                      grid of cell states
    POST /api/train                        start a training job (202)
    GET  /api/jobs/{job_id}                job status + loss history
    POST /api/selection                    toggle cells ready <-> active
    POST /api/generate                     run generation, returns run id
    GET  /api/runs/{run_id}                run status summary
    GET  /api/runs/{run_id}/envelope/{metric}   envelope + real overlay
    GET  /api/runs/{run_id}/logs           remapped log ids
    GET  /api/runs/{run_id}/logs/{log_id}  one remapped log (YAML text)
    GET  /                                 dashboard bundle, when present

Error bodies are always {"error": "..."}.
"""

from __future__ import annotations

import dataclasses
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from fastapi import FastAPI
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles

from .genesis import ModelRegistry
from .ingest import write_log_yamlite
from .model import BatchId, Catalog, MetricId
from .neural import ModelRecord, TrainConfig, record_to_json
from .pipeline import (atomic_write_text, build_registry, derive_seed,
                       load_catalog, load_models, model_path, run_generation,
                       train_slice)

STATE_UNTRAINED = "untrained"
STATE_READY = "ready"
STATE_ACTIVE = "active"

JOB_QUEUED = "queued"
JOB_RUNNING = "running"
JOB_DONE = "done"
JOB_FAILED = "failed"


def _error(status: int, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": message})


class ServiceState:
    """Mutable service-side state with one coarse lock.

    Training runs on a bounded pool; everything that touches the shared
    dicts (models, jobs, runs, selection) does so under `self.lock`.
    """

    def __init__(self, data_dir: Path, max_workers: int | None = None):
        self.data_dir = Path(data_dir)
        self.lock = threading.Lock()
        self.catalog: Catalog | None = None
        self.dt_ms: int | None = None
        self.models: dict[tuple[MetricId, BatchId], ModelRecord] = {}
        self.active: set[tuple[MetricId, BatchId]] = set()
        self.jobs: dict[str, dict] = {}
        self.runs: dict[str, dict] = {}
        self._counter = 0
        self.executor = ThreadPoolExecutor(
            max_workers=max_workers or os.cpu_count() or 2,
            thread_name_prefix="train")
        self.reload()

    def reload(self) -> None:
        try:
            catalog, dt_ms = load_catalog(self.data_dir)
        except FileNotFoundError:
            return
        with self.lock:
            self.catalog, self.dt_ms = catalog, dt_ms
            self.models = load_models(self.data_dir)

    def next_id(self, prefix: str) -> str:
        with self.lock:
            self._counter += 1
            return f"{prefix}{self._counter:04d}"

    def cell_state(self, metric: MetricId, batch: BatchId) -> str:
        if (metric, batch) not in self.models:
            return STATE_UNTRAINED
        return STATE_ACTIVE if (metric, batch) in self.active else STATE_READY

    def grid(self) -> dict:
        assert self.catalog is not None
        metrics = self.catalog.metrics()
        batches = self.catalog.batches()
        cells = [{"metric": m, "batch": b, "state": self.cell_state(m, b)}
                 for m in metrics for b in batches]
        return {"metrics": metrics, "batches": batches, "cells": cells}

    def registry(self) -> ModelRegistry:
        assert self.catalog is not None and self.dt_ms is not None
        return build_registry(self.catalog, self.dt_ms, dict(self.models))


def _train_job(state: ServiceState, job_id: str) -> None:
    with state.lock:
        job = state.jobs[job_id]
        job["status"] = JOB_RUNNING
        metric, batch = job["metric"], job["batch"]
        cfg: TrainConfig = job["config"]
        catalog, dt_ms = state.catalog, state.dt_ms
    try:
        record = train_slice(catalog, dt_ms, metric, batch, cfg)
    except (ValueError, ArithmeticError) as exc:
        with state.lock:
            job["status"] = JOB_FAILED
            job["error"] = str(exc)
        return
    atomic_write_text(model_path(state.data_dir, metric, batch),
                      record_to_json(record))
    with state.lock:
        state.models[(metric, batch)] = record
        job["status"] = JOB_DONE
        job["loss_history"] = record.loss_history
        job["stopped_epoch"] = record.stopped_epoch


def create_app(data_dir: Path, static_dir: str | Path | None = None,
               max_workers: int | None = None) -> FastAPI:
    state = ServiceState(Path(data_dir), max_workers=max_workers)
    app = FastAPI(title="genlog", docs_url=None, redoc_url=None)
    app.state.genlog = state

    def catalog_missing() -> JSONResponse | None:
        if state.catalog is None:
            state.reload()
        if state.catalog is None:
            return _error(503, f"no catalog ingested under {state.data_dir}")
        return None

    @app.get("/api/catalog")
    def get_catalog():
        missing = catalog_missing()
        if missing:
            return missing
        with state.lock:
            return state.grid()

    @app.post("/api/train", status_code=202)
    def post_train(body: dict):
        missing = catalog_missing()
        if missing:
            return missing
        metric, batch = body.get("metric"), body.get("batch")
        if not isinstance(metric, str) or not isinstance(batch, str):
            return _error(400, "body must carry string fields 'metric' and 'batch'")
        if metric not in state.catalog.metrics() or batch not in state.catalog.batches():
            return _error(404, f"unknown cell ({metric!r}, {batch!r})")
        overrides = body.get("config") or {}
        if not isinstance(overrides, dict):
            return _error(400, "'config' must be an object of TrainConfig overrides")
        try:
            cfg = dataclasses.replace(TrainConfig(), **overrides)
        except (TypeError, ValueError) as exc:
            return _error(400, f"bad config override: {exc}")
        if "seed" not in overrides:
            cfg = dataclasses.replace(cfg, seed=derive_seed(cfg.seed, metric, batch))
        with state.lock:
            # Duplicate check and insertion are atomic under the one lock.
            for job in state.jobs.values():
                if (job["metric"], job["batch"]) == (metric, batch) \
                        and job["status"] in (JOB_QUEUED, JOB_RUNNING):
                    return _error(409, f"training already in progress for "
                                       f"({metric!r}, {batch!r}): {job['id']}")
            state._counter += 1
            job_id = f"job{state._counter:04d}"
            state.jobs[job_id] = {
                "id": job_id, "metric": metric, "batch": batch,
                "status": JOB_QUEUED, "config": cfg,
                "loss_history": [], "stopped_epoch": None, "error": None,
            }
        state.executor.submit(_train_job, state, job_id)
        return {"job_id": job_id}

    @app.get("/api/jobs/{job_id}")
    def get_job(job_id: str):
        with state.lock:
            job = state.jobs.get(job_id)
            if job is None:
                return _error(404, f"unknown job {job_id!r}")
            return {
                "id": job["id"], "metric": job["metric"], "batch": job["batch"],
                "status": job["status"], "loss_history": list(job["loss_history"]),
                "stopped_epoch": job["stopped_epoch"], "error": job["error"],
            }

    @app.post("/api/selection")
    def post_selection(body: dict):
        missing = catalog_missing()
        if missing:
            return missing
        cells = body.get("cells")
        if not isinstance(cells, list):
            return _error(400, "body must carry a 'cells' list")
        parsed: list[tuple[str, str]] = []
        for item in cells:
            if not isinstance(item, dict) or not isinstance(item.get("metric"), str) \
                    or not isinstance(item.get("batch"), str):
                return _error(400, "each cell needs string 'metric' and 'batch'")
            parsed.append((item["metric"], item["batch"]))
        with state.lock:
            # Validate the whole toggle set before mutating anything.
            for metric, batch in parsed:
                if state.cell_state(metric, batch) == STATE_UNTRAINED:
                    return _error(400, f"cell ({metric!r}, {batch!r}) is untrained")
            for cell in parsed:
                if cell in state.active:
                    state.active.discard(cell)
                else:
                    state.active.add(cell)
            return state.grid()

    @app.post("/api/generate")
    def post_generate(body: dict):
        missing = catalog_missing()
        if missing:
            return missing
        count = body.get("count", 10)
        seed = body.get("seed", 0)
        if not isinstance(count, int) or count < 1:
            return _error(400, "'count' must be a positive integer")
        if not isinstance(seed, int):
            return _error(400, "'seed' must be an integer")
        with state.lock:
            if not state.active:
                return _error(409, "no active cells selected")
            cells = sorted(state.active)
            catalog = state.catalog
        registry = state.registry()
        try:
            selection = registry.selection_for(cells)
        except (KeyError, ValueError) as exc:
            return _error(409, str(exc))
        run_id = state.next_id("run")
        try:
            result = run_generation(registry, selection, count, seed, catalog,
                                    data_dir=state.data_dir / "runs" / run_id)
        except ValueError as exc:
            return _error(400, f"generation failed: {exc}")
        with state.lock:
            state.runs[run_id] = {
                "id": run_id, "status": "done", "count": count, "seed": seed,
                "logs": {log.id: log for log in result["out_logs"]},
                "remap_failures": result["remap_failures"],
                "report": result["report"],
            }
        return {"run_id": run_id}

    def _run_or_error(run_id: str):
        run = state.runs.get(run_id)
        if run is None:
            return None, _error(404, f"unknown run {run_id!r}")
        return run, None

    @app.get("/api/runs/{run_id}")
    def get_run(run_id: str):
        run, err = _run_or_error(run_id)
        if err:
            return err
        return {"id": run["id"], "status": run["status"], "count": run["count"],
                "seed": run["seed"], "logs": sorted(run["logs"]),
                "remap_failures": run["remap_failures"]}

    @app.get("/api/runs/{run_id}/envelope/{metric}")
    def get_envelope(run_id: str, metric: str):
        run, err = _run_or_error(run_id)
        if err:
            return err
        entry = run["report"]["metrics"].get(metric)
        if entry is None:
            return _error(404, f"run {run_id!r} has no metric {metric!r}")
        return {"run_id": run_id, "metric": metric, **entry}

    @app.get("/api/runs/{run_id}/logs")
    def get_run_logs(run_id: str):
        run, err = _run_or_error(run_id)
        if err:
            return err
        return {"run_id": run_id, "logs": sorted(run["logs"])}

    @app.get("/api/runs/{run_id}/logs/{log_id}")
    def get_run_log(run_id: str, log_id: str):
        run, err = _run_or_error(run_id)
        if err:
            return err
        log = run["logs"].get(log_id)
        if log is None:
            return _error(404, f"run {run_id!r} has no log {log_id!r}")
        return PlainTextResponse(write_log_yamlite(log),
                                 media_type="text/plain; charset=utf-8")

    if static_dir and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True),
                  name="dashboard")
    else:
        @app.get("/")
        def index():
            return {"service": "genlog", "api": "/api/catalog"}

    return app
