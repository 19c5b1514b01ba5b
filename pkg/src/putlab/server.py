"""Embedded HTTP API driving the web UI: dataset upload, experiment
lifecycle, autopilot, and progressive result queries with server-side
sort and filter.

State is in memory, keyed by content digests; the result CSV on disk
remains the canonical archive. Each experiment owns one engine thread;
its results list is append-only, which makes the snapshot tokens handed
to paginating clients stable while the run progresses.
"""

import tempfile
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import Body, FastAPI, HTTPException, Query, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from . import engine, tools
from .dataset import Dataset, parse_arff, parse_csv, validate
from .errors import ConfigError, DataError, NoViablePartitionsError, PutLabError
from .metrics import (
    DEFAULT_SORT,
    TaskResult,
    format_attribute_set,
    format_rate,
    sort_results,
)
from .putmodel import LearnerSpec

MAX_UPLOAD_BYTES = 64 * 1024 * 1024


@dataclass
class DatasetEntry:
    dataset_id: str
    dataset: Dataset
    name: str
    path: str
    n_attributes: int
    n_rows: int
    class_labels: list[str]

    def summary(self) -> dict:
        return {
            "dataset_id": self.dataset_id,
            "name": self.name,
            "n_attributes": self.n_attributes,
            "n_rows": self.n_rows,
            "class_labels": self.class_labels,
            "attributes": [
                {
                    "index": meta.index,
                    "name": meta.name,
                    "kind": "nominal" if meta.is_nominal else "numeric",
                }
                for meta in self.dataset.attributes
            ],
        }


@dataclass
class ExperimentHandle:
    experiment_id: str
    dataset_id: str
    spec: engine.ExperimentSpec
    state: str = engine.PENDING
    total: int = 0
    results: list[TaskResult] = field(default_factory=list)
    failures: list[dict] = field(default_factory=list)
    control: engine.RunControl = field(default_factory=engine.RunControl)
    lock: threading.Lock = field(default_factory=threading.Lock)
    thread: threading.Thread | None = None
    started_at: float = field(default_factory=time.monotonic)
    elapsed_s: float = 0.0
    last_error: str | None = None
    output_path: str | None = None

    def status_json(self) -> dict:
        with self.lock:
            done = len(self.results) + len(self.failures)
            running = self.state == engine.RUNNING
            elapsed = (
                time.monotonic() - self.started_at if running else self.elapsed_s
            )
            eta = None
            if running and done and self.total:
                eta = elapsed / done * (self.total - done)
            return {
                "experiment_id": self.experiment_id,
                "dataset_id": self.dataset_id,
                "state": self.state,
                "done": done,
                "total": self.total,
                "failures": len(self.failures),
                "elapsed_s": round(elapsed, 3),
                "eta_s": round(eta, 3) if eta is not None else None,
                "last_error": self.last_error,
                "output_path": self.output_path,
            }


class AppState:
    def __init__(self, workdir: str | None = None):
        self.datasets: dict[str, DatasetEntry] = {}
        self.experiments: dict[str, ExperimentHandle] = {}
        self.lock = threading.Lock()
        self.workdir = Path(workdir or tempfile.mkdtemp(prefix="putlab-"))
        self.workdir.mkdir(parents=True, exist_ok=True)


RESULT_COLUMNS_BASE = ("attribute_set", "time_taken", "accuracy")
PER_CLASS_FIELDS = ("tp", "fp", "fn", "precision", "recall", "aroc", "apr")


def result_columns(n_classes: int) -> list[str]:
    cols = list(RESULT_COLUMNS_BASE)
    for i in range(n_classes):
        cols.extend(f"{name}_{i}" for name in PER_CLASS_FIELDS)
    return cols


def render_row(row: TaskResult, task_index: int) -> dict:
    """Raw values for charting plus the exact strings the UI displays."""
    cells = {
        "attribute_set": format_attribute_set(row.attribute_set),
        "time_taken": format_rate(row.time_taken_s),
        "accuracy": format_rate(row.accuracy_pct),
    }
    values = {
        "time_taken": row.time_taken_s,
        "accuracy": row.accuracy_pct,
    }
    for i, c in enumerate(row.per_class):
        for name in PER_CLASS_FIELDS:
            value = getattr(c, name)
            cells[f"{name}_{i}"] = format_rate(value)
            values[f"{name}_{i}"] = value
    return {
        "task_index": task_index,
        "attribute_set": list(row.attribute_set),
        "cells": cells,
        "values": values,
    }


def _parse_sort(sort: str | None):
    if not sort:
        return DEFAULT_SORT
    criteria = []
    for part in sort.split(","):
        part = part.strip()
        if not part:
            continue
        name, _, direction = part.partition(":")
        direction = direction or "desc"
        if direction not in ("asc", "desc"):
            raise ConfigError(f"bad sort direction {direction!r}")
        criteria.append((name, direction))
    return criteria or DEFAULT_SORT


def _parse_index_list(text: str | None) -> list[int]:
    if not text:
        return []
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad attribute index list {text!r}") from exc


def _parse_ranges(ranges: list[str]):
    parsed = []
    for spec in ranges:
        parts = spec.split(":")
        if len(parts) != 3:
            raise ConfigError(f"range filter must be field:min:max, got {spec!r}")
        name, lo, hi = parts
        parsed.append(
            (
                name,
                float(lo) if lo != "" else None,
                float(hi) if hi != "" else None,
            )
        )
    return parsed


def create_app(
    state: AppState | None = None,
    ui_dir: str | None = None,
    workdir: str | None = None,
    token: str | None = None,
) -> FastAPI:
    """API app; pass a token when binding beyond loopback, after which
    every /api request must carry `Authorization: Bearer <token>`."""
    state = state or AppState(workdir=workdir)
    app = FastAPI(title="putlab", version="0.1.0")
    app.state.putlab = state

    if token:

        @app.middleware("http")
        async def require_token(request: Request, call_next):
            if request.url.path.startswith("/api"):
                supplied = request.headers.get("authorization", "")
                if supplied != f"Bearer {token}":
                    return JSONResponse(
                        status_code=401, content={"detail": "missing or bad token"}
                    )
            return await call_next(request)

    @app.exception_handler(PutLabError)
    async def putlab_error_handler(request: Request, exc: PutLabError):
        status = 400 if isinstance(exc, (ConfigError, DataError)) else 500
        return JSONResponse(status_code=status, content={"detail": str(exc)})

    def get_dataset(dataset_id: str) -> DatasetEntry:
        entry = state.datasets.get(dataset_id)
        if entry is None:
            raise HTTPException(status_code=404, detail="unknown dataset")
        return entry

    def get_experiment(experiment_id: str) -> ExperimentHandle:
        handle = state.experiments.get(experiment_id)
        if handle is None:
            raise HTTPException(status_code=404, detail="unknown experiment")
        return handle

    @app.get("/api/ping")
    def ping():
        return {"ok": True}

    @app.post("/api/datasets")
    async def upload_dataset(
        request: Request,
        name: str | None = Query(default=None),
        format: str = Query(default="auto"),
        class_column: str | None = Query(default=None),
    ):
        body = await request.body()
        if not body:
            raise HTTPException(status_code=400, detail="empty upload")
        if len(body) > MAX_UPLOAD_BYTES:
            raise HTTPException(status_code=413, detail="upload too large")
        fmt = format if format != "auto" else engine.sniff_format(body, name or "")
        try:
            if fmt == "arff":
                ds = parse_arff(body, class_attr=class_column)
            elif fmt == "csv":
                ds = parse_csv(body, class_column=class_column)
            else:
                raise HTTPException(status_code=400, detail=f"unknown format {fmt!r}")
        except DataError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None
        violations = validate(ds)
        if violations:
            raise HTTPException(
                status_code=400,
                detail={
                    "message": "dataset failed validation",
                    "violations": [
                        {"code": v.code, "message": v.message} for v in violations
                    ],
                },
            )
        dataset_id = ds.source_digest
        with state.lock:
            if dataset_id not in state.datasets:
                path = state.workdir / f"dataset-{dataset_id[:12]}.{fmt}"
                path.write_bytes(body)
                state.datasets[dataset_id] = DatasetEntry(
                    dataset_id=dataset_id,
                    dataset=ds,
                    name=name or ds.source_name or dataset_id[:12],
                    path=str(path),
                    n_attributes=ds.n_attributes,
                    n_rows=ds.n_rows,
                    class_labels=list(ds.class_meta.labels or []),
                )
        return state.datasets[dataset_id].summary()

    @app.get("/api/datasets")
    def list_datasets():
        return [entry.summary() for entry in state.datasets.values()]

    @app.get("/api/datasets/{dataset_id}")
    def dataset_details(dataset_id: str):
        return get_dataset(dataset_id).summary()

    @app.post("/api/autopilot")
    def run_autopilot(payload: dict = Body(...)):
        entry = get_dataset(payload.get("dataset_id", ""))
        learner = LearnerSpec.from_json(payload.get("learner", "tree"))
        suggestion = tools.autopilot(
            entry.dataset,
            partition_size=payload.get("partition_size"),
            put_number=payload.get("put_number"),
            learner=learner,
            probe=bool(payload.get("probe", True)),
        )
        return suggestion.to_json()

    @app.post("/api/experiments")
    def start_experiment(payload: dict = Body(...)):
        dataset_id = payload.get("dataset_id", "")
        entry = get_dataset(dataset_id)
        allow_concurrent = bool(payload.get("allow_concurrent", False))
        with state.lock:
            if not allow_concurrent:
                for other in state.experiments.values():
                    if other.dataset_id == dataset_id and other.state in (
                        engine.PENDING,
                        engine.RUNNING,
                    ):
                        raise HTTPException(
                            status_code=409,
                            detail=f"experiment {other.experiment_id} already running",
                        )
            experiment_id = uuid.uuid4().hex[:12]
            doc = {
                k: v
                for k, v in payload.items()
                if k not in ("dataset_id", "allow_concurrent")
            }
            doc.setdefault("workers", 1)
            doc["dataset"] = entry.path
            doc["output"] = str(state.workdir / f"results-{experiment_id}.csv")
            spec = engine.ExperimentSpec.from_json(doc)
            handle = ExperimentHandle(
                experiment_id=experiment_id,
                dataset_id=dataset_id,
                spec=spec,
            )
            state.experiments[experiment_id] = handle
        _launch(handle)
        return {"experiment_id": experiment_id, "status": handle.status_json()}

    def _launch(handle: ExperimentHandle, resume_from_checkpoint: bool = False):
        def on_plan(total: int):
            with handle.lock:
                handle.total = total

        def on_result(index, result, error):
            with handle.lock:
                if error is None:
                    handle.results.append(result)
                else:
                    handle.failures.append({"task_index": index, "error": error})
                    handle.last_error = error

        def body():
            with handle.lock:
                handle.state = engine.RUNNING
                handle.started_at = time.monotonic()
            try:
                if resume_from_checkpoint:
                    ckpt_path = engine.checkpoint_path_for(handle.spec.output_path)
                    ckpt = engine.checkpoint_load(ckpt_path)
                    with handle.lock:
                        # preload the checkpointed prefix so progressive
                        # queries stay continuous across the resume
                        handle.results[:] = list(ckpt.results)
                        handle.failures[:] = list(ckpt.failures)
                        handle.total = ckpt.total_tasks
                    outcome = engine.resume(
                        ckpt_path,
                        control=handle.control,
                        on_plan=on_plan,
                        on_result=on_result,
                    )
                    rebuilt = list(outcome.results)
                else:
                    outcome = engine.run_experiment(
                        handle.spec,
                        control=handle.control,
                        on_plan=on_plan,
                        on_result=on_result,
                    )
                    rebuilt = list(outcome.results)
                with handle.lock:
                    handle.results[:] = rebuilt
                    handle.failures[:] = list(outcome.failures)
                    handle.state = outcome.status.state
                    handle.elapsed_s = time.monotonic() - handle.started_at
                    handle.output_path = outcome.output_path
            except NoViablePartitionsError as exc:
                with handle.lock:
                    handle.state = engine.FAILED
                    handle.last_error = str(exc)
                    handle.elapsed_s = time.monotonic() - handle.started_at
            except PutLabError as exc:
                with handle.lock:
                    handle.state = engine.FAILED
                    handle.last_error = str(exc)
                    handle.elapsed_s = time.monotonic() - handle.started_at
            except Exception as exc:  # keep the server alive
                with handle.lock:
                    handle.state = engine.FAILED
                    handle.last_error = f"{type(exc).__name__}: {exc}"
                    handle.elapsed_s = time.monotonic() - handle.started_at

        handle.thread = threading.Thread(target=body, daemon=True)
        handle.thread.start()

    @app.get("/api/experiments")
    def list_experiments():
        return [h.status_json() for h in state.experiments.values()]

    @app.get("/api/experiments/{experiment_id}/status")
    def experiment_status(experiment_id: str):
        return get_experiment(experiment_id).status_json()

    @app.post("/api/experiments/{experiment_id}/pause")
    def pause_experiment(experiment_id: str):
        handle = get_experiment(experiment_id)
        if handle.state != engine.RUNNING:
            raise HTTPException(status_code=409, detail=f"cannot pause a {handle.state} experiment")
        handle.control.pause()
        if handle.thread is not None:
            handle.thread.join(timeout=60)
        return handle.status_json()

    @app.post("/api/experiments/{experiment_id}/resume")
    def resume_experiment(experiment_id: str):
        handle = get_experiment(experiment_id)
        if handle.state != engine.PAUSED:
            raise HTTPException(status_code=409, detail=f"cannot resume a {handle.state} experiment")
        handle.control = engine.RunControl()
        _launch(handle, resume_from_checkpoint=True)
        return handle.status_json()

    @app.post("/api/experiments/{experiment_id}/cancel")
    def cancel_experiment(experiment_id: str):
        handle = get_experiment(experiment_id)
        if handle.state not in (engine.RUNNING, engine.PAUSED, engine.PENDING):
            raise HTTPException(status_code=409, detail=f"cannot cancel a {handle.state} experiment")
        if handle.state == engine.PAUSED:
            with handle.lock:
                handle.state = engine.CANCELLED
            return handle.status_json()
        handle.control.cancel()
        if handle.thread is not None:
            handle.thread.join(timeout=60)
        return handle.status_json()

    @app.get("/api/experiments/{experiment_id}/results")
    def experiment_results(
        experiment_id: str,
        sort: str | None = Query(default=None),
        contains: str | None = Query(default=None),
        not_contains: str | None = Query(default=None),
        range_: list[str] = Query(default=[], alias="range"),
        offset: int = Query(default=0, ge=0),
        limit: int = Query(default=100, ge=1, le=10_000),
        snapshot: int | None = Query(default=None),
    ):
        handle = get_experiment(experiment_id)
        with handle.lock:
            available = len(handle.results)
            if snapshot is None or snapshot > available:
                snapshot = available
            rows = list(enumerate(handle.results[:snapshot]))
        try:
            criteria = _parse_sort(sort)
            must = set(_parse_index_list(contains))
            must_not = set(_parse_index_list(not_contains))
            ranges = _parse_ranges(range_)

            def keep(row: TaskResult) -> bool:
                members = set(row.attribute_set)
                if must and not must.issubset(members):
                    return False
                if must_not and members & must_not:
                    return False
                for name, lo, hi in ranges:
                    value = row.field(name)
                    if value is None:
                        return False
                    if lo is not None and value < lo:
                        return False
                    if hi is not None and value > hi:
                        return False
                return True

            filtered = [(i, r) for i, r in rows if keep(r)]
            order = {
                id(r): pos
                for pos, r in enumerate(
                    sort_results([r for _, r in filtered], criteria)
                )
            }
            filtered.sort(key=lambda pair: order[id(pair[1])])
        except ConfigError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None
        page = filtered[offset : offset + limit]
        n_classes = len(rows[0][1].per_class) if rows else 2
        return {
            "experiment_id": experiment_id,
            "snapshot": snapshot,
            "total": len(filtered),
            "offset": offset,
            "limit": limit,
            "columns": result_columns(n_classes),
            "rows": [render_row(r, i) for i, r in page],
        }

    if ui_dir and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
