"""Experiment orchestration: stream attribute sets, fork classification
tasks over a worker pool, collect results, checkpoint, and write the
result CSV.

Determinism: every task derives its row-sample and CV seeds from
(experiment seed, task index), never from scheduling, so the result set
is identical for any worker count and resuming reproduces exactly what an
uninterrupted run would have computed. Wall time is the one exception:
the time_taken column reflects the actual run.
"""

import hashlib
import io
import json
import logging
import os
import struct
import tempfile
import threading
import time
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from .dataset import Dataset, clean, parse_arff, parse_csv, project, sample_rows, validate
from .errors import (
    ConfigError,
    DataError,
    DigestMismatchError,
    NoViablePartitionsError,
    TornCheckpointError,
    VersionMismatchError,
)
from .genset import GenerationPlan, GeneratorCursor, PlanReport, plan_stream, resume_from
from .learners import cross_validate
from .metrics import TaskResult, format_attribute_set, format_rate, task_result
from .putmodel import (
    DEDUPE_KEEP,
    DEFAULT_BUDGET_CAP,
    MISSING_IMPUTE,
    PutConfig,
    task_budget,
)
from .util import derive_seed

log = logging.getLogger("putlab.engine")

CHECKPOINT_MAGIC = b"PLCK"
CHECKPOINT_VERSION = 1

PENDING = "pending"
RUNNING = "running"
PAUSED = "paused"
COMPLETED = "completed"
FAILED = "failed"
CANCELLED = "cancelled"
RECOVERED = "recovered"


def default_workers() -> int:
    env = os.environ.get("PUTLAB_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass
class ExperimentSpec:
    """Everything needed to run (and re-run) one experiment."""

    dataset_path: str
    config: PutConfig
    output_path: str
    class_column: str | None = None
    dataset_format: str = "auto"  # arff | csv | auto
    missing: str = MISSING_IMPUTE
    dedupe: str = DEDUPE_KEEP
    checkpoint_interval: int = 50
    workers: int = field(default_factory=default_workers)
    budget_cap: int | None = DEFAULT_BUDGET_CAP
    dataset_digest: str | None = None  # filled from the bytes actually read

    def to_json(self) -> dict:
        doc = self.config.to_json()
        doc.update(
            {
                "dataset": self.dataset_path,
                "class_column": self.class_column,
                "dataset_format": self.dataset_format,
                "missing": self.missing,
                "dedupe": self.dedupe,
                "output": self.output_path,
                "checkpoint_interval": self.checkpoint_interval,
                "workers": self.workers,
                "budget_cap": self.budget_cap,
            }
        )
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "ExperimentSpec":
        config = PutConfig.from_json(doc)
        return cls(
            dataset_path=doc.get("dataset", ""),
            config=config,
            output_path=doc.get("output", "results.csv"),
            class_column=doc.get("class_column"),
            dataset_format=doc.get("dataset_format", "auto"),
            missing=doc.get("missing", MISSING_IMPUTE),
            dedupe=doc.get("dedupe", DEDUPE_KEEP),
            checkpoint_interval=int(doc.get("checkpoint_interval", 50)),
            workers=int(doc.get("workers") or default_workers()),
            budget_cap=doc.get("budget_cap", DEFAULT_BUDGET_CAP),
        )

    def digest(self, dataset_digest: str) -> str:
        """Content hash binding the spec to the exact dataset bytes."""
        material = json.dumps(
            {"spec": self.config.to_json(), "dataset_digest": dataset_digest,
             "missing": self.missing, "dedupe": self.dedupe,
             "class_column": self.class_column},
            sort_keys=True,
        )
        return hashlib.sha256(material.encode("utf-8")).hexdigest()


@dataclass
class ExperimentStatus:
    state: str = PENDING
    done: int = 0
    total: int = 0
    failures: int = 0
    elapsed_s: float = 0.0
    last_error: str | None = None

    def to_json(self) -> dict:
        return dict(self.__dict__)


class RunControl:
    """Level-triggered pause/cancel flags checked at task boundaries."""

    def __init__(self):
        self._pause = threading.Event()
        self._cancel = threading.Event()

    def pause(self):
        self._pause.set()

    def unpause(self):
        self._pause.clear()

    def cancel(self):
        self._cancel.set()

    @property
    def cancel_requested(self) -> bool:
        return self._cancel.is_set()

    @property
    def pause_requested(self) -> bool:
        return self._pause.is_set()


@dataclass
class Checkpoint:
    """Durable snapshot: spec binding, cursor, and the contiguous prefix of
    finished tasks (results and recorded failures)."""

    spec_json: dict
    spec_digest: str
    dataset_digest: str
    plan_digest: str
    cursor: GeneratorCursor
    results: list[TaskResult]
    failures: list[dict]
    total_tasks: int
    status: str
    timestamp: float
    version: int = CHECKPOINT_VERSION

    def to_json(self) -> dict:
        return {
            "version": self.version,
            "spec": self.spec_json,
            "spec_digest": self.spec_digest,
            "dataset_digest": self.dataset_digest,
            "plan_digest": self.plan_digest,
            "cursor": self.cursor.to_json(),
            "rows": [r.to_json() for r in self.results],
            "failures": self.failures,
            "total_tasks": self.total_tasks,
            "status": self.status,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "Checkpoint":
        return cls(
            spec_json=doc["spec"],
            spec_digest=doc["spec_digest"],
            dataset_digest=doc["dataset_digest"],
            plan_digest=doc["plan_digest"],
            cursor=GeneratorCursor.from_json(doc["cursor"]),
            results=[TaskResult.from_json(r) for r in doc["rows"]],
            failures=list(doc.get("failures", [])),
            total_tasks=int(doc["total_tasks"]),
            status=doc["status"],
            timestamp=float(doc["timestamp"]),
            version=int(doc.get("version", 0)),
        )


def checkpoint_save(ckpt: Checkpoint, path) -> None:
    """Atomically write a length-prefixed, checksummed checkpoint file."""
    payload = json.dumps(ckpt.to_json(), sort_keys=True).encode("utf-8")
    blob = (
        CHECKPOINT_MAGIC
        + struct.pack(">I", CHECKPOINT_VERSION)
        + struct.pack(">Q", len(payload))
        + payload
        + hashlib.sha256(payload).digest()
    )
    _atomic_write_bytes(Path(path), blob)


def checkpoint_load(path) -> Checkpoint:
    raw = Path(path).read_bytes()
    if len(raw) < 16 or raw[:4] != CHECKPOINT_MAGIC:
        raise TornCheckpointError(f"{path}: not a checkpoint file")
    (file_version,) = struct.unpack(">I", raw[4:8])
    if file_version != CHECKPOINT_VERSION:
        raise VersionMismatchError(
            f"{path}: checkpoint version {file_version}, expected {CHECKPOINT_VERSION}"
        )
    (length,) = struct.unpack(">Q", raw[8:16])
    payload = raw[16 : 16 + length]
    checksum = raw[16 + length : 16 + length + 32]
    if len(payload) != length or len(checksum) != 32:
        raise TornCheckpointError(f"{path}: truncated checkpoint")
    if hashlib.sha256(payload).digest() != checksum:
        raise TornCheckpointError(f"{path}: checksum mismatch")
    try:
        doc = json.loads(payload.decode("utf-8"))
    except json.JSONDecodeError as exc:
        raise TornCheckpointError(f"{path}: corrupt payload") from exc
    ckpt = Checkpoint.from_json(doc)
    if ckpt.version != CHECKPOINT_VERSION:
        raise VersionMismatchError(
            f"{path}: payload version {ckpt.version}, expected {CHECKPOINT_VERSION}"
        )
    return ckpt


def _atomic_write_bytes(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
            handle.flush()
            os.fsync(handle.fileno())
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _atomic_write_text(path: Path, text: str) -> None:
    _atomic_write_bytes(path, text.encode("utf-8"))


def load_dataset(spec: ExperimentSpec) -> Dataset:
    """Read, parse per format (sniffing when auto), and record the digest."""
    raw = Path(spec.dataset_path).read_bytes()
    fmt = spec.dataset_format
    if fmt == "auto":
        fmt = sniff_format(raw, spec.dataset_path)
    if fmt == "arff":
        ds = parse_arff(raw, class_attr=spec.class_column)
    elif fmt == "csv":
        ds = parse_csv(raw, class_column=spec.class_column)
    else:
        raise ConfigError(f"unknown dataset format {fmt!r}")
    spec.dataset_digest = ds.source_digest
    return ds


def sniff_format(raw: bytes, path: str = "") -> str:
    if path.lower().endswith(".arff"):
        return "arff"
    if path.lower().endswith(".csv"):
        return "csv"
    head = raw[:4096].lstrip().lower()
    if head.startswith(b"%") or head.startswith(b"@relation"):
        return "arff"
    return "csv"


def prepare_dataset(spec: ExperimentSpec) -> Dataset:
    """Load, validate, and clean the experiment's dataset."""
    ds = load_dataset(spec)
    violations = validate(ds)
    if violations:
        raise DataError(
            "dataset failed validation: "
            + "; ".join(f"{v.code}: {v.message}" for v in violations)
        )
    cleaned, report = clean(ds, missing=spec.missing, dedupe=spec.dedupe)
    log.info("cleaning report: %s", json.dumps(report.to_json()))
    return cleaned


def evaluate_task(ds: Dataset, attrs, config: PutConfig) -> TaskResult:
    """Project, sample, cross-validate, and score one attribute set.

    Randomness is derived from (experiment seed, attribute set content),
    so a task's metrics depend neither on scheduling nor on stream
    position, and the verifier reproduces them exactly at h=1.0. The
    recorded time covers training and evaluation only.
    """
    canonical = tuple(sorted(int(a) for a in attrs))
    sub = project(ds, canonical)
    sampled = sample_rows(
        sub, config.horizontal_expense, derive_seed(config.seed, "sample", canonical)
    )
    started = time.perf_counter()
    preds = cross_validate(
        sampled, config.learner, config.folds, derive_seed(config.seed, "cv", canonical)
    )
    result = task_result(sub.provenance, preds.true_class, preds.scores, 0.0)
    elapsed = time.perf_counter() - started
    return replace(result, time_taken_s=elapsed)


# Worker-process globals, set once per worker by the pool initializer.
_worker_dataset: Dataset | None = None
_worker_config: PutConfig | None = None


def _pool_init(ds: Dataset, config: PutConfig) -> None:
    global _worker_dataset, _worker_config
    _worker_dataset = ds
    _worker_config = config
    import signal

    signal.signal(signal.SIGINT, signal.SIG_IGN)


def _pool_task(args):
    task_index, attrs = args
    try:
        result = evaluate_task(_worker_dataset, attrs, _worker_config)
        return task_index, result, None
    except Exception as exc:  # isolate task failures
        return task_index, None, f"{type(exc).__name__}: {exc}"


@dataclass
class RunOutcome:
    status: ExperimentStatus
    results: list[TaskResult]
    failures: list[dict]
    output_path: str | None
    report: PlanReport
    checkpoint_path: str | None


def checkpoint_path_for(output_path: str) -> str:
    return str(output_path) + ".ckpt"


def run_experiment(
    spec: ExperimentSpec,
    control: RunControl | None = None,
    on_plan=None,
    on_result=None,
    _resume: Checkpoint | None = None,
) -> RunOutcome:
    """Execute the full methodology for one experiment spec.

    Validates and cleans the dataset, streams the attribute-set plan,
    evaluates each set on the worker pool, checkpoints every
    checkpoint_interval completed tasks and on pause/cancel, and writes the
    result CSV atomically on completion. Individual task failures are
    recorded and skipped; they never abort the run.
    """
    control = control or RunControl()
    started = time.monotonic()
    status = ExperimentStatus(state=RUNNING)

    cleaned = prepare_dataset(spec)
    n = cleaned.n_attributes
    k = spec.config.resolve_partition_size(n)
    budget = task_budget(n, k, spec.config.vertical_expense, cap=spec.budget_cap)
    plan = GenerationPlan(
        n=n,
        k=k,
        method=spec.config.generation,
        budget=budget,
        privacy_exceptions=spec.config.privacy_exceptions,
        utility_exceptions=spec.config.utility_exceptions,
        seed=spec.config.seed,
    )
    spec_digest = spec.digest(spec.dataset_digest)

    results: list[TaskResult] = []
    failures: list[dict] = []
    start_index = 0
    report = PlanReport()
    if _resume is not None:
        if _resume.spec_digest != spec_digest:
            raise DigestMismatchError("checkpoint was created by a different spec")
        if _resume.plan_digest != plan.digest():
            raise DigestMismatchError("checkpoint plan does not match this spec")
        results = list(_resume.results)
        failures = list(_resume.failures)
        stream, report = resume_from(plan, _resume.cursor, report)
        start_index = _resume.cursor.emitted
        status.state = RECOVERED
    else:
        stream, report = plan_stream(plan, report)

    total = budget
    status.total = total
    status.done = len(results) + len(failures)
    if on_plan:
        on_plan(total)

    ckpt_file = checkpoint_path_for(spec.output_path)

    def write_checkpoint(state: str) -> None:
        handled = len(results) + len(failures)
        ckpt = Checkpoint(
            spec_json=spec.to_json(),
            spec_digest=spec_digest,
            dataset_digest=spec.dataset_digest,
            plan_digest=plan.digest(),
            cursor=GeneratorCursor(
                plan_digest=plan.digest(),
                emitted=handled,
                last_set=results[-1].attribute_set if results else None,
            ),
            results=results,
            failures=failures,
            total_tasks=total,
            status=state,
            timestamp=time.time(),
        )
        checkpoint_save(ckpt, ckpt_file)

    def handle_outcome(task_index, result, error) -> None:
        if error is None:
            results.append(result)
        else:
            failures.append(
                {"task_index": task_index, "error": error}
            )
            status.failures = len(failures)
            status.last_error = error
            log.error("task %d failed: %s", task_index, error)
        status.done = len(results) + len(failures)
        if on_result:
            on_result(task_index, result, error)

    tasks = enumerate(stream, start=start_index)
    interrupted_state: str | None = None
    since_checkpoint = 0

    try:
        if spec.workers <= 1:
            for task_index, attrs in tasks:
                task_index, result, error = _inline_task(
                    cleaned, attrs, spec.config, task_index
                )
                handle_outcome(task_index, result, error)
                since_checkpoint += 1
                if since_checkpoint >= spec.checkpoint_interval:
                    write_checkpoint(RUNNING)
                    since_checkpoint = 0
                interrupted_state = _control_state(control)
                if interrupted_state:
                    break
        else:
            interrupted_state = _run_pooled(
                cleaned,
                spec,
                tasks,
                control,
                handle_outcome,
                lambda st: write_checkpoint(st),
            )
    except NoViablePartitionsError:
        status.state = FAILED
        status.elapsed_s = time.monotonic() - started
        raise

    status.elapsed_s = time.monotonic() - started
    if interrupted_state:
        status.state = interrupted_state
        write_checkpoint(interrupted_state)
        return RunOutcome(status, results, failures, None, report, ckpt_file)

    write_results_csv(results, cleaned.n_classes, spec.output_path)
    status.state = COMPLETED
    write_checkpoint(COMPLETED)
    return RunOutcome(
        status, results, failures, spec.output_path, report, ckpt_file
    )


def _inline_task(ds, attrs, config, task_index):
    try:
        return task_index, evaluate_task(ds, attrs, config), None
    except Exception as exc:
        return task_index, None, f"{type(exc).__name__}: {exc}"


def _control_state(control: RunControl) -> str | None:
    if control.cancel_requested:
        return CANCELLED
    if control.pause_requested:
        return PAUSED
    return None


def _run_pooled(ds, spec, tasks, control, handle_outcome, write_checkpoint):
    """Windowed submission with in-order harvesting, so finished work is
    always a contiguous prefix of the task stream."""
    window = spec.workers * 4
    since_checkpoint = 0
    interrupted = None
    with ProcessPoolExecutor(
        max_workers=spec.workers,
        initializer=_pool_init,
        initargs=(ds, spec.config),
    ) as pool:
        pending = deque()
        stream_done = False
        while True:
            while not stream_done and len(pending) < window and not interrupted:
                try:
                    task_index, attrs = next(tasks)
                except StopIteration:
                    stream_done = True
                    break
                pending.append(pool.submit(_pool_task, (task_index, attrs)))
            if not pending:
                break
            task_index, result, error = pending.popleft().result()
            handle_outcome(task_index, result, error)
            since_checkpoint += 1
            if since_checkpoint >= spec.checkpoint_interval:
                write_checkpoint(RUNNING)
                since_checkpoint = 0
            if interrupted is None:
                interrupted = _control_state(control)
            if interrupted and not pending:
                break
        if interrupted:
            for fut in pending:
                fut.cancel()
    return interrupted


def resume(
    checkpoint_file,
    control: RunControl | None = None,
    on_plan=None,
    on_result=None,
    output_path: str | None = None,
) -> RunOutcome:
    """Continue an interrupted experiment from its checkpoint file.

    Verifies that the dataset bytes still match the digest recorded at
    checkpoint time. Resuming a completed checkpoint just re-emits the CSV.
    """
    ckpt = checkpoint_load(checkpoint_file)
    spec = ExperimentSpec.from_json(ckpt.spec_json)
    if output_path:
        spec.output_path = output_path
    raw = Path(spec.dataset_path).read_bytes()
    digest = hashlib.sha256(raw).hexdigest()
    if digest != ckpt.dataset_digest:
        raise DigestMismatchError(
            f"dataset {spec.dataset_path} no longer matches the checkpoint"
        )
    if ckpt.status == COMPLETED:
        cleaned_classes = len(ckpt.results[0].per_class) if ckpt.results else 2
        write_results_csv(ckpt.results, cleaned_classes, spec.output_path)
        status = ExperimentStatus(
            state=COMPLETED,
            done=len(ckpt.results) + len(ckpt.failures),
            total=ckpt.total_tasks,
        )
        return RunOutcome(
            status,
            list(ckpt.results),
            list(ckpt.failures),
            spec.output_path,
            PlanReport(),
            str(checkpoint_file),
        )
    return run_experiment(
        spec, control=control, on_plan=on_plan, on_result=on_result, _resume=ckpt
    )


def dump_checkpoint_csv(checkpoint_file, output_path) -> int:
    """Write the rows a checkpoint has collected so far; returns the count."""
    ckpt = checkpoint_load(checkpoint_file)
    n_classes = len(ckpt.results[0].per_class) if ckpt.results else 2
    write_results_csv(ckpt.results, n_classes, output_path)
    return len(ckpt.results)


def csv_header(n_classes: int) -> str:
    cols = ["attribute_set", "time_taken", "accuracy"]
    for i in range(n_classes):
        cols.extend(
            [
                f"tp_{i}",
                f"fp_{i}",
                f"fn_{i}",
                f"precision_{i}",
                f"recall_{i}",
                f"aroc_{i}",
                f"apr_{i}",
            ]
        )
    return ",".join(cols)


def format_result_row(row: TaskResult) -> str:
    fields = [
        '"' + format_attribute_set(row.attribute_set) + '"',
        format_rate(row.time_taken_s),
        format_rate(row.accuracy_pct),
    ]
    for c in row.per_class:
        fields.extend(
            [
                format_rate(c.tp),
                format_rate(c.fp),
                format_rate(c.fn),
                format_rate(c.precision),
                format_rate(c.recall),
                format_rate(c.aroc),
                format_rate(c.apr),
            ]
        )
    return ",".join(fields)


def write_results_csv(rows, n_classes: int, path) -> None:
    """Atomically write results in task order with the fixed header."""
    out = io.StringIO()
    out.write(csv_header(n_classes) + "\n")
    for row in rows:
        out.write(format_result_row(row) + "\n")
    _atomic_write_text(Path(path), out.getvalue())


def read_results_csv(path) -> list[TaskResult]:
    """Parse a result CSV back into TaskResult rows."""
    import csv as _csv

    with open(path, newline="") as handle:
        reader = _csv.reader(handle)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: empty result file")
        per_class_fields = 7
        n_classes = (len(header) - 3) // per_class_fields
        rows = []
        for parts in reader:
            attrs = tuple(
                int(tok) for tok in parts[0].strip("{}").split(",") if tok.strip()
            )
            from .metrics import ClassMetrics

            per_class = []
            for i in range(n_classes):
                base = 3 + i * per_class_fields

                def num(pos):
                    return float(parts[pos]) if parts[pos] != "" else None

                per_class.append(
                    ClassMetrics(
                        tp=float(parts[base]),
                        fp=float(parts[base + 1]),
                        fn=float(parts[base + 2]),
                        precision=float(parts[base + 3]),
                        recall=float(parts[base + 4]),
                        aroc=num(base + 5),
                        apr=num(base + 6),
                    )
                )
            rows.append(
                TaskResult(
                    attribute_set=attrs,
                    time_taken_s=float(parts[1]),
                    accuracy_pct=float(parts[2]),
                    per_class=tuple(per_class),
                )
            )
        return rows
