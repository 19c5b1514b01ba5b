"""Auxiliary capabilities: the verifier (re-evaluate chosen attribute sets
on the complete dataset), the recovery front-door, and the autopilot
parameter heuristic.
"""

import io
import math
import os
import time
from dataclasses import dataclass, replace

from .dataset import Dataset, project, sample_rows
from .engine import (
    dump_checkpoint_csv,
    read_results_csv,
    resume as engine_resume,
)
from .errors import ConfigError, OutOfRangeError
from .learners import cross_validate
from .metrics import (
    DEFAULT_SORT,
    TaskResult,
    format_attribute_set,
    format_rate,
    sort_results,
    task_result,
)
from .putmodel import DICTIONARY, RANDOM, LearnerSpec, PutConfig, task_budget
from .util import derive_seed, exact_ceil_mul

AUTOPILOT_ROW_CAP = 50_000
AUTOPILOT_TASK_CAP = 10_000
AUTOPILOT_H_LADDER = (1.0, 0.5, 0.25, 0.1, 0.05)
AUTOPILOT_PROBE_ROWS = 20_000
AUTOPILOT_PROBE_SEED = 20_18


@dataclass(frozen=True)
class VerificationRow:
    attribute_set: tuple[int, ...]
    original: TaskResult | None
    full: TaskResult


@dataclass(frozen=True)
class VerificationReport:
    rows: tuple[VerificationRow, ...]
    n_classes: int


def verify(
    ds: Dataset,
    sets,
    learner: LearnerSpec,
    seed: int = 0,
    folds: int = 5,
    originals: dict | None = None,
) -> VerificationReport:
    """Re-evaluate attribute sets over the complete dataset (h = 1.0).

    Each set gets a seed derived from its own content, so the report is
    independent of the order the sets are supplied in. `originals` maps
    canonical attribute sets to the experiment rows being double-checked.
    Rows come back sorted by the default criteria of the full-data results.
    """
    sets = [tuple(sorted(set(int(a) for a in s))) for s in sets]
    if not sets:
        raise ConfigError("verifier needs at least one attribute set")
    for s in sets:
        if s[0] < 1 or s[-1] > ds.n_attributes:
            raise OutOfRangeError(
                f"attribute set {s} out of range 1..{ds.n_attributes}"
            )
    originals = originals or {}
    full_rows = []
    for s in sets:
        sub = project(ds, s)
        started = time.perf_counter()
        # same seed derivation as the engine, so full-expense experiment
        # rows and verifier rows agree exactly
        preds = cross_validate(sub, learner, folds, derive_seed(seed, "cv", s))
        result = task_result(sub.provenance, preds.true_class, preds.scores, 0.0)
        full_rows.append(replace(result, time_taken_s=time.perf_counter() - started))
    order = {
        r.attribute_set: pos
        for pos, r in enumerate(sort_results(full_rows, DEFAULT_SORT))
    }
    rows = sorted(
        (
            VerificationRow(
                attribute_set=r.attribute_set,
                original=originals.get(r.attribute_set),
                full=r,
            )
            for r in full_rows
        ),
        key=lambda row: order[row.attribute_set],
    )
    n_classes = len(full_rows[0].per_class)
    return VerificationReport(rows=tuple(rows), n_classes=n_classes)


def _metric_columns(n_classes: int) -> list[str]:
    cols = ["time_taken", "accuracy"]
    for i in range(n_classes):
        cols.extend(
            [f"tp_{i}", f"fp_{i}", f"fn_{i}", f"precision_{i}", f"recall_{i}",
             f"aroc_{i}", f"apr_{i}"]
        )
    return cols


def verification_csv(report: VerificationReport) -> str:
    """Render the verifier report: per metric, experiment value, full-data
    value, and their delta (full minus experiment)."""
    metrics = _metric_columns(report.n_classes)
    header = ["attribute_set"]
    for m in metrics:
        header.extend([f"{m}_exp", f"{m}_full", f"{m}_delta"])
    out = io.StringIO()
    out.write(",".join(header) + "\n")
    for row in report.rows:
        fields = ['"' + format_attribute_set(row.attribute_set) + '"']
        for m in metrics:
            full_value = row.full.field(m)
            exp_value = row.original.field(m) if row.original else None
            delta = (
                full_value - exp_value
                if full_value is not None and exp_value is not None
                else None
            )
            fields.extend(
                [format_rate(exp_value), format_rate(full_value), format_rate(delta)]
            )
        out.write(",".join(fields) + "\n")
    return out.getvalue()


def select_top_sets(
    csv_path, top_n: int, criteria=DEFAULT_SORT
) -> tuple[list[tuple[int, ...]], dict]:
    """Pick the top-N attribute sets from an experiment CSV by criteria.

    Returns the sets plus a map back to their original rows, ready to feed
    the verifier.
    """
    rows = read_results_csv(csv_path)
    ranked = sort_results(rows, criteria)[: max(top_n, 0)]
    originals = {r.attribute_set: r for r in ranked}
    return [r.attribute_set for r in ranked], originals


def recover(checkpoint_path, mode: str, output_path=None, control=None):
    """Front door over the engine's checkpoint machinery.

    mode='dump' writes the rows collected so far; mode='resume' continues
    the experiment to completion.
    """
    if mode == "dump":
        if output_path is None:
            raise ConfigError("dump mode needs an output path")
        count = dump_checkpoint_csv(checkpoint_path, output_path)
        return count
    if mode == "resume":
        return engine_resume(checkpoint_path, control=control, output_path=output_path)
    raise ConfigError(f"unknown recovery mode {mode!r}")


@dataclass(frozen=True)
class AutopilotSuggestion:
    vertical_expense: float
    horizontal_expense: float
    generation: str
    workers: int
    estimated_tasks: int
    runtime_class: str
    notes: tuple[str, ...]

    def to_json(self) -> dict:
        return {
            "vertical_expense": self.vertical_expense,
            "horizontal_expense": self.horizontal_expense,
            "generation": self.generation,
            "workers": self.workers,
            "estimated_tasks": self.estimated_tasks,
            "runtime_class": self.runtime_class,
            "notes": list(self.notes),
        }


def _runtime_class(seconds: float) -> str:
    if seconds < 60:
        return "seconds"
    if seconds < 3600:
        return "minutes"
    if seconds < 86400:
        return "hours"
    return "days"


def autopilot(
    ds: Dataset,
    partition_size: int | None = None,
    put_number: float | None = None,
    learner: LearnerSpec | None = None,
    task_cap: int = AUTOPILOT_TASK_CAP,
    row_cap: int = AUTOPILOT_ROW_CAP,
    probe: bool = True,
) -> AutopilotSuggestion:
    """Suggest expenses, generation method, and worker count for a dataset.

    The parameter choices are a deterministic function of (n, m, k): the
    largest ladder value of h keeping sampled rows under row_cap, the
    largest v keeping the task budget under task_cap, and random generation
    once the subset space dwarfs the budget. A short timed probe estimates
    the runtime class; it never changes the suggested parameters.
    """
    learner = learner or LearnerSpec()
    config = PutConfig(
        partition_size=partition_size, put_number=put_number, learner=learner
    )
    n = ds.n_attributes
    m = ds.n_rows
    k = config.resolve_partition_size(n)
    notes = []

    h = AUTOPILOT_H_LADDER[-1]
    for candidate in AUTOPILOT_H_LADDER:
        if m * candidate <= row_cap:
            h = candidate
            break
    if m * h > row_cap:
        notes.append(
            f"dataset has {m} rows; even h={h} exceeds {row_cap} sampled rows"
        )
    if h < 1.0:
        notes.append(
            f"h={h} keeps per-partition samples at {exact_ceil_mul(h, m)} rows"
            f" (cap {row_cap})"
        )
    else:
        notes.append(f"all {m} rows fit under the {row_cap}-row cap; h=1.0")

    space = math.comb(n, k)
    if space <= task_cap:
        v = 1.0
        notes.append(f"all {space} attribute sets fit under the {task_cap}-task cap")
    else:
        v = task_cap / space
        while task_budget(n, k, v) > task_cap:
            v = math.nextafter(v, 0.0)
        notes.append(
            f"v={v:.3g} trims {space} candidate sets to a budget of "
            f"{task_budget(n, k, v)}"
        )
    budget = task_budget(n, k, v)

    if space > 10 * budget:
        generation = RANDOM
        notes.append("random generation: the subset space dwarfs the budget")
    else:
        generation = DICTIONARY
        notes.append("dictionary generation covers the space systematically")

    workers = os.cpu_count() or 1
    runtime = "unknown"
    if probe:
        probe_h = min(1.0, AUTOPILOT_PROBE_ROWS / m)
        sample = sample_rows(ds, probe_h, AUTOPILOT_PROBE_SEED)
        started = time.perf_counter()
        for i in range(3):
            cross_validate(
                sample, learner, 5, derive_seed(AUTOPILOT_PROBE_SEED, "probe", i)
            )
        per_task = (time.perf_counter() - started) / 3
        # scale from probe rows to the suggested sample size
        scale = exact_ceil_mul(h, m) / max(sample.n_rows, 1)
        estimated = budget * per_task * scale / workers
        runtime = _runtime_class(estimated)
        notes.append(
            f"probe: ~{per_task:.2f}s per task at {sample.n_rows} rows; "
            f"estimated wall time class: {runtime}"
        )

    return AutopilotSuggestion(
        vertical_expense=v,
        horizontal_expense=h,
        generation=generation,
        workers=workers,
        estimated_tasks=budget,
        runtime_class=runtime,
        notes=tuple(notes),
    )
