"""Batch command-line interface.

Subcommands: run, sweep, verify, recover, autopilot, serve, inspect.
Human-readable progress goes to stderr; machine output goes to files or
stdout only. Exit codes: 0 success, 1 usage error, 2 data error,
3 runtime failure, 130 interrupted (after writing a checkpoint).
"""

import json
import signal
import sys
from pathlib import Path

import click

from . import engine, tools
from .dataset import parse_arff, parse_csv, validate
from .errors import ConfigError, DataError, PutLabError
from .metrics import DEFAULT_SORT, format_rate, sort_results
from .putmodel import (
    DEDUPE_KEEP,
    DEDUPE_REMOVE,
    DEFAULT_BUDGET_CAP,
    MISSING_IMPUTE,
    MISSING_REMOVE_ROWS,
    LearnerSpec,
    PutConfig,
    parse_exception_literal,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_RUNTIME = 3
EXIT_INTERRUPT = 130


def eprint(*args):
    print(*args, file=sys.stderr)


def _load_exceptions(literal, file_path):
    sets = list(parse_exception_literal(literal or ""))
    if file_path:
        for line in Path(file_path).read_text().splitlines():
            line = line.strip().strip("{}")
            if line:
                sets.extend(parse_exception_literal(line))
    return tuple(sets)


def _learner_options(fn):
    fn = click.option(
        "--learner",
        type=click.Choice(["tree", "naive_bayes"]),
        default=None,
        help="Classification technique to evaluate.",
    )(fn)
    fn = click.option("--min-leaf", type=int, default=None, help="Tree: minimum rows per grown branch.")(fn)
    fn = click.option("--confidence", type=float, default=None, help="Tree: pruning confidence in (0, 0.5].")(fn)
    fn = click.option("--no-pruning", is_flag=True, default=False, help="Tree: disable pessimistic pruning.")(fn)
    return fn


def _experiment_options(fn):
    fn = click.option("--dataset", type=click.Path(), default=None, help="ARFF or CSV input file.")(fn)
    fn = click.option("--class-column", default=None, help="Class attribute name (default: last column).")(fn)
    fn = click.option("--format", "dataset_format", type=click.Choice(["auto", "arff", "csv"]), default=None, help="Input format (default: sniffed).")(fn)
    fn = _learner_options(fn)
    fn = click.option("--privacy", default=None, help="Privacy exceptions, e.g. '1,3;2,5'.")(fn)
    fn = click.option("--utility", default=None, help="Utility exceptions, e.g. '4;7,9'.")(fn)
    fn = click.option("--privacy-file", type=click.Path(), default=None, help="File with one privacy exception set per line.")(fn)
    fn = click.option("--utility-file", type=click.Path(), default=None, help="File with one utility exception set per line.")(fn)
    fn = click.option("--vertical-expense", "-v", type=float, default=None, help="Fraction of all attribute sets to try, in (0, 1].")(fn)
    fn = click.option("--horizontal-expense", "-h", type=float, default=None, help="Fraction of rows per partition sample, in (0, 1].")(fn)
    fn = click.option("--generation", type=click.Choice(["dictionary", "random"]), default=None, help="Attribute-set generation method.")(fn)
    fn = click.option("--seed", type=int, default=None, help="Experiment seed.")(fn)
    fn = click.option("--folds", type=int, default=None, help="Cross-validation folds (default 5).")(fn)
    fn = click.option("--missing", type=click.Choice([MISSING_IMPUTE, MISSING_REMOVE_ROWS]), default=None, help="Missing-value handling during cleaning.")(fn)
    fn = click.option("--dedupe", type=click.Choice([DEDUPE_KEEP, DEDUPE_REMOVE]), default=None, help="Duplicate/conflict handling during cleaning.")(fn)
    fn = click.option("--checkpoint-interval", type=int, default=None, help="Tasks between checkpoints (default 50).")(fn)
    fn = click.option("--workers", type=int, default=None, envvar="PUTLAB_WORKERS", help="Worker processes (default: CPU count; env PUTLAB_WORKERS).")(fn)
    fn = click.option("--budget-cap", type=int, default=None, help=f"Hard cap on the task budget (default {DEFAULT_BUDGET_CAP}).")(fn)
    fn = click.option("--no-budget-cap", is_flag=True, default=False, help="Run the full ceil(v*C(n,k)) budget, however large.")(fn)
    fn = click.option("--spec", "spec_file", type=click.Path(), default=None, help="Experiment spec JSON; explicit flags override its fields.")(fn)
    return fn


def _build_spec(
    *,
    dataset,
    class_column,
    dataset_format,
    learner,
    min_leaf,
    confidence,
    no_pruning,
    partition_size,
    put_number,
    privacy,
    utility,
    privacy_file,
    utility_file,
    vertical_expense,
    horizontal_expense,
    generation,
    seed,
    folds,
    missing,
    dedupe,
    checkpoint_interval,
    workers,
    budget_cap,
    no_budget_cap,
    spec_file,
    out,
    autopilot_on=False,
) -> engine.ExperimentSpec:
    doc = {}
    if spec_file:
        doc = json.loads(Path(spec_file).read_text())

    if partition_size is not None and put_number is not None:
        raise click.UsageError("--partition-size and --put-number are mutually exclusive")
    if partition_size is not None:
        doc["partition_size"] = partition_size
        doc.pop("put_number", None)
    elif put_number is not None:
        doc["put_number"] = put_number
        doc.pop("partition_size", None)
    if "partition_size" not in doc and "put_number" not in doc:
        raise click.UsageError("one of --partition-size / --put-number is required")

    learner_doc = doc.get("learner")
    base = LearnerSpec.from_json(learner_doc) if learner_doc else LearnerSpec()
    kind = learner or base.kind
    doc["learner"] = {
        "kind": kind,
        "min_leaf": min_leaf if min_leaf is not None else base.min_leaf,
        "confidence": confidence if confidence is not None else base.confidence,
        "use_pruning": False if no_pruning else base.use_pruning,
    }
    if kind == "naive_bayes":
        doc["learner"] = {"kind": "naive_bayes"}

    if privacy is not None or privacy_file:
        doc["privacy_exceptions"] = [
            list(s) for s in _load_exceptions(privacy, privacy_file)
        ]
    if utility is not None or utility_file:
        doc["utility_exceptions"] = [
            list(s) for s in _load_exceptions(utility, utility_file)
        ]
    for key, value in (
        ("vertical_expense", vertical_expense),
        ("horizontal_expense", horizontal_expense),
        ("generation", generation),
        ("seed", seed),
        ("folds", folds),
        ("dataset", dataset),
        ("class_column", class_column),
        ("dataset_format", dataset_format),
        ("missing", missing),
        ("dedupe", dedupe),
        ("checkpoint_interval", checkpoint_interval),
        ("workers", workers),
        ("output", out),
    ):
        if value is not None:
            doc[key] = value
    if no_budget_cap:
        doc["budget_cap"] = None
    elif budget_cap is not None:
        doc["budget_cap"] = budget_cap
    elif "budget_cap" not in doc:
        doc["budget_cap"] = DEFAULT_BUDGET_CAP

    if not doc.get("dataset"):
        raise click.UsageError("--dataset is required")
    if not doc.get("output"):
        raise click.UsageError("--out is required")

    spec = engine.ExperimentSpec.from_json(doc)

    if autopilot_on:
        ds = engine.prepare_dataset(spec)
        suggestion = tools.autopilot(
            ds,
            partition_size=spec.config.partition_size,
            put_number=spec.config.put_number,
            learner=spec.config.learner,
        )
        eprint("autopilot:")
        for note in suggestion.notes:
            eprint(f"  - {note}")
        overrides = {}
        if vertical_expense is None:
            overrides["vertical_expense"] = suggestion.vertical_expense
        if horizontal_expense is None:
            overrides["horizontal_expense"] = suggestion.horizontal_expense
        if generation is None:
            overrides["generation"] = suggestion.generation
        if overrides:
            doc.update(overrides)
            spec = engine.ExperimentSpec.from_json(doc)
        if workers is None:
            spec.workers = suggestion.workers
    return spec


def _install_interrupt(control: engine.RunControl):
    def handler(signum, frame):
        eprint("interrupt received; writing checkpoint and stopping")
        control.cancel()

    signal.signal(signal.SIGINT, handler)
    signal.signal(signal.SIGTERM, handler)


@click.group(name="putlab")
def cli():
    """Quantify the privacy-utility trade-off of a tabular dataset."""


@cli.command(name="run")
@_experiment_options
@click.option("--partition-size", "-k", type=int, default=None, help="Number of attributes per partition.")
@click.option("--put-number", "-p", type=float, default=None, help="Trade-off number in [-1, 1]; 0 means ceil(n/2) attributes.")
@click.option("--out", "-o", type=click.Path(), default=None, help="Result CSV path.")
@click.option("--autopilot", "autopilot_on", is_flag=True, default=False, help="Let the autopilot fill v/h/generation you did not set.")
def run_cmd(**kwargs):
    """Run one experiment and write its result CSV."""
    spec = _build_spec(**kwargs)
    control = engine.RunControl()
    _install_interrupt(control)
    eprint(f"running: {spec.dataset_path} -> {spec.output_path}")
    done = {"count": 0}

    def on_result(index, result, error):
        done["count"] += 1
        if done["count"] % 25 == 0:
            eprint(f"  {done['count']} tasks done")

    outcome = engine.run_experiment(spec, control=control, on_result=on_result)
    if outcome.status.state == engine.COMPLETED:
        eprint(
            f"completed {outcome.status.done}/{outcome.status.total} tasks "
            f"({outcome.status.failures} failed) in {outcome.status.elapsed_s:.1f}s"
        )
        eprint(f"results: {outcome.output_path}")
        return EXIT_OK
    eprint(
        f"stopped ({outcome.status.state}) after {outcome.status.done} tasks; "
        f"checkpoint: {outcome.checkpoint_path}"
    )
    return EXIT_INTERRUPT


def _parse_sweep_values(text: str, is_int: bool):
    values = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        if ".." in chunk:
            lo, hi = chunk.split("..", 1)
            values.extend(range(int(lo), int(hi) + 1))
        else:
            values.append(int(chunk) if is_int else float(chunk))
    if not values:
        raise click.UsageError("empty sweep range")
    return values


@cli.command(name="sweep")
@_experiment_options
@click.option("--sizes", default=None, help="Partition sizes to sweep, e.g. '1..8' or '2,4,6'.")
@click.option("--put-numbers", default=None, help="Trade-off numbers to sweep, e.g. '-1,-0.5,0,0.5,1'.")
@click.option("--out-dir", type=click.Path(), required=True, help="Directory for per-value CSVs and summary.csv.")
def sweep_cmd(sizes, put_numbers, out_dir, **kwargs):
    """Run one experiment per partition size (or put number), sequentially."""
    if (sizes is None) == (put_numbers is None):
        raise click.UsageError("exactly one of --sizes / --put-numbers is required")
    out_root = Path(out_dir)
    out_root.mkdir(parents=True, exist_ok=True)
    values = _parse_sweep_values(
        sizes if sizes is not None else put_numbers, is_int=sizes is not None
    )

    summary_rows = []
    failures = 0
    for value in values:
        tag = f"k{value}" if sizes else f"p{value}"
        out_file = out_root / f"results_{tag}.csv"
        try:
            spec = _build_spec(
                partition_size=value if sizes else None,
                put_number=None if sizes else value,
                out=str(out_file),
                **kwargs,
            )
            eprint(f"sweep {tag}: starting")
            outcome = engine.run_experiment(spec)
            ranked = sort_results(outcome.results, DEFAULT_SORT)
            best = ranked[0] if ranked else None
            best_accuracy = max(
                (r.accuracy_pct for r in outcome.results), default=None
            )
            summary_rows.append(
                {
                    "value": value,
                    "tasks": outcome.status.done,
                    "best_accuracy": best_accuracy,
                    "top_set": best.attribute_set if best else None,
                    "top_apr_1": best.field("apr_1") if best else None,
                    "top_aroc_1": best.field("aroc_1") if best else None,
                    "top_accuracy": best.accuracy_pct if best else None,
                }
            )
        except PutLabError as exc:
            failures += 1
            eprint(f"sweep {tag}: failed: {exc}")
            summary_rows.append({"value": value, "error": str(exc)})

    summary = out_root / "summary.csv"
    with open(summary, "w") as handle:
        handle.write(
            "value,tasks,best_accuracy,top_set,top_apr_1,top_aroc_1,top_accuracy,error\n"
        )
        for row in summary_rows:
            handle.write(
                ",".join(
                    [
                        str(row.get("value")),
                        str(row.get("tasks", "")),
                        format_rate(row.get("best_accuracy")),
                        '"%s"' % "{%s}" % ", ".join(map(str, row.get("top_set") or []))
                        if row.get("top_set")
                        else "",
                        format_rate(row.get("top_apr_1")),
                        format_rate(row.get("top_aroc_1")),
                        format_rate(row.get("top_accuracy")),
                        row.get("error", ""),
                    ]
                )
                + "\n"
            )
    eprint(f"sweep summary: {summary}")
    return EXIT_OK if failures < len(values) else EXIT_RUNTIME


@cli.command(name="verify")
@click.option("--dataset", type=click.Path(), required=True, help="ARFF or CSV input file.")
@click.option("--class-column", default=None, help="Class attribute name (default: last column).")
@click.option("--format", "dataset_format", type=click.Choice(["auto", "arff", "csv"]), default="auto", help="Input format (default: sniffed).")
@_learner_options
@click.option("--sets", default=None, help="Attribute sets to verify, e.g. '1,3;2,5'.")
@click.option("--sets-file", type=click.Path(), default=None, help="File with one attribute set per line.")
@click.option("--from-csv", "from_csv", type=click.Path(), default=None, help="Experiment CSV to pick the top sets from.")
@click.option("--top", type=int, default=20, help="How many top sets to take with --from-csv.")
@click.option("--seed", type=int, default=0, help="Seed matching the experiment to reproduce.")
@click.option("--folds", type=int, default=5, help="Cross-validation folds.")
@click.option("--missing", type=click.Choice([MISSING_IMPUTE, MISSING_REMOVE_ROWS]), default=MISSING_IMPUTE, help="Missing-value handling during cleaning.")
@click.option("--dedupe", type=click.Choice([DEDUPE_KEEP, DEDUPE_REMOVE]), default=DEDUPE_KEEP, help="Duplicate/conflict handling during cleaning.")
@click.option("--out", "-o", type=click.Path(), required=True, help="Verification report CSV path.")
def verify_cmd(
    dataset,
    class_column,
    dataset_format,
    learner,
    min_leaf,
    confidence,
    no_pruning,
    sets,
    sets_file,
    from_csv,
    top,
    seed,
    folds,
    missing,
    dedupe,
    out,
):
    """Re-evaluate chosen attribute sets on the complete dataset (h=1.0)."""
    literal_sets = []
    if sets:
        literal_sets.extend(parse_exception_literal(sets))
    if sets_file:
        for line in Path(sets_file).read_text().splitlines():
            line = line.strip().strip("{}")
            if line:
                literal_sets.extend(parse_exception_literal(line))
    originals = {}
    if from_csv:
        picked, originals = tools.select_top_sets(from_csv, top)
        literal_sets.extend(picked)
    if not literal_sets:
        raise click.UsageError("no attribute sets given (--sets/--sets-file/--from-csv)")

    spec = engine.ExperimentSpec(
        dataset_path=dataset,
        config=PutConfig(partition_size=1, seed=seed, folds=folds),
        output_path=out,
        class_column=class_column,
        dataset_format=dataset_format,
        missing=missing,
        dedupe=dedupe,
    )
    ds = engine.prepare_dataset(spec)
    learner_spec = LearnerSpec(
        kind=learner or "tree",
        min_leaf=min_leaf if min_leaf is not None else 2,
        confidence=confidence if confidence is not None else 0.25,
        use_pruning=not no_pruning,
    )
    if (learner or "tree") == "naive_bayes":
        learner_spec = LearnerSpec(kind="naive_bayes")
    report = tools.verify(
        ds, literal_sets, learner_spec, seed=seed, folds=folds, originals=originals
    )
    Path(out).write_text(tools.verification_csv(report))
    eprint(f"verified {len(report.rows)} sets -> {out}")
    return EXIT_OK


@cli.command(name="recover")
@click.argument("checkpoint", type=click.Path())
@click.option("--dump", "mode_dump", is_flag=True, default=False, help="Write the rows collected so far and stop.")
@click.option("--resume", "mode_resume", is_flag=True, default=False, help="Continue the experiment to completion.")
@click.option("--out", "-o", type=click.Path(), default=None, help="Output CSV (defaults to the original path).")
def recover_cmd(checkpoint, mode_dump, mode_resume, out):
    """Dump or resume an interrupted experiment from its checkpoint."""
    if mode_dump == mode_resume:
        raise click.UsageError("exactly one of --dump / --resume is required")
    if not Path(checkpoint).exists():
        raise DataError(f"checkpoint not found: {checkpoint}")
    if mode_dump:
        if out is None:
            raise click.UsageError("--dump needs --out")
        count = tools.recover(checkpoint, "dump", output_path=out)
        eprint(f"dumped {count} rows -> {out}")
        return EXIT_OK
    control = engine.RunControl()
    _install_interrupt(control)
    outcome = tools.recover(checkpoint, "resume", output_path=out, control=control)
    if outcome.status.state == engine.COMPLETED:
        eprint(f"resumed to completion: {outcome.output_path}")
        return EXIT_OK
    eprint(f"stopped again ({outcome.status.state}); checkpoint: {outcome.checkpoint_path}")
    return EXIT_INTERRUPT


@cli.command(name="autopilot")
@click.option("--dataset", type=click.Path(), required=True, help="ARFF or CSV input file.")
@click.option("--class-column", default=None, help="Class attribute name (default: last column).")
@click.option("--format", "dataset_format", type=click.Choice(["auto", "arff", "csv"]), default="auto", help="Input format (default: sniffed).")
@click.option("--partition-size", "-k", type=int, default=None, help="Number of attributes per partition.")
@click.option("--put-number", "-p", type=float, default=None, help="Trade-off number in [-1, 1].")
@click.option("--learner", type=click.Choice(["tree", "naive_bayes"]), default="tree", help="Learner the probe times.")
@click.option("--no-probe", is_flag=True, default=False, help="Skip the timing probe (runtime class reported as unknown).")
def autopilot_cmd(dataset, class_column, dataset_format, partition_size, put_number, learner, no_probe):
    """Suggest expenses, generation method, and workers for a dataset."""
    if (partition_size is None) == (put_number is None):
        raise click.UsageError("exactly one of --partition-size / --put-number is required")
    spec = engine.ExperimentSpec(
        dataset_path=dataset,
        config=PutConfig(
            partition_size=partition_size, put_number=put_number
        ),
        output_path="unused.csv",
        class_column=class_column,
        dataset_format=dataset_format,
    )
    ds = engine.prepare_dataset(spec)
    suggestion = tools.autopilot(
        ds,
        partition_size=partition_size,
        put_number=put_number,
        learner=LearnerSpec(kind=learner),
        probe=not no_probe,
    )
    print(json.dumps(suggestion.to_json(), indent=2))
    return EXIT_OK


@cli.command(name="serve")
@click.option("--host", default="127.0.0.1", help="Bind address (loopback by default).")
@click.option("--port", type=int, default=8765, help="Bind port.")
@click.option("--ui-dir", type=click.Path(), default=None, help="Directory with the built web UI bundle.")
@click.option("--workdir", type=click.Path(), default=None, help="Directory for experiment outputs and checkpoints.")
@click.option("--token", default=None, help="Require 'Authorization: Bearer <token>' on the API; set this when binding beyond loopback.")
def serve_cmd(host, port, ui_dir, workdir, token):
    """Start the HTTP API (and web UI, if a bundle is available)."""
    import uvicorn

    from .server import create_app

    if host not in ("127.0.0.1", "localhost", "::1") and not token:
        eprint("warning: binding beyond loopback without --token")
    app = create_app(ui_dir=ui_dir, workdir=workdir, token=token)
    eprint(f"serving on http://{host}:{port}")
    uvicorn.run(app, host=host, port=port, log_level="warning")
    return EXIT_OK


@cli.command(name="inspect")
@click.argument("path", type=click.Path())
@click.option("--class-column", default=None, help="Class attribute name (default: last column).")
def inspect_cmd(path, class_column):
    """Summarize a dataset file or a checkpoint (JSON on stdout)."""
    target = Path(path)
    if not target.exists():
        raise DataError(f"no such file: {path}")
    if target.suffix == ".ckpt":
        ckpt = engine.checkpoint_load(target)
        print(
            json.dumps(
                {
                    "kind": "checkpoint",
                    "status": ckpt.status,
                    "tasks_done": len(ckpt.results) + len(ckpt.failures),
                    "total_tasks": ckpt.total_tasks,
                    "failures": len(ckpt.failures),
                    "dataset": ckpt.spec_json.get("dataset"),
                    "output": ckpt.spec_json.get("output"),
                },
                indent=2,
            )
        )
        return EXIT_OK
    raw = target.read_bytes()
    fmt = engine.sniff_format(raw, str(target))
    ds = (
        parse_arff(raw, class_attr=class_column)
        if fmt == "arff"
        else parse_csv(raw, class_column=class_column)
    )
    violations = validate(ds)
    print(
        json.dumps(
            {
                "kind": "dataset",
                "format": fmt,
                "name": ds.source_name,
                "n_attributes": ds.n_attributes,
                "n_rows": ds.n_rows,
                "class_labels": list(ds.class_meta.labels or []),
                "attributes": [
                    {
                        "index": meta.index,
                        "name": meta.name,
                        "kind": "nominal" if meta.is_nominal else "numeric",
                    }
                    for meta in ds.attributes
                ],
                "violations": [
                    {"code": v.code, "message": v.message} for v in violations
                ],
            },
            indent=2,
        )
    )
    return EXIT_OK


def main(argv=None) -> int:
    """Entry point with the documented exit-code contract."""
    try:
        code = cli.main(args=argv, standalone_mode=False)
        return int(code) if isinstance(code, int) else EXIT_OK
    except click.UsageError as exc:
        eprint(f"usage error: {exc.format_message()}")
        return EXIT_USAGE
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.Abort:
        return EXIT_INTERRUPT
    except ConfigError as exc:
        eprint(f"usage error: {exc}")
        return EXIT_USAGE
    except DataError as exc:
        eprint(f"data error: {exc}")
        return EXIT_DATA
    except FileNotFoundError as exc:
        eprint(f"data error: {exc}")
        return EXIT_DATA
    except PutLabError as exc:
        eprint(f"error: {exc}")
        return EXIT_RUNTIME
    except KeyboardInterrupt:
        return EXIT_INTERRUPT


if __name__ == "__main__":
    sys.exit(main())
