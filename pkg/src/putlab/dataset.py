"""Tabular dataset handling: ARFF and CSV ingestion, validation, cleaning,
column projection and row sampling.

Storage is columnar: one numpy array per attribute. Numeric columns are
float64 with NaN marking a missing cell; nominal columns are int32 label
codes with -1 marking a missing cell. Datasets are immutable after
construction and safe to share across threads and forked workers.
"""

import csv
import hashlib
import io
import math
import random
from dataclasses import dataclass

import numpy as np

from .errors import (
    ArffParseError,
    ConfigError,
    CsvParseError,
    DataError,
    EmptyAfterCleanError,
    EmptyDataError,
    OutOfRangeError,
)
from .putmodel import (
    DEDUPE_KEEP,
    DEDUPE_REMOVE,
    MISSING_IMPUTE,
    MISSING_REMOVE_ROWS,
)
from .util import exact_ceil_mul

NOMINAL_MISSING = -1


@dataclass(frozen=True)
class AttributeMeta:
    """One column's metadata. labels=None means numeric; class uses index 0."""

    name: str
    index: int
    labels: tuple[str, ...] | None

    @property
    def is_nominal(self) -> bool:
        return self.labels is not None

    def label_code(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            return -2  # undeclared


class Dataset:
    """Immutable columnar dataset with a designated class attribute."""

    def __init__(
        self,
        attributes,
        class_meta: AttributeMeta,
        columns,
        class_codes,
        source_name: str = "",
        provenance=None,
        source_digest: str | None = None,
    ):
        self.attributes: tuple[AttributeMeta, ...] = tuple(attributes)
        self.class_meta = class_meta
        self.columns = [np.asarray(c) for c in columns]
        self.class_codes = np.asarray(class_codes, dtype=np.int32)
        self.source_name = source_name
        self.provenance: tuple[int, ...] = (
            tuple(provenance)
            if provenance is not None
            else tuple(a.index for a in self.attributes)
        )
        self.source_digest = source_digest
        for pos, col in enumerate(self.columns):
            if len(col) != len(self.class_codes):
                raise DataError(
                    f"column {pos + 1} has {len(col)} cells for "
                    f"{len(self.class_codes)} rows"
                )
        if len(self.provenance) != len(self.attributes):
            raise DataError("provenance arity mismatch")

    @property
    def n_attributes(self) -> int:
        return len(self.attributes)

    @property
    def n_rows(self) -> int:
        return len(self.class_codes)

    @property
    def n_classes(self) -> int:
        return len(self.class_meta.labels) if self.class_meta.is_nominal else 0

    def cell(self, row: int, pos: int):
        """Decoded cell value: float, label string, or None when missing."""
        meta = self.attributes[pos]
        raw = self.columns[pos][row]
        if meta.is_nominal:
            return None if raw < 0 else meta.labels[int(raw)]
        value = float(raw)
        return None if math.isnan(value) else value

    def decoded_row(self, row: int) -> list:
        return [self.cell(row, pos) for pos in range(self.n_attributes)]

    def class_label(self, row: int) -> str | None:
        code = int(self.class_codes[row])
        if code < 0:
            return None
        return self.class_meta.labels[code]

    def observed_class_codes(self) -> np.ndarray:
        return np.unique(self.class_codes[self.class_codes >= 0])

    def row_has_missing(self, row: int) -> bool:
        return any(self.cell(row, pos) is None for pos in range(self.n_attributes))

    def take_rows(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(
            self.attributes,
            self.class_meta,
            [col[idx] for col in self.columns],
            self.class_codes[idx],
            source_name=self.source_name,
            provenance=self.provenance,
            source_digest=self.source_digest,
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        if (
            self.attributes != other.attributes
            or self.class_meta != other.class_meta
            or not np.array_equal(self.class_codes, other.class_codes)
        ):
            return False
        for a, b in zip(self.columns, other.columns):
            if a.dtype.kind != b.dtype.kind:
                return False
            if not np.array_equal(a, b, equal_nan=(a.dtype.kind == "f")):
                return False
        return True

    def __repr__(self) -> str:
        return (
            f"Dataset({self.source_name!r}, n={self.n_attributes}, "
            f"m={self.n_rows}, classes={self.n_classes})"
        )


@dataclass(frozen=True)
class Violation:
    code: str
    message: str


@dataclass
class CleanReport:
    rows_in: int = 0
    rows_out: int = 0
    removed_missing: int = 0
    imputed_cells: int = 0
    removed_duplicates: int = 0
    removed_conflicts: int = 0

    def to_json(self) -> dict:
        return {
            "rows_in": self.rows_in,
            "rows_out": self.rows_out,
            "removed_missing": self.removed_missing,
            "imputed_cells": self.imputed_cells,
            "removed_duplicates": self.removed_duplicates,
            "removed_conflicts": self.removed_conflicts,
        }


def _as_text(data) -> tuple[str, str]:
    """Return (text, sha256-of-bytes) for str/bytes/file-like input."""
    if hasattr(data, "read"):
        data = data.read()
    if isinstance(data, str):
        raw = data.encode("utf-8")
        text = data
    else:
        raw = bytes(data)
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError:
            text = raw.decode("latin-1")
    return text, hashlib.sha256(raw).hexdigest()


def _split_quoted(line: str, line_no: int) -> list[str]:
    """Split an ARFF data row or nominal spec on commas, honoring quotes."""
    fields = []
    buf = []
    quote = None
    i = 0
    while i < len(line):
        ch = line[i]
        if quote:
            if ch == "\\" and i + 1 < len(line) and line[i + 1] in "'\"\\":
                buf.append(line[i + 1])
                i += 2
                continue
            if ch == quote:
                quote = None
            else:
                buf.append(ch)
        elif ch in "'\"":
            quote = ch
        elif ch == ",":
            fields.append("".join(buf).strip())
            buf = []
        else:
            buf.append(ch)
        i += 1
    if quote:
        raise ArffParseError("unterminated quote", line_no)
    fields.append("".join(buf).strip())
    return fields


def _parse_numeric(token: str, line_no: int, col_name: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ArffParseError(
            f"cannot parse {token!r} as numeric for attribute {col_name!r}", line_no
        ) from None
    if not math.isfinite(value):
        raise ArffParseError(
            f"non-finite numeric value {token!r} for attribute {col_name!r}", line_no
        )
    return value


def _pick_class(names: list[str], class_attr: str | None, kind: str) -> int:
    """Class column position: named override, else the last column."""
    if class_attr is None:
        return len(names) - 1
    if class_attr in names:
        return names.index(class_attr)
    lowered = [n.lower() for n in names]
    matches = [i for i, n in enumerate(lowered) if n == class_attr.lower()]
    if len(matches) == 1:
        return matches[0]
    exc = ArffParseError if kind == "arff" else CsvParseError
    raise exc(f"class column {class_attr!r} not found")


def _assemble(
    names: list[str],
    kinds: list,  # per column: None for numeric, list of labels for nominal
    raw_columns: list[list],
    class_pos: int,
    source_name: str,
    digest: str,
) -> Dataset:
    class_labels = kinds[class_pos]
    if class_labels is None:
        # Numeric class: keep distinct values as labels so validation can
        # report NonNominalClass instead of parsing failing outright.
        seen: dict[float, int] = {}
        codes = []
        for v in raw_columns[class_pos]:
            if v is None or (isinstance(v, float) and math.isnan(v)):
                codes.append(NOMINAL_MISSING)
                continue
            codes.append(seen.setdefault(v, len(seen)))
        class_meta = AttributeMeta(names[class_pos], 0, None)
        class_codes = np.asarray(codes, dtype=np.int32)
    else:
        class_meta = AttributeMeta(names[class_pos], 0, tuple(class_labels))
        class_codes = np.asarray(raw_columns[class_pos], dtype=np.int32)

    attributes = []
    columns = []
    serial = 0
    for pos, name in enumerate(names):
        if pos == class_pos:
            continue
        serial += 1
        labels = kinds[pos]
        if labels is None:
            attributes.append(AttributeMeta(name, serial, None))
            columns.append(np.asarray(raw_columns[pos], dtype=np.float64))
        else:
            attributes.append(AttributeMeta(name, serial, tuple(labels)))
            columns.append(np.asarray(raw_columns[pos], dtype=np.int32))
    return Dataset(
        attributes,
        class_meta,
        columns,
        class_codes,
        source_name=source_name,
        source_digest=digest,
    )


def parse_arff(data, class_attr: str | None = None) -> Dataset:
    """Parse ARFF text into a Dataset.

    Supports `%` comment lines, case-insensitive @relation/@attribute/@data
    keywords, numeric|real|integer and {a,b,c} nominal attribute types,
    single- or double-quoted names and labels, and `?` for missing cells.
    The class attribute is the last declared one unless class_attr names
    another. Errors carry the offending line number.
    """
    text, digest = _as_text(data)
    relation = ""
    names: list[str] = []
    kinds: list = []
    in_data = False
    raw_columns: list[list] = []
    before_data_rows = 0

    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("%"):
            continue
        if not in_data:
            lower = stripped.lower()
            if lower.startswith("@relation"):
                relation = stripped[len("@relation") :].strip().strip("'\"")
            elif lower.startswith("@attribute"):
                rest = stripped[len("@attribute") :].strip()
                if not rest:
                    raise ArffParseError("@attribute without a name", line_no)
                if rest[0] in "'\"":
                    quote = rest[0]
                    end = rest.find(quote, 1)
                    if end < 0:
                        raise ArffParseError("unterminated attribute name", line_no)
                    name = rest[1:end]
                    type_spec = rest[end + 1 :].strip()
                else:
                    parts = rest.split(None, 1)
                    if len(parts) != 2:
                        raise ArffParseError(
                            f"attribute {parts[0]!r} missing a type", line_no
                        )
                    name, type_spec = parts
                if not type_spec:
                    raise ArffParseError(
                        f"attribute {name!r} missing a type", line_no
                    )
                if type_spec.startswith("{"):
                    if not type_spec.endswith("}"):
                        raise ArffParseError(
                            f"unterminated nominal specification for {name!r}", line_no
                        )
                    labels = _split_quoted(type_spec[1:-1], line_no)
                    labels = [lbl for lbl in labels if lbl != ""]
                    if not labels:
                        raise ArffParseError(
                            f"nominal attribute {name!r} declares no labels", line_no
                        )
                    if len(set(labels)) != len(labels):
                        raise ArffParseError(
                            f"duplicate label in nominal attribute {name!r}", line_no
                        )
                    kinds.append(labels)
                elif type_spec.lower() in ("numeric", "real", "integer"):
                    kinds.append(None)
                else:
                    raise ArffParseError(
                        f"unsupported attribute type {type_spec!r} for {name!r}",
                        line_no,
                    )
                names.append(name)
            elif lower.startswith("@data"):
                if not names:
                    raise ArffParseError("@data before any @attribute", line_no)
                in_data = True
                raw_columns = [[] for _ in names]
            else:
                raise ArffParseError(f"unexpected header line {stripped!r}", line_no)
            continue

        if stripped.startswith("{"):
            raise ArffParseError("sparse ARFF rows are not supported", line_no)
        values = _split_quoted(stripped, line_no)
        if len(values) != len(names):
            raise ArffParseError(
                f"row has {len(values)} values, expected {len(names)}", line_no
            )
        for pos, token in enumerate(values):
            labels = kinds[pos]
            if token == "?":
                raw_columns[pos].append(
                    float("nan") if labels is None else NOMINAL_MISSING
                )
            elif labels is None:
                raw_columns[pos].append(_parse_numeric(token, line_no, names[pos]))
            else:
                try:
                    raw_columns[pos].append(labels.index(token))
                except ValueError:
                    raise ArffParseError(
                        f"undeclared label {token!r} for attribute {names[pos]!r}",
                        line_no,
                    ) from None
        before_data_rows += 1

    if not in_data:
        raise ArffParseError("missing @data section")
    if not relation:
        raise ArffParseError("missing @relation declaration")
    class_pos = _pick_class(names, class_attr, "arff")
    return _assemble(names, kinds, raw_columns, class_pos, relation, digest)


def to_arff(ds: Dataset, relation: str | None = None) -> str:
    """Serialize a Dataset back to ARFF text, class attribute last."""

    def quote(token: str) -> str:
        if token == "" or any(ch in token for ch in " ,{}%'\"\t"):
            return "'" + token.replace("\\", "\\\\").replace("'", "\\'") + "'"
        return token

    out = io.StringIO()
    out.write(f"@relation {quote(relation or ds.source_name or 'dataset')}\n\n")
    metas = list(ds.attributes) + [ds.class_meta]
    for meta in metas:
        if meta.is_nominal:
            spec = "{" + ",".join(quote(lbl) for lbl in meta.labels) + "}"
        else:
            spec = "numeric"
        out.write(f"@attribute {quote(meta.name)} {spec}\n")
    out.write("\n@data\n")
    for row in range(ds.n_rows):
        tokens = []
        for pos, meta in enumerate(ds.attributes):
            value = ds.cell(row, pos)
            if value is None:
                tokens.append("?")
            elif meta.is_nominal:
                tokens.append(quote(value))
            else:
                tokens.append(repr(value))
        label = ds.class_label(row)
        tokens.append("?" if label is None else quote(label))
        out.write(",".join(tokens) + "\n")
    return out.getvalue()


def parse_csv(data, class_column: str | None = None) -> Dataset:
    """Parse RFC-4180 CSV with a header row into a Dataset.

    Column types are inferred: a column where every non-missing token parses
    as a finite number becomes numeric, anything else nominal with labels in
    first-appearance order. Empty strings and `?` are missing. The class
    column (named, or the last one) is coerced to nominal.
    """
    text, digest = _as_text(data)
    reader = csv.reader(io.StringIO(text))
    rows = [row for row in reader if row and not all(f == "" for f in row)]
    if not rows:
        raise EmptyDataError("CSV file is empty")
    header = [name.strip() for name in rows[0]]
    if len(set(header)) != len(header):
        raise CsvParseError("duplicate column names in header", 1)
    body = rows[1:]
    if not body:
        raise EmptyDataError("CSV has a header but no data rows")
    for line_no, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise CsvParseError(
                f"row has {len(row)} fields, expected {len(header)}", line_no
            )

    class_pos = _pick_class(header, class_column, "csv")
    tokens = [[row[pos].strip() for row in body] for pos in range(len(header))]

    kinds: list = []
    raw_columns: list[list] = []
    for pos in range(len(header)):
        col = tokens[pos]
        force_nominal = pos == class_pos
        numeric = not force_nominal
        if numeric:
            for tok in col:
                if tok in ("", "?"):
                    continue
                try:
                    if not math.isfinite(float(tok)):
                        numeric = False
                        break
                except ValueError:
                    numeric = False
                    break
        if numeric:
            kinds.append(None)
            raw_columns.append(
                [float("nan") if tok in ("", "?") else float(tok) for tok in col]
            )
        else:
            labels: list[str] = []
            positions: dict[str, int] = {}
            codes = []
            for tok in col:
                if tok in ("", "?"):
                    codes.append(NOMINAL_MISSING)
                    continue
                code = positions.get(tok)
                if code is None:
                    code = len(labels)
                    positions[tok] = code
                    labels.append(tok)
                codes.append(code)
            kinds.append(labels)
            raw_columns.append(codes)

    return _assemble(header, kinds, raw_columns, class_pos, "csv", digest)


def validate(ds: Dataset) -> list[Violation]:
    """Structural checks; an empty list means the dataset is usable."""
    violations = []
    if not ds.class_meta.is_nominal:
        violations.append(
            Violation("NonNominalClass", "class attribute must be nominal")
        )
    else:
        observed = ds.observed_class_codes()
        if len(observed) < 2:
            violations.append(
                Violation(
                    "DegenerateClass",
                    f"only {len(observed)} class label(s) observed; need at least 2",
                )
            )
        if np.any(ds.class_codes < 0):
            count = int(np.sum(ds.class_codes < 0))
            violations.append(
                Violation(
                    "MissingClassValue",
                    f"{count} row(s) have a missing class value",
                )
            )
    if ds.n_attributes < 1:
        violations.append(Violation("NoAttributes", "dataset has no attributes"))
    if ds.n_rows < 1:
        violations.append(Violation("EmptyData", "dataset has no rows"))
    return violations


def _impute(ds: Dataset) -> tuple[Dataset, int]:
    """Fill missing numeric cells with the column mean, nominal with the mode."""
    imputed = 0
    columns = []
    for pos, meta in enumerate(ds.attributes):
        col = ds.columns[pos]
        if meta.is_nominal:
            missing = col < 0
            if missing.any():
                present = col[~missing]
                if len(present):
                    fill = int(np.argmax(np.bincount(present, minlength=len(meta.labels))))
                else:
                    fill = 0
                col = col.copy()
                col[missing] = fill
                imputed += int(missing.sum())
        else:
            missing = np.isnan(col)
            if missing.any():
                present = np.sort(col[~missing])
                fill = float(np.sum(present) / len(present)) if len(present) else 0.0
                col = col.copy()
                col[missing] = fill
                imputed += int(missing.sum())
        columns.append(col)
    out = Dataset(
        ds.attributes,
        ds.class_meta,
        columns,
        ds.class_codes,
        source_name=ds.source_name,
        provenance=ds.provenance,
        source_digest=ds.source_digest,
    )
    return out, imputed


def _row_keys(ds: Dataset) -> list[tuple]:
    keys = []
    for row in range(ds.n_rows):
        parts = []
        for pos, meta in enumerate(ds.attributes):
            raw = ds.columns[pos][row]
            if meta.is_nominal:
                parts.append(int(raw))
            else:
                value = float(raw)
                parts.append(None if math.isnan(value) else value)
        keys.append(tuple(parts))
    return keys


def clean(
    ds: Dataset,
    missing: str = MISSING_REMOVE_ROWS,
    dedupe: str = DEDUPE_KEEP,
) -> tuple[Dataset, CleanReport]:
    """Cleaning pass: handle missing cells, then duplicates and conflicts.

    RemoveRows drops every row containing a missing cell. Impute fills
    missing numeric cells with the column mean over the non-missing values
    and missing nominal cells with the column mode (ties resolved to the
    lowest label index); rows with a missing *class* value are dropped
    either way, since the class is never imputed.

    Deduplication keeps the first of rows identical in all attribute cells
    and class; rows identical in all attribute cells but differing in class
    form a conflict group that is removed whole.
    """
    if missing not in (MISSING_REMOVE_ROWS, MISSING_IMPUTE):
        raise ConfigError(f"unknown missing-value strategy {missing!r}")
    if dedupe not in (DEDUPE_KEEP, DEDUPE_REMOVE):
        raise ConfigError(f"unknown dedupe strategy {dedupe!r}")

    report = CleanReport(rows_in=ds.n_rows)
    current = ds

    class_missing = current.class_codes < 0
    if missing == MISSING_REMOVE_ROWS:
        drop = class_missing.copy()
        for pos, meta in enumerate(current.attributes):
            col = current.columns[pos]
            drop |= (col < 0) if meta.is_nominal else np.isnan(col)
        report.removed_missing = int(drop.sum())
        if drop.any():
            current = current.take_rows(np.flatnonzero(~drop))
    else:
        if class_missing.any():
            report.removed_missing = int(class_missing.sum())
            current = current.take_rows(np.flatnonzero(~class_missing))
        current, report.imputed_cells = _impute(current)

    if dedupe == DEDUPE_REMOVE and current.n_rows:
        keys = _row_keys(current)
        groups: dict[tuple, list[int]] = {}
        for row, key in enumerate(keys):
            groups.setdefault(key, []).append(row)
        keep = []
        for key, rows in groups.items():
            classes = {int(current.class_codes[r]) for r in rows}
            if len(classes) > 1:
                report.removed_conflicts += len(rows)
            else:
                keep.append(rows[0])
                report.removed_duplicates += len(rows) - 1
        keep.sort()
        if len(keep) != current.n_rows:
            current = current.take_rows(keep)

    report.rows_out = current.n_rows
    if current.n_rows == 0:
        raise EmptyAfterCleanError("cleaning removed every row")
    return current, report


def project(ds: Dataset, attrs) -> Dataset:
    """Keep only the 1-based attribute positions in attrs; class always kept.

    Attributes are re-indexed serially; provenance maps each new position
    back to the original attribute index of the root dataset.
    """
    picked = tuple(sorted(set(int(a) for a in attrs)))
    if not picked:
        raise ConfigError("projection needs at least one attribute")
    if picked[0] < 1 or picked[-1] > ds.n_attributes:
        raise OutOfRangeError(
            f"attribute index out of range 1..{ds.n_attributes}: {picked}"
        )
    attributes = []
    columns = []
    provenance = []
    for serial, original in enumerate(picked, start=1):
        meta = ds.attributes[original - 1]
        attributes.append(AttributeMeta(meta.name, serial, meta.labels))
        columns.append(ds.columns[original - 1])
        provenance.append(ds.provenance[original - 1])
    return Dataset(
        attributes,
        ds.class_meta,
        columns,
        ds.class_codes,
        source_name=ds.source_name,
        provenance=provenance,
        source_digest=ds.source_digest,
    )


def sample_rows(ds: Dataset, h: float, seed: int) -> Dataset:
    """Uniform row subsample without replacement: ceil(h * m) rows.

    h=1.0 returns the dataset unchanged; otherwise rows are chosen with the
    seeded generator and kept in their original relative order, so results
    are deterministic for a fixed (dataset, h, seed).
    """
    if not 0.0 < h <= 1.0:
        raise OutOfRangeError(f"horizontal expense {h} outside (0, 1]")
    if h == 1.0:
        return ds
    count = exact_ceil_mul(h, ds.n_rows)
    rng = random.Random(seed)
    indices = sorted(rng.sample(range(ds.n_rows), count))
    return ds.take_rows(indices)
