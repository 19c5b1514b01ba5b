"""Trade-off model parameters: partition sizing, exceptions, budgets.

The privacy-utility dial is a real number in [-1, 1]: -1 keeps a single
attribute (maximum privacy), +1 keeps all n attributes (maximum utility),
and 0 keeps ceil(n/2). Exceptions are attribute combinations that either
must never appear together in an evaluated subset (privacy) or should be
kept preferentially when the budget forces truncation (utility).
"""

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import ConfigError, OutOfRangeError

DICTIONARY = "dictionary"
RANDOM = "random"
GENERATION_METHODS = (DICTIONARY, RANDOM)

MISSING_REMOVE_ROWS = "remove_rows"
MISSING_IMPUTE = "impute"
DEDUPE_KEEP = "keep"
DEDUPE_REMOVE = "remove"

DEFAULT_BUDGET_CAP = 10_000_000


def canonical_attribute_set(indices: Iterable[int]) -> tuple[int, ...]:
    """Sorted, duplicate-free tuple of 1-based attribute indices."""
    out = tuple(sorted(set(int(i) for i in indices)))
    if not out:
        raise ConfigError("attribute set must not be empty")
    if out[0] < 1:
        raise OutOfRangeError(f"attribute index {out[0]} is not 1-based")
    return out


def parse_exception_literal(text: str) -> list[tuple[int, ...]]:
    """Parse ``1,3;2,5`` into [(1, 3), (2, 5)]. Empty text means no sets."""
    text = text.strip()
    if not text:
        return []
    sets = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            sets.append(canonical_attribute_set(int(tok) for tok in chunk.split(",")))
        except ValueError as exc:
            raise ConfigError(f"bad attribute set literal {chunk!r}") from exc
    return sets


def put_to_partition_size(p: float, n: int) -> int:
    """Map a trade-off number in [-1, 1] to a partition size in [1, n].

    0 maps to ceil(n/2); the scale is linear on each side of 0, with the
    nearest integer taken and exact .5 ties rounded down. This is the
    unique simple rule consistent with the published n=30 reference points
    (e.g. 0.25 -> 19, 0.5 -> 22, -0.25 -> 11, -0.75 -> 4).
    """
    if not -1.0 <= p <= 1.0:
        raise OutOfRangeError(f"put number {p} outside [-1, 1]")
    if n < 1:
        raise OutOfRangeError(f"attribute count {n} must be >= 1")
    mid = math.ceil(n / 2)
    if p >= 0:
        raw = mid + p * (n - mid)
    else:
        raw = mid + p * (mid - 1)
    k = math.ceil(raw - 0.5)  # nearest integer, .5 ties toward the floor
    return min(max(k, 1), n)


def task_budget(n: int, k: int, v: float, cap: int | None = None) -> int:
    """Number of attribute sets to evaluate: ceil(v * C(n, k)).

    Computed with exact big-integer arithmetic so v=1.0 returns exactly
    C(n, k). An optional cap saturates the result; callers that can run
    unbounded pass cap=None.
    """
    if not 1 <= k <= n:
        raise OutOfRangeError(f"partition size {k} outside [1, {n}]")
    if not 0.0 < v <= 1.0:
        raise OutOfRangeError(f"vertical expense {v} outside (0, 1]")
    budget = math.ceil(Fraction(v) * math.comb(n, k))
    if cap is not None:
        budget = min(budget, cap)
    return budget


def violates_privacy(s: Sequence[int], exceptions: Sequence[Sequence[int]]) -> bool:
    """True iff some privacy exception is a subset of s."""
    members = set(s)
    return any(members.issuperset(e) for e in exceptions)


def boosts_utility(s: Sequence[int], exceptions: Sequence[Sequence[int]]) -> bool:
    """True iff some utility exception is a subset of s.

    Pure containment check; privacy precedence over utility is enforced by
    the set generator, not here.
    """
    members = set(s)
    return any(members.issuperset(e) for e in exceptions)


@dataclass(frozen=True)
class LearnerSpec:
    """Learning objective: which classifier to run, with its knobs."""

    kind: str = "tree"  # "naive_bayes" | "tree"
    min_leaf: int = 2
    confidence: float = 0.25
    use_pruning: bool = True

    def __post_init__(self):
        if self.kind not in ("naive_bayes", "tree"):
            raise ConfigError(f"unknown learner kind {self.kind!r}")
        if self.min_leaf < 1:
            raise ConfigError("min_leaf must be >= 1")
        if not 0.0 < self.confidence <= 0.5:
            raise ConfigError("confidence must be in (0, 0.5]")

    def to_json(self) -> dict:
        if self.kind == "naive_bayes":
            return {"kind": "naive_bayes"}
        return {
            "kind": "tree",
            "min_leaf": self.min_leaf,
            "confidence": self.confidence,
            "use_pruning": self.use_pruning,
        }

    @classmethod
    def from_json(cls, obj) -> "LearnerSpec":
        if isinstance(obj, str):
            return cls(kind=obj)
        if isinstance(obj, dict):
            known = {"kind", "min_leaf", "confidence", "use_pruning"}
            unknown = set(obj) - known
            if unknown:
                raise ConfigError(f"unknown learner fields: {sorted(unknown)}")
            return cls(**{k: v for k, v in obj.items()})
        raise ConfigError(f"cannot interpret learner spec {obj!r}")


@dataclass(frozen=True)
class PutConfig:
    """Everything the trade-off model needs for one experiment.

    Exactly one of partition_size / put_number must be set. The two
    expenses default to 1.0 and generation defaults to dictionary order.
    """

    partition_size: int | None = None
    put_number: float | None = None
    learner: LearnerSpec = field(default_factory=LearnerSpec)
    privacy_exceptions: tuple[tuple[int, ...], ...] = ()
    utility_exceptions: tuple[tuple[int, ...], ...] = ()
    vertical_expense: float = 1.0
    horizontal_expense: float = 1.0
    generation: str = DICTIONARY
    seed: int = 0
    folds: int = 5

    def __post_init__(self):
        if (self.partition_size is None) == (self.put_number is None):
            raise ConfigError(
                "exactly one of partition_size / put_number must be given"
            )
        if self.put_number is not None and not -1.0 <= self.put_number <= 1.0:
            raise OutOfRangeError(f"put number {self.put_number} outside [-1, 1]")
        for name, value in (
            ("vertical_expense", self.vertical_expense),
            ("horizontal_expense", self.horizontal_expense),
        ):
            if not 0.0 < value <= 1.0:
                raise OutOfRangeError(f"{name} {value} outside (0, 1]")
        if self.generation not in GENERATION_METHODS:
            raise ConfigError(f"unknown generation method {self.generation!r}")
        if self.folds < 2:
            raise ConfigError("folds must be >= 2")
        object.__setattr__(
            self,
            "privacy_exceptions",
            tuple(canonical_attribute_set(e) for e in self.privacy_exceptions),
        )
        object.__setattr__(
            self,
            "utility_exceptions",
            tuple(canonical_attribute_set(e) for e in self.utility_exceptions),
        )

    def resolve_partition_size(self, n: int) -> int:
        """Resolve to a concrete partition size for a dataset with n attributes."""
        if self.partition_size is not None:
            if not 1 <= self.partition_size <= n:
                raise OutOfRangeError(
                    f"partition size {self.partition_size} outside [1, {n}]"
                )
            return self.partition_size
        return put_to_partition_size(self.put_number, n)

    def to_json(self) -> dict:
        doc = {
            "learner": self.learner.to_json(),
            "privacy_exceptions": [list(e) for e in self.privacy_exceptions],
            "utility_exceptions": [list(e) for e in self.utility_exceptions],
            "vertical_expense": self.vertical_expense,
            "horizontal_expense": self.horizontal_expense,
            "generation": self.generation,
            "seed": self.seed,
            "folds": self.folds,
        }
        if self.partition_size is not None:
            doc["partition_size"] = self.partition_size
        else:
            doc["put_number"] = self.put_number
        return doc

    @classmethod
    def from_json(cls, obj: dict) -> "PutConfig":
        if not isinstance(obj, dict):
            raise ConfigError("experiment spec must be a JSON object")
        kwargs = {}
        if "partition_size" in obj and obj["partition_size"] is not None:
            kwargs["partition_size"] = int(obj["partition_size"])
        if "put_number" in obj and obj["put_number"] is not None:
            kwargs["put_number"] = float(obj["put_number"])
        if "learner" in obj:
            kwargs["learner"] = LearnerSpec.from_json(obj["learner"])
        for name in ("privacy_exceptions", "utility_exceptions"):
            if obj.get(name):
                kwargs[name] = tuple(
                    canonical_attribute_set(e) for e in obj[name]
                )
        for name in ("vertical_expense", "horizontal_expense"):
            if name in obj and obj[name] is not None:
                kwargs[name] = float(obj[name])
        if "generation" in obj and obj["generation"] is not None:
            kwargs["generation"] = str(obj["generation"]).lower()
        if "seed" in obj and obj["seed"] is not None:
            kwargs["seed"] = int(obj["seed"])
        if "folds" in obj and obj["folds"] is not None:
            kwargs["folds"] = int(obj["folds"])
        return cls(**kwargs)

    def digest_material(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)
