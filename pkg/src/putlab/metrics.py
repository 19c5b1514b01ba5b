"""Per-task result metrics: accuracy, one-vs-rest confusion rates, area
under the ROC curve (rank formulation) and under the PR curve (step-wise
average precision), plus the multi-key result ordering used everywhere
results are presented.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

RATE_DECIMALS = 5


@dataclass(frozen=True)
class ClassMetrics:
    """One-vs-rest rates for a single class; aroc/apr are None when the
    class has no positives (or no negatives for aroc) in the evaluation."""

    tp: float
    fp: float
    fn: float
    precision: float
    recall: float
    aroc: float | None
    apr: float | None


@dataclass(frozen=True)
class TaskResult:
    """One output row: the attribute set tried, wall time, and metrics."""

    attribute_set: tuple[int, ...]
    time_taken_s: float
    accuracy_pct: float
    per_class: tuple[ClassMetrics, ...]

    def field(self, name: str):
        """Metric lookup by column name, e.g. 'accuracy' or 'apr_1'."""
        if name == "accuracy":
            return self.accuracy_pct
        if name == "time_taken":
            return self.time_taken_s
        if "_" in name:
            stem, _, tail = name.rpartition("_")
            if tail.isdigit() and stem in (
                "tp",
                "fp",
                "fn",
                "precision",
                "recall",
                "aroc",
                "apr",
            ):
                i = int(tail)
                if i >= len(self.per_class):
                    return None
                return getattr(self.per_class[i], stem)
        raise ConfigError(f"unknown result field {name!r}")

    def to_json(self) -> dict:
        return {
            "attribute_set": list(self.attribute_set),
            "time_taken_s": self.time_taken_s,
            "accuracy_pct": self.accuracy_pct,
            "per_class": [
                {
                    "tp": c.tp,
                    "fp": c.fp,
                    "fn": c.fn,
                    "precision": c.precision,
                    "recall": c.recall,
                    "aroc": c.aroc,
                    "apr": c.apr,
                }
                for c in self.per_class
            ],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "TaskResult":
        return cls(
            attribute_set=tuple(obj["attribute_set"]),
            time_taken_s=float(obj["time_taken_s"]),
            accuracy_pct=float(obj["accuracy_pct"]),
            per_class=tuple(
                ClassMetrics(
                    tp=c["tp"],
                    fp=c["fp"],
                    fn=c["fn"],
                    precision=c["precision"],
                    recall=c["recall"],
                    aroc=c["aroc"],
                    apr=c["apr"],
                )
                for c in obj["per_class"]
            ),
        )


DEFAULT_SORT = (("apr_1", "desc"), ("aroc_1", "desc"), ("accuracy", "desc"))


def format_rate(value: float | None) -> str:
    """Five-decimal rendering; undefined metrics serialize as empty."""
    return "" if value is None else f"{value:.{RATE_DECIMALS}f}"


def format_attribute_set(attrs) -> str:
    return "{" + ", ".join(str(a) for a in sorted(attrs)) + "}"


def _average_ranks(x: np.ndarray) -> np.ndarray:
    """1-based ranks with ties sharing their average rank."""
    order = np.argsort(x, kind="mergesort")
    ranks = np.empty(len(x), dtype=np.float64)
    sorted_x = x[order]
    i = 0
    while i < len(x):
        j = i
        while j + 1 < len(x) and sorted_x[j + 1] == sorted_x[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def roc_auc(scores: np.ndarray, positive: np.ndarray) -> float | None:
    """Area under the ROC curve for one class, by the rank statistic.

    Equals the probability that a random positive outscores a random
    negative, counting ties as half. None when either side is empty.
    """
    scores = np.asarray(scores, dtype=np.float64)
    positive = np.asarray(positive, dtype=bool)
    n_pos = int(positive.sum())
    n_neg = len(positive) - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    ranks = _average_ranks(scores)
    rank_sum = float(ranks[positive].sum())
    u = rank_sum - n_pos * (n_pos + 1) / 2
    return u / (n_pos * n_neg)


def pr_auc(scores: np.ndarray, positive: np.ndarray) -> float | None:
    """Step-wise area under the precision-recall curve (average precision).

    Thresholds are the distinct scores in descending order; each threshold
    contributes its recall increment times the precision at that point.
    None when the class has no positives.
    """
    scores = np.asarray(scores, dtype=np.float64)
    positive = np.asarray(positive, dtype=bool)
    n_pos = int(positive.sum())
    if n_pos == 0:
        return None
    order = np.argsort(-scores, kind="mergesort")
    sorted_scores = scores[order]
    sorted_pos = positive[order]
    area = 0.0
    prev_recall = 0.0
    tp = 0
    taken = 0
    i = 0
    n = len(scores)
    while i < n:
        j = i
        while j + 1 < n and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        tp += int(sorted_pos[i : j + 1].sum())
        taken = j + 1
        recall = tp / n_pos
        precision = tp / taken
        area += (recall - prev_recall) * precision
        prev_recall = recall
        i = j + 1
    return area


def confusion_rates(true_classes: np.ndarray, scores: np.ndarray):
    """Pooled accuracy and one-vs-rest confusion rates from score vectors.

    Predicted class is the argmax score (ties to the lowest class index).
    Rates follow the usual one-vs-rest reading: tp and recall are
    TP/(TP+FN), fp is FP/(FP+TN), fn is FN/(TP+FN); precision is
    TP/(TP+FP). Empty denominators yield 0.
    """
    true_classes = np.asarray(true_classes)
    scores = np.asarray(scores, dtype=np.float64)
    n, n_classes = scores.shape
    if n == 0:
        raise ConfigError("no predictions to score")
    predicted = np.argmax(scores, axis=1)
    accuracy_pct = 100.0 * float(np.sum(predicted == true_classes)) / n

    per_class = []
    for c in range(n_classes):
        actual = true_classes == c
        pred = predicted == c
        tp = int(np.sum(actual & pred))
        fn = int(np.sum(actual & ~pred))
        fp = int(np.sum(~actual & pred))
        tn = n - tp - fn - fp
        tp_rate = tp / (tp + fn) if tp + fn else 0.0
        fp_rate = fp / (fp + tn) if fp + tn else 0.0
        fn_rate = fn / (tp + fn) if tp + fn else 0.0
        precision = tp / (tp + fp) if tp + fp else 0.0
        per_class.append(
            {
                "tp": tp_rate,
                "fp": fp_rate,
                "fn": fn_rate,
                "precision": precision,
                "recall": tp_rate,
            }
        )
    return accuracy_pct, per_class


def task_result(
    attribute_set,
    true_classes: np.ndarray,
    scores: np.ndarray,
    time_taken_s: float,
) -> TaskResult:
    """Assemble the full per-task record from fold predictions."""
    accuracy_pct, rates = confusion_rates(true_classes, scores)
    per_class = []
    for c, r in enumerate(rates):
        positive = np.asarray(true_classes) == c
        per_class.append(
            ClassMetrics(
                tp=r["tp"],
                fp=r["fp"],
                fn=r["fn"],
                precision=r["precision"],
                recall=r["recall"],
                aroc=roc_auc(scores[:, c], positive),
                apr=pr_auc(scores[:, c], positive),
            )
        )
    return TaskResult(
        attribute_set=tuple(sorted(attribute_set)),
        time_taken_s=time_taken_s,
        accuracy_pct=accuracy_pct,
        per_class=tuple(per_class),
    )


def sort_results(rows, criteria=DEFAULT_SORT) -> list[TaskResult]:
    """Stable multi-key sort; undefined metric values sort below all
    defined values regardless of direction."""
    out = list(rows)
    for name, direction in reversed(list(criteria)):
        if direction not in ("asc", "desc"):
            raise ConfigError(f"unknown sort direction {direction!r}")
        if out:
            out[0].field(name)  # validate the field name eagerly
        descending = direction == "desc"

        def key(row, _name=name, _desc=descending):
            value = row.field(_name)
            if value is None:
                # undefined last under either direction
                return (0, 0.0) if _desc else (1, 0.0)
            return (1, value) if _desc else (0, value)

        out.sort(key=key, reverse=descending)
    return out
