"""Classification objectives: Laplace-smoothed Naive Bayes and a
C4.5-style gain-ratio decision tree, evaluated by seeded stratified
k-fold cross-validation.

Both learners follow the small estimator convention: construct with
hyperparameters, fit(dataset) returns self, predict_scores(dataset)
returns an (n_rows, n_classes) probability matrix whose rows sum to 1.
Fitted state lives in trailing-underscore attributes. Models are
immutable once fitted and safe to share across threads.

Determinism contracts: training is invariant to row order (per-class
numeric statistics are computed over sorted values; splits derive from
counts), gain-ratio ties break toward the lowest attribute index and then
the lowest threshold, and cross-validation folds depend only on
(dataset, folds, seed).
"""

import math
import random
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .dataset import Dataset
from .errors import ClassTooSmallError, ConfigError
from .putmodel import LearnerSpec

VARIANCE_FLOOR = 1e-9
_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class FoldPredictions:
    """Held-out scores for every row, gathered across all folds."""

    row_index: np.ndarray
    true_class: np.ndarray
    scores: np.ndarray  # (n_rows, n_classes)
    fold: np.ndarray
    n_classes: int


def _normalize_log_scores(log_scores: np.ndarray) -> np.ndarray:
    shifted = log_scores - log_scores.max(axis=1, keepdims=True)
    probs = np.exp(shifted)
    probs /= probs.sum(axis=1, keepdims=True)
    return probs


def _check_schema(ds: Dataset, n_attributes: int, kinds) -> None:
    if ds.n_attributes != n_attributes:
        raise ConfigError(
            f"row arity {ds.n_attributes} != training arity {n_attributes}"
        )
    if tuple(meta.is_nominal for meta in ds.attributes) != tuple(kinds):
        raise ConfigError("attribute kinds differ from the training schema")


class NaiveBayesLearner:
    """Naive Bayes with Laplace smoothing and per-class Gaussians.

    Priors are (count_c + 1) / (N + C). Nominal likelihoods are Laplace
    smoothed over the attribute's declared label set, so labels unseen in
    training still receive mass. Missing cells are skipped in counting and
    scoring; an attribute with no data for a class contributes factor 1.
    """

    def __init__(self):
        pass

    def get_params(self) -> dict:
        return {}

    def set_params(self, **params) -> "NaiveBayesLearner":
        if params:
            raise ConfigError(f"unknown parameters: {sorted(params)}")
        return self

    def fit(self, ds: Dataset) -> "NaiveBayesLearner":
        if ds.n_rows == 0:
            raise ConfigError("cannot train on zero rows")
        n_classes = ds.n_classes
        codes = ds.class_codes
        class_counts = np.bincount(codes, minlength=n_classes).astype(np.float64)
        self.n_classes_ = n_classes
        self.n_attributes_ = ds.n_attributes
        self.kinds_ = tuple(meta.is_nominal for meta in ds.attributes)
        self.class_log_prior_ = np.log(
            (class_counts + 1.0) / (ds.n_rows + n_classes)
        )
        self.nominal_log_lik_ = {}
        self.gaussian_ = {}
        for pos, meta in enumerate(ds.attributes):
            col = ds.columns[pos]
            if meta.is_nominal:
                n_labels = len(meta.labels)
                counts = np.zeros((n_classes, n_labels), dtype=np.float64)
                present = col >= 0
                np.add.at(counts, (codes[present], col[present]), 1.0)
                totals = counts.sum(axis=1, keepdims=True)
                self.nominal_log_lik_[pos] = np.log(
                    (counts + 1.0) / (totals + n_labels)
                )
            else:
                means = np.zeros(n_classes)
                variances = np.full(n_classes, VARIANCE_FLOOR)
                has_data = np.zeros(n_classes, dtype=bool)
                present = ~np.isnan(col)
                for c in range(n_classes):
                    values = np.sort(col[present & (codes == c)])
                    if len(values) == 0:
                        continue
                    has_data[c] = True
                    mean = float(np.sum(values) / len(values))
                    var = float(np.sum((values - mean) ** 2) / len(values))
                    means[c] = mean
                    variances[c] = max(var, VARIANCE_FLOOR)
                self.gaussian_[pos] = (means, variances, has_data)
        return self

    def predict_scores(self, ds: Dataset) -> np.ndarray:
        _check_schema(ds, self.n_attributes_, self.kinds_)
        n = ds.n_rows
        log_scores = np.tile(self.class_log_prior_, (n, 1))
        for pos, meta in enumerate(ds.attributes):
            col = ds.columns[pos]
            if meta.is_nominal:
                table = self.nominal_log_lik_[pos]
                present = col >= 0
                if present.any():
                    log_scores[present] += table[:, col[present]].T
            else:
                means, variances, has_data = self.gaussian_[pos]
                present = ~np.isnan(col)
                if not present.any():
                    continue
                x = col[present]
                for c in range(self.n_classes_):
                    if not has_data[c]:
                        continue
                    var = variances[c]
                    log_pdf = -0.5 * (
                        _LOG_2PI + math.log(var) + (x - means[c]) ** 2 / var
                    )
                    log_scores[present, c] += log_pdf
        return _normalize_log_scores(log_scores)


class _Leaf:
    __slots__ = ("probs", "counts", "n")

    def __init__(self, counts: np.ndarray):
        self.counts = counts
        self.n = float(counts.sum())
        self.probs = (counts + 1.0) / (self.n + len(counts))


class _Split:
    __slots__ = ("attr", "threshold", "children", "majority", "counts", "n")

    def __init__(self, attr, threshold, children, majority, counts):
        self.attr = attr
        self.threshold = threshold  # None for nominal splits
        self.children = children  # per label code, or [left, right]
        self.majority = majority  # child position carrying the most mass
        self.counts = counts
        self.n = float(counts.sum())


def _entropy(counts: np.ndarray) -> float:
    total = counts.sum()
    if total <= 0:
        return 0.0
    p = counts[counts > 0] / total
    return float(-(p * np.log2(p)).sum())


def _entropy_rows(counts: np.ndarray) -> np.ndarray:
    """Row-wise entropy of a (G, C) count matrix."""
    totals = counts.sum(axis=1, keepdims=True)
    safe = np.maximum(totals, 1.0)
    p = counts / safe
    terms = np.where(counts > 0, p * np.log2(np.where(p > 0, p, 1.0)), 0.0)
    return -terms.sum(axis=1)


def _pessimistic_errors(n: float, errors: float, z: float) -> float:
    """Upper-confidence error count estimate used for subtree pruning."""
    if n <= 0:
        return 0.0
    f = errors / n
    z2 = z * z
    under_root = f / n - f * f / n + z2 / (4 * n * n)
    rate = (f + z2 / (2 * n) + z * math.sqrt(max(under_root, 0.0))) / (1 + z2 / n)
    return n * rate


class TreeLearner:
    """Greedy gain-ratio decision tree with pessimistic-error pruning.

    Nominal attributes split multiway on their label set; numeric
    attributes split binary at class-boundary midpoints. A split is
    admissible when at least two branches hold min_leaf or more known
    rows. Rows whose split value is missing follow the branch with the
    largest training mass. Leaves hold Laplace-corrected distributions.
    """

    def __init__(self, min_leaf: int = 2, confidence: float = 0.25, use_pruning: bool = True):
        if min_leaf < 1:
            raise ConfigError("min_leaf must be >= 1")
        if not 0.0 < confidence <= 0.5:
            raise ConfigError("confidence must be in (0, 0.5]")
        self.min_leaf = min_leaf
        self.confidence = confidence
        self.use_pruning = use_pruning

    def get_params(self) -> dict:
        return {
            "min_leaf": self.min_leaf,
            "confidence": self.confidence,
            "use_pruning": self.use_pruning,
        }

    def set_params(self, **params) -> "TreeLearner":
        for name, value in params.items():
            if name not in ("min_leaf", "confidence", "use_pruning"):
                raise ConfigError(f"unknown parameter {name!r}")
            setattr(self, name, value)
        return self

    def fit(self, ds: Dataset) -> "TreeLearner":
        if ds.n_rows == 0:
            raise ConfigError("cannot train on zero rows")
        self.n_classes_ = ds.n_classes
        self.n_attributes_ = ds.n_attributes
        self._kinds = [meta.is_nominal for meta in ds.attributes]
        self._n_labels = [
            len(meta.labels) if meta.is_nominal else 0 for meta in ds.attributes
        ]
        self.root_ = self._build(ds, np.arange(ds.n_rows))
        if self.use_pruning:
            z = NormalDist().inv_cdf(1.0 - self.confidence)
            self.root_ = self._prune(self.root_, z)
        return self

    # -- growing ----------------------------------------------------------

    def _build(self, ds: Dataset, root_rows: np.ndarray):
        codes = ds.class_codes
        C = self.n_classes_
        placeholder: list = [None]
        # (rows, parent_children_list, child_position)
        stack = [(root_rows, placeholder, 0)]
        while stack:
            rows, parent, pos = stack.pop()
            counts = np.bincount(codes[rows], minlength=C).astype(np.float64)
            nonzero = np.count_nonzero(counts)
            if nonzero <= 1 or len(rows) < 2 * self.min_leaf:
                parent[pos] = _Leaf(counts)
                continue
            best = self._best_split(ds, rows, counts)
            if best is None:
                parent[pos] = _Leaf(counts)
                continue
            attr, threshold, branch_rows = best
            sizes = [len(b) for b in branch_rows]
            majority = int(np.argmax(sizes))
            missing = self._missing_rows(ds, attr, rows)
            if len(missing):
                branch_rows[majority] = np.concatenate(
                    [branch_rows[majority], missing]
                )
            children: list = [None] * len(branch_rows)
            node = _Split(attr, threshold, children, majority, counts)
            parent[pos] = node
            for child_pos, child_rows in enumerate(branch_rows):
                if len(child_rows) == 0:
                    children[child_pos] = None
                else:
                    stack.append((child_rows, children, child_pos))
        return placeholder[0]

    def _missing_rows(self, ds: Dataset, attr: int, rows: np.ndarray) -> np.ndarray:
        col = ds.columns[attr]
        if self._kinds[attr]:
            return rows[col[rows] < 0]
        return rows[np.isnan(col[rows])]

    def _best_split(self, ds: Dataset, rows: np.ndarray, counts: np.ndarray):
        """Highest gain-ratio admissible split, ties to the lowest
        attribute index then the lowest threshold. Returns
        (attr, threshold, branch row arrays) or None."""
        codes = ds.class_codes
        n_total = len(rows)
        best_ratio = -1.0
        best = None
        for attr in range(ds.n_attributes):
            col = ds.columns[attr]
            values = col[rows]
            if self._kinds[attr]:
                known = values >= 0
            else:
                known = ~np.isnan(values)
            n_known = int(known.sum())
            if n_known < 2 * self.min_leaf:
                continue
            known_rows = rows[known]
            known_values = values[known]
            known_codes = codes[known_rows]
            known_counts = np.bincount(
                known_codes, minlength=self.n_classes_
            ).astype(np.float64)
            h_known = _entropy(known_counts)
            known_fraction = n_known / n_total

            if self._kinds[attr]:
                found = self._nominal_split(
                    known_rows,
                    known_values,
                    known_codes,
                    self._n_labels[attr],
                    h_known,
                    known_fraction,
                    n_known,
                )
                if found is not None and found[0] > best_ratio:
                    best_ratio = found[0]
                    best = (attr, None, found[1])
            else:
                found = self._numeric_split(
                    known_rows,
                    known_values,
                    known_codes,
                    h_known,
                    known_fraction,
                    n_known,
                )
                if found is not None and found[0] > best_ratio:
                    best_ratio = found[0]
                    best = (attr, found[1], found[2])
        return best

    def _nominal_split(
        self, known_rows, known_values, known_codes, n_labels, h_known, fraction, n_known
    ):
        branch_counts = np.bincount(
            known_values.astype(np.int64) * self.n_classes_ + known_codes,
            minlength=n_labels * self.n_classes_,
        ).reshape(n_labels, self.n_classes_).astype(np.float64)
        sizes = branch_counts.sum(axis=1)
        if np.count_nonzero(sizes >= self.min_leaf) < 2:
            return None
        occupied = sizes > 0
        w = sizes[occupied] / n_known
        info = float((w * _entropy_rows(branch_counts[occupied])).sum())
        split_info = float(-(w * np.log2(w)).sum())
        if split_info <= 0.0:
            return None
        gain = fraction * max(h_known - info, 0.0)
        ratio = gain / split_info
        order = np.argsort(known_values, kind="mergesort")
        bounds = np.searchsorted(known_values[order], np.arange(n_labels + 1))
        sorted_rows = known_rows[order]
        branch_rows = [
            sorted_rows[bounds[b] : bounds[b + 1]] for b in range(n_labels)
        ]
        return ratio, branch_rows

    def _numeric_split(
        self, known_rows, known_values, known_codes, h_known, fraction, n_known
    ):
        order = np.argsort(known_values, kind="mergesort")
        sv = known_values[order]
        sy = known_codes[order]
        sr = known_rows[order]
        change = sv[1:] != sv[:-1]
        n_groups = int(change.sum()) + 1
        if n_groups < 2:
            return None
        # per-value-group class counts, then cumulative counts left of each
        # candidate cut (between consecutive distinct values)
        group_id = np.concatenate([[0], np.cumsum(change)])
        group_counts = np.bincount(
            group_id * self.n_classes_ + sy,
            minlength=n_groups * self.n_classes_,
        ).reshape(n_groups, self.n_classes_).astype(np.float64)
        left = np.cumsum(group_counts, axis=0)[:-1]
        total = group_counts.sum(axis=0)
        right = total - left
        n_left = left.sum(axis=1)
        n_right = right.sum(axis=1)

        # class-boundary filter: a cut between two pure groups of the same
        # class can never be the best split
        gc_l = group_counts[:-1]
        gc_r = group_counts[1:]
        pure_same = (
            ((gc_l > 0).sum(axis=1) == 1)
            & ((gc_r > 0).sum(axis=1) == 1)
            & (gc_l.argmax(axis=1) == gc_r.argmax(axis=1))
        )
        admissible = (
            ~pure_same & (n_left >= self.min_leaf) & (n_right >= self.min_leaf)
        )
        if not admissible.any():
            return None

        w_l = n_left / n_known
        w_r = n_right / n_known
        info = w_l * _entropy_rows(left) + w_r * _entropy_rows(right)
        with np.errstate(divide="ignore", invalid="ignore"):
            split_info = -(w_l * np.log2(w_l) + w_r * np.log2(w_r))
        gain = fraction * np.maximum(h_known - info, 0.0)
        ratio = np.where(
            admissible & (split_info > 0),
            gain / np.where(split_info > 0, split_info, 1.0),
            -np.inf,
        )
        best_idx = int(np.argmax(ratio))  # ties resolve to the lowest threshold
        if not np.isfinite(ratio[best_idx]):
            return None
        cut = int(np.cumsum(np.bincount(group_id))[best_idx])
        threshold = (sv[cut - 1] + sv[cut]) / 2.0
        return float(ratio[best_idx]), float(threshold), [sr[:cut], sr[cut:]]

    # -- pruning ----------------------------------------------------------

    def _prune(self, root, z: float):
        if isinstance(root, _Leaf):
            return root
        # post-order traversal with an explicit stack
        stack = [(root, False)]
        estimates: dict[int, float] = {}
        replacements: dict[int, object] = {}
        while stack:
            node, expanded = stack.pop()
            if isinstance(node, _Leaf):
                errors = node.n - node.counts.max() if node.n else 0.0
                estimates[id(node)] = _pessimistic_errors(node.n, errors, z)
                continue
            if not expanded:
                stack.append((node, True))
                for child in node.children:
                    if child is not None:
                        stack.append((child, False))
                continue
            subtree_est = 0.0
            for pos, child in enumerate(node.children):
                if child is None:
                    continue
                subtree_est += estimates[id(child)]
                replacement = replacements.get(id(child))
                if replacement is not None:
                    node.children[pos] = replacement
            leaf_errors = node.n - node.counts.max()
            leaf_est = _pessimistic_errors(node.n, leaf_errors, z)
            if leaf_est <= subtree_est + 0.1:
                leaf = _Leaf(node.counts)
                estimates[id(node)] = leaf_est
                replacements[id(node)] = leaf
            else:
                estimates[id(node)] = subtree_est
        return replacements.get(id(root), root)

    # -- scoring ----------------------------------------------------------

    def predict_scores(self, ds: Dataset) -> np.ndarray:
        _check_schema(ds, self.n_attributes_, self._kinds)
        out = np.empty((ds.n_rows, self.n_classes_))
        columns = ds.columns
        for row in range(ds.n_rows):
            node = self.root_
            while isinstance(node, _Split):
                raw = columns[node.attr][row]
                if node.threshold is None:
                    code = int(raw)
                    if 0 <= code < len(node.children) and node.children[code] is not None:
                        node = node.children[code]
                    else:
                        node = node.children[node.majority]
                else:
                    value = float(raw)
                    if math.isnan(value):
                        node = node.children[node.majority]
                    elif value <= node.threshold:
                        node = node.children[0]
                    else:
                        node = node.children[1]
            out[row] = node.probs
        return out

    def depth(self) -> int:
        """Longest root-to-leaf path, 0 for a lone leaf."""
        best = 0
        stack = [(self.root_, 0)]
        while stack:
            node, d = stack.pop()
            if isinstance(node, _Leaf):
                best = max(best, d)
                continue
            for child in node.children:
                if child is not None:
                    stack.append((child, d + 1))
        return best


def make_learner(spec: LearnerSpec):
    if spec.kind == "naive_bayes":
        return NaiveBayesLearner()
    return TreeLearner(
        min_leaf=spec.min_leaf,
        confidence=spec.confidence,
        use_pruning=spec.use_pruning,
    )


def cross_validate(
    ds: Dataset, learner: LearnerSpec, folds: int, seed: int
) -> FoldPredictions:
    """Stratified k-fold CV producing held-out scores for every row.

    Within each observed class, rows are shuffled with the seeded
    generator and dealt round-robin to folds, so fold sizes per class
    differ by at most one. Any observed class with fewer instances than
    folds is an error; declared-but-unobserved labels are permitted and
    simply receive no predictions.
    """
    if folds < 2:
        raise ConfigError("folds must be >= 2")
    codes = ds.class_codes
    fold_of = np.full(ds.n_rows, -1, dtype=np.int64)
    rng = random.Random(seed)
    for c in range(ds.n_classes):
        members = np.flatnonzero(codes == c).tolist()
        if not members:
            continue
        if len(members) < folds:
            raise ClassTooSmallError(ds.class_meta.labels[c], len(members), folds)
        rng.shuffle(members)
        for j, row in enumerate(members):
            fold_of[row] = j % folds

    n = ds.n_rows
    scores = np.zeros((n, ds.n_classes))
    fold_ids = np.zeros(n, dtype=np.int64)
    for f in range(folds):
        test_idx = np.flatnonzero(fold_of == f)
        if len(test_idx) == 0:
            continue
        train_idx = np.flatnonzero(fold_of != f)
        model = make_learner(learner).fit(ds.take_rows(train_idx))
        scores[test_idx] = model.predict_scores(ds.take_rows(test_idx))
        fold_ids[test_idx] = f
    return FoldPredictions(
        row_index=np.arange(n),
        true_class=codes.astype(np.int64),
        scores=scores,
        fold=fold_ids,
        n_classes=ds.n_classes,
    )
