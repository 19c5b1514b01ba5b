import random

import numpy as np
import pytest

from putlab.errors import ConfigError
from putlab.metrics import (
    ClassMetrics,
    TaskResult,
    confusion_rates,
    format_attribute_set,
    format_rate,
    pr_auc,
    roc_auc,
    sort_results,
    task_result,
)


def roc_brute_force(scores, positive):
    """O(P*N) pairwise comparison: P(pos > neg) + half credit for ties."""
    pos = [s for s, p in zip(scores, positive) if p]
    neg = [s for s, p in zip(scores, positive) if not p]
    if not pos or not neg:
        return None
    wins = 0.0
    for sp in pos:
        for sn in neg:
            if sp > sn:
                wins += 1.0
            elif sp == sn:
                wins += 0.5
    return wins / (len(pos) * len(neg))


def pr_brute_force(scores, positive):
    """Threshold sweep over distinct scores descending; step-wise area."""
    n_pos = sum(positive)
    if n_pos == 0:
        return None
    thresholds = sorted(set(scores), reverse=True)
    area = 0.0
    prev_recall = 0.0
    for t in thresholds:
        taken = [p for s, p in zip(scores, positive) if s >= t]
        tp = sum(taken)
        precision = tp / len(taken)
        recall = tp / n_pos
        area += (recall - prev_recall) * precision
        prev_recall = recall
    return area


def random_prediction_set(rng, max_n=40, discrete_chance=0.5):
    n = rng.randint(2, max_n)
    positive = [rng.random() < 0.4 for _ in range(n)]
    if not any(positive):
        positive[rng.randrange(n)] = True
    if all(positive):
        positive[rng.randrange(n)] = False
    if rng.random() < discrete_chance:
        scores = [rng.choice((0.1, 0.25, 0.5, 0.75, 0.9)) for _ in range(n)]
    else:
        scores = [rng.random() for _ in range(n)]
    return np.array(scores), np.array(positive)


class TestRocAuc:
    def test_all_ties_is_half(self):
        scores = np.array([0.3] * 10)
        positive = np.array([True] * 4 + [False] * 6)
        assert roc_auc(scores, positive) == 0.5

    def test_perfect_ranking(self):
        scores = np.array([0.9, 0.8, 0.2, 0.1])
        positive = np.array([True, True, False, False])
        assert roc_auc(scores, positive) == 1.0

    def test_single_class_undefined(self):
        assert roc_auc(np.array([0.1, 0.2]), np.array([True, True])) is None
        assert roc_auc(np.array([0.1, 0.2]), np.array([False, False])) is None

    def test_matches_pairwise_oracle_500_sets(self):
        rng = random.Random(41)
        for _ in range(500):
            scores, positive = random_prediction_set(rng)
            got = roc_auc(scores, positive)
            want = roc_brute_force(list(scores), list(positive))
            assert got == pytest.approx(want, abs=1e-12)

    def test_rank_invariance_under_monotone_transform(self):
        rng = random.Random(5)
        for _ in range(50):
            scores, positive = random_prediction_set(rng)
            base = roc_auc(scores, positive)
            transformed = roc_auc(np.exp(3 * scores) + 7, positive)
            assert transformed == pytest.approx(base, abs=1e-12)

    def test_inverted_ranking_complements(self):
        rng = random.Random(6)
        for _ in range(50):
            scores, positive = random_prediction_set(rng, discrete_chance=0.0)
            assert roc_auc(-scores, positive) == pytest.approx(
                1.0 - roc_auc(scores, positive), abs=1e-12
            )


class TestPrAuc:
    def test_perfect_ranking(self):
        scores = np.array([0.9, 0.8, 0.2, 0.1])
        positive = np.array([True, True, False, False])
        assert pr_auc(scores, positive) == 1.0

    def test_uniform_scores_equal_positive_rate(self):
        scores = np.array([0.5] * 20)
        positive = np.array([True] * 7 + [False] * 13)
        assert pr_auc(scores, positive) == pytest.approx(7 / 20, abs=1e-12)

    def test_no_positives_undefined(self):
        assert pr_auc(np.array([0.1, 0.9]), np.array([False, False])) is None

    def test_matches_threshold_sweep_oracle_500_sets(self):
        rng = random.Random(42)
        for _ in range(500):
            scores, positive = random_prediction_set(rng)
            got = pr_auc(scores, positive)
            want = pr_brute_force(list(scores), list(positive))
            assert got == pytest.approx(want, abs=1e-12)

    def test_in_unit_interval(self):
        rng = random.Random(43)
        for _ in range(100):
            scores, positive = random_prediction_set(rng)
            assert 0.0 <= pr_auc(scores, positive) <= 1.0
            assert 0.0 <= roc_auc(scores, positive) <= 1.0


class TestConfusionRates:
    def test_perfect_predictor(self):
        true = np.array([0, 1, 0, 1])
        scores = np.array([[0.9, 0.1], [0.1, 0.9], [0.8, 0.2], [0.3, 0.7]])
        accuracy, rates = confusion_rates(true, scores)
        assert accuracy == 100.0
        for c in (0, 1):
            assert rates[c]["tp"] == 1.0
            assert rates[c]["fp"] == 0.0
            assert rates[c]["recall"] == 1.0

    def test_constant_predictor_on_skewed_data(self):
        # 90/10 split, always predicts class 0
        true = np.array([0] * 90 + [1] * 10)
        scores = np.tile([0.8, 0.2], (100, 1))
        accuracy, rates = confusion_rates(true, scores)
        assert accuracy == 90.0
        assert rates[1]["tp"] == 0.0
        assert rates[0]["fp"] == 1.0
        assert rates[1]["precision"] == 0.0  # 0/0 -> 0

    def test_hand_computed_confusion_table(self):
        # 10 rows, constructed so TP0=3 FN0=1, TP1=4 FP1=1, etc.
        true = np.array([0, 0, 0, 0, 1, 1, 1, 1, 1, 1])
        pred = np.array([0, 0, 0, 1, 1, 1, 1, 1, 0, 0])
        scores = np.zeros((10, 2))
        scores[np.arange(10), pred] = 1.0
        accuracy, rates = confusion_rates(true, scores)
        assert accuracy == pytest.approx(100 * 7 / 10)
        assert rates[0]["tp"] == pytest.approx(3 / 4)
        assert rates[0]["fn"] == pytest.approx(1 / 4)
        assert rates[0]["fp"] == pytest.approx(2 / 6)
        assert rates[0]["precision"] == pytest.approx(3 / 5)
        assert rates[1]["tp"] == pytest.approx(4 / 6)
        assert rates[1]["fp"] == pytest.approx(1 / 4)
        assert rates[1]["precision"] == pytest.approx(4 / 5)

    def test_argmax_tie_goes_to_lowest_class(self):
        true = np.array([1, 1])
        scores = np.array([[0.5, 0.5], [0.5, 0.5]])
        accuracy, _ = confusion_rates(true, scores)
        assert accuracy == 0.0

    def test_binary_complementarity(self):
        rng = random.Random(13)
        for _ in range(30):
            n = rng.randint(4, 50)
            true = np.array([rng.randint(0, 1) for _ in range(n)])
            if len(set(true)) < 2:
                continue
            raw = np.array([rng.random() for _ in range(n)])
            scores = np.column_stack([1 - raw, raw])
            _, rates = confusion_rates(true, scores)
            assert rates[1]["tp"] == pytest.approx(1 - rates[1]["fn"], abs=1e-12)
            assert rates[1]["fp"] == pytest.approx(1 - rates[0]["tp"], abs=1e-12)

    def test_rates_round_trip_to_integer_counts(self):
        true = np.array([0] * 6 + [1] * 4)
        pred = np.array([0, 0, 1, 0, 0, 1, 1, 1, 1, 0])
        scores = np.zeros((10, 2))
        scores[np.arange(10), pred] = 1.0
        _, rates = confusion_rates(true, scores)
        tp0 = rates[0]["tp"] * 6
        assert tp0 == pytest.approx(round(tp0), abs=1e-9)


class TestBinarySymmetry:
    def test_aroc_equal_for_both_classes(self):
        rng = random.Random(7)
        for _ in range(200):
            n = rng.randint(4, 60)
            true = np.array([rng.randint(0, 1) for _ in range(n)])
            if len(set(true)) < 2:
                continue
            raw = np.array([rng.random() for _ in range(n)])
            scores = np.column_stack([1 - raw, raw])
            a0 = roc_auc(scores[:, 0], true == 0)
            a1 = roc_auc(scores[:, 1], true == 1)
            assert a0 == pytest.approx(a1, abs=1e-12)


def make_result(attrs=(1,), apr_1=None, aroc_1=None, accuracy=50.0):
    per_class = tuple(
        ClassMetrics(tp=0.5, fp=0.1, fn=0.5, precision=0.6, recall=0.5, aroc=aroc, apr=apr)
        for aroc, apr in ((0.5, 0.5), (aroc_1, apr_1))
    )
    return TaskResult(
        attribute_set=tuple(attrs),
        time_taken_s=0.1,
        accuracy_pct=accuracy,
        per_class=per_class,
    )


class TestSortResults:
    def test_primary_key_wins(self):
        low = make_result((1,), apr_1=0.2, aroc_1=0.9, accuracy=99.0)
        high = make_result((2,), apr_1=0.8, aroc_1=0.1, accuracy=1.0)
        assert sort_results([low, high]) == [high, low]

    def test_tie_falls_to_secondary_then_tertiary(self):
        a = make_result((1,), apr_1=0.5, aroc_1=0.7, accuracy=80.0)
        b = make_result((2,), apr_1=0.5, aroc_1=0.9, accuracy=10.0)
        c = make_result((3,), apr_1=0.5, aroc_1=0.9, accuracy=90.0)
        assert sort_results([a, b, c]) == [c, b, a]

    def test_stability_on_full_tie(self):
        a = make_result((1,), apr_1=0.5, aroc_1=0.5, accuracy=50.0)
        b = make_result((2,), apr_1=0.5, aroc_1=0.5, accuracy=50.0)
        assert sort_results([a, b]) == [a, b]
        assert sort_results([b, a]) == [b, a]

    def test_undefined_sorts_below_defined_either_direction(self):
        defined = make_result((1,), apr_1=0.01)
        undefined = make_result((2,), apr_1=None)
        assert sort_results([undefined, defined], (("apr_1", "desc"),)) == [defined, undefined]
        assert sort_results([undefined, defined], (("apr_1", "asc"),)) == [defined, undefined]

    def test_ascending(self):
        a = make_result((1,), accuracy=10.0)
        b = make_result((2,), accuracy=90.0)
        assert sort_results([b, a], (("accuracy", "asc"),)) == [a, b]

    def test_unknown_field(self):
        with pytest.raises(ConfigError):
            sort_results([make_result()], (("nope", "desc"),))

    def test_paper_style_table_order(self):
        # five rows ranked by apr_1 descending, mirroring a published top-5
        values = [0.76068, 0.75866, 0.75325, 0.75057, 0.75031]
        rows = [make_result((i,), apr_1=v) for i, v in enumerate(values, start=1)]
        shuffled = [rows[3], rows[0], rows[4], rows[2], rows[1]]
        assert sort_results(shuffled) == rows


class TestFormatting:
    def test_five_decimals(self):
        assert format_rate(99.880174) == "99.88017"
        assert format_rate(0.46787) == "0.46787"
        assert format_rate(1.0) == "1.00000"
        assert format_rate(None) == ""

    def test_attribute_set_rendering(self):
        assert format_attribute_set((5, 1, 2)) == "{1, 2, 5}"
        assert format_attribute_set((14,)) == "{14}"

    def test_task_result_field_lookup(self):
        row = make_result((1, 2), apr_1=0.4, aroc_1=0.6, accuracy=88.0)
        assert row.field("apr_1") == 0.4
        assert row.field("aroc_1") == 0.6
        assert row.field("accuracy") == 88.0
        assert row.field("tp_0") == 0.5
        with pytest.raises(ConfigError):
            row.field("banana")

    def test_task_result_json_round_trip(self):
        row = make_result((3, 7), apr_1=None, aroc_1=0.25)
        assert TaskResult.from_json(row.to_json()) == row


class TestTaskResultAssembly:
    def test_recall_equals_tp(self):
        rng = random.Random(3)
        true = np.array([rng.randint(0, 1) for _ in range(30)])
        raw = np.array([rng.random() for _ in range(30)])
        scores = np.column_stack([1 - raw, raw])
        result = task_result((2, 1), true, scores, 0.5)
        assert result.attribute_set == (1, 2)
        for c in result.per_class:
            assert c.recall == c.tp

    def test_tp_plus_fn_is_one_for_observed_classes(self):
        true = np.array([0, 0, 1, 1, 1])
        scores = np.array([[0.9, 0.1]] * 5)
        result = task_result((1,), true, scores, 0.0)
        for c in result.per_class:
            assert c.tp + c.fn == pytest.approx(1.0, abs=1e-9)
