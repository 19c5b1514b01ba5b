import itertools
import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from putlab.errors import ConfigError, ForeignCursorError, NoViablePartitionsError
from putlab.genset import (
    GenerationPlan,
    GeneratorCursor,
    cursor,
    dictionary_stream,
    plan_stream,
    random_stream,
    resume_from,
)


def brute_force_reference(n, k, privacy, utility, budget):
    """Enumerate all C(n,k) sets, drop privacy violators, stable-partition
    by utility boost, truncate to budget."""
    every = [tuple(c) for c in itertools.combinations(range(1, n + 1), k)]
    viable = [
        s for s in every if not any(set(e) <= set(s) for e in privacy)
    ]
    boosted = [s for s in viable if any(set(e) <= set(s) for e in utility)]
    boosted_set = set(boosted)
    plain = [s for s in viable if s not in boosted_set]
    return (boosted + plain)[:budget]


class TestDictionaryStream:
    def test_small_case_frozen(self):
        assert list(dictionary_stream(4, 2)) == [
            (1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4),
        ]

    def test_single_full_set(self):
        assert list(dictionary_stream(3, 3)) == [(1, 2, 3)]

    def test_first_emitted_is_lexicographic_minimum(self):
        for n in range(1, 10):
            for k in range(1, n + 1):
                assert next(dictionary_stream(n, k)) == tuple(range(1, k + 1))

    def test_matches_itertools_for_all_small_cases(self):
        for n in range(1, 13):
            for k in range(1, n + 1):
                expected = [tuple(c) for c in itertools.combinations(range(1, n + 1), k)]
                assert list(dictionary_stream(n, k)) == expected

    def test_strictly_increasing(self):
        out = list(dictionary_stream(7, 3))
        assert all(a < b for a, b in zip(out, out[1:]))

    def test_count_equals_binomial(self):
        for n in range(1, 21, 4):
            for k in range(1, n + 1):
                assert sum(1 for _ in dictionary_stream(n, k)) == math.comb(n, k)

    def test_bad_bounds(self):
        with pytest.raises(ConfigError):
            list(dictionary_stream(3, 4))
        with pytest.raises(ConfigError):
            list(dictionary_stream(3, 0))


class TestRandomStream:
    def test_exhaustive_budget_covers_space(self):
        got = sorted(random_stream(5, 2, seed=11, budget=10))
        assert got == [tuple(c) for c in itertools.combinations(range(1, 6), 2)]

    def test_deterministic(self):
        a = list(random_stream(12, 4, seed=3, budget=50))
        b = list(random_stream(12, 4, seed=3, budget=50))
        assert a == b

    def test_distinctness(self):
        out = list(random_stream(30, 15, seed=9, budget=1000))
        assert len(out) == 1000
        assert len(set(out)) == 1000

    def test_sets_are_sorted_and_in_range(self):
        for s in random_stream(10, 3, seed=4, budget=40):
            assert list(s) == sorted(s)
            assert 1 <= min(s) and max(s) <= 10
            assert len(s) == 3


def _consume(plan):
    stream, report = plan_stream(plan)
    return list(stream), report


class TestPlanStream:
    def test_privacy_filter(self):
        plan = GenerationPlan(n=4, k=2, budget=100, privacy_exceptions=((1, 2),))
        out, report = _consume(plan)
        assert out == [(1, 3), (1, 4), (2, 3), (2, 4), (3, 4)]
        assert report.excluded_privacy == 1
        assert report.emitted == 5

    def test_utility_priority_under_truncation(self):
        plan = GenerationPlan(n=4, k=2, budget=3, utility_exceptions=((3,),))
        out, report = _consume(plan)
        assert out == [(1, 3), (2, 3), (3, 4)]
        assert report.boosted_kept == 3

    def test_privacy_beats_utility(self):
        plan = GenerationPlan(
            n=4,
            k=2,
            budget=100,
            privacy_exceptions=((1, 2),),
            utility_exceptions=((1,), (2,)),
        )
        out, _ = _consume(plan)
        assert (1, 2) not in out

    def test_no_viable_partitions(self):
        plan = GenerationPlan(
            n=4, k=2, budget=10, privacy_exceptions=((1,), (2,), (3,), (4,))
        )
        stream, _ = plan_stream(plan)
        with pytest.raises(NoViablePartitionsError):
            list(stream)

    def test_matches_brute_force_reference(self):
        rng = random.Random(20_25)
        for n in range(2, 13, 2):
            for k in range(1, n + 1):
                for _ in range(3):
                    privacy = [
                        tuple(sorted(rng.sample(range(1, n + 1), rng.randint(1, min(3, n)))))
                        for _ in range(rng.randint(0, 2))
                    ]
                    utility = [
                        tuple(sorted(rng.sample(range(1, n + 1), rng.randint(1, min(3, n)))))
                        for _ in range(rng.randint(0, 2))
                    ]
                    budget = rng.randint(1, math.comb(n, k))
                    expected = brute_force_reference(n, k, privacy, utility, budget)
                    plan = GenerationPlan(
                        n=n,
                        k=k,
                        budget=budget,
                        privacy_exceptions=tuple(privacy),
                        utility_exceptions=tuple(utility),
                    )
                    if not expected:
                        stream, _ = plan_stream(plan)
                        with pytest.raises(NoViablePartitionsError):
                            list(stream)
                        continue
                    got, _ = _consume(plan)
                    assert got == expected, (n, k, privacy, utility, budget)

    def test_random_method_respects_privacy_and_boost(self):
        plan = GenerationPlan(
            n=8,
            k=3,
            method="random",
            budget=10,
            privacy_exceptions=((1, 2),),
            utility_exceptions=((5,),),
            seed=77,
        )
        out, report = _consume(plan)
        assert len(out) == 10
        assert len(set(out)) == 10
        for s in out:
            assert not {1, 2} <= set(s)
        # every boosted candidate that exists must be preferred: with budget
        # 10 and 15 viable boosted sets, all kept sets are boosted
        boosted = [s for s in out if 5 in s]
        assert len(boosted) == 10
        assert report.boosted_kept == 10

    def test_random_method_deterministic(self):
        plan = GenerationPlan(n=10, k=4, method="random", budget=30, seed=5)
        a, _ = _consume(plan)
        b, _ = _consume(plan)
        assert a == b

    def test_budget_clamped_to_space(self):
        plan = GenerationPlan(n=4, k=2, budget=999)
        out, report = _consume(plan)
        assert len(out) == 6
        assert not report.truncated

    def test_emission_never_violates_privacy_fuzz(self):
        rng = random.Random(99)
        for _ in range(25):
            n = rng.randint(2, 10)
            k = rng.randint(1, n)
            method = rng.choice(["dictionary", "random"])
            privacy = [
                tuple(sorted(rng.sample(range(1, n + 1), rng.randint(1, n))))
                for _ in range(rng.randint(0, 3))
            ]
            plan = GenerationPlan(
                n=n,
                k=k,
                method=method,
                budget=rng.randint(1, 40),
                privacy_exceptions=tuple(privacy),
                seed=rng.randint(0, 1 << 30),
            )
            stream, _ = plan_stream(plan)
            try:
                for s in stream:
                    assert not any(set(e) <= set(s) for e in privacy)
            except NoViablePartitionsError:
                pass


class TestCursorResume:
    def test_dictionary_resume_midway(self):
        plan = GenerationPlan(n=6, k=3, budget=20)
        full, _ = _consume(plan)
        cur = cursor(plan, emitted=7, last_set=full[6])
        resumed, _ = resume_from(plan, cur)
        assert list(resumed) == full[7:]

    def test_resume_from_zero(self):
        plan = GenerationPlan(n=6, k=3, method="random", budget=10, seed=3)
        full, _ = _consume(plan)
        resumed, _ = resume_from(plan, cursor(plan, emitted=0))
        assert list(resumed) == full

    def test_foreign_cursor_rejected(self):
        plan = GenerationPlan(n=6, k=3, budget=20)
        other = GenerationPlan(n=6, k=3, budget=21)
        cur = cursor(other, emitted=2)
        with pytest.raises(ForeignCursorError):
            resume_from(plan, cur)

    def test_version_mismatch_rejected(self):
        plan = GenerationPlan(n=6, k=3, budget=20)
        cur = GeneratorCursor(plan_digest=plan.digest(), emitted=1, version=99)
        with pytest.raises(ForeignCursorError):
            resume_from(plan, cur)

    def test_cursor_json_round_trip(self):
        cur = GeneratorCursor(plan_digest="abc", emitted=5, last_set=(1, 2, 9))
        assert GeneratorCursor.from_json(cur.to_json()) == cur

    @settings(max_examples=40, deadline=None)
    @given(
        st.integers(min_value=2, max_value=9),
        st.integers(min_value=0, max_value=1 << 20),
        st.sampled_from(["dictionary", "random"]),
        st.integers(min_value=0, max_value=200),
    )
    def test_resume_composition_property(self, n, seed, method, cut_raw):
        k = max(1, n // 2)
        plan = GenerationPlan(
            n=n,
            k=k,
            method=method,
            budget=math.comb(n, k),
            utility_exceptions=((2,),) if n >= 2 else (),
            seed=seed,
        )
        full, _ = _consume(plan)
        cut = cut_raw % (len(full) + 1)
        resumed, _ = resume_from(plan, cursor(plan, emitted=cut))
        assert full[:cut] + list(resumed) == full
