"""Attribute-set generation: dictionary and random streams, privacy
filtering, budget truncation with utility prioritization, and resumable
cursors.

A plan's output is a pure function of its fields, so resuming after an
interruption regenerates the stream deterministically and skips the sets
already emitted; the concatenation equals the uninterrupted sequence.
"""

import hashlib
import json
import math
import random
from dataclasses import dataclass
from typing import Iterator

from .errors import ConfigError, ForeignCursorError, NoViablePartitionsError
from .putmodel import DICTIONARY, RANDOM, boosts_utility, canonical_attribute_set, violates_privacy
from .util import derive_seed

# Bounded scans keep utility prioritization from enumerating astronomically
# large spaces; the floor guarantees complete scans for every n <= 20, which
# the brute-force equality tests rely on.
SCAN_CAP_FACTOR = 16
SCAN_CAP_FLOOR = 1 << 17

# Random generation stops deduplicating beyond this many remembered sets.
DEDUP_MEMORY_LIMIT = 1 << 22

CURSOR_VERSION = 1


@dataclass(frozen=True)
class GenerationPlan:
    n: int
    k: int
    method: str = DICTIONARY
    budget: int = 1
    privacy_exceptions: tuple[tuple[int, ...], ...] = ()
    utility_exceptions: tuple[tuple[int, ...], ...] = ()
    seed: int = 0

    def __post_init__(self):
        if not 1 <= self.k <= self.n:
            raise ConfigError(f"partition size {self.k} outside [1, {self.n}]")
        if self.budget < 1:
            raise ConfigError("budget must be >= 1")
        if self.method not in (DICTIONARY, RANDOM):
            raise ConfigError(f"unknown generation method {self.method!r}")
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

    def digest(self) -> str:
        material = json.dumps(
            {
                "n": self.n,
                "k": self.k,
                "method": self.method,
                "budget": self.budget,
                "privacy_exceptions": [list(e) for e in self.privacy_exceptions],
                "utility_exceptions": [list(e) for e in self.utility_exceptions],
                "seed": self.seed,
            },
            sort_keys=True,
        )
        return hashlib.sha256(material.encode("utf-8")).hexdigest()


@dataclass
class PlanReport:
    """Counters filled in while the stream is consumed."""

    generated: int = 0  # raw candidates examined
    emitted: int = 0
    excluded_privacy: int = 0
    boosted_kept: int = 0
    truncated: bool = False
    priority_scan_capped: bool = False
    dedup_abandoned: bool = False

    def to_json(self) -> dict:
        return dict(self.__dict__)


@dataclass
class GeneratorCursor:
    """Resumable position in a plan's stream.

    The stream is deterministic, so the emitted count plus the plan digest
    is sufficient to continue exactly; the last emitted set is kept for
    inspection and sanity checks.
    """

    plan_digest: str
    emitted: int
    last_set: tuple[int, ...] | None = None
    version: int = CURSOR_VERSION

    def to_json(self) -> dict:
        return {
            "version": self.version,
            "plan_digest": self.plan_digest,
            "emitted": self.emitted,
            "last_set": list(self.last_set) if self.last_set else None,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "GeneratorCursor":
        return cls(
            plan_digest=obj["plan_digest"],
            emitted=int(obj["emitted"]),
            last_set=tuple(obj["last_set"]) if obj.get("last_set") else None,
            version=int(obj.get("version", 0)),
        )


def dictionary_stream(n: int, k: int) -> Iterator[tuple[int, ...]]:
    """All k-subsets of {1..n} in lexicographic order of the sorted tuple."""
    if not 1 <= k <= n:
        raise ConfigError(f"partition size {k} outside [1, {n}]")
    combo = list(range(1, k + 1))
    while True:
        yield tuple(combo)
        # rightmost position that can still be advanced
        i = k - 1
        while i >= 0 and combo[i] == n - (k - 1 - i):
            i -= 1
        if i < 0:
            return
        combo[i] += 1
        for j in range(i + 1, k):
            combo[j] = combo[j - 1] + 1


def random_stream(
    n: int, k: int, seed: int, budget: int
) -> Iterator[tuple[int, ...]]:
    """`budget` distinct uniformly-drawn k-subsets of {1..n}, seeded.

    Duplicates are rejected and resampled while the seen-set stays under the
    memory limit; beyond it duplicates are tolerated.
    """
    report = PlanReport()
    population = range(1, n + 1)
    yield from _raw_random(population, k, seed, budget, report)


def _raw_random(population, k, seed, budget, report) -> Iterator[tuple[int, ...]]:
    rng = random.Random(derive_seed(seed, "random-stream"))
    total = math.comb(len(population), k)
    seen: set[tuple[int, ...]] = set()
    emitted = 0
    while emitted < budget:
        candidate = tuple(sorted(rng.sample(population, k)))
        if len(seen) < DEDUP_MEMORY_LIMIT:
            if candidate in seen:
                if len(seen) >= total:
                    return  # space exhausted
                continue
            seen.add(candidate)
        else:
            report.dedup_abandoned = True
        emitted += 1
        yield candidate


def _plan_candidates(plan: GenerationPlan, report: PlanReport) -> Iterator[tuple[int, ...]]:
    """Raw candidate stream for the plan's method, before any filtering.

    For the random method this yields distinct candidates (up to the dedup
    memory limit) without a count limit; callers stop consuming when done.
    """
    if plan.method == DICTIONARY:
        yield from dictionary_stream(plan.n, plan.k)
    else:
        yield from _raw_random(
            range(1, plan.n + 1), plan.k, plan.seed, math.inf, report
        )


def plan_stream(
    plan: GenerationPlan, report: PlanReport | None = None
) -> tuple[Iterator[tuple[int, ...]], PlanReport]:
    """The attribute sets an experiment will evaluate, plus live counters.

    Every emitted set is free of privacy exceptions (privacy takes
    precedence over utility). When utility exceptions are present, boosted
    sets are emitted first: a bounded two-phase scan for dictionary order,
    priority-aware buffering for random order. Raises
    NoViablePartitionsError (from the iterator) when nothing survives the
    privacy filter.
    """
    if report is None:
        report = PlanReport()
    return _plan_iter(plan, report), report


def _plan_iter(plan: GenerationPlan, report: PlanReport) -> Iterator[tuple[int, ...]]:
    budget = min(plan.budget, math.comb(plan.n, plan.k))
    scan_cap = max(SCAN_CAP_FACTOR * budget, SCAN_CAP_FLOOR)

    if not plan.utility_exceptions:
        yield from _plain_pass(plan, report, budget, scan_cap)
    elif plan.method == DICTIONARY:
        yield from _dictionary_two_phase(plan, report, budget, scan_cap)
    else:
        yield from _random_prioritized(plan, report, budget, scan_cap)
    if report.emitted == 0:
        raise NoViablePartitionsError(
            "every candidate attribute set violates a privacy exception"
        )


def _plain_pass(plan, report, budget, scan_cap) -> Iterator[tuple[int, ...]]:
    raw_cap = scan_cap if plan.method == RANDOM else math.inf
    for candidate in _plan_candidates(plan, report):
        if report.generated >= raw_cap:
            report.priority_scan_capped = True
            return
        report.generated += 1
        if violates_privacy(candidate, plan.privacy_exceptions):
            report.excluded_privacy += 1
            continue
        report.emitted += 1
        yield candidate
        if report.emitted >= budget:
            report.truncated = plan.method == DICTIONARY and not _exhausted(
                plan, report
            )
            return


def _exhausted(plan: GenerationPlan, report: PlanReport) -> bool:
    return report.generated >= math.comb(plan.n, plan.k)


def _dictionary_two_phase(plan, report, budget, scan_cap) -> Iterator[tuple[int, ...]]:
    # Phase 1: boosted sets in dictionary order.
    phase1_scanned = 0
    for candidate in dictionary_stream(plan.n, plan.k):
        if phase1_scanned >= scan_cap:
            report.priority_scan_capped = True
            break
        phase1_scanned += 1
        if violates_privacy(candidate, plan.privacy_exceptions):
            report.excluded_privacy += 1
            continue
        if boosts_utility(candidate, plan.utility_exceptions):
            report.emitted += 1
            report.boosted_kept += 1
            yield candidate
            if report.emitted >= budget:
                report.generated = phase1_scanned
                report.truncated = not _exhausted_at(plan, phase1_scanned)
                return
    report.generated = phase1_scanned

    # Phase 2: fill the remainder with non-boosted sets from the start.
    # Boosted candidates inside the phase-1 scan range were already emitted;
    # beyond that range (cap hit) any viable candidate is fair game.
    position = 0
    for candidate in dictionary_stream(plan.n, plan.k):
        if position >= scan_cap:
            report.priority_scan_capped = True
            return
        position += 1
        if position > phase1_scanned:
            report.generated = position
            if violates_privacy(candidate, plan.privacy_exceptions):
                report.excluded_privacy += 1
                continue
        else:
            if violates_privacy(candidate, plan.privacy_exceptions):
                continue
            if boosts_utility(candidate, plan.utility_exceptions):
                continue  # emitted in phase 1
        report.emitted += 1
        yield candidate
        if report.emitted >= budget:
            report.truncated = not _exhausted_at(plan, position)
            return


def _exhausted_at(plan: GenerationPlan, scanned: int) -> bool:
    return scanned >= math.comb(plan.n, plan.k)


def _random_prioritized(plan, report, budget, scan_cap) -> Iterator[tuple[int, ...]]:
    boosted: list[tuple[int, ...]] = []
    plain: list[tuple[int, ...]] = []
    total = math.comb(plan.n, plan.k)
    for candidate in _plan_candidates(plan, report):
        if report.generated >= min(scan_cap, total):
            report.priority_scan_capped = report.generated < total
            break
        report.generated += 1
        if violates_privacy(candidate, plan.privacy_exceptions):
            report.excluded_privacy += 1
            continue
        if boosts_utility(candidate, plan.utility_exceptions):
            boosted.append(candidate)
            if len(boosted) >= budget:
                break
        elif len(plain) < budget:
            plain.append(candidate)
        if report.generated >= total:
            break
    kept = boosted + plain[: budget - len(boosted)]
    report.boosted_kept = len(boosted[:budget])
    report.truncated = len(boosted) + len(plain) > budget
    for candidate in kept:
        report.emitted += 1
        yield candidate


def cursor(plan: GenerationPlan, emitted: int, last_set=None) -> GeneratorCursor:
    """Snapshot the stream position after `emitted` sets."""
    return GeneratorCursor(
        plan_digest=plan.digest(),
        emitted=emitted,
        last_set=tuple(last_set) if last_set else None,
    )


def resume_from(
    plan: GenerationPlan, cur: GeneratorCursor, report: PlanReport | None = None
) -> tuple[Iterator[tuple[int, ...]], PlanReport]:
    """Continue a plan's stream after the sets the cursor accounts for.

    The stream is regenerated from the plan and the first `cursor.emitted`
    sets are skipped, so pre- and post-interruption emissions concatenate to
    the exact uninterrupted sequence.
    """
    if cur.version != CURSOR_VERSION:
        raise ForeignCursorError(
            f"cursor version {cur.version} != {CURSOR_VERSION}"
        )
    if cur.plan_digest != plan.digest():
        raise ForeignCursorError("cursor belongs to a different generation plan")
    if report is None:
        report = PlanReport()

    def _skip() -> Iterator[tuple[int, ...]]:
        stream, _ = plan_stream(plan, report)
        for index, candidate in enumerate(stream):
            if index < cur.emitted:
                continue
            yield candidate

    return _skip(), report
