"""The racing optimizer: trial execution, scoring, choice, and plan cache.

Candidates run round-robin, one work unit each per round, until a plan
returns EOF, a plan accumulates max_results trial results, or the round
budget max(evaluation_works, coll_fraction * N) runs out. When the stop
condition fires mid-round the round still completes, so every plan ends the
race with the same number of work units (give or take the terminal step).

Each plan is then scored
    total = 1 + productivity + tie_breakers + eof_bonus
with productivity = results / works, a tie-break unit of
min(1 / (10 * works), 1e-4) granted once per absent penalty flag (fetch,
blocking sort, index intersection), and an EOF bonus of 1. The "mod"
variant halves productivity for any plan containing a fetch, compensating
for the fetch cost hidden inside its single work unit.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .engine import Collection, IndexCatalog, Query, query_shape
from .errors import NoCandidatesError, UndefinedProductivityError
from .executor import (
    CostModel,
    PlanExecution,
    WorkState,
    open_execution,
    run_to_completion,
)
from .plans import CandidatePlan, OptimizerVariant, PlanId, enumerate_candidates

TIE_BREAK_CAP = 1e-4


@dataclass(frozen=True)
class RaceKnobs:
    evaluation_works: int = 10_000
    coll_fraction: float = 0.3
    max_results: int = 101

    def __post_init__(self):
        if self.evaluation_works <= 0 or self.coll_fraction <= 0 or self.max_results <= 0:
            raise ValueError("race knobs must all be positive")

    def max_rounds(self, n_records: int) -> float:
        return max(self.evaluation_works, self.coll_fraction * n_records)


@dataclass(frozen=True)
class TrialStats:
    plan_id: PlanId
    works: int
    results: int
    reached_eof: bool
    has_fetch: bool
    has_blocking_sort: bool = False
    has_ixisect: bool = False


@dataclass(frozen=True)
class Score:
    base: float
    productivity: float
    tie_break_unit: float
    no_fetch_bonus: float
    no_sort_bonus: float
    no_ixisect_bonus: float
    eof_bonus: float

    @property
    def tie_breakers(self) -> float:
        return self.no_fetch_bonus + self.no_sort_bonus + self.no_ixisect_bonus

    @property
    def total(self) -> float:
        return self.base + self.productivity + self.tie_breakers + self.eof_bonus


def race(executions: list[PlanExecution], n_records: int, knobs: RaceKnobs) -> list[TrialStats]:
    """Trial-run all candidates round-robin; returns per-plan stats.

    Cursor state is left in place so the winner can resume where its trial
    stopped.
    """
    if not executions:
        raise NoCandidatesError("race needs at least one candidate execution")
    for ex in executions:
        if ex.works != 0:
            raise ValueError("race requires fresh executions")
    max_rounds = knobs.max_rounds(n_records)
    working = True
    i = 0
    while working and i < max_rounds:
        for ex in executions:
            state = ex.work()
            if state is WorkState.ADVANCED:
                if ex.results >= knobs.max_results:
                    working = False
            elif state is WorkState.EOF:
                working = False
        i += 1
    return [
        TrialStats(
            plan_id=ex.plan.id,
            works=ex.works,
            results=ex.results,
            reached_eof=ex.eof,
            has_fetch=ex.plan.has_fetch,
        )
        for ex in executions
    ]


def score_plan(stats: TrialStats, variant: OptimizerVariant) -> Score:
    if stats.works < 1:
        raise UndefinedProductivityError("cannot score a plan with zero work units")
    productivity = stats.results / stats.works
    if variant is OptimizerVariant.MOD and stats.has_fetch:
        productivity *= 0.5
    unit = min(1.0 / (10 * stats.works), TIE_BREAK_CAP)
    return Score(
        base=1.0,
        productivity=productivity,
        tie_break_unit=unit,
        no_fetch_bonus=0.0 if stats.has_fetch else unit,
        no_sort_bonus=0.0 if stats.has_blocking_sort else unit,
        no_ixisect_bonus=0.0 if stats.has_ixisect else unit,
        eof_bonus=1.0 if stats.reached_eof else 0.0,
    )


def pick_best(scores: list[Score], candidates: list[CandidatePlan]) -> PlanId:
    """Highest total wins; exact ties go to the earliest candidate."""
    best = max(range(len(scores)), key=lambda idx: scores[idx].total)
    return candidates[best].id


# ---------------------------------------------------------------------------
# Plan cache keyed by query shape.

@dataclass
class PlanCacheEntry:
    shape: str
    plan_id: PlanId
    trial_works: int
    replan_factor: float = 10.0


@dataclass
class PlanCache:
    entries: dict[str, PlanCacheEntry] = field(default_factory=dict)

    def get(self, shape: str) -> PlanCacheEntry | None:
        return self.entries.get(shape)

    def put(self, entry: PlanCacheEntry) -> None:
        self.entries[entry.shape] = entry

    def evict(self, shape: str) -> None:
        self.entries.pop(shape, None)


def maybe_replan(entry: PlanCacheEntry, observed_works: int) -> bool:
    """True to evict: the cached plan blew past replan_factor x its trial works."""
    return observed_works > entry.replan_factor * entry.trial_works


class CacheMode(enum.Enum):
    OFF = "off"
    ON = "on"
    ON_NO_REPLAN = "on-no-replan"


@dataclass
class OptimizeResult:
    chosen: PlanId
    candidates: list[CandidatePlan]
    stats: list[TrialStats]
    scores: list[Score]
    from_cache: bool = False


def optimize(query: Query, collection: Collection, catalog: IndexCatalog,
             variant: OptimizerVariant = OptimizerVariant.VANILLA,
             knobs: RaceKnobs = RaceKnobs(),
             cost: CostModel = CostModel(),
             cache: PlanCache | None = None,
             cache_mode: CacheMode = CacheMode.OFF) -> OptimizeResult:
    """Choose a plan: enumerate, race, score, pick; or reuse a cached plan.

    With the cache on, a shape hit skips the race. In ON mode the cached plan
    is executed for this query and evicted (then re-raced) if its work blows
    past the replan threshold; ON_NO_REPLAN reuses it unconditionally.
    """
    shape = query_shape(query)
    use_cache = cache is not None and cache_mode is not CacheMode.OFF
    if use_cache:
        entry = cache.get(shape)
        if entry is not None:
            if cache_mode is CacheMode.ON_NO_REPLAN:
                return OptimizeResult(entry.plan_id, [], [], [], from_cache=True)
            hinted = enumerate_candidates(
                Query(query.predicates, query.projection, hint=entry.plan_id),
                catalog, variant)
            execution = open_execution(hinted[0], collection, catalog, cost)
            _, _, observed_works = run_to_completion(execution)
            if not maybe_replan(entry, observed_works):
                return OptimizeResult(entry.plan_id, [], [], [], from_cache=True)
            cache.evict(shape)

    candidates = enumerate_candidates(query, catalog, variant)
    executions = [open_execution(plan, collection, catalog, cost) for plan in candidates]
    stats = race(executions, len(collection), knobs)
    scores = [score_plan(s, variant) for s in stats]
    chosen = pick_best(scores, candidates)
    if use_cache:
        winner_works = next(s.works for s in stats if s.plan_id == chosen)
        cache.put(PlanCacheEntry(shape=shape, plan_id=chosen, trial_works=winner_works))
    return OptimizeResult(chosen, candidates, stats, scores)
