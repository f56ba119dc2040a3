"""Race loop, score arithmetic, winner choice, and the plan cache."""

from __future__ import annotations

import random

import pytest

from planrace.engine import RangePredicate, generate_dataset, query_shape
from planrace.errors import NoCandidatesError, UndefinedProductivityError
from planrace.executor import CostModel, open_execution
from planrace.optimizer import (
    CacheMode,
    PlanCache,
    PlanCacheEntry,
    RaceKnobs,
    Score,
    TrialStats,
    maybe_replan,
    optimize,
    pick_best,
    race,
    score_plan,
)
from planrace.plans import (
    CandidatePlan,
    OptimizerVariant,
    PlanId,
    PlanKind,
    enumerate_candidates,
    parse_plan_hint,
)
from planrace.scenarios import get_scenario

COST = CostModel()
KNOBS = RaceKnobs()


def stats(works, results, *, eof=False, fetch=False, plan="IXSCAN_A"):
    return TrialStats(plan_id=parse_plan_hint(plan), works=works, results=results,
                      reached_eof=eof, has_fetch=fetch)


def executions_for(collection, scenario_name, variant, low_a, high_a, low_b, high_b):
    scenario = get_scenario(scenario_name)
    catalog = scenario.build_catalog(collection)
    q = scenario.make_query(RangePredicate("A", low_a, high_a),
                            RangePredicate("B", low_b, high_b))
    plans = enumerate_candidates(q, catalog, variant)
    return [open_execution(p, collection, catalog, COST) for p in plans]


# --- race -----------------------------------------------------------------

def test_max_rounds_formula():
    assert RaceKnobs().max_rounds(100_000) == 30_000
    assert RaceKnobs().max_rounds(10_000) == 10_000


def test_single_collscan_race_runs_to_eof():
    c = generate_dataset(50, "uniform-distinct", seed=3)
    scenario = get_scenario("both-indexed")
    q = scenario.make_query(RangePredicate("A", 0, 50), RangePredicate("B", 0, 50))
    from planrace.engine import IndexCatalog
    catalog = IndexCatalog()  # no indexes: COLLSCAN is required
    plans = enumerate_candidates(q, catalog, OptimizerVariant.VANILLA)
    stats_out = race([open_execution(plans[0], c, catalog, COST)], 50, KNOBS)
    s = stats_out[0]
    assert (s.works, s.results, s.reached_eof) == (51, 50, True)


def test_race_stops_round_after_max_results():
    c = generate_dataset(5000, "uniform-distinct", seed=9)
    # plan A advances every round (B matches everything), hits 101 at round 101
    exs = executions_for(c, "both-indexed", OptimizerVariant.VANILLA, 0, 5000, 0, 5000)
    out = race(exs, len(c), KNOBS)
    assert out[0].results == 101
    assert all(s.works == 101 for s in out)


def test_race_round_robin_gives_equal_works():
    c = generate_dataset(3000, "uniform-distinct", seed=10)
    exs = executions_for(c, "both-indexed", OptimizerVariant.MOD, 100, 900, 50, 1500)
    out = race(exs, len(c), KNOBS)
    works = [s.works for s in out]
    assert max(works) - min(works) <= 1
    assert all(s.results <= min(s.works, KNOBS.max_results) for s in out)


def test_race_respects_round_cap():
    c = generate_dataset(200, "uniform-distinct", seed=12)
    knobs = RaceKnobs(evaluation_works=7, coll_fraction=0.001, max_results=101)
    exs = executions_for(c, "both-indexed", OptimizerVariant.VANILLA, 0, 200, 0, 200)
    out = race(exs, len(c), knobs)
    assert all(s.works == 7 for s in out)


def test_race_completes_round_after_stop_condition():
    # first candidate EOFs mid-round; the later candidate still gets its
    # work() for that round, so both end with identical work counts
    c = generate_dataset(400, "uniform-distinct", seed=8)
    exs = executions_for(c, "both-indexed", OptimizerVariant.WITH_COLLSCAN, 0, 30, 0, 400)
    out = race(exs, len(c), KNOBS)
    assert out[0].reached_eof  # IXSCAN_A: 30 entries + terminal step
    assert out[0].works == 31
    assert [s.works for s in out] == [31, 31, 31]


def test_race_retains_cursor_state_for_continuation():
    c = generate_dataset(500, "uniform-distinct", seed=14)
    exs = executions_for(c, "both-indexed", OptimizerVariant.VANILLA, 0, 500, 0, 500)
    race(exs, len(c), KNOBS)
    winner = exs[0]
    from planrace.executor import run_to_completion
    rids, _, works = run_to_completion(winner)
    assert works == 501  # continued, not restarted
    assert len(rids) == 500


def test_race_rejects_empty_and_stale():
    with pytest.raises(NoCandidatesError):
        race([], 10, KNOBS)
    c = generate_dataset(50, "uniform-distinct", seed=3)
    exs = executions_for(c, "both-indexed", OptimizerVariant.VANILLA, 0, 50, 0, 50)
    race(exs, len(c), KNOBS)
    with pytest.raises(ValueError):
        race(exs, len(c), KNOBS)


# --- score_plan -----------------------------------------------------------

def test_score_productive_no_fetch_no_eof():
    s = score_plan(stats(101, 101), OptimizerVariant.VANILLA)
    assert s.total == pytest.approx(2.0003, abs=1e-12)
    assert s.tie_break_unit == pytest.approx(1e-4, abs=1e-15)


def test_score_productive_with_fetch():
    s = score_plan(stats(101, 101, fetch=True), OptimizerVariant.VANILLA)
    assert s.no_fetch_bonus == 0.0
    assert s.total == pytest.approx(2.0002, abs=1e-12)


def test_score_mod_halves_fetch_productivity():
    s = score_plan(stats(101, 101, fetch=True), OptimizerVariant.MOD)
    assert s.productivity == pytest.approx(0.5, abs=1e-15)
    assert s.total == pytest.approx(1.5002, abs=1e-12)


def test_score_mod_leaves_fetchless_plans_alone():
    vanilla = score_plan(stats(101, 101), OptimizerVariant.VANILLA)
    mod = score_plan(stats(101, 101), OptimizerVariant.MOD)
    assert mod.total == vanilla.total


def test_score_unproductive_long_trial():
    s = score_plan(stats(30_000, 0), OptimizerVariant.VANILLA)
    assert s.total == pytest.approx(1.00001, abs=1e-12)


def test_score_eof_bonus():
    s = score_plan(stats(51, 50, eof=True, fetch=True), OptimizerVariant.VANILLA)
    assert s.eof_bonus == 1.0
    assert s.total == pytest.approx(1 + 50 / 51 + 2 * min(1 / 510, 1e-4) + 1, abs=1e-12)


def test_score_decomposition_invariant():
    rng = random.Random(1)
    for _ in range(200):
        works = rng.randint(1, 40_000)
        results = rng.randint(0, min(works, 101))
        s = score_plan(stats(works, results, eof=rng.random() < 0.3,
                             fetch=rng.random() < 0.5),
                       rng.choice(list(OptimizerVariant)))
        assert s.total == s.base + s.productivity + s.tie_breakers + s.eof_bonus
        assert 0.0 <= s.productivity <= 1.0
        assert 1.0 <= s.total <= 2 + 3e-4 + 1


def test_score_mod_never_exceeds_vanilla():
    rng = random.Random(2)
    for _ in range(200):
        works = rng.randint(1, 5000)
        st = stats(works, rng.randint(0, min(works, 101)), fetch=rng.random() < 0.5)
        v = score_plan(st, OptimizerVariant.VANILLA).total
        m = score_plan(st, OptimizerVariant.MOD).total
        if st.has_fetch and st.results:
            assert m < v
        else:
            assert m == v


def test_score_zero_works_rejected():
    with pytest.raises(UndefinedProductivityError):
        score_plan(stats(0, 0), OptimizerVariant.VANILLA)


# --- pick_best ------------------------------------------------------------

def fake_plan(name):
    return CandidatePlan(parse_plan_hint(name), ())


def make_score(total):
    # decompose an arbitrary total as base + productivity-like remainder
    return Score(base=1.0, productivity=total - 1.0, tie_break_unit=0.0,
                 no_fetch_bonus=0.0, no_sort_bonus=0.0, no_ixisect_bonus=0.0,
                 eof_bonus=0.0)


def test_pick_best_argmax():
    cands = [fake_plan("IXSCAN_A"), fake_plan("IXSCAN_B"), fake_plan("COLLSCAN")]
    scores = [make_score(2.0002), make_score(1.9), make_score(1.7)]
    assert str(pick_best(scores, cands)) == "IXSCAN_A"


def test_pick_best_tie_goes_to_candidate_order():
    cands = [fake_plan("IXSCAN_A"), fake_plan("IXSCAN_B")]
    assert str(pick_best([make_score(1.5), make_score(1.5)], cands)) == "IXSCAN_A"


def test_pick_best_singleton():
    assert str(pick_best([make_score(1.0)], [fake_plan("COLLSCAN")])) == "COLLSCAN"


def test_pick_best_shift_invariance():
    rng = random.Random(4)
    cands = [fake_plan("IXSCAN_A"), fake_plan("IXSCAN_B"), fake_plan("COLLSCAN")]
    for _ in range(100):
        totals = [rng.uniform(1, 3) for _ in cands]
        shifted = [t + 0.37 for t in totals]
        assert pick_best([make_score(t) for t in totals], cands) == \
               pick_best([make_score(t) for t in shifted], cands)


# --- optimize -------------------------------------------------------------

@pytest.fixture(scope="module")
def collection():
    return generate_dataset(10_000, "uniform-distinct", seed=77)


def make_query(scenario_name, e_a, e_b, collection):
    n = len(collection)
    scenario = get_scenario(scenario_name)
    return scenario.make_query(RangePredicate("A", 0, int(e_a * n)),
                               RangePredicate("B", 0, int(e_b * n)))


def test_optimize_prefers_lower_selectivity_index(collection):
    scenario = get_scenario("both-indexed")
    catalog = scenario.build_catalog(collection)
    q = make_query("both-indexed", 0.1, 0.5, collection)
    assert str(optimize(q, collection, catalog).chosen) == "IXSCAN_A"
    q = make_query("both-indexed", 0.5, 0.1, collection)
    assert str(optimize(q, collection, catalog).chosen) == "IXSCAN_B"


def test_optimize_is_deterministic(collection):
    scenario = get_scenario("covering")
    catalog = scenario.build_catalog(collection)
    q = make_query("covering", 0.3, 0.4, collection)
    first = optimize(q, collection, catalog, OptimizerVariant.MOD)
    for _ in range(3):
        again = optimize(q, collection, catalog, OptimizerVariant.MOD)
        assert again.chosen == first.chosen
        assert [s.works for s in again.stats] == [s.works for s in first.stats]


def test_optimize_cache_hit_skips_race(collection):
    scenario = get_scenario("both-indexed")
    catalog = scenario.build_catalog(collection)
    cache = PlanCache()
    q1 = make_query("both-indexed", 0.1, 0.5, collection)
    r1 = optimize(q1, collection, catalog, cache=cache, cache_mode=CacheMode.ON_NO_REPLAN)
    assert not r1.from_cache
    q2 = make_query("both-indexed", 0.6, 0.05, collection)  # same shape, different constants
    r2 = optimize(q2, collection, catalog, cache=cache, cache_mode=CacheMode.ON_NO_REPLAN)
    assert r2.from_cache
    assert r2.chosen == r1.chosen  # primed plan reused even though B would now win
    assert r2.stats == []


def test_optimize_cache_off_always_races(collection):
    scenario = get_scenario("both-indexed")
    catalog = scenario.build_catalog(collection)
    cache = PlanCache()
    q = make_query("both-indexed", 0.1, 0.5, collection)
    optimize(q, collection, catalog, cache=cache, cache_mode=CacheMode.OFF)
    assert cache.entries == {}


def test_optimize_cache_on_replans_when_works_blow_up(collection):
    scenario = get_scenario("both-indexed")
    catalog = scenario.build_catalog(collection)
    cache = PlanCache()
    q1 = make_query("both-indexed", 0.002, 0.9, collection)   # tiny trial: A EOFs fast
    r1 = optimize(q1, collection, catalog, cache=cache, cache_mode=CacheMode.ON)
    assert str(r1.chosen) == "IXSCAN_A"
    trial_works = cache.get(query_shape(q1)).trial_works
    q2 = make_query("both-indexed", 0.9, 0.002, collection)   # cached plan now awful
    r2 = optimize(q2, collection, catalog, cache=cache, cache_mode=CacheMode.ON)
    assert not r2.from_cache  # evicted and re-raced
    assert str(r2.chosen) == "IXSCAN_B"
    assert 0.9 * len(collection) > 10 * trial_works  # the eviction was justified


def test_optimize_cache_on_keeps_plan_within_threshold(collection):
    scenario = get_scenario("both-indexed")
    catalog = scenario.build_catalog(collection)
    cache = PlanCache()
    # plan A reaches EOF during its trial, so a full run costs no more than
    # the trial did and stays far under the replan threshold
    q1 = make_query("both-indexed", 0.002, 0.9, collection)
    r1 = optimize(q1, collection, catalog, cache=cache, cache_mode=CacheMode.ON)
    q2 = make_query("both-indexed", 0.0015, 0.9, collection)
    r2 = optimize(q2, collection, catalog, cache=cache, cache_mode=CacheMode.ON)
    assert r2.from_cache
    assert r2.chosen == r1.chosen


def test_optimize_hinted_query_races_single_candidate(collection):
    scenario = get_scenario("both-indexed")
    catalog = scenario.build_catalog(collection)
    q = scenario.make_query(RangePredicate("A", 0, 1000), RangePredicate("B", 0, 5000),
                            hint=parse_plan_hint("COLLSCAN"))
    r = optimize(q, collection, catalog)
    assert [str(p.id) for p in r.candidates] == ["COLLSCAN"]
    assert str(r.chosen) == "COLLSCAN"


# --- maybe_replan ---------------------------------------------------------

def entry(trial_works, factor=10.0):
    return PlanCacheEntry(shape="s", plan_id=parse_plan_hint("IXSCAN_A"),
                          trial_works=trial_works, replan_factor=factor)


def test_maybe_replan_keeps_within_factor():
    assert maybe_replan(entry(100), 900) is False
    assert maybe_replan(entry(100), 1000) is False  # boundary: not strictly greater


def test_maybe_replan_evicts_beyond_factor():
    assert maybe_replan(entry(100), 1001) is True
