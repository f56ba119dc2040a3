"""Selectivity-grid evaluation: sweep, forced measurement, and metrics.

The harness drives the optimizer over a D x D grid of (e_A, e_B)
selectivities. Random range queries are drawn until every cell has been
visited once; each visited cell records the optimizer's choice. Every plan
in the scenario's forced set (collection scan included, whether or not the
optimizer would consider it) is then timed over repeated runs, outliers are
dropped with the 1.5 IQR rule, and each cell's chosen plan is compared
against the true argmin to yield an accuracy fraction and a mean slowdown.
"""

from __future__ import annotations

import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .engine import (
    Collection,
    IndexCatalog,
    Query,
    RangePredicate,
    match_count,
    query_shape,
)
from .errors import PlanraceError, UnknownPlanError
from .executor import CostModel, plan_cost_totals
from .optimizer import (
    CacheMode,
    PlanCache,
    PlanCacheEntry,
    RaceKnobs,
    optimize,
)
from .plans import OptimizerVariant, PlanId, enumerate_candidates, plan_order_key
from .scenarios import Scenario

# Give up on rejection sampling after this many consecutive misses and fill
# the remaining cells by direct construction.
REJECTION_CAP = 1_000_000


@dataclass
class GridCell:
    i: int
    j: int
    e_a: float
    e_b: float
    query: Query
    chosen: str
    per_plan_times: dict[str, float] = field(default_factory=dict)
    optimal: str | None = None
    ratio: float | None = None


@dataclass
class ExperimentGrid:
    d: int
    cells: dict[tuple[int, int], GridCell] = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def cell(self, i: int, j: int) -> GridCell | None:
        return self.cells.get((i, j))

    def sorted_cells(self) -> list[GridCell]:
        return [self.cells[key] for key in sorted(self.cells)]

    @property
    def complete(self) -> bool:
        return len(self.cells) == self.d * self.d


@dataclass(frozen=True)
class SummaryMetrics:
    accuracy: float
    impact_pct: float


def rand_range_predicate(field_name: str, lo: int, hi: int, rng: random.Random) -> RangePredicate:
    """Random half-open range inside [lo, hi]: width uniform on [1, domain size]."""
    domain = hi - lo + 1
    width = rng.randint(1, domain)
    low = rng.randint(lo, hi - width + 1)
    return RangePredicate(field_name, low, low + width)


def map_selectivity_to_cell(e: float, d: int) -> int:
    """Bucket a selectivity in [0, 1] onto grid coordinate 0..d-1."""
    return min(int(e * d), d - 1)


def _cell_from_count(count: int, n: int, d: int) -> int:
    # integer form of map_selectivity_to_cell(count / n, d); avoids the float
    # rounding that can land an exact count in the neighboring bucket
    return min(count * d // n, d - 1)


def quantile_r7(samples: list[float], p: float) -> float:
    """Linear-interpolation quantile on the sorted sample."""
    s = sorted(samples)
    if len(s) == 1:
        return s[0]
    h = (len(s) - 1) * p
    f = math.floor(h)
    c = min(f + 1, len(s) - 1)
    return s[f] + (h - f) * (s[c] - s[f])


def filter_outliers(samples: list[float]) -> list[float]:
    """Drop samples outside [Q1 - 1.5 IQR, Q3 + 1.5 IQR]; order preserved."""
    if not samples:
        raise ValueError("need at least one sample")
    q1 = quantile_r7(samples, 0.25)
    q3 = quantile_r7(samples, 0.75)
    spread = 1.5 * (q3 - q1)
    lo, hi = q1 - spread, q3 + spread
    return [x for x in samples if lo <= x <= hi]


def measure_all_plans(query: Query, collection: Collection, catalog: IndexCatalog,
                      forced_plans: list[PlanId], cost: CostModel, reps: int = 10,
                      noise=None, rng: random.Random | None = None) -> dict[str, float]:
    """Mean post-filter run time of every forced plan, via hint forcing.

    noise, when given, is a callable (rng, time) -> time simulating wall-clock
    jitter; without it the simulated executor makes all reps identical.
    """
    means: dict[str, float] = {}
    for plan_id in forced_plans:
        hinted = Query(query.predicates, query.projection, hint=plan_id)
        plan = enumerate_candidates(hinted, catalog)[0]
        samples = []
        for _ in range(reps):
            t, _ = plan_cost_totals(plan, collection, catalog, cost)
            if noise is not None:
                t = noise(rng, t)
            samples.append(t)
        kept = filter_outliers(samples)
        if not kept:
            raise PlanraceError("outlier filter removed every sample")  # unreachable
        means[str(plan_id)] = sum(kept) / len(kept)
    return means


def gaussian_noise(sigma_frac: float, spike_prob: float = 0.0, spike_scale: float = 10.0):
    """Multiplicative jitter with occasional spikes, for exercising the IQR filter."""

    def inject(rng: random.Random, t: float) -> float:
        factor = max(0.0, rng.gauss(1.0, sigma_frac))
        if spike_prob and rng.random() < spike_prob:
            factor *= spike_scale
        return t * factor

    return inject


def _direct_fill_queries(scenario: Scenario, collection: Collection,
                         catalog: IndexCatalog, missing: list[tuple[int, int]],
                         d: int) -> list[tuple[int, int, Query, int, int]]:
    # Construct a query per unvisited cell targeting the cell's center
    # selectivity; exact for distinct uniform values, best effort otherwise.
    n = len(collection)
    out = []
    for (i, j) in missing:
        counts = []
        preds = []
        for field_name, cell_idx in (("A", i), ("B", j)):
            target = max(1, ((2 * cell_idx + 1) * n) // (2 * d))
            lo, _ = collection.value_bounds(field_name)
            pred = RangePredicate(field_name, lo, lo + target)
            preds.append(pred)
            counts.append(match_count(collection, pred, catalog))
        out.append((i, j, scenario.make_query(preds[0], preds[1]), counts[0], counts[1]))
    return out


def sweep(scenario: Scenario, collection: Collection, catalog: IndexCatalog,
          variant: OptimizerVariant, d: int, seed: int,
          knobs: RaceKnobs = RaceKnobs(), cost: CostModel = CostModel(),
          cache: PlanCache | None = None,
          cache_mode: CacheMode = CacheMode.OFF) -> ExperimentGrid:
    """Fill every grid cell with a random query and the optimizer's choice."""
    rng = random.Random(seed)
    n = len(collection)
    grid = ExperimentGrid(d=d)
    a_lo, a_hi = collection.value_bounds("A")
    b_lo, b_hi = collection.value_bounds("B")

    def record(i: int, j: int, query: Query, count_a: int, count_b: int) -> None:
        result = optimize(query, collection, catalog, variant, knobs, cost,
                          cache=cache, cache_mode=cache_mode)
        grid.cells[(i, j)] = GridCell(
            i=i, j=j, e_a=count_a / n, e_b=count_b / n,
            query=query, chosen=str(result.chosen))

    rejections = 0
    while not grid.complete:
        pred_a = rand_range_predicate("A", a_lo, a_hi, rng)
        pred_b = rand_range_predicate("B", b_lo, b_hi, rng)
        count_a = match_count(collection, pred_a, catalog)
        count_b = match_count(collection, pred_b, catalog)
        i = _cell_from_count(count_a, n, d)
        j = _cell_from_count(count_b, n, d)
        if (i, j) in grid.cells:
            rejections += 1
            if rejections >= REJECTION_CAP:
                missing = [key for key in
                           ((x, y) for x in range(d) for y in range(d))
                           if key not in grid.cells]
                for fi, fj, query, ca, cb in _direct_fill_queries(
                        scenario, collection, catalog, missing, d):
                    record(fi, fj, query, ca, cb)
                break
            continue
        rejections = 0
        record(i, j, scenario.make_query(pred_a, pred_b), count_a, count_b)
    return grid


def measure_grid(grid: ExperimentGrid, collection: Collection, catalog: IndexCatalog,
                 scenario: Scenario, cost: CostModel, reps: int = 10,
                 noise=None, seed: int = 0, jobs: int = 1) -> None:
    """Fill per_plan_times for every cell (independent cells, optional fan-out)."""
    forced = scenario.forced_plan_ids()
    cells = grid.sorted_cells()

    def measure(cell: GridCell) -> dict[str, float]:
        cell_rng = random.Random((seed, cell.i, cell.j)) if noise is not None else None
        return measure_all_plans(cell.query, collection, catalog, forced, cost,
                                 reps=reps, noise=noise, rng=cell_rng)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(measure, cells))
    else:
        results = [measure(c) for c in cells]
    for cell, times in zip(cells, results):
        cell.per_plan_times = times


def finalize(grid: ExperimentGrid) -> tuple[ExperimentGrid, SummaryMetrics]:
    """Determine per-cell optimal plans and the summary metrics.

    Exact time ties go to the chosen plan when it participates (so boundary
    cells are not counted against the optimizer), otherwise to the first
    plan in canonical id order. Idempotent on an already-finalized grid.
    """
    correct = 0
    slowdowns = []
    for cell in grid.sorted_cells():
        if not cell.per_plan_times:
            raise PlanraceError(f"cell ({cell.i},{cell.j}) has no measurements")
        best_time = min(cell.per_plan_times.values())
        tied = [p for p, t in cell.per_plan_times.items() if t == best_time]
        if cell.chosen in tied:
            cell.optimal = cell.chosen
        else:
            cell.optimal = min(tied, key=plan_order_key)
        cell.ratio = cell.per_plan_times[cell.chosen] / best_time
        if cell.chosen == cell.optimal:
            correct += 1
        slowdowns.append((cell.ratio - 1.0) * 100.0)
    n_cells = len(grid.cells)
    metrics = SummaryMetrics(
        accuracy=correct / n_cells,
        impact_pct=sum(slowdowns) / n_cells,
    )
    return grid, metrics


def primed_cache_for(scenario: Scenario, primed: PlanId) -> PlanCache:
    """Plan cache pre-seeded with `primed` for the scenario's query shape."""
    if str(primed) not in {str(p) for p in scenario.forced_plan_ids()}:
        raise UnknownPlanError(
            f"plan {primed} is not executable in scenario {scenario.name!r}")
    lo_a = RangePredicate("A", 0, 1)
    lo_b = RangePredicate("B", 0, 1)
    shape = query_shape(scenario.make_query(lo_a, lo_b))
    cache = PlanCache()
    cache.put(PlanCacheEntry(shape=shape, plan_id=primed, trial_works=1))
    return cache


def run_experiment(scenario: Scenario, collection: Collection, variant: OptimizerVariant,
                   d: int, seed: int, knobs: RaceKnobs = RaceKnobs(),
                   cost: CostModel = CostModel(), reps: int = 10,
                   primed: PlanId | None = None, noise=None,
                   jobs: int = 1) -> tuple[ExperimentGrid, SummaryMetrics]:
    """Sweep, measure and finalize one full experiment.

    With `primed` set this is the plan-cache experiment: the optimizer never
    races, it reuses the primed plan for every query of the sweep's shape.
    """
    catalog = scenario.build_catalog(collection)
    cache = None
    cache_mode = CacheMode.OFF
    if primed is not None:
        cache = primed_cache_for(scenario, primed)
        cache_mode = CacheMode.ON_NO_REPLAN
    grid = sweep(scenario, collection, catalog, variant, d, seed, knobs, cost,
                 cache=cache, cache_mode=cache_mode)
    measure_grid(grid, collection, catalog, scenario, cost, reps=reps,
                 noise=noise, seed=seed, jobs=jobs)
    grid, metrics = finalize(grid)
    grid.provenance = {
        "scenario": scenario.name,
        "variant": variant.value,
        "n": len(collection),
        "dim": d,
        "seed": seed,
        "reps": reps,
        "cost_model": {"c_seq": cost.c_seq, "c_idx": cost.c_idx, "c_fetch": cost.c_fetch},
        "knobs": {
            "evaluation_works": knobs.evaluation_works,
            "coll_fraction": knobs.coll_fraction,
            "max_results": knobs.max_results,
        },
        "cache_primed": None if primed is None else str(primed),
    }
    return grid, metrics


def cache_experiment(scenario: Scenario, collection: Collection, primed: PlanId,
                     d: int, seed: int, knobs: RaceKnobs = RaceKnobs(),
                     cost: CostModel = CostModel(), reps: int = 10,
                     jobs: int = 1) -> tuple[ExperimentGrid, SummaryMetrics]:
    """Grid experiment with the plan cache pre-seeded; chosen = primed everywhere."""
    return run_experiment(scenario, collection, OptimizerVariant.VANILLA, d, seed,
                          knobs=knobs, cost=cost, reps=reps, primed=primed, jobs=jobs)
