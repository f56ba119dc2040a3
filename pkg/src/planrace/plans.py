"""Candidate plan enumeration and the collection-scan gating rule.

The optimizer only ever sees the plans produced here. The vanilla rule is
the important one: a collection scan joins the candidate set only when it
is explicitly hinted or no index-based plan exists, so with any usable
index the scan cannot win the race because it never runs. The
"with-collscan" variant always adds it; "mod" additionally changes scoring
(handled in the optimizer module).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .engine import IndexCatalog, Query, RangePredicate, index_name_for
from .errors import NoCandidatesError, UnknownPlanError


class OptimizerVariant(enum.Enum):
    VANILLA = "vanilla"
    WITH_COLLSCAN = "with-collscan"
    MOD = "mod"


class PlanKind(enum.Enum):
    COLLSCAN = "COLLSCAN"
    IXSCAN = "IXSCAN"
    IXSCAN_COVER = "IXSCAN_COVER"


@dataclass(frozen=True)
class PlanId:
    kind: PlanKind
    key_fields: tuple[str, ...] = ()

    def __str__(self) -> str:
        if self.kind is PlanKind.COLLSCAN:
            return "COLLSCAN"
        return "IXSCAN_" + "".join(self.key_fields)

    @property
    def index_name(self) -> str | None:
        if self.kind is PlanKind.COLLSCAN:
            return None
        return index_name_for(self.key_fields)


COLLSCAN_ID = PlanId(PlanKind.COLLSCAN)

# Stable string forms accepted in hints, reports and diagram legends.
KNOWN_PLAN_IDS = {
    "COLLSCAN": COLLSCAN_ID,
    "IXSCAN_A": PlanId(PlanKind.IXSCAN, ("A",)),
    "IXSCAN_B": PlanId(PlanKind.IXSCAN, ("B",)),
    "IXSCAN_AB": PlanId(PlanKind.IXSCAN_COVER, ("A", "B")),
}

# Canonical report/tie-break order for plan ids.
PLAN_ID_ORDER = ("COLLSCAN", "IXSCAN_A", "IXSCAN_B", "IXSCAN_AB")


def plan_order_key(plan_name: str) -> tuple[int, str]:
    try:
        return (PLAN_ID_ORDER.index(plan_name), plan_name)
    except ValueError:
        return (len(PLAN_ID_ORDER), plan_name)


# ---------------------------------------------------------------------------
# Stage tree. Plans here are straight pipelines, stored leaf-first in
# execution order.

@dataclass(frozen=True)
class CollScanStage:
    predicates: tuple[RangePredicate, ...]


@dataclass(frozen=True)
class IxScanStage:
    index_name: str
    field: str  # the bounded (leading) field
    low: int
    high: int


@dataclass(frozen=True)
class FetchStage:
    pass


@dataclass(frozen=True)
class FilterStage:
    predicate: RangePredicate
    on_index_key: bool = False  # True: evaluated on the index key, no document needed


@dataclass(frozen=True)
class ProjectCoveredStage:
    fields: tuple[str, ...]
    suppress_record_id: bool = True


@dataclass(frozen=True)
class CandidatePlan:
    id: PlanId
    stages: tuple

    @property
    def has_fetch(self) -> bool:
        return any(isinstance(s, FetchStage) for s in self.stages)

    def __str__(self) -> str:
        return str(self.id)


def _ixscan_plan(query: Query, field: str, other: RangePredicate) -> CandidatePlan:
    pred = query.predicate_on(field)
    stages = (
        IxScanStage(index_name_for((field,)), field, pred.low, pred.high),
        FetchStage(),
        FilterStage(other),
    )
    return CandidatePlan(PlanId(PlanKind.IXSCAN, (field,)), stages)


def _cover_plan(query: Query, key_fields: tuple[str, ...]) -> CandidatePlan:
    leading = key_fields[0]
    pred = query.predicate_on(leading)
    residuals = tuple(
        FilterStage(query.predicate_on(f), on_index_key=True)
        for f in key_fields[1:]
        if query.predicate_on(f) is not None
    )
    stages = (
        IxScanStage(index_name_for(key_fields), leading, pred.low, pred.high),
        *residuals,
        ProjectCoveredStage(query.projection.fields, query.projection.suppress_record_id),
    )
    return CandidatePlan(PlanId(PlanKind.IXSCAN_COVER, key_fields), stages)


def _collscan_plan(query: Query) -> CandidatePlan:
    return CandidatePlan(COLLSCAN_ID, (CollScanStage(tuple(query.predicates)),))


def _covers(query: Query, key_fields: tuple[str, ...]) -> bool:
    if query.projection is None or not query.projection.suppress_record_id:
        return False
    return set(query.projection.fields) <= set(key_fields)


def enumerate_candidates(query: Query, catalog: IndexCatalog,
                         variant: OptimizerVariant = OptimizerVariant.VANILLA,
                         collscan_allowed: bool = True) -> list[CandidatePlan]:
    """All plans the optimizer will race for this query, in catalog order.

    One plan per usable index (single-field indexes on a queried field;
    compound indexes whose leading field is queried and whose keys cover the
    projection), then COLLSCAN last when the gating rule lets it in. A hinted
    query yields exactly the hinted plan or an UnknownPlanError.
    """
    query_fields = query.fields()
    index_plans: list[CandidatePlan] = []
    for ix in catalog.indexes:
        if len(ix.key_fields) == 1:
            f = ix.key_fields[0]
            if f in query_fields:
                other = next(p for p in query.predicates if p.field != f)
                index_plans.append(_ixscan_plan(query, f, other))
        else:
            if ix.key_fields[0] in query_fields and _covers(query, ix.key_fields):
                index_plans.append(_cover_plan(query, ix.key_fields))

    collscan_required = not index_plans
    hint = query.hint
    if hint is not None:
        producible = {str(p.id): p for p in index_plans}
        if collscan_allowed:
            producible["COLLSCAN"] = _collscan_plan(query)
        chosen = producible.get(str(hint))
        if chosen is None:
            raise UnknownPlanError(
                f"hint {hint} names no producible plan; available: {sorted(producible)}")
        return [chosen]

    candidates = list(index_plans)
    if collscan_allowed and (
        variant in (OptimizerVariant.WITH_COLLSCAN, OptimizerVariant.MOD) or collscan_required
    ):
        candidates.append(_collscan_plan(query))
    if not candidates:
        raise NoCandidatesError("no viable plan: no usable index and collection scan disallowed")
    return candidates


def parse_plan_hint(text: str) -> PlanId:
    """Map a stable plan string ("COLLSCAN", "IXSCAN_A", ...) to its PlanId."""
    try:
        return KNOWN_PLAN_IDS[text]
    except KeyError:
        valid = ", ".join(PLAN_ID_ORDER)
        raise UnknownPlanError(f"unknown plan {text!r}; valid forms: {valid}") from None
