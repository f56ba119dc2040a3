"""Physical-design presets: which indexes exist and how queries are shaped."""

from __future__ import annotations

from dataclasses import dataclass

from .engine import (
    Collection,
    IndexCatalog,
    Projection,
    Query,
    RangePredicate,
    build_index,
)
from .plans import COLLSCAN_ID, PlanId, PlanKind


@dataclass(frozen=True)
class Scenario:
    name: str
    index_keys: tuple[tuple[str, ...], ...]
    # covered queries need an explicit projection; None means project nothing away
    projection: Projection | None = None

    def build_catalog(self, collection: Collection) -> IndexCatalog:
        catalog = IndexCatalog()
        for keys in self.index_keys:
            catalog.add(build_index(collection, keys))
        return catalog

    def make_query(self, pred_a: RangePredicate, pred_b: RangePredicate,
                   hint: PlanId | None = None) -> Query:
        return Query((pred_a, pred_b), projection=self.projection, hint=hint)

    def forced_plan_ids(self) -> list[PlanId]:
        """Every plan measured per query: one per index, plus COLLSCAN always."""
        ids = []
        for keys in self.index_keys:
            kind = PlanKind.IXSCAN if len(keys) == 1 else PlanKind.IXSCAN_COVER
            ids.append(PlanId(kind, keys))
        ids.append(COLLSCAN_ID)
        return ids


SCENARIOS = {
    "both-indexed": Scenario("both-indexed", (("A",), ("B",))),
    "single-index": Scenario("single-index", (("B",),)),
    "covering": Scenario(
        "covering",
        (("A",), ("B",), ("A", "B")),
        projection=Projection(("A", "B"), suppress_record_id=True),
    ),
}


def get_scenario(name: str) -> Scenario:
    try:
        return SCENARIOS[name]
    except KeyError:
        raise ValueError(f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}") from None
