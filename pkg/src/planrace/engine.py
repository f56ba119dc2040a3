"""Document storage: collections, secondary indexes, dataset generation and I/O.

A collection is an immutable, in-memory sequence of documents with dense
record ids (0..N-1); iteration order models on-disk sequential scan order.
Indexes are sorted (key, record_id) entry lists, one entry per document,
so a range scan is a contiguous slice found by binary search.
"""

from __future__ import annotations

import random
from bisect import bisect_left
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DatasetFormatError, EmptyCollectionError, UnknownFieldError

DISTRIBUTIONS = ("uniform-distinct", "uniform-with-repeats", "zipfian")


@dataclass
class Document:
    record_id: int
    fields: dict[str, int]


@dataclass
class Collection:
    """Documents in record_id order plus the declared field list."""

    name: str
    documents: list[Document]
    field_list: list[str]
    _sorted_values: dict[str, list[int]] = field(default_factory=dict, repr=False)

    def __len__(self) -> int:
        return len(self.documents)

    def doc(self, record_id: int) -> Document:
        return self.documents[record_id]

    def sorted_values(self, field_name: str) -> list[int]:
        """Sorted copy of one field's column, built once (collections are immutable)."""
        if field_name not in self.field_list:
            raise UnknownFieldError(f"collection has no field {field_name!r}")
        cached = self._sorted_values.get(field_name)
        if cached is None:
            cached = sorted(d.fields[field_name] for d in self.documents)
            self._sorted_values[field_name] = cached
        return cached

    def value_bounds(self, field_name: str) -> tuple[int, int]:
        """Smallest and largest value stored for a field."""
        values = self.sorted_values(field_name)
        return values[0], values[-1]


@dataclass
class Index:
    """Sorted secondary index: entries are (key tuple, record_id)."""

    name: str
    key_fields: tuple[str, ...]
    entries: list[tuple[tuple[int, ...], int]]
    # leading-field values, parallel to entries, for binary search
    _leading: list[int] = field(default_factory=list, repr=False)

    def __post_init__(self):
        if not self._leading:
            self._leading = [key[0] for key, _ in self.entries]

    def range_positions(self, low: int, high: int) -> tuple[int, int]:
        """Entry positions [lo, hi) whose leading key lies in [low, high)."""
        return bisect_left(self._leading, low), bisect_left(self._leading, high)

    def count_in_range(self, low: int, high: int) -> int:
        lo, hi = self.range_positions(low, high)
        return hi - lo


@dataclass
class IndexCatalog:
    """Indexes in creation order; order is the downstream tie-break."""

    indexes: list[Index] = field(default_factory=list)

    def add(self, index: Index) -> None:
        if any(ix.name == index.name for ix in self.indexes):
            raise ValueError(f"duplicate index name {index.name!r}")
        self.indexes.append(index)

    def by_name(self, name: str) -> Index:
        for ix in self.indexes:
            if ix.name == name:
                return ix
        raise KeyError(name)

    def single_field_index(self, field_name: str) -> Index | None:
        for ix in self.indexes:
            if ix.key_fields == (field_name,):
                return ix
        return None


@dataclass(frozen=True)
class RangePredicate:
    """Half-open range low <= value < high on one field."""

    field: str
    low: int
    high: int

    def __post_init__(self):
        if self.low > self.high:
            raise ValueError(f"range low {self.low} > high {self.high}")

    def matches(self, value: int) -> bool:
        return self.low <= value < self.high


@dataclass(frozen=True)
class Projection:
    fields: tuple[str, ...]
    suppress_record_id: bool = True

    def __post_init__(self):
        object.__setattr__(self, "fields", tuple(sorted(self.fields)))


@dataclass(frozen=True)
class Query:
    """Conjunction of two range predicates, optional projection and hint."""

    predicates: tuple[RangePredicate, RangePredicate]
    projection: Projection | None = None
    hint: object | None = None  # a plans.PlanId when set

    def __post_init__(self):
        names = [p.field for p in self.predicates]
        if len(set(names)) != len(names):
            raise ValueError("predicate fields must be distinct")

    def predicate_on(self, field_name: str) -> RangePredicate | None:
        for p in self.predicates:
            if p.field == field_name:
                return p
        return None

    def fields(self) -> set[str]:
        return {p.field for p in self.predicates}


def query_shape(query: Query) -> str:
    """Canonical shape string: structure only, constants elided.

    Two queries differing only in range bounds share a shape; this is the
    plan-cache key.
    """
    preds = ",".join(f"{p.field}:range" for p in sorted(query.predicates, key=lambda p: p.field))
    if query.projection is None:
        proj = "-"
    else:
        rid = "no_rid" if query.projection.suppress_record_id else "rid"
        proj = ",".join(query.projection.fields) + ";" + rid
    return f"find({preds})|proj({proj})|sort()"


def generate_dataset(n: int, distribution: str = "uniform-distinct", seed: int = 0) -> Collection:
    """Build an n-document collection with integer fields A and B.

    uniform-distinct assigns each field an independent random permutation of
    0..n-1, so every value occurs exactly once per field and range counts are
    exact. The other modes draw with repetition and carry no exactness
    guarantees. Deterministic for a fixed (n, distribution, seed).
    """
    if n < 1:
        raise EmptyCollectionError("cannot generate an empty collection (n must be >= 1)")
    if distribution not in DISTRIBUTIONS:
        raise ValueError(f"unknown distribution {distribution!r}; choose from {DISTRIBUTIONS}")
    rng = random.Random(seed)
    field_list = ["A", "B"]
    columns = []
    for _ in field_list:
        if distribution == "uniform-distinct":
            values = list(range(n))
            rng.shuffle(values)
        elif distribution == "uniform-with-repeats":
            values = [rng.randrange(n) for _ in range(n)]
        else:  # zipfian, exponent 1.2 over ranks 1..n mapped onto values 0..n-1
            weights = [1.0 / (rank**1.2) for rank in range(1, n + 1)]
            values = rng.choices(range(n), weights=weights, k=n)
        columns.append(values)
    docs = [
        Document(rid, {"A": columns[0][rid], "B": columns[1][rid]})
        for rid in range(n)
    ]
    return Collection(name=f"gen_{distribution}_{n}_{seed}", documents=docs, field_list=field_list)


def index_name_for(key_fields: tuple[str, ...]) -> str:
    return "_".join(f"{f}_1" for f in key_fields)


def build_index(collection: Collection, key_fields) -> Index:
    """Sort (key tuple, record_id) over every document; name like "A_1_B_1"."""
    key_fields = tuple(key_fields)
    for f in key_fields:
        if f not in collection.field_list:
            raise UnknownFieldError(f"cannot index unknown field {f!r}")
    entries = sorted(
        (tuple(doc.fields[f] for f in key_fields), doc.record_id)
        for doc in collection.documents
    )
    return Index(name=index_name_for(key_fields), key_fields=key_fields, entries=entries)


def selectivity(collection: Collection, predicate: RangePredicate,
                catalog: IndexCatalog | None = None) -> float:
    """Exact fraction of documents matching the predicate.

    Counts through a single-field index on the predicate's field when one is
    available, otherwise scans.
    """
    count = match_count(collection, predicate, catalog)
    return count / len(collection)


def match_count(collection: Collection, predicate: RangePredicate,
                catalog: IndexCatalog | None = None) -> int:
    if predicate.field not in collection.field_list:
        raise UnknownFieldError(f"collection has no field {predicate.field!r}")
    if catalog is not None:
        ix = catalog.single_field_index(predicate.field)
        if ix is not None:
            return ix.count_in_range(predicate.low, predicate.high)
    values = collection.sorted_values(predicate.field)
    return bisect_left(values, predicate.high) - bisect_left(values, predicate.low)


def save_dataset(collection: Collection, path) -> None:
    """Write the collection as UTF-8 CSV: header record_id,<fields>, LF endings."""
    path = Path(path)
    header = ",".join(["record_id"] + list(collection.field_list))
    lines = [header]
    for doc in collection.documents:
        lines.append(",".join([str(doc.record_id)] + [str(doc.fields[f]) for f in collection.field_list]))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def load_dataset(path) -> Collection:
    """Read a dataset file written by save_dataset; strict about the format."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise DatasetFormatError(path, 1, "empty file")
    header = lines[0].split(",")
    if header[:1] != ["record_id"] or len(header) < 2:
        raise DatasetFormatError(path, 1, f"bad header {lines[0]!r} (expected record_id,<fields>)")
    field_list = header[1:]
    docs = []
    for line_no, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != len(header):
            raise DatasetFormatError(
                path, line_no, f"expected {len(header)} columns, found {len(parts)}")
        try:
            values = [int(p) for p in parts]
        except ValueError:
            raise DatasetFormatError(path, line_no, f"non-integer value in {line!r}") from None
        rid = values[0]
        if rid != line_no - 2:
            raise DatasetFormatError(
                path, line_no, f"record_id {rid} out of order (expected {line_no - 2})")
        docs.append(Document(rid, dict(zip(field_list, values[1:]))))
    if not docs:
        raise DatasetFormatError(path, 1, "no documents")
    return Collection(name=path.stem, documents=docs, field_list=field_list)
