"""Schemas, literals and the bitset index over a binarized dataset."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import bitset
from .exceptions import DataError, SchemaError

CATEGORICAL = "categorical"
ORDINAL = "ordinal"
KINDS = (CATEGORICAL, ORDINAL)

# test kinds in canonical order
EQ, NEQ, GEQ, LEQ = "eq", "neq", "geq", "leq"
TESTS = (EQ, NEQ, GEQ, LEQ)
TEST_RANK = {t: i for i, t in enumerate(TESTS)}
TEST_SYMBOL = {EQ: "=", NEQ: "!=", GEQ: ">=", LEQ: "<="}
MISSING_TOKENS = ("", "?")
MISSING = -1


@dataclass(frozen=True)
class AttributeSchema:
    name: str
    kind: str
    levels: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(str(v) for v in self.levels))
        if self.kind not in KINDS:
            raise SchemaError(f"attribute {self.name!r}: kind must be one of {KINDS}, got {self.kind!r}")
        if not self.levels:
            raise SchemaError(f"attribute {self.name!r}: levels must be non-empty")
        if len(set(self.levels)) != len(self.levels):
            raise SchemaError(f"attribute {self.name!r}: duplicate level labels")

    @property
    def n_levels(self) -> int:
        return len(self.levels)


@dataclass(frozen=True)
class Schema:
    """Attribute declarations plus the label column and its positive value."""

    attributes: tuple[AttributeSchema, ...]
    label_column: str = "label"
    positive_label: str = "1"
    ignore_columns: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "attributes", tuple(self.attributes))
        object.__setattr__(self, "ignore_columns", tuple(self.ignore_columns))
        names = [a.name for a in self.attributes]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate attribute names")
        if self.label_column in names:
            raise SchemaError("label column collides with an attribute name")

    @property
    def n_attributes(self) -> int:
        return len(self.attributes)

    @property
    def level_counts(self) -> tuple[int, ...]:
        return tuple(a.n_levels for a in self.attributes)

    def attribute_index(self, name: str) -> int:
        for j, a in enumerate(self.attributes):
            if a.name == name:
                return j
        raise SchemaError(f"unknown attribute {name!r}")

    def to_dict(self) -> dict:
        return {
            "attributes": [{"name": a.name, "kind": a.kind, "levels": list(a.levels)} for a in self.attributes],
            "label_column": self.label_column,
            "positive_label": self.positive_label,
            "ignore_columns": list(self.ignore_columns),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Schema":
        try:
            attrs = tuple(AttributeSchema(a["name"], a["kind"], tuple(a["levels"])) for a in doc["attributes"])
            return cls(
                attrs,
                label_column=doc.get("label_column", "label"),
                positive_label=str(doc.get("positive_label", "1")),
                ignore_columns=tuple(doc.get("ignore_columns", ())),
            )
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"malformed schema document: {exc}") from exc

    def fingerprint(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def load_schema(path) -> Schema:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: invalid JSON ({exc})") from exc
    return Schema.from_dict(doc)


def save_schema(schema: Schema, path) -> None:
    Path(path).write_text(json.dumps(schema.to_dict(), indent=2) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class Literal:
    """A single attribute test: ``attribute`` and ``level`` are indices into the schema."""

    attribute: int
    test: str
    level: int

    @property
    def key(self) -> tuple[int, int, int]:
        return (self.attribute, TEST_RANK[self.test], self.level)

    def __lt__(self, other):  # canonical order is by test rank, not test name
        return self.key < other.key

    def validate(self, schema: Schema) -> None:
        if not 0 <= self.attribute < schema.n_attributes:
            raise SchemaError(f"literal attribute index {self.attribute} out of range")
        attr = schema.attributes[self.attribute]
        if self.test not in TESTS:
            raise SchemaError(f"unknown test {self.test!r}")
        if attr.kind == CATEGORICAL and self.test not in (EQ, NEQ):
            raise SchemaError(f"{self.test} test on categorical attribute {attr.name!r}")
        if attr.kind == ORDINAL and self.test not in (GEQ, LEQ):
            raise SchemaError(f"{self.test} test on ordinal attribute {attr.name!r}")
        if not 0 <= self.level < attr.n_levels:
            raise SchemaError(f"level index {self.level} out of range for {attr.name!r}")

    def evaluate(self, column: np.ndarray) -> np.ndarray:
        """Truth value on a column of level indices; missing cells are always false."""
        column = np.asarray(column)
        present = column != MISSING
        if self.test == EQ:
            hit = column == self.level
        elif self.test == NEQ:
            hit = column != self.level
        elif self.test == GEQ:
            hit = column >= self.level
        else:
            hit = column <= self.level
        return hit & present

    def render(self, schema: Schema) -> str:
        attr = schema.attributes[self.attribute]
        return f"{attr.name} {TEST_SYMBOL[self.test]} {attr.levels[self.level]}"

    def to_json(self, schema: Schema) -> dict:
        attr = schema.attributes[self.attribute]
        return {"attr": attr.name, "test": self.test, "level": attr.levels[self.level]}

    @classmethod
    def from_json(cls, doc: dict, schema: Schema) -> "Literal":
        j = schema.attribute_index(doc["attr"])
        levels = schema.attributes[j].levels
        if str(doc["level"]) not in levels:
            raise SchemaError(f"level {doc['level']!r} not in attribute {doc['attr']!r}")
        lit = cls(j, doc["test"], levels.index(str(doc["level"])))
        lit.validate(schema)
        return lit


@dataclass(frozen=True)
class Table:
    """Records as level indices (``-1`` = missing) plus boolean labels."""

    schema: Schema
    values: np.ndarray
    labels: np.ndarray

    @property
    def n_records(self) -> int:
        return int(self.values.shape[0])

    def subset(self, rows) -> "Table":
        rows = np.asarray(rows)
        return Table(self.schema, self.values[rows], self.labels[rows])

    def with_labels(self, labels) -> "Table":
        return Table(self.schema, self.values, np.asarray(labels, dtype=bool))

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(self.schema.fingerprint().encode())
        h.update(np.ascontiguousarray(self.values, dtype=np.int16).tobytes())
        h.update(np.packbits(self.labels).tobytes())
        return h.hexdigest()[:16]


def load_csv(source, schema: Schema, label_column: str | None = None, positive_label: str | None = None,
             require_label: bool = True) -> Table:
    """Read a UTF-8 CSV with a header row into a :class:`Table`.

    ``source`` may be a path or an open text stream.  Empty cells and ``?``
    are missing; any other value outside the declared levels is an error
    naming the row and column.  With ``require_label=False`` a file without
    the label column loads with every label false.
    """
    label_column = label_column or schema.label_column
    positive_label = schema.positive_label if positive_label is None else str(positive_label)
    if isinstance(source, (str, os.PathLike)):
        if not os.path.exists(source):
            raise DataError(f"no such file: {source}")
        with open(source, encoding="utf-8", newline="") as fh:
            return load_csv(fh, schema, label_column, positive_label, require_label)

    reader = csv.reader(source)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise DataError("empty CSV (no header row)") from None
    expected = {a.name for a in schema.attributes} | {label_column}
    has_label = label_column in header
    if not (has_label or require_label):
        expected.discard(label_column)
    unknown = [h for h in header if h not in expected and h not in schema.ignore_columns]
    if unknown:
        raise DataError(f"unknown column(s): {', '.join(unknown)}")
    absent = sorted(expected - set(header))
    if absent:
        raise DataError(f"missing column(s): {', '.join(absent)}")

    pos = {name: header.index(name) for name in expected}
    lookups = [{lv: i for i, lv in enumerate(a.levels)} for a in schema.attributes]
    values, labels, errors = [], [], []
    for row_no, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            errors.append(f"row {row_no}: expected {len(header)} cells, got {len(row)}")
            continue
        rec = []
        for a, lookup in zip(schema.attributes, lookups):
            cell = row[pos[a.name]].strip()
            if cell in MISSING_TOKENS:
                rec.append(MISSING)
            elif cell in lookup:
                rec.append(lookup[cell])
            else:
                errors.append(f"row {row_no}, column {a.name!r}: level {cell!r} not in schema")
        values.append(rec)
        if not has_label:
            labels.append(False)
            continue
        label = row[pos[label_column]].strip()
        if label in MISSING_TOKENS:
            errors.append(f"row {row_no}: missing label")
        labels.append(label == positive_label)
    if errors:
        shown = "\n  ".join(errors[:20])
        more = f"\n  ... and {len(errors) - 20} more" if len(errors) > 20 else ""
        raise DataError(f"{len(errors)} schema violation(s):\n  {shown}{more}")
    arr = np.array(values, dtype=np.int16).reshape(len(values), schema.n_attributes)
    return Table(schema, arr, np.array(labels, dtype=bool))


def expand_literals(schema: Schema, include_negative: bool = True) -> tuple[Literal, ...]:
    """Every literal the schema admits, ordered by (attribute, test kind, level).

    Categorical attributes give one ``eq`` and one ``neq`` literal per level;
    ordinal attributes give one ``geq`` and one ``leq`` literal per level.
    """
    out = []
    for j, attr in enumerate(schema.attributes):
        tests = (EQ, NEQ) if attr.kind == CATEGORICAL else (GEQ, LEQ)
        for test in tests:
            if test == NEQ and not include_negative:
                continue
            out.extend(Literal(j, test, k) for k in range(attr.n_levels))
    return tuple(out)


@dataclass(eq=False)
class DatasetIndex:
    """Per-literal coverage bitsets and the label bitset of one dataset.

    Treated as immutable once built; the pattern-coverage cache only ever
    memoizes pure functions of the stored bitsets.
    """

    schema: Schema
    literal_universe: tuple[Literal, ...]
    coverage: np.ndarray  # (n_literals, n_words) uint64
    labels: np.ndarray  # (n_words,) uint64
    n_records: int
    _literal_ids: dict = field(default_factory=dict, repr=False)
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.coverage.setflags(write=False)
        self.labels.setflags(write=False)
        self._literal_ids = {lit: i for i, lit in enumerate(self.literal_universe)}
        self.n_pos = int(bitset.popcount(self.labels))
        self.n_neg = self.n_records - self.n_pos
        self.all_records = bitset.full(self.n_records)
        self.negatives = self.all_records & ~self.labels

    @property
    def n_words(self) -> int:
        return int(self.labels.shape[0])

    @property
    def n_literals(self) -> int:
        return len(self.literal_universe)

    def literal_id(self, literal: Literal) -> int:
        try:
            return self._literal_ids[literal]
        except KeyError:
            raise SchemaError(f"literal {literal} is not in the index's literal universe") from None

    def literal_coverage(self, literal: Literal) -> np.ndarray:
        return self.coverage[self.literal_id(literal)]

    def label_array(self) -> np.ndarray:
        return bitset.unpack(self.labels, self.n_records)

    def conjunction(self, literals: Iterable[Literal]) -> np.ndarray:
        """Coverage of the AND of ``literals`` (memoized)."""
        key = tuple(literals)
        hit = self._cache.get(key)
        if hit is None:
            hit = self.all_records.copy()
            for lit in key:
                hit &= self.literal_coverage(lit)
            hit.setflags(write=False)
            if len(self._cache) > 500_000:
                self._cache.clear()
            self._cache[key] = hit
        return hit

    @classmethod
    def from_matrix(cls, schema: Schema, universe: Sequence[Literal], matrix, labels) -> "DatasetIndex":
        """Build directly from a (records x literals) boolean coverage matrix."""
        matrix = np.asarray(matrix, dtype=bool)
        labels = np.asarray(labels, dtype=bool)
        if matrix.shape != (labels.shape[0], len(universe)):
            raise DataError("coverage matrix shape does not match labels and universe")
        return cls(schema, tuple(universe), bitset.pack(matrix.T), bitset.pack(labels), int(labels.shape[0]))


def build_index(table: Table, universe: Sequence[Literal] | None = None, labels=None) -> DatasetIndex:
    """Evaluate every literal of ``universe`` on every record of ``table``."""
    schema = table.schema
    universe = expand_literals(schema) if universe is None else tuple(universe)
    for lit in universe:
        lit.validate(schema)
    labels = table.labels if labels is None else np.asarray(labels, dtype=bool)
    if labels.shape[0] != table.n_records:
        raise DataError("labels length does not match number of records")
    matrix = np.empty((table.n_records, len(universe)), dtype=bool)
    for i, lit in enumerate(universe):
        matrix[:, i] = lit.evaluate(table.values[:, lit.attribute])
    return DatasetIndex.from_matrix(schema, universe, matrix, labels)


def table_from_rows(schema: Schema, rows: Sequence[Sequence[str | None]], labels: Sequence[bool]) -> Table:
    """Convenience constructor from level labels (``None`` = missing)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([a.name for a in schema.attributes] + [schema.label_column])
    for row, y in zip(rows, labels):
        writer.writerow(["?" if v is None else v for v in row] + [schema.positive_label if y else "__neg__"])
    buf.seek(0)
    return load_csv(buf, schema)
