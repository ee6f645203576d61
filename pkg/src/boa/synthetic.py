"""Small random datasets with a known pattern set, sized for exhaustive checking."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import AttributeSchema, DatasetIndex, Schema, Table, build_index, expand_literals
from .mining import MinedPool, from_patterns
from .patterns import Pattern, PatternSet, classify, enumerate_patterns
from . import bitset


@dataclass
class TinyInstance:
    index: DatasetIndex
    candidates: list[Pattern]
    planted: PatternSet
    max_length: int
    include_negative: bool = True

    @property
    def pool(self) -> MinedPool:
        return from_patterns(self.index, self.candidates, max_length=self.max_length)


def _random_table(rng: np.random.Generator, schema: Schema, n_records: int) -> Table:
    values = np.column_stack([rng.integers(0, a.n_levels, size=n_records) for a in schema.attributes])
    return Table(schema, values.astype(np.int16), np.zeros(n_records, dtype=bool))


def _label(rng, table: Table, universe, planted: PatternSet, noise: float) -> DatasetIndex:
    index = build_index(table, universe)
    truth = bitset.unpack(classify(planted, index), index.n_records)
    flip = rng.random(index.n_records) < noise
    return build_index(table.with_labels(truth ^ flip), universe)


def tiny_pattern_instance(seed: int, n_candidates: int = 10, n_records: int = 150,
                          noise: float = 0.1) -> TinyInstance:
    """Random categorical data, ``n_candidates`` random patterns, labels from two of them."""
    rng = np.random.default_rng(seed)
    schema = Schema(tuple(AttributeSchema(f"x{j}", "categorical", ("a", "b", "c")) for j in range(4)),
                    label_column="y", positive_label="1")
    universe = expand_literals(schema)
    every = enumerate_patterns(universe, 2)
    picks = rng.choice(len(every), size=n_candidates, replace=False)
    candidates = sorted(every[i] for i in picks)
    planted = PatternSet.of(candidates[i] for i in rng.choice(n_candidates, size=2, replace=False))
    table = _random_table(rng, schema, n_records)
    index = _label(rng, table, universe, planted, noise)
    return TinyInstance(index, candidates, planted, max_length=2)


# Attribute layouts whose complete pattern spaces hold at most 12 patterns:
# (kind, n_levels, n_attributes, include_negative, max_length)
LITERAL_LAYOUTS = (
    ("categorical", 3, 1, True, 2),   # 6 literals, 12 patterns
    ("categorical", 2, 2, False, 2),  # 4 literals, 8 patterns
    ("categorical", 3, 4, False, 1),  # 12 literals, 12 patterns
    ("ordinal", 2, 1, True, 2),       # 4 literals, 8 patterns
)


def tiny_literal_instance(seed: int, n_records: int = 150, noise: float = 0.1, layout: int | None = None) -> TinyInstance:
    """Data whose complete pattern space (all valid patterns up to the cap) is tiny."""
    rng = np.random.default_rng(seed)
    kind, k, J, negatives, L = LITERAL_LAYOUTS[seed % len(LITERAL_LAYOUTS) if layout is None else layout]
    levels = tuple(str(i) for i in range(k))
    schema = Schema(tuple(AttributeSchema(f"x{j}", kind, levels) for j in range(J)),
                    label_column="y", positive_label="1")
    universe = expand_literals(schema, include_negative=negatives)
    candidates = enumerate_patterns(universe, L)
    planted = PatternSet.of([candidates[rng.integers(len(candidates))]])
    table = _random_table(rng, schema, n_records)
    index = _label(rng, table, universe, planted, noise)
    return TinyInstance(index, candidates, planted, max_length=L, include_negative=negatives)
