"""Conjunctions (patterns), disjunctions of them (pattern sets) and their counts."""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import bitset
from .data import EQ, NEQ, DatasetIndex, Literal, Schema
from .exceptions import SchemaError


def compatible(a: Literal, b: Literal) -> bool:
    """Whether two literals may sit in the same conjunction."""
    if a.attribute != b.attribute:
        return True
    if a.test == b.test:
        return False
    return not ({a.test, b.test} == {EQ, NEQ} and a.level == b.level)


@dataclass(frozen=True)
class Pattern:
    """A conjunction of literals, kept in canonical (sorted) order."""

    literals: tuple[Literal, ...]

    def __post_init__(self):
        lits = tuple(sorted(self.literals))
        object.__setattr__(self, "literals", lits)
        if not lits:
            raise SchemaError("a pattern needs at least one literal")
        for a, b in itertools.combinations(lits, 2):
            if not compatible(a, b):
                raise SchemaError(f"incompatible literals in one pattern: {a} and {b}")

    @classmethod
    def of(cls, *literals: Literal) -> "Pattern":
        return cls(tuple(literals))

    def __len__(self) -> int:
        return len(self.literals)

    @property
    def length(self) -> int:
        return len(self.literals)

    @property
    def sort_key(self):
        return (len(self.literals), tuple(l.key for l in self.literals))

    def __lt__(self, other: "Pattern") -> bool:
        return self.sort_key < other.sort_key

    @property
    def attributes(self) -> frozenset[int]:
        return frozenset(l.attribute for l in self.literals)

    def render(self, schema: Schema) -> str:
        return " AND ".join(l.render(schema) for l in self.literals)


@dataclass(frozen=True)
class PatternSet:
    """A disjunction of distinct patterns; empty means "predict negative"."""

    patterns: tuple[Pattern, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "patterns", tuple(sorted(set(self.patterns))))

    @classmethod
    def of(cls, patterns: Iterable[Pattern] = ()) -> "PatternSet":
        return cls(tuple(patterns))

    def __len__(self) -> int:
        return len(self.patterns)

    def __iter__(self):
        return iter(self.patterns)

    def __contains__(self, pattern) -> bool:
        return pattern in self.patterns

    @property
    def size(self) -> int:
        return len(self.patterns)

    @property
    def sort_key(self):
        return (len(self.patterns), tuple(p.sort_key for p in self.patterns))

    def add(self, pattern: Pattern) -> "PatternSet":
        return PatternSet(self.patterns + (pattern,))

    def remove(self, pattern: Pattern) -> "PatternSet":
        return PatternSet(tuple(p for p in self.patterns if p != pattern))

    def length_counts(self, max_length: int) -> list[int]:
        counts = [0] * (max_length + 1)
        for p in self.patterns:
            counts[len(p)] += 1
        return counts

    def render(self, schema: Schema) -> str:
        if not self.patterns:
            return "IF (false) THEN positive"
        body = " OR ".join(f"({p.render(schema)})" for p in self.patterns)
        return f"IF {body} THEN positive"


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def n_pos(self) -> int:
        return self.tp + self.fn

    @property
    def n_neg(self) -> int:
        return self.fp + self.tn

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def errors(self) -> int:
        return self.fp + self.fn


def pattern_coverage(pattern: Pattern, index: DatasetIndex) -> np.ndarray:
    return index.conjunction(pattern.literals)


def covers(pattern: Pattern, record: int, index: DatasetIndex) -> bool:
    cov = pattern_coverage(pattern, index)
    return bool((int(cov[record // 64]) >> (record % 64)) & 1)


def classify(pattern_set: PatternSet, index: DatasetIndex) -> np.ndarray:
    """Packed prediction bitset: bit n set iff some pattern covers record n."""
    pred = np.zeros(index.n_words, dtype=np.uint64)
    for p in pattern_set:
        pred |= pattern_coverage(p, index)
    return pred


def confusion_from_prediction(pred: np.ndarray, index: DatasetIndex) -> ConfusionCounts:
    tp = int(bitset.popcount(pred & index.labels))
    fp = int(bitset.popcount(pred & index.negatives))
    return ConfusionCounts(tp, fp, index.n_neg - fp, index.n_pos - tp)


def confusion(pattern_set: PatternSet, index: DatasetIndex) -> ConfusionCounts:
    return confusion_from_prediction(classify(pattern_set, index), index)


def edit_distance(a: PatternSet, b: PatternSet) -> int:
    """Number of whole patterns in one set but not the other."""
    return len(set(a.patterns) ^ set(b.patterns))


def support(pattern: Pattern, index: DatasetIndex, over: str = "all") -> int:
    cov = pattern_coverage(pattern, index)
    if over == "all":
        return int(bitset.popcount(cov))
    if over == "positives":
        return int(bitset.popcount(cov & index.labels))
    if over == "negatives":
        return int(bitset.popcount(cov & index.negatives))
    raise ValueError(f"over must be 'all', 'positives' or 'negatives', not {over!r}")


def enumerate_patterns(universe: Sequence[Literal], max_length: int) -> list[Pattern]:
    """All valid patterns over ``universe`` with at most ``max_length`` literals."""
    universe = sorted(set(universe))
    out: list[Pattern] = []

    def grow(start, chosen):
        if chosen:
            out.append(Pattern(tuple(chosen)))
        if len(chosen) == max_length:
            return
        for i in range(start, len(universe)):
            lit = universe[i]
            if all(compatible(lit, c) for c in chosen):
                chosen.append(lit)
                grow(i + 1, chosen)
                chosen.pop()

    grow(0, [])
    return sorted(out)


def count_patterns_by_length(universe: Sequence[Literal], max_length: int) -> list[int]:
    """``counts[l]`` = number of valid patterns of length ``l`` over ``universe``.

    Validity only couples literals on the same attribute, so the count is the
    product of per-attribute generating polynomials.
    """
    by_attr: dict[int, list[Literal]] = {}
    for lit in set(universe):
        by_attr.setdefault(lit.attribute, []).append(lit)
    poly = np.zeros(max_length + 1, dtype=object)
    poly[0] = 1
    for lits in by_attr.values():
        local = [1, len(lits), 0]
        local[2] = sum(1 for a, b in itertools.combinations(lits, 2) if compatible(a, b))
        nxt = np.zeros(max_length + 1, dtype=object)
        for i in range(max_length + 1):
            if poly[i] == 0:
                continue
            for k, c in enumerate(local):
                if i + k <= max_length and c:
                    nxt[i + k] += poly[i] * c
        poly = nxt
    return [int(v) for v in poly]


def pattern_to_json(pattern: Pattern, schema: Schema) -> list[dict]:
    return [l.to_json(schema) for l in pattern.literals]


def pattern_from_json(doc: list[dict], schema: Schema) -> Pattern:
    return Pattern(tuple(Literal.from_json(d, schema) for d in doc))


def pattern_set_to_json(pattern_set: PatternSet, schema: Schema) -> dict:
    return {
        "patterns": [pattern_to_json(p, schema) for p in pattern_set],
        "schema_fingerprint": schema.fingerprint(),
        "rendering": pattern_set.render(schema),
    }


def pattern_set_from_json(doc: dict, schema: Schema, check_fingerprint: bool = True) -> PatternSet:
    fp = doc.get("schema_fingerprint")
    if check_fingerprint and fp is not None and fp != schema.fingerprint():
        raise SchemaError(f"pattern set was built for schema {fp}, not {schema.fingerprint()}")
    return PatternSet.of(pattern_from_json(p, schema) for p in doc["patterns"])


def dumps_pattern_set(pattern_set: PatternSet, schema: Schema) -> str:
    return json.dumps(pattern_set_to_json(pattern_set, schema), indent=2)

