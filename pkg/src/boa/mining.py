"""Candidate pattern generation: FP-growth on the positive class, then screening."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np

from . import bitset
from .data import DatasetIndex, Literal, NEQ, Schema
from .exceptions import DataError, SchemaError
from .patterns import Pattern, compatible, pattern_from_json, pattern_to_json


@dataclass(frozen=True)
class MiningConfig:
    min_support_fraction: float = 0.05
    max_length: int = 3
    top_k: int | None = None  # None keeps every pattern
    include_negative_literals: bool = True
    min_support_count: int | None = None  # absolute override on |S+|

    def __post_init__(self):
        if not 0 < self.min_support_fraction <= 1:
            raise SchemaError("min_support_fraction must lie in (0, 1]")
        if self.max_length < 1:
            raise SchemaError("max_length must be >= 1")
        if self.top_k is not None and self.top_k < 1:
            raise SchemaError("top_k must be >= 1 (or None for all)")
        if self.min_support_count is not None and self.min_support_count < 1:
            raise SchemaError("min_support_count must be >= 1")

    def threshold(self, n_pos: int) -> int:
        if self.min_support_count is not None:
            return self.min_support_count
        return max(1, math.ceil(self.min_support_fraction * n_pos - 1e-9))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class MinedPool:
    """Candidate patterns with their coverage and training statistics.

    ``prior_pool_sizes[l]`` is the pool size the Beta-Binomial prior uses
    for length ``l``.  It follows the patterns through mining and screening
    but is frozen by :meth:`restrict` when a support bound prunes the pool,
    since pruning changes the search space and not the model.
    """

    patterns: list[Pattern]
    coverage: np.ndarray  # (n_patterns, n_words)
    support_pos: np.ndarray
    support_all: np.ndarray
    n_pos: int
    n_neg: int
    max_length: int
    min_count: int = 0
    entropy: np.ndarray | None = None
    prior_pool_sizes: list[int] | None = None
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.prior_pool_sizes is None:
            self.prior_pool_sizes = self.pool_sizes

    def __len__(self) -> int:
        return len(self.patterns)

    @property
    def lengths(self) -> np.ndarray:
        return np.array([len(p) for p in self.patterns], dtype=np.int64)

    @property
    def pool_sizes(self) -> list[int]:
        sizes = [0] * (self.max_length + 1)
        for p in self.patterns:
            sizes[len(p)] += 1
        return sizes

    @property
    def support_neg(self) -> np.ndarray:
        return self.support_all - self.support_pos

    @property
    def tpr(self) -> np.ndarray:
        return self.support_pos / max(self.n_pos, 1)

    @property
    def fpr(self) -> np.ndarray:
        return self.support_neg / max(self.n_neg, 1)

    def subset(self, keep, freeze_prior_sizes: bool = False) -> "MinedPool":
        keep = np.asarray(keep, dtype=np.int64)
        return MinedPool(
            patterns=[self.patterns[i] for i in keep],
            coverage=self.coverage[keep],
            support_pos=self.support_pos[keep],
            support_all=self.support_all[keep],
            n_pos=self.n_pos,
            n_neg=self.n_neg,
            max_length=self.max_length,
            min_count=self.min_count,
            entropy=None if self.entropy is None else self.entropy[keep],
            prior_pool_sizes=list(self.prior_pool_sizes) if freeze_prior_sizes else None,
            notes=dict(self.notes),
        )

    def restrict(self, min_support_all: int) -> "MinedPool":
        """Drop patterns with support on all of S below ``min_support_all``."""
        out = self.subset(np.flatnonzero(self.support_all >= min_support_all), freeze_prior_sizes=True)
        out.notes["min_support_all"] = int(min_support_all)
        return out

    def index_of(self) -> dict[Pattern, int]:
        return {p: i for i, p in enumerate(self.patterns)}

    def to_json(self, schema: Schema) -> dict:
        ent = self.entropy if self.entropy is not None else conditional_entropy(self)
        return {
            "schema_fingerprint": schema.fingerprint(),
            "n_pos": self.n_pos,
            "n_neg": self.n_neg,
            "max_length": self.max_length,
            "min_count": self.min_count,
            "pool_sizes": self.pool_sizes,
            "prior_pool_sizes": list(self.prior_pool_sizes),
            "notes": self.notes,
            "patterns": [
                {
                    "literals": pattern_to_json(p, schema),
                    "length": len(p),
                    "support_pos": int(self.support_pos[i]),
                    "support": int(self.support_all[i]),
                    "tpr": round(float(self.tpr[i]), 12),
                    "fpr": round(float(self.fpr[i]), 12),
                    "entropy": round(float(ent[i]), 12),
                }
                for i, p in enumerate(self.patterns)
            ],
        }

    @classmethod
    def from_json(cls, doc: dict, index: DatasetIndex) -> "MinedPool":
        if doc.get("schema_fingerprint") not in (None, index.schema.fingerprint()):
            raise SchemaError("pool was mined under a different schema")
        patterns = [pattern_from_json(p["literals"], index.schema) for p in doc["patterns"]]
        pool = from_patterns(index, patterns, max_length=int(doc["max_length"]))
        pool.min_count = int(doc.get("min_count", 0))
        pool.prior_pool_sizes = list(doc.get("prior_pool_sizes", pool.pool_sizes))
        pool.notes = dict(doc.get("notes", {}))
        return pool


def from_patterns(index: DatasetIndex, patterns: Sequence[Pattern], max_length: int | None = None) -> MinedPool:
    """Wrap an explicit pattern list as a pool, computing coverage and supports."""
    patterns = sorted(set(patterns), key=lambda p: p.sort_key)
    if max_length is None:
        max_length = max((len(p) for p in patterns), default=1)
    if patterns:
        cov = np.stack([index.conjunction(p.literals) for p in patterns])
    else:
        cov = np.zeros((0, index.n_words), dtype=np.uint64)
    return MinedPool(
        patterns=list(patterns),
        coverage=cov,
        support_pos=bitset.popcount(cov & index.labels, axis=1),
        support_all=bitset.popcount(cov, axis=1),
        n_pos=index.n_pos,
        n_neg=index.n_neg,
        max_length=max_length,
    )


class _Node:
    __slots__ = ("item", "count", "parent", "children")

    def __init__(self, item, parent):
        self.item = item
        self.count = 0
        self.parent = parent
        self.children = {}


def _build_tree(weighted_paths, min_count, rank):
    counts: dict[int, int] = {}
    for path, w in weighted_paths:
        for it in path:
            counts[it] = counts.get(it, 0) + w
    frequent = {it for it, c in counts.items() if c >= min_count}
    root = _Node(None, None)
    header: dict[int, list[_Node]] = {}
    for path, w in weighted_paths:
        items = sorted((it for it in path if it in frequent), key=lambda it: (-counts[it], rank[it]))
        node = root
        for it in items:
            child = node.children.get(it)
            if child is None:
                child = node.children[it] = _Node(it, node)
                header.setdefault(it, []).append(child)
            child.count += w
            node = child
    order = sorted(header, key=lambda it: (-counts[it], rank[it]))
    return header, order, counts


def fpgrowth(transactions, min_count: int, max_length: int, rank, compatible_items) -> dict[tuple[int, ...], int]:
    """Frequent itemsets of size <= ``max_length`` with support >= ``min_count``.

    ``compatible_items(a, b)`` prunes item pairs that may never co-occur in a
    reported itemset; the constraint is anti-monotone so it is applied while
    building conditional trees.
    """
    found: dict[tuple[int, ...], int] = {}
    items = sorted({it for t in transactions for it in t})
    clash = {a: frozenset(b for b in items if b != a and not compatible_items(a, b)) for a in items}

    def record(itemset, count):
        found[tuple(sorted(itemset, key=rank.__getitem__))] = count

    def mine(paths, suffix, banned):
        header, order, counts = _build_tree(paths, min_count, rank)
        for it in reversed(order):
            itemset = suffix + (it,)
            record(itemset, counts[it])
            if len(itemset) >= max_length:
                continue
            now_banned = banned | clash[it]
            cond = []
            for node in header[it]:
                prefix = []
                up = node.parent
                while up.item is not None:
                    if up.item not in now_banned:
                        prefix.append(up.item)
                    up = up.parent
                if prefix:
                    cond.append((prefix, node.count))
            if not cond:
                continue
            if len(itemset) + 1 == max_length:
                # last level: plain counting, no tree needed
                tally: dict[int, int] = {}
                for prefix, w in cond:
                    for x in prefix:
                        tally[x] = tally.get(x, 0) + w
                for x, c in tally.items():
                    if c >= min_count:
                        record(itemset + (x,), c)
            else:
                mine(cond, itemset, now_banned)

    merged: dict[tuple[int, ...], int] = {}
    for t in transactions:
        key = tuple(sorted(t))
        merged[key] = merged.get(key, 0) + 1
    mine(list(merged.items()), (), frozenset())
    return found


def mine_frequent(index: DatasetIndex, config: MiningConfig = MiningConfig()) -> MinedPool:
    """All valid conjunctions of at most ``max_length`` literals frequent on S+."""
    if index.n_pos == 0:
        raise DataError("cannot mine patterns: no positive records")
    items = [i for i, lit in enumerate(index.literal_universe)
             if config.include_negative_literals or lit.test != NEQ]
    universe = index.literal_universe
    rank = {i: universe[i].key for i in items}
    min_count = config.threshold(index.n_pos)

    labels = index.label_array()
    rows = bitset.unpack(index.coverage[items], index.n_records)[:, labels]  # (items, positives)
    item_arr = np.array(items, dtype=np.int64)
    transactions = [item_arr[rows[:, r]].tolist() for r in range(rows.shape[1])]

    def ok(a, b):
        return compatible(universe[a], universe[b])

    found = fpgrowth(transactions, min_count, config.max_length, rank, ok) if min_count <= index.n_pos else {}
    patterns = [Pattern(tuple(universe[i] for i in itemset)) for itemset in found]
    pool = from_patterns(index, patterns, max_length=config.max_length)
    pool.min_count = min_count
    pool.notes["min_support_pos"] = min_count
    return pool


def roc_filter(pool: MinedPool) -> MinedPool:
    """Keep patterns on or above the ROC diagonal (tpr >= fpr)."""
    # compare tp/n_pos >= fp/n_neg exactly in integers
    keep = pool.support_pos * max(pool.n_neg, 1) >= pool.support_neg * max(pool.n_pos, 1)
    return pool.subset(np.flatnonzero(keep))


def _binary_entropy(p: np.ndarray) -> np.ndarray:
    p = np.clip(np.asarray(p, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -(np.where(p > 0, p * np.log2(p), 0.0) + np.where(p < 1, (1 - p) * np.log2(1 - p), 0.0))
    return h


def conditional_entropy(pool: MinedPool) -> np.ndarray:
    """Label entropy (bits) after splitting the data on each pattern's coverage."""
    n = pool.n_pos + pool.n_neg
    covered = pool.support_all.astype(float)
    uncovered = n - covered
    with np.errstate(divide="ignore", invalid="ignore"):
        h_in = _binary_entropy(np.where(covered > 0, pool.support_pos / np.maximum(covered, 1), 0.0))
        h_out = _binary_entropy(np.where(uncovered > 0, (pool.n_pos - pool.support_pos) / np.maximum(uncovered, 1), 0.0))
    return (covered / n) * h_in + (uncovered / n) * h_out


def info_gain_screen(pool: MinedPool, top_k: int | None) -> MinedPool:
    """The ``top_k`` patterns with the smallest conditional entropy.

    Ties fall back to canonical pattern order; output stays in canonical order.
    """
    ent = conditional_entropy(pool)
    if top_k is not None and top_k < 1:
        raise SchemaError("top_k must be >= 1")
    if top_k is None or len(pool) <= top_k:
        out = pool.subset(np.arange(len(pool)))
    else:
        # pool.patterns is canonically sorted, so a stable sort on rounded entropy breaks ties canonically
        order = np.argsort(np.round(ent, 12), kind="stable")[:top_k]
        out = pool.subset(np.sort(order))
    out.entropy = conditional_entropy(out)
    return out


def mine_pool(index: DatasetIndex, config: MiningConfig = MiningConfig()) -> MinedPool:
    """Mining, ROC filtering and information-gain screening in sequence."""
    pool = mine_frequent(index, config)
    n_mined = len(pool)
    pool = roc_filter(pool)
    n_roc = len(pool)
    pool = info_gain_screen(pool, config.top_k)
    pool.notes.update({"n_mined": n_mined, "n_after_roc": n_roc, "n_after_screen": len(pool)})
    return pool


def with_config(config: MiningConfig, **changes) -> MiningConfig:
    return replace(config, **changes)


def literal_pool(index: DatasetIndex, literals: Sequence[Literal]) -> MinedPool:
    return from_patterns(index, [Pattern.of(l) for l in literals], max_length=1)
