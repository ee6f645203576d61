import math

import numpy as np
import pytest

from boa import bitset
from boa.data import EQ, NEQ, Literal, build_index
from boa.exceptions import DataError, SchemaError
from boa.mining import (MinedPool, MiningConfig, conditional_entropy, from_patterns, info_gain_screen,
                        mine_frequent, mine_pool, roc_filter)
from boa.patterns import Pattern, enumerate_patterns, support

from conftest import random_table


def brute_force(index, config):
    """Every valid conjunction, support counted by scanning positive records."""
    universe = [l for l in index.literal_universe if config.include_negative_literals or l.test != NEQ]
    threshold = config.threshold(index.n_pos)
    return {p for p in enumerate_patterns(universe, config.max_length)
            if support(p, index, "positives") >= threshold}


def entropy_bits(labels):
    n = len(labels)
    if n == 0:
        return 0.0
    p = sum(labels) / n
    return -sum(q * math.log2(q) for q in (p, 1 - p) if q > 0)


def stats_pool(tp, fp, n_pos=10, n_neg=10):
    """A pool of single-attribute dummy patterns with the given supports."""
    pats = [Pattern.of(Literal(j, EQ, 1)) for j in range(len(tp))]
    return MinedPool(pats, np.zeros((len(tp), 1), dtype=np.uint64), np.array(tp), np.array(tp) + np.array(fp),
                     n_pos, n_neg, 1)


class TestMiningConfig:
    """Mining thresholds and validation."""

    @pytest.mark.parametrize("kw", [{"min_support_fraction": 0}, {"min_support_fraction": 1.5},
                                    {"max_length": 0}, {"top_k": 0}])
    def test_rejects(self, kw):
        with pytest.raises(SchemaError):
            MiningConfig(**kw)

    def test_threshold_rounds_up(self):
        assert MiningConfig(min_support_fraction=0.05).threshold(626) == 32
        assert MiningConfig(min_support_fraction=0.5).threshold(10) == 5


class TestMineFrequent:
    """FP-growth against brute-force enumeration."""

    def test_full_support(self, ttt_index):
        pool = mine_frequent(ttt_index, MiningConfig(min_support_fraction=1.0))
        for p in pool.patterns:
            assert support(p, ttt_index, "positives") == ttt_index.n_pos

    def test_toy_brute_force(self, toy_index):
        cfg = MiningConfig(max_length=2, min_support_count=2)
        assert set(mine_frequent(toy_index, cfg).patterns) == brute_force(toy_index, cfg)

    @pytest.mark.parametrize("seed", range(10))
    def test_random_brute_force(self, toy_schema, seed):
        rng = np.random.default_rng(seed)
        index = build_index(random_table(rng, toy_schema, 30))
        for cfg in (MiningConfig(max_length=3, min_support_count=2),
                    MiningConfig(max_length=2, min_support_fraction=0.3, include_negative_literals=False)):
            assert set(mine_frequent(index, cfg).patterns) == brute_force(index, cfg)

    def test_tic_tac_toe_brute_force(self, ttt_index):
        cfg = MiningConfig(max_length=2)
        assert set(mine_frequent(ttt_index, cfg).patterns) == brute_force(ttt_index, cfg)

    def test_cached_supports(self, ttt_index):
        pool = mine_frequent(ttt_index, MiningConfig())
        for i in range(0, len(pool), 97):
            p = pool.patterns[i]
            assert pool.support_pos[i] == support(p, ttt_index, "positives")
            assert pool.support_all[i] == support(p, ttt_index)

    def test_threshold_monotone(self, ttt_index):
        low = set(mine_frequent(ttt_index, MiningConfig(min_support_fraction=0.05)).patterns)
        high = set(mine_frequent(ttt_index, MiningConfig(min_support_fraction=0.2)).patterns)
        assert high <= low and len(high) < len(low)

    def test_no_positives(self, toy_table):
        index = build_index(toy_table.with_labels(np.zeros(toy_table.n_records, dtype=bool)))
        with pytest.raises(DataError):
            mine_frequent(index)

    def test_threshold_above_positives_gives_empty(self, toy_index):
        assert len(mine_frequent(toy_index, MiningConfig(min_support_count=99))) == 0


class TestRocFilter:
    """Dropping patterns off the ROC frontier."""

    def test_cases(self):
        # (tpr, fpr) = (0.8, 0.1), (0.1, 0.4), (0.3, 0.3)
        pool = roc_filter(stats_pool([8, 1, 3], [1, 4, 3]))
        assert [p.literals[0].attribute for p in pool.patterns] == [0, 2]

    def test_unbalanced_boundary(self):
        # tp/n_pos = 3/10 equals fp/n_neg = 6/20
        assert len(roc_filter(stats_pool([3], [6], n_pos=10, n_neg=20))) == 1
        assert len(roc_filter(stats_pool([3], [7], n_pos=10, n_neg=20))) == 0


class TestInfoGain:
    """Conditional entropy and screening."""

    def test_pure_split_first(self):
        # pattern 1 covers exactly the positives; pattern 0 is label-independent
        pool = stats_pool([5, 10], [5, 0])
        ent = conditional_entropy(pool)
        assert ent[1] == 0.0
        assert ent[0] == pytest.approx(1.0)
        assert info_gain_screen(pool, 1).patterns == [pool.patterns[1]]

    def test_entropy_oracle(self, toy_schema):
        rng = np.random.default_rng(7)
        table = random_table(rng, toy_schema, 8)
        index = build_index(table)
        pool = from_patterns(index, enumerate_patterns(index.literal_universe, 2))
        ent = conditional_entropy(pool)
        y = table.labels.tolist()
        for i, p in enumerate(pool.patterns):
            cov = bitset.unpack(pool.coverage[i], 8)
            inside = [t for c, t in zip(cov, y) if c]
            outside = [t for c, t in zip(cov, y) if not c]
            want = len(inside) / 8 * entropy_bits(inside) + len(outside) / 8 * entropy_bits(outside)
            assert ent[i] == pytest.approx(want, abs=1e-12)
        top = info_gain_screen(pool, 3)
        order = sorted(range(len(pool)), key=lambda i: (round(ent[i], 12), pool.patterns[i].sort_key))[:3]
        assert set(top.patterns) == {pool.patterns[i] for i in order}

    def test_subset_and_size(self, ttt_index):
        pool = mine_frequent(ttt_index)
        for k in (1, 10, len(pool) + 5):
            out = info_gain_screen(pool, k)
            assert len(out) == min(k, len(pool))
            assert set(out.patterns) <= set(pool.patterns)
            assert out.patterns == sorted(out.patterns)

    def test_keep_all(self, ttt_index):
        pool = mine_frequent(ttt_index)
        assert info_gain_screen(pool, None).patterns == pool.patterns


class TestMinePool:
    """The full mining pipeline."""

    def test_deterministic(self, ttt_index):
        a = mine_pool(ttt_index, MiningConfig(top_k=500))
        b = mine_pool(ttt_index, MiningConfig(top_k=500))
        assert a.patterns == b.patterns
        assert np.array_equal(a.coverage, b.coverage)

    def test_notes_and_invariants(self, ttt_index):
        pool = mine_pool(ttt_index, MiningConfig(top_k=500))
        assert pool.notes["n_mined"] >= pool.notes["n_after_roc"] >= pool.notes["n_after_screen"] == 500
        assert (pool.support_pos >= pool.min_count).all()
        assert (pool.lengths <= 3).all()
        assert len(set(pool.patterns)) == len(pool)
        assert sum(pool.pool_sizes) == len(pool)

    def test_json_round_trip(self, ttt_index):
        pool = mine_pool(ttt_index, MiningConfig(top_k=50))
        doc = pool.to_json(ttt_index.schema)
        back = MinedPool.from_json(doc, ttt_index)
        assert back.patterns == pool.patterns
        assert back.prior_pool_sizes == pool.prior_pool_sizes

    def test_restrict_freezes_prior_sizes(self, ttt_index):
        pool = mine_pool(ttt_index)
        small = pool.restrict(100)
        assert small.prior_pool_sizes == pool.prior_pool_sizes
        assert (small.support_all >= 100).all()
