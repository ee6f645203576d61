"""
Mining a candidate pool
=======================

FP-growth runs on the positive records, keeps patterns above a support
threshold, drops those off the ROC frontier and screens the rest by
information gain.  Tic-tac-toe is a good test bed: its true model is eight
length-3 patterns.
"""
import time

from boa import MiningConfig, build_index, mine_pool, tic_tac_toe, tic_tac_toe_truth
from boa.mining import mine_frequent, roc_filter

table = tic_tac_toe()
index = build_index(table)
print(f"{index.n_records} boards, {index.n_pos} won by x")

config = MiningConfig(min_support_fraction=0.05, max_length=3)
t0 = time.perf_counter()
frequent = mine_frequent(index, config)
print(f"frequent patterns: {len(frequent)} in {time.perf_counter() - t0:.1f} s")
print(f"on the ROC frontier: {len(roc_filter(frequent))}")

pool = mine_pool(index, MiningConfig(max_length=3, top_k=1000))
print(f"after screening to 1000: {len(pool)}")

# all eight winning lines survive screening
truth = tic_tac_toe_truth()
members = set(pool.patterns)
print("true patterns in pool:", sum(p in members for p in truth), "of", len(truth))
