"""
Simulated-annealing search
==========================

``fit`` mines, prunes with the bounds and anneals several chains.  Each
chain proposes an edit guided by a misclassified record and accepts it by
the Metropolis rule under a logarithmic cooling schedule.  On a tiny
instance the result can be checked against exhaustive enumeration.
"""
from boa import ModelConfig, build_index, exhaustive_map, fit, sa_search, tic_tac_toe, tic_tac_toe_truth
from boa.patterns import edit_distance
from boa.synthetic import tiny_pattern_instance

# tiny instance: 12 candidate patterns, 4096 possible sets
inst = tiny_pattern_instance(seed=7, n_candidates=12)
config = ModelConfig().with_mining(max_length=inst.max_length)
best, oracle = exhaustive_map(inst.candidates, inst.index, config)
found, trace = sa_search(inst.index, inst.pool, config.with_sa(max_steps=2000))
print(f"exhaustive energy {oracle.energy:.6f}, annealing energy {trace.energy:.6f}")

# tic-tac-toe at the pattern level
index = build_index(tic_tac_toe())
result = fit(index, ModelConfig().with_sa(max_steps=5000, seed=1).with_mining(top_k=2000))
print(f"{len(result.pattern_set)} patterns, energy {result.score.energy:.2f}, "
      f"edit distance to the true model {edit_distance(result.pattern_set, tic_tac_toe_truth())}")
print(result.pattern_set.render(index.schema))
for chain in result.trace.chains:
    print(f"  chain best energy {chain.best_energy:.2f}")
