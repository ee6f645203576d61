"""
Bounds on the MAP set
=====================

Before searching, the priors imply a cap on how many patterns the MAP set
can hold and a floor on how many records each member must cover.  Patterns
below the floor are pruned from the pool without changing the answer.
"""
from boa import LikelihoodHyper, ModelConfig, build_index, mine_pool, tic_tac_toe
from boa.pipeline import bounds_for

index = build_index(tic_tac_toe())
pool = mine_pool(index)

for prior in ("beta_binomial", "poisson"):
    config = ModelConfig(prior=prior, likelihood=LikelihoodHyper(100, 1, 100, 1))
    report = bounds_for(index, config, pool=pool)
    print(f"{prior}: m_upper={report.m_upper}, min support C={report.min_support_C}, "
          f"risk bound={report.generalization_bound}")
    for note in report.notes:
        print("   ", note)

# a support floor shrinks the pool the search has to explore
config = ModelConfig(prior="beta_binomial")
C = bounds_for(index, config, pool=pool).min_support_C
if C:
    print(f"pool {len(pool)} -> {len(pool.restrict(C))} after the support floor {C}")
