"""
Scoring pattern sets
====================

The energy of a pattern set is minus its log prior minus its
Beta-integrated log likelihood.  Lower is better.  Here the true
tic-tac-toe model is compared with a few alternatives under both priors.
"""
from boa import ModelConfig, PatternSet, build_index, mine_pool, score, tic_tac_toe, tic_tac_toe_truth

index = build_index(tic_tac_toe())
truth = tic_tac_toe_truth()
pool = mine_pool(index)
sizes = pool.prior_pool_sizes[1:]

candidates = {
    "empty": PatternSet(),
    "four lines": PatternSet.of(list(truth)[:4]),
    "true eight lines": truth,
}
for prior in ("beta_binomial", "poisson"):
    config = ModelConfig(prior=prior)
    bb = config.beta_binomial(sizes) if prior == "beta_binomial" else None
    print(f"\n{prior} prior")
    for name, ps in candidates.items():
        s = score(ps, index, config, bb=bb)
        print(f"  {name:17s} log prior {s.log_prior:9.2f}  log lik {s.log_likelihood:9.2f}  energy {s.energy:9.2f}")
