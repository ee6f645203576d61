"""End-to-end fitting: mine candidates, apply support bounds, search."""
from __future__ import annotations

from dataclasses import dataclass

from .bounds import BoundReport, bound_report
from .config import ModelConfig
from .data import DatasetIndex
from .infer import SearchProblem, SearchTrace, sa_search
from .mining import MinedPool, mine_pool
from .model import Score, score
from .patterns import PatternSet


@dataclass
class FitResult:
    pattern_set: PatternSet
    score: Score
    trace: SearchTrace | None
    pool: MinedPool | None
    bounds: BoundReport | None
    min_support_applied: int | None = None


def bounds_for(index: DatasetIndex, config: ModelConfig, pool: MinedPool | None = None,
               problem: SearchProblem | None = None) -> BoundReport:
    """Bound report for ``config`` on ``index``; Beta-Binomial pool sizes come from the pool or pattern space."""
    lh = config.likelihood
    kwargs = {"level_counts": index.schema.level_counts}
    if config.prior == "beta_binomial":
        if problem is not None:
            sizes = problem.prior_pool_sizes()
        elif pool is not None:
            sizes = list(pool.prior_pool_sizes[1:])
        else:
            sizes = None
        if sizes is not None:
            kwargs["bb"] = config.beta_binomial(sizes)
    elif config.prior == "poisson":
        kwargs["poisson"] = config.poisson(index.schema.level_counts)
    return bound_report(config.prior, lh, index.n_pos, index.n_neg, **kwargs)


def fit(index: DatasetIndex, config: ModelConfig, pool: MinedPool | None = None) -> FitResult:
    """Fit a pattern set to ``index`` under ``config``.

    At the pattern level the pool is mined when not given.  When a support
    bound applies, candidates below it are dropped before the search; the
    Beta-Binomial pool sizes stay those of the unpruned pool.
    """
    sa = config.sa
    if sa.level == "literal":
        problem = SearchProblem.for_literals(index, config)
        report = bounds_for(index, config, problem=problem)
        best, trace = sa_search(index, None, config, problem=problem)
        return FitResult(best, trace.score, trace, None, report)

    if pool is None:
        pool = mine_pool(index, config.mining)
    report = bounds_for(index, config, pool=pool)
    applied = None
    if config.use_bounds and report.min_support_C is not None and report.min_support_C > 0:
        applied = report.min_support_C
        pool = pool.restrict(applied)
    if len(pool) == 0:
        # every pattern a MAP set could hold was pruned, so the MAP set is empty
        empty = PatternSet()
        bb = config.beta_binomial(pool.prior_pool_sizes[1:]) if config.prior == "beta_binomial" else None
        return FitResult(empty, score(empty, index, config, bb=bb), None, pool, report, applied)
    best, trace = sa_search(index, pool, config)
    return FitResult(best, trace.score, trace, pool, report, applied)
