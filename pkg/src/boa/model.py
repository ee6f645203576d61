"""Scoring of pattern sets: priors, the integrated likelihood, and the joint.

All arithmetic is in log space.  Constants that do not depend on the pattern
set (the Poisson truncation normalizers) are left out, so raw scores are only
comparable between sets scored under the same hyperparameters.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

from .exceptions import PoolError, SchemaError
from .patterns import ConfusionCounts, Pattern, PatternSet, confusion

if TYPE_CHECKING:
    from .config import ModelConfig
    from .data import DatasetIndex
    from .mining import MinedPool


def lnbeta(a: float, b: float) -> float:
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


def ln_poisson(k: int, lam: float) -> float:
    return -lam + k * math.log(lam) - math.lgamma(k + 1)


def ln_comb(n: int, k: int) -> float:
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def _positive(name: str, value: float) -> None:
    if not (math.isfinite(value) and value > 0):
        raise SchemaError(f"{name} must be a finite positive number, got {value!r}")


@dataclass(frozen=True)
class LikelihoodHyper:
    """Beta hyperparameters for the two label-agreement rates.

    ``alpha_pos/(alpha_pos+beta_pos)`` is the prior mean chance that a
    covered record is positive, ``alpha_neg/(alpha_neg+beta_neg)`` the chance
    that an uncovered one is negative.
    """

    alpha_pos: float = 100.0
    beta_pos: float = 1.0
    alpha_neg: float = 100.0
    beta_neg: float = 1.0

    def __post_init__(self):
        for name in ("alpha_pos", "beta_pos", "alpha_neg", "beta_neg"):
            _positive(name, getattr(self, name))

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.alpha_pos, self.beta_pos, self.alpha_neg, self.beta_neg)


@dataclass(frozen=True)
class BetaBinomialHyper:
    """Per-length ``(alpha_l, beta_l)`` and pool sizes, for ``l = 1..L``."""

    alpha: tuple[float, ...]
    beta: tuple[float, ...]
    pool_sizes: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "alpha", tuple(float(a) for a in self.alpha))
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))
        object.__setattr__(self, "pool_sizes", tuple(int(s) for s in self.pool_sizes))
        if not len(self.alpha) == len(self.beta) == len(self.pool_sizes):
            raise SchemaError("alpha, beta and pool_sizes need one entry per length")
        for a, b in zip(self.alpha, self.beta):
            _positive("alpha_l", a)
            _positive("beta_l", b)
        if any(s < 0 for s in self.pool_sizes):
            raise SchemaError("pool sizes must be non-negative")

    @property
    def max_length(self) -> int:
        return len(self.pool_sizes)

    @classmethod
    def from_pool_sizes(cls, pool_sizes: Sequence[int], alpha=None, beta=None) -> "BetaBinomialHyper":
        """Defaults: ``alpha_l = 1`` and ``beta_l = |pool_l|`` (1 for an empty pool)."""
        sizes = tuple(int(s) for s in pool_sizes)
        L = len(sizes)
        alpha = tuple(alpha) if alpha is not None else (1.0,) * L
        beta = tuple(beta) if beta is not None else tuple(float(max(s, 1)) for s in sizes)
        if len(alpha) != L or len(beta) != L:
            raise SchemaError(f"expected {L} per-length values for alpha/beta")
        return cls(alpha, beta, sizes)


@dataclass(frozen=True)
class PoissonHyper:
    lambda_M: float = 3.0
    lambda_L: float = 2.0
    level_counts: tuple[int, ...] = ()  # K_j for each attribute

    def __post_init__(self):
        _positive("lambda_M", self.lambda_M)
        _positive("lambda_L", self.lambda_L)
        object.__setattr__(self, "level_counts", tuple(int(k) for k in self.level_counts))

    @property
    def n_attributes(self) -> int:
        return len(self.level_counts)


@dataclass(frozen=True)
class Score:
    log_prior: float
    log_likelihood: float
    confusion: ConfusionCounts

    @property
    def log_joint(self) -> float:
        return self.log_prior + self.log_likelihood

    @property
    def energy(self) -> float:
        """The minimization objective, minus the log joint."""
        return -self.log_joint


def log_likelihood_counts(tp: int, fp: int, tn: int, fn: int, h: LikelihoodHyper) -> float:
    ap, bp, an, bn = h.as_tuple()
    return lnbeta(tp + ap, fp + bp) - lnbeta(ap, bp) + lnbeta(tn + an, fn + bn) - lnbeta(an, bn)


def log_likelihood(conf: ConfusionCounts, h: LikelihoodHyper) -> float:
    if min(conf.tp, conf.fp, conf.tn, conf.fn) < 0:
        raise ValueError(f"negative confusion counts: {conf}")
    return log_likelihood_counts(conf.tp, conf.fp, conf.tn, conf.fn, h)


def log_empty_likelihood(n_pos: int, n_neg: int, h: LikelihoodHyper) -> float:
    """Log-likelihood of the empty set, which predicts every record negative."""
    return log_likelihood_counts(0, 0, n_neg, n_pos, h)


def betabinomial_from_counts(counts: Sequence[int], h: BetaBinomialHyper) -> float:
    """Prior from per-length counts, ``counts[l-1] = M_l``."""
    total = 0.0
    for m, a, b, n in zip(counts, h.alpha, h.beta, h.pool_sizes):
        if m > n:
            raise PoolError(f"{m} patterns of one length but the pool only holds {n}")
        total += lnbeta(m + a, n - m + b) - lnbeta(a, b)
    return total


def log_prior_betabinomial(pattern_set: PatternSet, h: BetaBinomialHyper, pool: "MinedPool | None" = None) -> float:
    """Beta-Binomial prior.  With ``pool`` given, every pattern must belong to it."""
    if pool is not None:
        members = set(pool.patterns)
        outside = [p for p in pattern_set if p not in members]
        if outside:
            raise PoolError(f"{len(outside)} pattern(s) are not in the mined pool")
    counts = [0] * h.max_length
    for p in pattern_set:
        if len(p) > h.max_length:
            raise PoolError(f"pattern of length {len(p)} exceeds the maximum length {h.max_length}")
        counts[len(p) - 1] += 1
    return betabinomial_from_counts(counts, h)


def poisson_pattern_term(pattern: Pattern, h: PoissonHyper) -> float:
    """Per-pattern factor: length, attribute choice and value choice.

    The attribute-choice factor uses the number of distinct attributes, so
    a pattern holding two thresholds on one attribute is still scored.
    """
    J = h.n_attributes
    attrs = pattern.attributes
    if J == 0 or any(a >= J for a in attrs):
        raise SchemaError("Poisson prior needs the level count of every attribute")
    term = ln_poisson(len(pattern), h.lambda_L) - ln_comb(J, len(attrs))
    for lit in pattern.literals:
        term -= math.log(h.level_counts[lit.attribute])
    return term


def log_prior_poisson(pattern_set: PatternSet, h: PoissonHyper) -> float:
    return ln_poisson(len(pattern_set), h.lambda_M) + sum(poisson_pattern_term(p, h) for p in pattern_set)


def log_prior(pattern_set: PatternSet, config: "ModelConfig", level_counts: Sequence[int] = (),
              pool: "MinedPool | None" = None, bb: BetaBinomialHyper | None = None) -> float:
    """Log prior under ``config.prior``; ``level_counts`` feeds the Poisson prior."""
    if config.prior == "none":
        return 0.0
    if config.prior == "poisson":
        return log_prior_poisson(pattern_set, config.poisson(level_counts))
    if bb is None:
        if pool is None:
            raise PoolError("the Beta-Binomial prior needs the mined pool or explicit pool sizes")
        bb = config.beta_binomial(pool.prior_pool_sizes[1:])
    return log_prior_betabinomial(pattern_set, bb, pool)


def score(pattern_set: PatternSet, index: "DatasetIndex", config: "ModelConfig",
          pool: "MinedPool | None" = None, bb: BetaBinomialHyper | None = None) -> Score:
    """Prior, likelihood and joint of ``pattern_set`` on ``index``."""
    conf = confusion(pattern_set, index)
    prior = log_prior(pattern_set, config, index.schema.level_counts, pool, bb)
    return Score(prior, log_likelihood(conf, config.likelihood), conf)


def energy(pattern_set: PatternSet, index: "DatasetIndex", config: "ModelConfig",
           pool: "MinedPool | None" = None, bb: BetaBinomialHyper | None = None) -> float:
    return score(pattern_set, index, config, pool, bb).energy
