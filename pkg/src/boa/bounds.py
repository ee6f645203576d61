"""Size caps for MAP pattern sets, support floors for candidate patterns, and a risk bound.

Each calculator checks the hypotheses it relies on and returns ``None`` when
they fail, so callers never act on a number that was not guaranteed.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .model import BetaBinomialHyper, LikelihoodHyper, PoissonHyper, ln_comb, log_empty_likelihood


def _is_int(x: float) -> bool:
    return float(x).is_integer()


def g(l: int, lam: float, J: int) -> float:
    return (lam / 2) ** l * math.gamma(J - l + 1)


def log_g_max(lam: float, J: int) -> float:
    return max(math.log(lam / 2) + math.lgamma(J), J * math.log(lam / 2))


def g_max(lam: float, J: int) -> float:
    """Largest value of ``(lam/2)**l * Gamma(J-l+1)`` over ``1 <= l <= J``."""
    if lam <= 0 or J < 1:
        raise ValueError("need lam > 0 and J >= 1")
    return max((lam / 2) * math.gamma(J), (lam / 2) ** J)


def _log_likelihood_ratio_step(lh: LikelihoodHyper, n_pos: int, n_neg: int) -> float | None:
    """log of the per-record likelihood factor lost when a covered positive is dropped.

    The support-floor theorems need this ratio to be at most one; returns its
    log, or ``None`` when it is undefined.
    """
    ap, bp, an, bn = lh.as_tuple()
    if n_pos + ap - 1 <= 0:
        return None
    return math.log(n_pos + ap + bp - 1) - math.log(n_pos + ap - 1) + math.log(bn) - math.log(n_neg + an + bn)


def poisson_size_hypothesis(h: PoissonHyper) -> bool:
    J = h.n_attributes
    return -h.lambda_L + J * math.log(h.lambda_L / 2) - math.lgamma(J + 1) <= 0


def theorem1_m_upper(h: PoissonHyper, lh: LikelihoodHyper, n_pos: int, n_neg: int) -> int | None:
    """Cap on the MAP set size under the Poisson prior."""
    J = h.n_attributes
    if J < 1 or not all(_is_int(v) for v in (h.lambda_M, h.lambda_L, *lh.as_tuple())):
        return None
    if not poisson_size_hypothesis(h):
        return None
    log_x = -h.lambda_L + math.log(h.lambda_M) + log_g_max(h.lambda_L, J) - math.lgamma(J + 1)
    log_ratio = log_x - math.log(h.lambda_M + 1)
    if log_ratio >= 0:
        return None
    numer = log_empty_likelihood(n_pos, n_neg, lh) + math.lgamma(h.lambda_M + 1) - h.lambda_M * log_x
    extra = max(0.0, numer / log_ratio)
    return int(math.floor(h.lambda_M + extra + 1e-9))


def theorem2_per_length(h: BetaBinomialHyper, lh: LikelihoodHyper, n_pos: int, n_neg: int) -> list[float] | None:
    """Per-length caps ``m_l`` on the number of MAP patterns of each length.

    An empty pool contributes 0.
    """
    if not all(a < b for a, b in zip(h.alpha, h.beta)):
        return None
    if not all(_is_int(v) for v in (*h.alpha, *h.beta, *lh.as_tuple())):
        return None
    log_empty = log_empty_likelihood(n_pos, n_neg, lh)
    out = []
    for a, b, n in zip(h.alpha, h.beta, h.pool_sizes):
        if n == 0:
            out.append(0.0)
            continue
        num = n + a - 1
        denom = math.log(num) - math.log(n + b - 1) if num > 0 else -math.inf
        out.append(min(float(n), log_empty / denom if denom != -math.inf else 0.0))
    return out


def theorem2_m_upper(h: BetaBinomialHyper, lh: LikelihoodHyper, n_pos: int, n_neg: int) -> int | None:
    """Cap on the MAP set size under the Beta-Binomial prior."""
    per = theorem2_per_length(h, lh, n_pos, n_neg)
    if per is None:
        return None
    return int(math.floor(sum(per) + 1e-9))


def support_hypothesis(lh: LikelihoodHyper, n_pos: int, n_neg: int) -> bool:
    step = _log_likelihood_ratio_step(lh, n_pos, n_neg)
    return step is not None and step <= 0


def _support_floor(log_prior_gain: float, lh: LikelihoodHyper, n_pos: int, n_neg: int) -> int:
    step = _log_likelihood_ratio_step(lh, n_pos, n_neg)
    n = n_pos + n_neg
    if log_prior_gain <= 0:
        return 0
    if step == 0:
        # dropping any pattern never costs likelihood, so nothing survives
        return n + 1
    return int(min(n + 1, math.floor(log_prior_gain / -step + 1e-9)))


def theorem3_min_support(h: BetaBinomialHyper, lh: LikelihoodHyper, n_pos: int, n_neg: int) -> int | None:
    """Support (over all records) every MAP pattern must reach, Beta-Binomial prior."""
    if not support_hypothesis(lh, n_pos, n_neg):
        return None
    per = theorem2_per_length(h, lh, n_pos, n_neg)
    if per is None:
        return None
    ratios = []
    for m, a, b, n in zip(per, h.alpha, h.beta, h.pool_sizes):
        m_int = math.floor(m + 1e-9)
        if m_int < 1:
            continue  # the MAP holds no pattern of this length
        ratios.append(math.log(n - m_int + b) - math.log(m_int - 1 + a))
    if not ratios:
        return n_pos + n_neg + 1
    return _support_floor(min(ratios), lh, n_pos, n_neg)


def theorem4_min_support(h: PoissonHyper, lh: LikelihoodHyper, n_pos: int, n_neg: int) -> int | None:
    """Support (over all records) every MAP pattern must reach, Poisson prior."""
    J = h.n_attributes
    if J < 1 or not all(_is_int(v) for v in (h.lambda_M, h.lambda_L, *lh.as_tuple())):
        return None
    if not support_hypothesis(lh, n_pos, n_neg):
        return None
    gain = math.lgamma(J + 1) - math.log(h.lambda_M) + h.lambda_L - log_g_max(h.lambda_L, J)
    return _support_floor(gain, lh, n_pos, n_neg)


def log_hypothesis_count(n_patterns_log: float, m_upper: int) -> float:
    """log of sum_{m=1..m_upper} C(P, m) where ``P = exp(n_patterns_log)``."""
    P = math.exp(n_patterns_log)
    if not math.isfinite(P) or P > 2**52:
        # lnC(P, m) ~ m ln P - ln m! once P dwarfs m
        terms = [m * n_patterns_log - math.lgamma(m + 1) for m in range(1, m_upper + 1)]
    else:
        P = round(P)
        terms = [ln_comb(P, m) for m in range(1, min(m_upper, P) + 1)]
    return float(logsumexp(terms))


def theorem5_risk_bound(log_lik: float, N: int, m_upper: int, level_counts: Sequence[int], delta: float = 0.05) -> float:
    """Empirical term plus a uniform-convergence complexity term.

    The complexity term uses the log of the number of pattern sets with at
    most ``m_upper`` patterns.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if m_upper < 1 or N < 1:
        raise ValueError("need m_upper >= 1 and N >= 1")
    n_patterns_log = float(np.sum(np.log(np.asarray(level_counts, dtype=float) + 1)))
    complexity = log_hypothesis_count(n_patterns_log, m_upper) + math.log(1 / delta)
    return log_lik / (N * math.log(0.5)) + math.sqrt(complexity / (2 * N))


@dataclass
class BoundReport:
    prior: str
    m_upper: int | None = None
    per_length_m: list[float] | None = None
    min_support_C: int | None = None
    generalization_bound: float | None = None
    applicable: dict = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        doc = asdict(self)
        for key in ("m_upper", "min_support_C", "generalization_bound"):
            if doc[key] is None:
                doc[key] = "not applicable"
        return doc


def bound_report(prior: str, lh: LikelihoodHyper, n_pos: int, n_neg: int, *,
                 bb: BetaBinomialHyper | None = None, poisson: PoissonHyper | None = None,
                 level_counts: Sequence[int] = (), log_lik: float | None = None,
                 delta: float = 0.05) -> BoundReport:
    """Evaluate every bound that applies to ``prior``.

    ``log_lik`` feeds the risk bound; without it the empty set's likelihood
    is used.
    """
    rep = BoundReport(prior=prior)
    rep.applicable["support_likelihood_ratio"] = support_hypothesis(lh, n_pos, n_neg)
    if prior == "beta_binomial" and bb is not None:
        rep.per_length_m = theorem2_per_length(bb, lh, n_pos, n_neg)
        rep.m_upper = theorem2_m_upper(bb, lh, n_pos, n_neg)
        rep.min_support_C = theorem3_min_support(bb, lh, n_pos, n_neg)
        rep.applicable["beta_binomial_size_cap"] = rep.m_upper is not None
        rep.applicable["beta_binomial_support_floor"] = rep.min_support_C is not None
    elif prior == "poisson" and poisson is not None:
        rep.applicable["poisson_size_hypothesis"] = poisson_size_hypothesis(poisson)
        rep.m_upper = theorem1_m_upper(poisson, lh, n_pos, n_neg)
        rep.min_support_C = theorem4_min_support(poisson, lh, n_pos, n_neg)
        rep.applicable["poisson_size_cap"] = rep.m_upper is not None
        rep.applicable["poisson_support_floor"] = rep.min_support_C is not None
    else:
        rep.notes.append(f"no size or support bound for prior {prior!r}")
    if rep.m_upper is not None and rep.m_upper >= 1 and level_counts:
        if log_lik is None:
            log_lik = log_empty_likelihood(n_pos, n_neg, lh)
            rep.notes.append("risk bound evaluated at the empty set's likelihood")
        rep.generalization_bound = theorem5_risk_bound(log_lik, n_pos + n_neg, rep.m_upper, level_counts, delta)
    rep.applicable["risk_bound"] = rep.generalization_bound is not None
    return rep
