import math

import pytest
from hypothesis import given, settings, strategies as st

from boa.bounds import (bound_report, g, g_max, poisson_size_hypothesis, support_hypothesis, theorem1_m_upper,
                        theorem2_m_upper, theorem2_per_length, theorem3_min_support, theorem4_min_support,
                        theorem5_risk_bound)
from boa.config import ModelConfig
from boa.infer import exhaustive_map
from boa.model import BetaBinomialHyper, LikelihoodHyper, PoissonHyper
from boa.patterns import support

from conftest import BB_BETA, STRONG, tiny_instance

ONES = LikelihoodHyper(1, 1, 1, 1)


class TestGMax:
    """Peak of the length-choice term over pattern lengths."""

    def test_examples(self):
        assert g_max(2, 3) == 2
        assert g_max(2, 1) == 1

    def test_dominates_g_small(self):
        assert all(g(l, 1, 5) <= g_max(1, 5) for l in range(1, 6))

    @settings(max_examples=100, deadline=None)
    @given(st.floats(0.05, 20), st.integers(1, 30))
    def test_dominates_g(self, lam, J):
        top = g_max(lam, J)
        assert all(g(l, lam, J) <= top * (1 + 1e-12) for l in range(1, J + 1))


class TestPoissonSizeCap:
    """Cap on the MAP set size under the Poisson prior."""

    def test_hypothesis_example(self):
        assert poisson_size_hypothesis(PoissonHyper(3, 1, (3,) * 10))

    @pytest.mark.parametrize("lam_M", [1, 2, 3, 5])
    def test_at_least_lambda(self, lam_M):
        m = theorem1_m_upper(PoissonHyper(lam_M, 2, (3,) * 9), LikelihoodHyper(), 626, 332)
        assert m is not None and m >= lam_M

    def test_non_integer_not_applicable(self):
        assert theorem1_m_upper(PoissonHyper(2.5, 2, (3,) * 9), LikelihoodHyper(), 626, 332) is None

    @pytest.mark.parametrize("seed", range(20))
    def test_exhaustive(self, seed):
        index, cands = tiny_instance(seed)
        cfg = ModelConfig(prior="poisson", lambda_M=1, lambda_L=1, likelihood=STRONG)
        h = cfg.poisson(index.schema.level_counts)
        bound = theorem1_m_upper(h, STRONG, index.n_pos, index.n_neg)
        assert bound is not None
        best, _ = exhaustive_map(cands, index, cfg, max_set_size=3)
        assert len(best) <= bound


class TestBetaBinomialSizeCap:
    """Cap on the MAP set size under the Beta-Binomial prior."""

    def test_stronger_prior_smaller_bound(self):
        lh = LikelihoodHyper()
        weak = theorem2_m_upper(BetaBinomialHyper((1,), (1000,), (1000,)), lh, 30, 10)
        strong = theorem2_m_upper(BetaBinomialHyper((1,), (10000,), (1000,)), lh, 30, 10)
        assert strong < weak

    def test_more_data_larger_bound(self):
        h, lh = BetaBinomialHyper((1,), (1000,), (1000,)), LikelihoodHyper()
        assert theorem2_m_upper(h, lh, 300, 100) > theorem2_m_upper(h, lh, 30, 10)

    def test_alpha_not_below_beta(self):
        assert theorem2_m_upper(BetaBinomialHyper((5,), (5,), (10,)), LikelihoodHyper(), 30, 30) is None

    def test_empty_pool_contributes_nothing(self):
        per = theorem2_per_length(BetaBinomialHyper((1, 1), (10, 2), (10, 0)), LikelihoodHyper(), 30, 30)
        assert per[1] == 0.0

    @pytest.mark.parametrize("seed", range(20))
    def test_exhaustive(self, seed):
        index, cands = tiny_instance(seed)
        cfg = ModelConfig(likelihood=STRONG, bb_beta=BB_BETA)
        sizes = [sum(len(p) == l for p in cands) for l in (1, 2, 3)]
        bound = theorem2_m_upper(cfg.beta_binomial(sizes), STRONG, index.n_pos, index.n_neg)
        assert bound is not None
        best, _ = exhaustive_map(cands, index, cfg, pool_sizes=sizes)
        assert len(best) <= bound


class TestSupportFloors:
    """Minimum support every MAP pattern must reach."""

    def test_hypothesis_example(self):
        assert support_hypothesis(LikelihoodHyper(100, 1, 1, 100), 500, 500)

    def test_beta_binomial_floor_nonnegative(self):
        lh = LikelihoodHyper(100, 1, 1, 100)
        c = theorem3_min_support(BetaBinomialHyper((1, 1, 1), (50, 500, 5000), (50, 500, 5000)), lh, 500, 500)
        assert c is not None and c >= 0

    def test_poisson_floor_example(self):
        lh = LikelihoodHyper(100, 1, 1, 100)
        c = theorem4_min_support(PoissonHyper(3, 2, (3,) * 9), lh, 500, 500)
        assert c is not None and c >= 0

    def test_poisson_floor_grows_as_lambda_shrinks(self):
        lh = LikelihoodHyper(100, 1, 1, 100)
        loose = theorem4_min_support(PoissonHyper(10, 2, (3,) * 9), lh, 500, 500)
        tight = theorem4_min_support(PoissonHyper(1, 2, (3,) * 9), lh, 500, 500)
        assert tight > loose

    def test_hypothesis_failure_reported(self):
        # a covered negative is likelier than a covered positive here
        lh = LikelihoodHyper(1, 1000, 1, 1)
        assert not support_hypothesis(lh, 5, 5)
        assert theorem4_min_support(PoissonHyper(3, 2, (3,) * 9), lh, 5, 5) is None

    @pytest.mark.parametrize("seed", range(50))
    def test_exhaustive_beta_binomial_floor(self, seed):
        index, cands = tiny_instance(seed, n_candidates=8)
        cfg = ModelConfig(likelihood=STRONG, bb_beta=BB_BETA)
        sizes = [sum(len(p) == l for p in cands) for l in (1, 2, 3)]
        c = theorem3_min_support(cfg.beta_binomial(sizes), STRONG, index.n_pos, index.n_neg)
        assert c is not None
        best, _ = exhaustive_map(cands, index, cfg, pool_sizes=sizes)
        assert all(support(p, index) >= c for p in best)

    @pytest.mark.parametrize("seed", range(50))
    def test_exhaustive_poisson_floor(self, seed):
        index, cands = tiny_instance(seed, n_candidates=8)
        cfg = ModelConfig(prior="poisson", lambda_M=1, lambda_L=1, likelihood=STRONG)
        c = theorem4_min_support(cfg.poisson(index.schema.level_counts), STRONG, index.n_pos, index.n_neg)
        assert c is not None
        best, _ = exhaustive_map(cands, index, cfg)
        assert all(support(p, index) >= c for p in best)


class TestRiskBound:
    """Empirical risk plus complexity term."""

    K = (3,) * 9

    def test_perfect_fit_is_complexity_only(self):
        N, m = 958, 8
        b = theorem5_risk_bound(0.0, N, m, self.K, 0.05)
        b2 = theorem5_risk_bound(-10.0, N, m, self.K, 0.05)
        assert b2 - b == pytest.approx(-10.0 / (N * math.log(0.5)))

    def test_decreasing_in_n(self):
        assert theorem5_risk_bound(0.0, 4000, 5, self.K) < theorem5_risk_bound(0.0, 1000, 5, self.K)

    def test_increasing_in_m(self):
        assert theorem5_risk_bound(0.0, 1000, 7, self.K) > theorem5_risk_bound(0.0, 1000, 5, self.K)

    def test_small_exact_count(self):
        # one binary attribute: 3 patterns, at most 2 in a set -> C(3,1)+C(3,2) = 6
        want = math.sqrt((math.log(6) + math.log(20)) / 20)
        assert theorem5_risk_bound(0.0, 10, 2, (2,), 0.05) == pytest.approx(want)

    @pytest.mark.parametrize("delta", [0.0, 1.0])
    def test_bad_delta(self, delta):
        with pytest.raises(ValueError):
            theorem5_risk_bound(0.0, 10, 2, (2,), delta)

    def test_huge_space_is_finite(self):
        assert math.isfinite(theorem5_risk_bound(-500.0, 10**5, 50, (10,) * 200))


class TestReport:
    """Combined bound report."""

    def test_beta_binomial(self):
        lh = LikelihoodHyper()
        rep = bound_report("beta_binomial", lh, 626, 332, bb=BetaBinomialHyper.from_pool_sizes([50, 1000, 9000]),
                           level_counts=(3,) * 9)
        doc = rep.to_dict()
        assert rep.applicable["beta_binomial_size_cap"]
        assert isinstance(doc["m_upper"], int)
        assert rep.generalization_bound is not None

    def test_not_applicable_strings(self):
        rep = bound_report("none", LikelihoodHyper(), 10, 10)
        doc = rep.to_dict()
        assert doc["m_upper"] == doc["min_support_C"] == doc["generalization_bound"] == "not applicable"

    def test_deterministic(self):
        args = ("poisson", LikelihoodHyper(), 626, 332)
        kw = dict(poisson=PoissonHyper(3, 2, (3,) * 9), level_counts=(3,) * 9)
        assert bound_report(*args, **kw).to_dict() == bound_report(*args, **kw).to_dict()
