import math

import numpy as np
import pytest

from mfcontest import design as D
from mfcontest.errors import DomainError, DriftTooLargeError, UnsupportedError
from mfcontest.reward import RewardFunction
from mfcontest.scale import Feasibility, ModelParams, is_feasible
from oracles import kth_largest_mc, phi, rank_performance


def test_mf_optimal_examples(unit):
    assert D.mf_optimal_reward(unit, 0.5).performance == 2.0
    assert D.mf_optimal_reward(unit, 0.999999).performance == pytest.approx(1.0, abs=2e-6)
    neg = D.mf_optimal_reward(ModelParams(mu=-0.5), 0.5)
    # log(1 + 2(e - 1)) = 1.48988013...
    assert neg.performance == pytest.approx(math.log(1 + 2 * (math.e - 1)), rel=1e-14)
    assert neg.performance == pytest.approx(1.48988013, abs=1e-8)
    assert D.mf_optimal_reward(unit, 0.5).reward == RewardFunction.cutoff(0.5)


def test_drift_condition():
    with pytest.raises(DriftTooLargeError):
        D.mf_optimal_reward(ModelParams(mu=0.4), 0.5)
    D.mf_optimal_reward(ModelParams(mu=0.3), 0.5)
    with pytest.raises(DomainError):
        D.mf_optimal_reward(ModelParams(), 1.0)


def test_planner_examples(unit):
    F = D.planner_optimum(unit, 0.5)
    assert F.atoms == [(0.0, 0.5), (2.0, 0.5)]
    pp = ModelParams(mu=0.2)
    G = D.planner_optimum(pp, 0.4)
    assert is_feasible(G, pp) is Feasibility.EQUALITY
    assert G.quantile_right(0.6) == pytest.approx(pp.h_inverse(1 / 0.4))


def test_mf_design_beats_candidates():
    for params in (ModelParams(), ModelParams(mu=-0.5), ModelParams(mu=0.1)):
        alpha = 0.4
        best = D.target_level(params, alpha)
        cands = [RewardFunction.cutoff(b) for b in (0.2, 0.3, 0.5, 0.7)]
        cands += [RewardFunction.linear(), RewardFunction.step([0.2, 0.4], [3.0, 1.0, 0.0])]
        for R in cands:
            assert D.mf_performance(params, R, alpha) < best - 1e-9
        assert D.mf_performance(params, RewardFunction.cutoff(alpha), alpha) == pytest.approx(best)


def test_phi_examples():
    assert D.phi_log(2, 1, 1) == pytest.approx(math.log(2), abs=1e-15)
    assert D.phi_log(2, 1, 2) == pytest.approx(0.0, abs=1e-15)
    for n in (3, 10, 40):
        for k in range(1, n + 1):
            for l in range(1, n + 1):
                ref = math.log(phi(n, k, l))
                assert D.phi_log(n, k, l) == pytest.approx(ref, rel=1e-10, abs=1e-12)
    with pytest.raises(DomainError):
        D.phi_log(3, 0, 1)


def test_phi_exchange_identity():
    # phi(k,l) (n-l)! (l-1)! = phi(l,k) (n-k)! (k-1)!
    for n in (5, 12, 30):
        for k in range(1, n + 1):
            for l in range(1, n + 1):
                lhs = D.phi_log(n, k, l) + math.lgamma(n - l + 1) + math.lgamma(l)
                rhs = D.phi_log(n, l, k) + math.lgamma(n - k + 1) + math.lgamma(k)
                assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


def test_performance_closed_form():
    assert D.cutoff_rank_performance(2, 1, 1) == pytest.approx(4 / 3, rel=1e-14)
    assert D.cutoff_rank_performance(2, 1, 1, x0=2.5) == pytest.approx(10 / 3, rel=1e-14)
    for n, k, j in [(5, 2, 3), (9, 4, 6), (20, 10, 12), (20, 1, 1)]:
        assert D.cutoff_rank_performance(n, k, j) == pytest.approx(rank_performance(n, k, j), rel=1e-11)
    assert D.cutoff_rank_performance(6, 3, 6) == pytest.approx(1.0)


def test_performance_order_statistic_oracle():
    for n, k, j in [(2, 1, 1), (7, 3, 4), (30, 15, 17), (120, 60, 70)]:
        assert D.order_statistic_performance(n, k, j) == pytest.approx(D.cutoff_rank_performance(n, k, j),
                                                                        rel=1e-9)


@pytest.mark.parametrize("n,k,j", [(10, 5, 6), (50, 25, 28), (200, 100, 110)])
def test_performance_monte_carlo(n, k, j):
    mean, se = kth_largest_mc(n, k, j, rounds=4000, seed=n)
    assert abs(mean - D.cutoff_rank_performance(n, k, j)) <= 3 * se + 1e-3


def test_optimal_rank_brute_force():
    for n in range(2, 21):
        for k in range(1, n + 1):
            perf = [D.cutoff_rank_performance(n, k, j) for j in range(1, n + 1)]
            best = max(perf)
            arg = max(j for j, v in zip(range(1, n + 1), perf) if v >= best * (1 - 1e-12))
            ks = D.optimal_cutoff_rank(n, k)
            assert ks == arg
            assert ks >= k
            assert D.cutoff_rank_maximizers(n, k)[-1] == ks


def test_optimal_rank_large_n():
    assert D.optimal_cutoff_rank(1024, 512) / 1024 > 0.545
    assert D.optimal_cutoff_rank(1024, 512) == 560


def test_performance_tends_to_two():
    vals = [D.cutoff_rank_performance(n, n // 2, D.optimal_cutoff_rank(n, n // 2)) for n in (64, 256, 1024, 4096)]
    assert all(a < b < 2.0 for a, b in zip(vals, vals[1:]))


def test_design_unsupported_drift():
    with pytest.raises(UnsupportedError):
        D.optimal_cutoff_rank(10, 5, params=ModelParams(mu=0.1))
    with pytest.raises(UnsupportedError):
        D.nplayer_optimal_design(10, 5, ModelParams(mu=-0.1))


def test_nplayer_design_result():
    res = D.nplayer_optimal_design(16, 8)
    assert res.meta["k_star"] == 11
    assert list(res.reward.values[:11]) == [1 / 11] * 11 and res.reward.values[11] == 0
    assert res.performance == pytest.approx(D.cutoff_rank_performance(16, 8, 11))
    assert res.to_dict()["k_star"] == 11
