import numpy as np
import pytest

from mfcontest.distribution import StoppingDistribution
from mfcontest.errors import DeviationError, InfeasibleError
from mfcontest.mfe import mf_equilibrium
from mfcontest.nplayer import RewardVector, discretize_reward, n_equilibrium, xi_n_exact
from mfcontest.reward import RewardFunction
from mfcontest.scale import ModelParams
from mfcontest.simulate import (deviation_gain, embed_target, estimate_payoff, expected_payoff,
                                jump_deviation, kolmogorov_distance, play_round)


def test_round_invariants(unit):
    v = RewardVector([5.0, 3.0, 3.0, 1.0, 0.0, 0.0])
    F = StoppingDistribution.discrete([0.0, 1.0, 2.0], [0.3, 0.4, 0.3])
    for seed in range(30):
        out = play_round(unit, v, F, seed=seed)
        assert out.payoffs.sum() == pytest.approx(v.values.sum())
        assert sorted(out.ranks) == list(range(1, 7))
        for g in out.tie_groups:
            ranks = sorted(out.ranks[g])
            assert np.allclose(out.payoffs[g], v.values[np.array(ranks) - 1].mean())
        assert np.all(out.stop_values[np.argsort(out.ranks)][:-1] >= out.stop_values[np.argsort(out.ranks)][1:])


def test_round_examples(unit):
    v = RewardVector([2.0, 0.0])
    F = StoppingDistribution.discrete([0.0, 2.0], [0.5, 0.5])
    pays = np.array([play_round(unit, v, F, seed=s).payoffs for s in range(4000)])
    assert pays.mean(axis=0) == pytest.approx([1.0, 1.0], abs=0.06)
    w = RewardVector([4.0, 1.0, 0.0])
    full = play_round(unit, w, StoppingDistribution.dirac(1.0), seed=0)
    assert np.allclose(full.payoffs, w.Rbar)
    top = play_round(unit, w, [StoppingDistribution.dirac(5.0)] + [F, F], seed=3)
    assert top.payoffs[0] == 4.0 and top.ranks[0] == 1


def test_round_deterministic(unit):
    v = RewardVector([3.0, 2.0, 1.0, 0.0])
    F = StoppingDistribution.discrete([0.0, 1.0], [0.5, 0.5])
    a, b = play_round(unit, v, F, seed=42), play_round(unit, v, F, seed=42)
    assert np.array_equal(a.ranks, b.ranks) and np.array_equal(a.payoffs, b.payoffs)


def test_tie_splitting_equivalence(unit):
    v = RewardVector([6.0, 3.0, 2.0, 1.0, 0.0])
    F = StoppingDistribution.dirac(1.0)
    draws = np.array([play_round(unit, v, F, seed=s, split="random").payoffs[0] for s in range(20_000)])
    se = draws.std(ddof=1) / np.sqrt(len(draws))
    assert abs(draws.mean() - v.Rbar) <= 3 * se


def test_estimate_payoff_examples(unit, cutoff):
    v = discretize_reward(cutoff, 20)
    F = n_equilibrium(unit, v).cdf
    est = estimate_payoff(unit, v, F, F, 50_000, seed=1)
    assert abs(est.mean - v.Rbar) <= 3 * est.stderr
    Fmf = mf_equilibrium(unit, cutoff).cdf
    zero = estimate_payoff(unit, v, StoppingDistribution.dirac(0.0), Fmf, 20_000, seed=2)
    assert abs(zero.mean - xi_n_exact(v, Fmf, 0.0)) <= 3 * zero.stderr + 1e-12


def test_estimate_payoff_parallel_identical(unit, cutoff):
    v = discretize_reward(cutoff, 30)
    F = mf_equilibrium(unit, cutoff).cdf
    G = StoppingDistribution.discrete([0.2, 2.0], [0.6, 0.4])
    a = estimate_payoff(unit, v, G, F, 100_000, seed=5, workers=1)
    b = estimate_payoff(unit, v, G, F, 100_000, seed=5, workers=4)
    assert a == b


def test_expected_payoff_splits_pieces(unit):
    v = RewardVector(np.linspace(2, 0, 12))
    inc = StoppingDistribution(atoms=[(1.0, 0.5)], pieces=StoppingDistribution.uniform(0.0, 0.8, 0.5).pieces)
    cand = StoppingDistribution.uniform(0.0, 2.0)
    est = estimate_payoff(unit, v, cand, inc, 200_000, seed=3)
    assert abs(est.mean - expected_payoff(v, cand, inc)) <= 3 * est.stderr


def test_jump_deviation_cutoff(unit, cutoff):
    plan = jump_deviation(unit, cutoff)
    assert plan.a == 0.0 and plan.b == 2.0 and plan.a_prime == pytest.approx(0.2)
    assert plan.lam == pytest.approx(1 / 9, rel=1e-14)
    assert plan.C_f == pytest.approx(4 / 9, rel=1e-14)
    assert plan.feasibility_residual <= 1e-10
    assert plan.deviated.atoms == [(pytest.approx(0.2), pytest.approx(5 / 9)), (2.0, pytest.approx(4 / 9))]


def test_jump_deviation_errors(unit, cutoff, linear):
    with pytest.raises(DeviationError, match="no jump"):
        jump_deviation(unit, linear)
    with pytest.raises(DeviationError):
        jump_deviation(unit, cutoff, y0=0.3)
    with pytest.raises(DeviationError):
        jump_deviation(unit, cutoff, a_prime=2.5)
    with pytest.raises(DeviationError):
        jump_deviation(unit, cutoff, a_prime=1.9)  # C_f <= 0


def test_jump_deviation_pieces(unit):
    # jump between two affine pieces: the gap is bordered by continuous mass
    R = RewardFunction.piecewise_linear([(0, 3.0), (0.5, 2.0), (0.5, 1.0), (1, 0.0)])
    p = ModelParams(mu=-0.2)
    plan = jump_deviation(p, R)
    assert plan.a < plan.a_prime < plan.b
    assert 0 < plan.lam < 1 and plan.C_f > 0
    assert plan.feasibility_residual <= 1e-10


def test_deviation_gain_positive(unit, cutoff):
    plan = jump_deviation(unit, cutoff)
    for n in (64, 256):
        g = deviation_gain(unit, cutoff, plan, n, rounds=50_000, seed=n)
        assert g.gain - 2.576 / 1.96 * g.ci95 > 0
        assert abs(g.gain - g.exact_gain) <= 1.5 * g.ci95


def test_embed_identity(unit):
    res = embed_target(unit, StoppingDistribution.dirac(1.0), seed=0, paths=10)
    assert np.all(res.values == 1.0) and np.all(res.times == 0.0)


def test_embed_two_point(unit):
    T = StoppingDistribution.discrete([0.0, 2.0], [0.5, 0.5])
    res = embed_target(unit, T, seed=1, paths=4000, dt=1e-3)
    assert res.unfinished == 0
    p_up = np.mean(res.values == 2.0)
    assert abs(p_up - 0.5) <= 3 * np.sqrt(0.25 / 4000)


def test_embed_three_point_and_subunit(unit):
    T = StoppingDistribution.discrete([0.0, 1.0, 3.0], [0.5, 0.25, 0.25])
    res = embed_target(unit, T, seed=2, paths=4000, dt=1e-3)
    m = res.empirical_masses([0.0, 1.0, 3.0])
    se = np.sqrt(np.array([0.25, 0.1875, 0.1875]) / 4000)
    assert np.all(np.abs(m - [0.5, 0.25, 0.25]) <= 3 * se)
    # h-mean below one under negative drift: first passage down, then split
    pn = ModelParams(mu=-0.5)
    U = StoppingDistribution.discrete([0.0, 1.0], [0.5, 0.5])
    res = embed_target(pn, U, seed=3, paths=4000, dt=1e-3)
    assert kolmogorov_distance(res.values, U) <= 3 * np.sqrt(0.25 / 4000)


def test_embed_infeasible(unit):
    with pytest.raises(InfeasibleError):
        embed_target(ModelParams(mu=0.2), StoppingDistribution.discrete([0.0, 2.0], [0.5, 0.5]), paths=5)
    with pytest.raises(InfeasibleError):
        embed_target(unit, StoppingDistribution.dirac(1.5), paths=5)
