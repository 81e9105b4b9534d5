import math
import warnings

import numpy as np
import pytest

from conftest import random_reward
from mfcontest.distribution import StoppingDistribution
from mfcontest.errors import DomainError, DriftTooLargeError
from mfcontest.mfe import (best_response_value, concave_envelope, envelope_response, mf_equilibrium,
                           payoff_against_self, tie_payoff, verify_equilibrium)
from mfcontest.reward import RewardFunction
from mfcontest.scale import ModelParams, mu_bar_infinity
from oracles import brute_best_two_point


def test_cutoff_two_point(unit, cutoff):
    sol = mf_equilibrium(unit, cutoff)
    assert sol.cdf.atoms == [(0.0, 0.5), (2.0, 0.5)]
    assert sol.support_end == 2.0
    assert sol.u(1.0) == 1.0


def test_linear_uniform(unit, linear):
    sol = mf_equilibrium(unit, linear)
    x = np.linspace(0, 2, 21)
    assert np.allclose(sol.cdf.cdf(x), x / 2, atol=1e-15)
    assert not sol.cdf.atoms
    assert sol.cdf.quantile(0.3) == pytest.approx(0.6)


@pytest.mark.parametrize("seed", range(6))
def test_u_at_x0_is_mean(seed):
    rng = np.random.default_rng(seed)
    R = random_reward(rng)
    for mu in (-0.5, 0.0, 0.3 * mu_bar_infinity(ModelParams(), R)):
        p = ModelParams(mu=mu)
        sol = mf_equilibrium(p, R)
        assert sol.u(1.0) == pytest.approx(R.average_reward(), rel=1e-12)
        xs = np.linspace(0, 2 * sol.support_end, 200)
        assert np.all(np.diff(sol.u(xs)) >= -1e-15)
        base, scale = R.R1, R.average_reward() - R.R1
        assert sol.support_end == pytest.approx(p.h_inverse((R.R0 - base) / scale), rel=1e-13)


def test_drift_too_large(cutoff):
    with pytest.raises(DriftTooLargeError):
        mf_equilibrium(ModelParams(mu=0.35), cutoff)


def test_atom_flat_bijection_three_step(unit):
    R = RewardFunction.step([1 / 3, 2 / 3], [3.0, 1.0, 0.0])
    sol = mf_equilibrium(unit, R)
    assert len(sol.cdf.atoms) == len(R.flat_segments()) == 3
    xs = [x for x, _ in sol.cdf.atoms]
    assert xs == pytest.approx([0.0, 0.75, 2.25])
    assert [m for _, m in sol.cdf.atoms] == pytest.approx([1 / 3] * 3, abs=1e-15)


def test_tie_payoff(unit, cutoff):
    F = mf_equilibrium(unit, cutoff).cdf
    assert tie_payoff(F, cutoff, 2.0) == 2.0
    assert tie_payoff(F, cutoff, 0.0) == 0.0
    assert tie_payoff(F, cutoff, 1.0) == 0.0
    assert tie_payoff(F, cutoff, 2.5) == 2.0
    U = StoppingDistribution.uniform(0, 2)
    lin = RewardFunction.linear()
    assert tie_payoff(U, lin, 0.6) == pytest.approx(lin.g(0.3))
    # an atom spanning a flat piece of g pays that level
    R = RewardFunction.step([1 / 3, 2 / 3], [3.0, 1.0, 0.0])
    F3 = mf_equilibrium(unit, R).cdf
    assert tie_payoff(F3, R, 0.75) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        tie_payoff(F, cutoff, -1.0)


def test_concave_envelope_examples():
    env = concave_envelope([0, 1, 2], [0, 1, 2])
    assert list(env.w) == [0, 2] and env(1.0) == 1.0
    env = concave_envelope([0, 1, 2], [1, 0, 1])
    assert env(1.0) == 1.0
    w = np.linspace(0, 4, 41)
    v = np.where(w >= 2, 2.0, 0.0)
    assert concave_envelope(w, v)(1.0) == pytest.approx(1.0)
    assert concave_envelope([0, 1, 3], [5, 5, 5])(1.0) == 5.0
    with pytest.raises(DomainError):
        concave_envelope([1.0], [1.0])


def test_concave_envelope_brute_force():
    rng = np.random.default_rng(11)
    for _ in range(20):
        w = np.sort(rng.uniform(0, 3, 15))
        v = rng.normal(size=15)
        if not (w[0] <= 1 <= w[-1]):
            continue
        assert concave_envelope(w, v)(1.0) == pytest.approx(brute_best_two_point(w, v), abs=1e-12)


def test_best_response_examples(unit, cutoff, linear):
    F = mf_equilibrium(unit, cutoff).cdf
    br = best_response_value(unit, cutoff, F)
    assert br.value == pytest.approx(1.0, abs=1e-9)
    assert br.response.integrate_h(unit) == pytest.approx(1.0, abs=1e-12)
    bad = best_response_value(unit, linear, StoppingDistribution.dirac(1.0))
    assert bad.value > linear.average_reward() + 0.1
    x = np.linspace(0, 5, 100)
    const = envelope_response(unit, x, np.full_like(x, 0.7), coarse_tol=1.0)
    assert const.value == pytest.approx(0.7)


def test_coarse_grid_flagged(unit):
    x = np.array([0.0, 3.0])
    with pytest.warns(RuntimeWarning):
        res = envelope_response(unit, x, np.array([0.0, 1.0]))
    assert res.coarse


def test_verify_examples(unit, cutoff, linear):
    assert verify_equilibrium(unit, cutoff, StoppingDistribution.discrete([0, 2], [0.5, 0.5])).passed
    rep = verify_equilibrium(unit, cutoff, StoppingDistribution.dirac(1.0))
    assert not rep.passed and rep.best_response_gap > 0.05
    assert verify_equilibrium(unit, linear, StoppingDistribution.uniform(0, 2)).passed


def test_payoff_against_self_is_mean(unit):
    rng = np.random.default_rng(2)
    for _ in range(5):
        R = random_reward(rng)
        F = mf_equilibrium(unit, R).cdf
        assert payoff_against_self(F, R) == pytest.approx(R.average_reward(), rel=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_normalization_invariance(seed):
    rng = np.random.default_rng(100 + seed)
    R = random_reward(rng)
    p = ModelParams(mu=-0.2)
    F1 = mf_equilibrium(p, R).cdf
    F2 = mf_equilibrium(p, R.normalize()).cdf
    x = np.linspace(0, 1.2 * F1.support_max, 500)
    assert np.max(np.abs(F1.cdf(x) - F2.cdf(x))) <= 1e-12
