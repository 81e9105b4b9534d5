import numpy as np
import pytest

from mfcontest.reward import RewardFunction
from mfcontest.scale import ModelParams


@pytest.fixture
def unit():
    return ModelParams(x0=1.0, mu=0.0, sigma=1.0)


@pytest.fixture
def cutoff():
    return RewardFunction.cutoff(0.5)


@pytest.fixture
def linear():
    return RewardFunction.linear()


def random_reward(rng, kind=None):
    """A random valid step, piecewise-linear or mixed reward."""
    kind = kind or rng.choice(["step", "pwl", "mixed"])
    m = int(rng.integers(1, 5))
    cuts = np.sort(rng.uniform(0.05, 0.95, m))
    cuts = np.unique(np.round(cuts, 3))
    if kind == "step":
        vals = np.sort(rng.uniform(0, 3, len(cuts) + 1))[::-1]
        vals[0] += 0.5
        return RewardFunction.step(cuts.tolist(), vals.tolist())
    r = np.concatenate([[0.0], cuts, [1.0]])
    vals = np.sort(rng.uniform(0, 3, len(r)))[::-1]
    vals[0] += 0.5
    knots = [(float(a), float(b)) for a, b in zip(r, vals)]
    if kind == "mixed":
        i = int(rng.integers(1, len(knots) - 1))
        drop = float(rng.uniform(0, knots[i][1] - knots[i + 1][1]))
        knots.insert(i + 1, (knots[i][0], knots[i][1] - drop))
    return RewardFunction.piecewise_linear(knots)
