import numpy as np
import pytest

from mfcontest.distribution import Piece, StoppingDistribution
from mfcontest.errors import DistributionError
from mfcontest.scale import ModelParams


@pytest.fixture
def mixed():
    # atoms at 0 and 3, uniform mass 0.5 on [1, 2]
    return StoppingDistribution(atoms=[(0.0, 0.2), (3.0, 0.3)],
                                pieces=StoppingDistribution.uniform(1.0, 2.0, mass=0.5).pieces)


def test_cdf_left_right(mixed):
    assert mixed.cdf(0.0) == pytest.approx(0.2)
    assert mixed.cdf_left(0.0) == 0.0
    assert mixed.cdf(1.5) == pytest.approx(0.45)
    assert mixed.cdf_left(3.0) == pytest.approx(0.7)
    assert mixed.cdf(3.0) == pytest.approx(1.0)
    assert mixed.atom_mass(3.0) == pytest.approx(0.3)
    assert mixed.atom_mass(1.5) == 0.0


def test_quantiles(mixed):
    assert mixed.quantile(0.1) == 0.0
    assert mixed.quantile(0.2) == 0.0
    assert mixed.quantile_right(0.2) == pytest.approx(1.0)
    assert mixed.quantile(0.45) == pytest.approx(1.5)
    assert mixed.quantile(0.7) == pytest.approx(2.0)
    assert mixed.quantile_right(0.7) == pytest.approx(3.0)
    assert mixed.quantile(1.0) == 3.0
    assert mixed.quantile_right(1.0) == np.inf
    assert mixed.quantile(0.0) == 0.0


def test_support_and_gaps(mixed):
    assert mixed.support_min == 0.0 and mixed.support_max == 3.0
    assert mixed.support_gaps() == [(0.0, 1.0), (2.0, 3.0)]
    assert list(mixed.breakpoints()) == [0.0, 1.0, 2.0, 3.0]


def test_mass_in(mixed):
    assert mixed.mass_in(0.0, 0.0) == pytest.approx(0.2)
    assert mixed.mass_in(0.0, 3.0, lo_closed=False, hi_closed=False) == pytest.approx(0.5)
    assert mixed.mass_in(1.5, 10.0) == pytest.approx(0.55)


def test_sampling_matches_cdf(mixed):
    rng = np.random.default_rng(1)
    s = mixed.sample(rng, 200_000)
    assert np.mean(s == 0.0) == pytest.approx(0.2, abs=5e-3)
    assert np.mean(s == 3.0) == pytest.approx(0.3, abs=5e-3)
    assert np.mean(s <= 1.5) == pytest.approx(0.45, abs=5e-3)


def test_validation():
    with pytest.raises(DistributionError):
        StoppingDistribution.discrete([0.0, 1.0], [0.5, 0.4])
    with pytest.raises(DistributionError):
        StoppingDistribution.discrete([-1.0], [1.0])
    with pytest.raises(DistributionError):
        StoppingDistribution(atoms=[(1.5, 0.5)], pieces=StoppingDistribution.uniform(1.0, 2.0, 0.5).pieces)
    u = StoppingDistribution.uniform(0.0, 2.0, 0.5).pieces
    with pytest.raises(DistributionError):
        StoppingDistribution(pieces=list(u) + list(StoppingDistribution.uniform(1.0, 3.0, 0.5).pieces))


def test_grid_piece_integrates_h():
    p = ModelParams(mu=-0.4)
    x = np.linspace(0, 2, 4096)
    dist = StoppingDistribution.from_cdf_grid(x, x / 2)
    exact = StoppingDistribution.uniform(0.0, 2.0).integrate_h(p)
    assert dist.integrate_h(p) == pytest.approx(exact, rel=1e-10)


def test_tabulate_matches_closed_form():
    dist = StoppingDistribution.tabulate(lambda x: (x / 2) ** 2, 0.0, 2.0)
    x = np.linspace(0.1, 1.9, 19)
    assert np.allclose(dist.cdf(x), (x / 2) ** 2, atol=1e-6)


def test_reweighted(mixed):
    sub = mixed.reweighted([(0.5, 1.5, True, True, 0.0)], extra_atoms=[(0.7, 0.25)])
    assert sub.total_mass == pytest.approx(1.0)
    assert sub.cdf(1.5) == pytest.approx(0.2 + 0.25)
    assert sub.atom_mass(0.7) == pytest.approx(0.25)


def test_piece_integrate_exact_polynomial():
    u = StoppingDistribution.uniform(0.0, 1.0)
    assert u.integrate(lambda x: x ** 3) == pytest.approx(0.25, abs=1e-14)
