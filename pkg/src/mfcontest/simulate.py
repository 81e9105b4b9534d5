"""Sampled contest rounds, Monte Carlo payoff estimates, path-level embedding of
stopping laws and the knife-edge deviation against the mean field strategy."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from . import kernels
from .distribution import StoppingDistribution
from .errors import DeviationError, DomainError, InfeasibleError
from .mfe import mf_equilibrium
from .nplayer import MCEstimate, RewardVector, mc_summary, xi_n_exact
from .reward import RewardFunction
from .scale import ModelParams, is_feasible

CHUNK_ROUNDS = 1 << 15


@dataclass(frozen=True)
class RoundOutcome:
    stop_values: np.ndarray
    ranks: np.ndarray
    payoffs: np.ndarray
    tie_groups: list


def play_round(params: ModelParams, vector: RewardVector,
               strategies: Union[StoppingDistribution, Sequence[StoppingDistribution]],
               seed=None, split: str = "average") -> RoundOutcome:
    """Sample one round: stop values, ranks (ties ordered by a random permutation) and payoffs.

    With ``split="average"`` tied players share their ranks' mean reward; with
    ``split="random"`` each receives the reward of its drawn rank.
    """
    n = vector.n
    if isinstance(strategies, StoppingDistribution):
        strategies = [strategies] * n
    if len(strategies) != n:
        raise DomainError(f"expected {n} strategies, got {len(strategies)}")
    if split not in ("average", "random"):
        raise DomainError("split must be 'average' or 'random'")
    rng = np.random.default_rng(seed)
    y = np.array([float(s.sample(rng)) for s in strategies])
    # descending by value, random order inside ties
    order = np.lexsort((rng.permutation(n), -y))
    ranks = np.empty(n, dtype=int)
    ranks[order] = np.arange(1, n + 1)
    S = vector.prefix
    payoffs = np.empty(n)
    groups = []
    start = 0
    while start < n:
        stop = start + 1
        while stop < n and y[order[stop]] == y[order[start]]:
            stop += 1
        members = order[start:stop]
        if split == "average":
            payoffs[members] = (S[stop] - S[start]) / (stop - start)
        else:
            payoffs[members] = vector.values[start:stop]
        if stop - start > 1:
            groups.append(sorted(int(i) for i in members))
        start = stop
    return RoundOutcome(y, ranks, payoffs, groups)


def _payoff_chunk(vector: RewardVector, candidate: StoppingDistribution,
                  incumbent: StoppingDistribution, rounds: int, seq: np.random.SeedSequence):
    rng = np.random.default_rng(seq)
    n = vector.n
    x = np.atleast_1d(candidate.sample(rng, rounds))
    hi = np.clip(incumbent.cdf(x), 0.0, 1.0)
    lo = np.clip(incumbent.cdf_left(x), 0.0, 1.0)
    pvals = np.stack([1.0 - hi, lo, hi - lo], axis=1)
    pvals = np.clip(pvals, 0.0, None)
    pvals /= pvals.sum(axis=1, keepdims=True)
    counts = rng.multinomial(n - 1, pvals)
    above, below, tied = counts[:, 0], counts[:, 1], counts[:, 2]
    S = vector.prefix
    return (S[n - below] - S[above]) / (tied + 1.0)


def estimate_payoff(params: ModelParams, vector: RewardVector, candidate: StoppingDistribution,
                    incumbent: StoppingDistribution, rounds: int, seed=None,
                    workers: Optional[int] = None) -> MCEstimate:
    """Monte Carlo payoff of one player using ``candidate`` against n-1 ``incumbent`` players.

    Rounds are split into fixed-size chunks with spawned seed streams, so the
    result does not depend on ``workers``.  Only the counts of opponents above,
    below and level with the player's stop matter, so they are drawn as one
    multinomial per round.
    """
    if rounds < 1:
        raise DomainError("rounds must be positive")
    sizes = [CHUNK_ROUNDS] * (rounds // CHUNK_ROUNDS)
    if rounds % CHUNK_ROUNDS:
        sizes.append(rounds % CHUNK_ROUNDS)
    seqs = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = list(zip(sizes, seqs))
    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda a: _payoff_chunk(vector, candidate, incumbent, *a), jobs))
    else:
        parts = [_payoff_chunk(vector, candidate, incumbent, *a) for a in jobs]
    return mc_summary(np.concatenate(parts))


def expected_payoff(vector: RewardVector, candidate: StoppingDistribution,
                    incumbent: StoppingDistribution, panels: int = 64) -> float:
    """Exact-mode integral of xi_n^incumbent against the candidate law.

    Candidate pieces are split at the incumbent's breakpoints so that the
    quadrature never straddles a jump of the payoff.
    """
    total = 0.0
    for x, m in candidate.atoms:
        total += m * xi_n_exact(vector, incumbent, x)
    marks = incumbent.breakpoints()

    def fn(x):
        return xi_n_exact(vector, incumbent, x)

    for p in candidate.pieces:
        edges = [p.x_lo] + [c for c in marks if p.x_lo < c < p.x_hi] + [p.x_hi]
        for a, b in zip(edges, edges[1:]):
            sub = p.restrict(a, b)
            if sub is not None:
                total += sub.integrate(fn, panels=panels)
    return total


# -- path-level embedding ----------------------------------------------------

@dataclass(frozen=True)
class EmbeddingResult:
    values: np.ndarray
    times: np.ndarray
    unfinished: int

    def empirical_masses(self, support: Sequence[float]) -> np.ndarray:
        done = self.values[np.isfinite(self.values)]
        return np.array([np.mean(np.isclose(done, s, rtol=0, atol=1e-12)) for s in support])


def _first_passage_down(rng, d, mu, sigma, size):
    """Exact hitting time of level x - d by x + mu t + sigma W when mu <= 0."""
    if mu < 0:
        return rng.wald(d / -mu, (d / sigma) ** 2, size)
    z = rng.standard_normal(size)
    return (d / sigma) ** 2 / (z * z)


def embed_target(params: ModelParams, target: StoppingDistribution, seed=None, dt: float = 1e-4,
                 paths: int = 1, max_steps: int = 10 ** 8, tol: float = 1e-9) -> EmbeddingResult:
    """Stop simulated paths of the absorbed drifted Brownian motion so their law is ``target``.

    h(X) is a martingale until absorption.  The support (in h-space) is split
    recursively into two groups and the path runs until it hits one group's
    barycenter, which happens with probability proportional to that group's
    mass.  If the h-mean is below 1 (only feasible for mu <= 0) the path is
    first run down to it, using the exact first-passage law.
    """
    if target.pieces:
        raise DomainError("embedding needs a finite-support target")
    status = is_feasible(target, params, tol)
    if not status.feasible:
        raise InfeasibleError(f"target is not feasible ({status.value})")
    xs = np.array([x for x, _ in target.atoms])
    ms = np.array([m for _, m in target.atoms])
    w = params.h(xs)
    cum_m = np.concatenate([[0.0], np.cumsum(ms)])
    cum_mw = np.concatenate([[0.0], np.cumsum(ms * w)])

    def level(i, j):  # x-level of the barycenter of atoms i..j-1
        bary = (cum_mw[j] - cum_mw[i]) / (cum_m[j] - cum_m[i])
        if j - i == 1:
            return xs[i]
        return float(params.h_inverse(bary))

    rng = np.random.default_rng(seed)
    bitgen = rng.bit_generator
    x = np.full(paths, float(params.x0))
    t = np.zeros(paths)
    lo_idx = np.zeros(paths, dtype=int)
    hi_idx = np.full(paths, len(xs))
    root = level(0, len(xs))
    if root < params.x0 * (1 - 1e-12):
        t += _first_passage_down(rng, params.x0 - root, params.mu, params.sigma, paths)
        x[:] = root
    alive = np.ones(paths, dtype=bool)
    unfinished = 0
    while True:
        open_ = alive & (hi_idx - lo_idx > 1)
        if not np.any(open_):
            break
        idx = np.nonzero(open_)[0]
        mid = (lo_idx[idx] + hi_idx[idx]) // 2
        lower = np.array([level(i, m) for i, m in zip(lo_idx[idx], mid)])
        upper = np.array([level(m, j) for m, j in zip(mid, hi_idx[idx])])
        hit, tau, left = kernels.exit_two_boundary(
            np.ascontiguousarray(x[idx]), lower, upper, params.mu, params.sigma, dt, bitgen, max_steps)
        t[idx] += tau
        up = hit == 1
        down = hit == 0
        lo_idx[idx[up]] = mid[up]
        hi_idx[idx[down]] = mid[down]
        x[idx[up]] = upper[up]
        x[idx[down]] = lower[down]
        stuck = idx[hit < 0]
        alive[stuck] = False
        unfinished += int(left)
    values = np.where(alive, xs[np.minimum(lo_idx, len(xs) - 1)], np.nan)
    return EmbeddingResult(values, np.where(alive, t, np.nan), unfinished)


def kolmogorov_distance(values: np.ndarray, target: StoppingDistribution) -> float:
    """sup |F_emp - F| for a finite-support target, checked at both sides of every atom."""
    v = np.sort(values[np.isfinite(values)])
    pts = np.array([x for x, _ in target.atoms])
    emp_r = np.searchsorted(v, pts, side="right") / len(v)
    emp_l = np.searchsorted(v, pts, side="left") / len(v)
    return float(max(np.max(np.abs(emp_r - target.cdf(pts))),
                     np.max(np.abs(emp_l - target.cdf_left(pts)))))


# -- knife-edge deviation ------------------------------------------------------

@dataclass(frozen=True)
class DeviationPlan:
    y0: float
    a: float
    b: float
    a_prime: float
    eta: float
    lam: float
    C_f: float
    mass_low: float
    mass_high: float
    deviated: StoppingDistribution
    incumbent: StoppingDistribution
    feasibility_residual: float
    n: Optional[int] = None

    def to_dict(self) -> dict:
        return {"y0": self.y0, "a": self.a, "b": self.b, "a_prime": self.a_prime, "eta": self.eta,
                "lambda": self.lam, "C_f": self.C_f, "mass_low": self.mass_low,
                "mass_high": self.mass_high, "feasibility_residual": self.feasibility_residual,
                "n": self.n}


def _part(F: StoppingDistribution, lo: float, hi: float, lo_closed: bool, hi_closed: bool):
    """Restriction of F to one interval, as a sub-probability measure."""
    keep_out = [(-1.0, lo, True, not lo_closed, 0.0)]
    if math.isfinite(hi):
        keep_out.append((hi, math.inf, not hi_closed, False, 0.0))
    return F.reweighted(keep_out, check_mass=False)


def _default_eta(F: StoppingDistribution, a: float, a_prime: float) -> float:
    for p in F.pieces:
        if p.x_lo < a and abs(p.x_hi - a) <= 1e-12 * max(1.0, a):
            return 0.5 * (p.x_hi - p.x_lo)
    lower = [x for x, _ in F.atoms if x < a] + [p.x_hi for p in F.pieces if p.x_hi < a]
    if lower:
        return 0.5 * (a - max(lower))
    return a if a > 0 else a_prime - a


def jump_deviation(params: ModelParams, R: RewardFunction, n: Optional[int] = None,
                   y0: Optional[float] = None, a_prime: Optional[float] = None,
                   eta: Optional[float] = None) -> DeviationPlan:
    """Move mass from just below the gap (a, b) of the mean field equilibrium, and a
    fraction lambda of the mass above it, to a' inside the gap; lambda keeps the
    h-mean unchanged.  C_f is the resulting lower bound on the limiting gain."""
    jumps = R.jump_set()
    if not jumps:
        raise DeviationError("no jump: the reward is continuous")
    if y0 is None:
        if len(jumps) > 1:
            raise DeviationError(f"several jumps {jumps}; choose y0")
        y0 = jumps[0]
    if not any(abs(y0 - j) <= 1e-12 for j in jumps):
        raise DeviationError(f"y0 = {y0} is not a jump point of g")
    F = mf_equilibrium(params, R).cdf
    base, scale = R.R1, R.average_reward() - R.R1
    g_lo, g_hi = float(R.g(y0)), float(R.g_right(y0))
    a = float(params.h_inverse((g_lo - base) / scale))
    b = float(params.h_inverse((g_hi - base) / scale))
    if a_prime is None:
        a_prime = a + 0.1 * (b - a)
    if not a < a_prime < b:
        raise DeviationError(f"a' = {a_prime} must lie strictly inside ({a}, {b})")
    if eta is None:
        eta = _default_eta(F, a, a_prime)
    if not eta > 0:
        raise DeviationError("eta must be positive")
    low = _part(F, a - eta, a, False, True)
    high = _part(F, b, math.inf, True, False)
    m_low, m_high = low.total_mass, high.total_mass
    w_prime = float(params.h(a_prime))
    give = w_prime * m_low - low.integrate_h(params)
    take = high.integrate_h(params) - w_prime * m_high
    if not (give > 0 and take > 0):
        raise DeviationError("degenerate deviation: no mass on one side of the gap")
    lam = give / take
    if not 0 < lam <= 1:
        raise DeviationError(f"lambda = {lam} outside (0, 1]; move a' closer to a or shrink eta")
    C_f = 0.5 * (g_hi - g_lo) * m_low - lam * (R.R0 - 0.5 * (g_lo + g_hi)) * m_high
    if not C_f > 0:
        raise DeviationError(f"C_f = {C_f} <= 0; choose a' - a and eta smaller")
    moved = m_low + lam * m_high
    deviated = F.reweighted([(a - eta, a, False, True, 0.0), (b, math.inf, True, False, 1.0 - lam)],
                            extra_atoms=[(a_prime, moved)])
    resid = abs(deviated.integrate_h(params) - F.integrate_h(params))
    return DeviationPlan(float(y0), a, b, float(a_prime), float(eta), float(lam), float(C_f),
                         m_low, m_high, deviated, F, resid, n)


@dataclass(frozen=True)
class GainEstimate:
    n: int
    gain: float
    ci95: float
    C_f: float
    exact_gain: Optional[float]
    estimate: MCEstimate

    def to_dict(self) -> dict:
        return {"n": self.n, "gain": self.gain, "ci95": self.ci95, "C_f": self.C_f,
                "exact_gain": self.exact_gain, "rounds": self.estimate.rounds}


def deviation_gain(params: ModelParams, R: RewardFunction, plan: DeviationPlan, n: int,
                   rounds: int = 100_000, seed=None, workers: Optional[int] = None,
                   exact: bool = True) -> GainEstimate:
    """Estimated gain of the deviated law over the incumbent in the n-player game with R_k = R(k/n).

    The incumbent's own payoff is R-bar_n exactly (all players symmetric).
    """
    from .nplayer import discretize_reward
    vector = discretize_reward(R, n)
    est = estimate_payoff(params, vector, plan.deviated, plan.incumbent, rounds, seed, workers)
    exact_gain = None
    if exact and n <= 2000:
        exact_gain = expected_payoff(vector, plan.deviated, plan.incumbent) - vector.Rbar
    return GainEstimate(n, est.mean - vector.Rbar, est.ci95, plan.C_f, exact_gain, est)
