"""n-player contest: Bernstein payoff g_n, the unique equilibrium, exact and
Monte Carlo tie-aware payoffs, and the Nash gap of a common strategy."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .distribution import Piece, StoppingDistribution
from .errors import ConstantRewardError, DomainError, DriftTooLargeError, ExactModeCapError, RewardError
from .mfe import BestResponse, EquilibriumSolution, envelope_response, response_grid
from .reward import RewardFunction
from .scale import ModelParams, feasibility_residual, mu_bar_n

EXACT_MODE_CAP = 2000


@dataclass(frozen=True, eq=False)
class RewardVector:
    """Rewards R_1 >= ... >= R_n for ranks 1 (best) to n (worst)."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 1 or len(v) < 2:
            raise RewardError("need at least two players")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise RewardError("rewards must be finite and nonnegative")
        if np.any(np.diff(v) > 0):
            raise RewardError("reward vector must be decreasing")
        if not v[0] > v[-1]:
            raise ConstantRewardError("reward vector must be non-constant")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        prefix = np.concatenate([[0.0], np.cumsum(v)])
        prefix.setflags(write=False)
        object.__setattr__(self, "prefix", prefix)

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def Rbar(self) -> float:
        return float(self.prefix[-1] / self.n)

    @property
    def top(self) -> float:
        return float(self.values[0])

    @property
    def bottom(self) -> float:
        return float(self.values[-1])

    @classmethod
    def cutoff(cls, n: int, j: int) -> "RewardVector":
        """Normalized cutoff: 1/j to ranks 1..j, 0 below."""
        if not 1 <= j < n:
            raise DomainError("cutoff rank must satisfy 1 <= j < n")
        v = np.zeros(n)
        v[:j] = 1.0 / j
        return cls(v)

    def __eq__(self, other):
        return isinstance(other, RewardVector) and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash(self.values.tobytes())


def discretize_reward(R: RewardFunction, n: int) -> RewardVector:
    """R_k = R(k / n), k = 1..n."""
    if n < 2:
        raise DomainError("n must be at least 2")
    return RewardVector(R.R(np.arange(1, n + 1) / n))


def _as_array(y):
    arr = np.asarray(y, dtype=float)
    return np.ascontiguousarray(np.atleast_1d(arr)), arr.ndim == 0


def g_n(vector: RewardVector, y):
    """sum_k R_k C(n-1, k-1) y^(n-k) (1-y)^(k-1): expected reward when beating a y-fraction."""
    arr, scalar = _as_array(y)
    if np.any((arr < 0) | (arr > 1)) or np.any(np.isnan(arr)):
        raise DomainError("y must lie in [0, 1]")
    out = kernels.gn_eval(np.ascontiguousarray(vector.values), arr)
    return float(out[0]) if scalar else out


def g_n_prime(vector: RewardVector, y):
    arr, scalar = _as_array(y)
    out = kernels.gn_deriv(np.ascontiguousarray(vector.values), arr)
    return float(out[0]) if scalar else out


def g_n_inverse(vector: RewardVector, z, tol: float = 1e-12):
    arr, scalar = _as_array(z)
    if np.any((arr < vector.bottom) | (arr > vector.top)) or np.any(np.isnan(arr)):
        raise DomainError(f"z must lie in [R_n, R_1] = [{vector.bottom}, {vector.top}]")
    out = kernels.gn_inverse(np.ascontiguousarray(vector.values), arr, tol)
    return float(out[0]) if scalar else out


def g_n_integral(vector: RewardVector, y):
    """Antiderivative of g_n from 0: (1/n) sum_j P(Bin(n, 1-y) = j) (S_n - S_j)."""
    arr, scalar = _as_array(y)
    tails = np.ascontiguousarray(vector.prefix[-1] - vector.prefix)
    out = kernels.gn_eval(tails, arr) / vector.n
    return float(out[0]) if scalar else out


def _n_piece(params: ModelParams, vector: RewardVector) -> Piece:
    base, top = vector.bottom, vector.top
    scale = vector.Rbar - base
    top_w = (top - base) / scale

    def quantile(y):
        arr, scalar = _as_array(y)
        w = np.clip((g_n(vector, np.clip(arr, 0.0, 1.0)) - base) / scale, 0.0, top_w)
        x = params.h_inverse(w)
        return float(x[0]) if scalar else x

    def cdf(x):
        arr, scalar = _as_array(x)
        z = np.clip(base + scale * params.h(arr), base, top)
        y = g_n_inverse(vector, z)
        return float(y[0]) if scalar else y

    def h_moment(ta, tb):
        G = g_n_integral(vector, np.array([ta, tb]))
        return (G[1] - G[0] - base * (tb - ta)) / scale

    return Piece(quantile, cdf, 0.0, 1.0, h_moment=h_moment, params=params, label=f"n={vector.n}")


def n_equilibrium(params: ModelParams, vector: RewardVector) -> EquilibriumSolution:
    """F*_n = g_n^{-1}(u*_n), u*_n = [R_n + (Rbar_n - R_n) h] ^ R_1; atomless on [0, xbar_n]."""
    threshold = mu_bar_n(params, vector.values)
    if not params.mu < threshold:
        raise DriftTooLargeError(f"drift {params.mu} must be below {threshold}")
    base, top = vector.bottom, vector.top
    scale = vector.Rbar - base
    dist = StoppingDistribution(pieces=[_n_piece(params, vector)])
    x_end = params.h_inverse((top - base) / scale)

    def u(x):
        x_arr = np.asarray(x, dtype=float)
        out = np.minimum(base + scale * params.h(x_arr), top)
        return float(out) if x_arr.ndim == 0 else out

    return EquilibriumSolution(dist, u, float(x_end), params,
                               {"h_mean": dist.integrate_h(params),
                                "feasibility_residual": feasibility_residual(dist, params),
                                "mu_bar": threshold, "n": vector.n})


def xi_n_exact(vector: RewardVector, F: StoppingDistribution, x, cap: int = EXACT_MODE_CAP):
    """Expected reward of one player stopping at x against n-1 opponents using F."""
    if vector.n > cap:
        raise ExactModeCapError(f"n = {vector.n} exceeds the exact-mode cap {cap}; use xi_n_mc")
    arr, scalar = _as_array(x)
    if np.any(arr < 0):
        raise DomainError("x must be nonnegative")
    hi = np.clip(F.cdf(arr), 0.0, 1.0)
    lo = np.clip(F.cdf_left(arr), 0.0, 1.0)
    out = np.empty(arr.shape)
    tie = hi > lo
    if np.any(~tie):
        out[~tie] = g_n(vector, hi[~tie])
    S = np.ascontiguousarray(vector.prefix)
    for i in np.nonzero(tie)[0]:
        out[i] = kernels.xi_trinomial(S, float(1.0 - hi[i]), float(lo[i]), float(hi[i] - lo[i]))
    return float(out[0]) if scalar else out


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    ci95: float
    stderr: float
    rounds: int

    def to_dict(self) -> dict:
        return {"mean": self.mean, "ci95": self.ci95, "stderr": self.stderr, "rounds": self.rounds}


def mc_summary(samples: np.ndarray) -> MCEstimate:
    samples = np.asarray(samples, dtype=float)
    m = len(samples)
    se = float(samples.std(ddof=1) / np.sqrt(m)) if m > 1 else float("inf")
    return MCEstimate(float(samples.mean()), 1.96 * se, se, m)


def xi_n_mc(vector: RewardVector, F: StoppingDistribution, x: float, rounds: int,
            seed: Optional[int] = None, chunk: int = 1 << 22) -> MCEstimate:
    """Monte Carlo over the empirical cdf of n-1 uniforms (counts above, below and tied)."""
    if rounds < 1:
        raise DomainError("rounds must be positive")
    n = vector.n
    y_hi = float(np.clip(F.cdf(x), 0.0, 1.0))
    y_lo = float(np.clip(F.cdf_left(x), 0.0, 1.0))
    rng = np.random.default_rng(seed)
    S = vector.prefix
    per = max(1, chunk // (n - 1))
    out = np.empty(rounds)
    for s in range(0, rounds, per):
        m = min(per, rounds - s)
        u = rng.random((m, n - 1))
        above = np.count_nonzero(u > y_hi, axis=1)
        below = np.count_nonzero(u <= y_lo, axis=1)
        tied = n - 1 - above - below
        out[s:s + m] = (S[n - below] - S[above]) / (tied + 1.0)
    return mc_summary(out)


def incumbent_payoff(vector: RewardVector, F: StoppingDistribution) -> float:
    """Exact integral of xi_n^F against F (R-bar_n by symmetry)."""
    total = 0.0
    for x, m in F.atoms:
        total += m * xi_n_exact(vector, F, x)
    for p in F.pieces:
        ya = float(np.clip(F.cdf(p.x_lo), 0.0, 1.0))
        yb = min(1.0, ya + p.mass)
        G = g_n_integral(vector, np.array([ya, yb]))
        total += float(G[1] - G[0])
    return total


@dataclass(frozen=True)
class NashGapReport:
    gap: float
    raw_gap: float
    best_value: float
    incumbent: float
    best_response: BestResponse
    n: int

    def to_dict(self) -> dict:
        return {"n": self.n, "gap": self.gap, "raw_gap": self.raw_gap,
                "best_value": self.best_value, "incumbent": self.incumbent,
                "response_atoms": self.best_response.response.atoms}


def nash_gap(params: ModelParams, vector: RewardVector, F: StoppingDistribution,
             grid: Optional[Sequence[float]] = None, n_grid: int = 10_000,
             jump_levels: Sequence[float] = ()) -> NashGapReport:
    """Largest gain of a unilateral feasible deviation when the other n-1 players use F."""
    x = response_grid(params, F, n_grid=n_grid, extra=grid, jump_levels=jump_levels)
    for lo, hi in F.support_gaps():
        x = np.union1d(x, [np.nextafter(lo, np.inf), np.nextafter(hi, 0.0), 0.5 * (lo + hi)])
    payoff = xi_n_exact(vector, F, x)
    br = envelope_response(params, x, payoff)
    inc = incumbent_payoff(vector, F)
    raw = br.value - inc
    return NashGapReport(max(0.0, raw), raw, br.value, inc, br, vector.n)
