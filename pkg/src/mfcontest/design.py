"""Reward design: the mean field optimal cutoff, the planner benchmark and the
optimal n-player cutoff rank for zero drift."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy.special import gammaln, logsumexp

from .distribution import StoppingDistribution
from .errors import DomainError, DriftTooLargeError, UnsupportedError
from .mfe import mf_equilibrium
from .nplayer import RewardVector
from .reward import RewardFunction
from .scale import ModelParams

# relative slack when comparing log phi against the log of an average
_LOG_TIE = 1e-12


@dataclass(frozen=True)
class DesignResult:
    reward: Union[RewardFunction, RewardVector]
    target: float
    performance: float
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        reward = self.reward.to_dict() if isinstance(self.reward, RewardFunction) \
            else {"kind": "vector", "values": self.reward.values.tolist()}
        return {"reward": reward, "target": self.target, "performance": self.performance,
                **{k: v for k, v in self.meta.items() if isinstance(v, (int, float, str, list, bool))}}


def _check_alpha(params: ModelParams, alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise DomainError("alpha must lie in (0, 1)")
    if params.mu > 0:
        limit = params.sigma ** 2 / (2.0 * params.x0) * math.log(1.0 / (1.0 - alpha))
        if not params.mu < limit:
            raise DriftTooLargeError(f"drift {params.mu} must be below {limit} for alpha = {alpha}")


def target_level(params: ModelParams, alpha: float) -> float:
    """x*_alpha = h^{-1}(1/alpha)."""
    _check_alpha(params, alpha)
    return float(params.h_inverse(1.0 / alpha))


def planner_optimum(params: ModelParams, alpha: float) -> StoppingDistribution:
    """Feasible law maximizing the right quantile at 1 - alpha: (1-alpha) delta_0 + alpha delta_{x*}."""
    x_star = target_level(params, alpha)
    return StoppingDistribution.discrete([0.0, x_star], [1.0 - alpha, alpha])


def mf_performance(params: ModelParams, R: RewardFunction, alpha: float) -> float:
    """F*^{-1}_+(1 - alpha) for the equilibrium induced by R."""
    F = mf_equilibrium(params, R).cdf
    return float(F.quantile_right(1.0 - alpha))


def mf_optimal_reward(params: ModelParams, alpha: float) -> DesignResult:
    """The normalized cutoff (1/alpha) 1_[0, alpha) and its performance h^{-1}(1/alpha)."""
    x_star = target_level(params, alpha)
    R = RewardFunction.cutoff(alpha)
    eq = mf_equilibrium(params, R)
    return DesignResult(R, alpha, x_star, {"cutoff": alpha, "equilibrium": eq,
                                           "planner": planner_optimum(params, alpha)})


def _zero_drift(params: Optional[ModelParams]) -> float:
    if params is None:
        return 1.0
    if params.mu != 0:
        raise UnsupportedError("n-player design is only characterized for zero drift")
    return params.x0


def _check_nk(n: int, k: int) -> None:
    if n < 2 or not 1 <= k <= n:
        raise DomainError("need n >= 2 and 1 <= k <= n")


def phi_log(n: int, k, l):
    """log of (2n-k-l)! (k+l-2)! / ((n-l)! (l-1)!)."""
    k_arr = np.asarray(k, dtype=float)
    l_arr = np.asarray(l, dtype=float)
    if np.any((k_arr < 1) | (k_arr > n) | (l_arr < 1) | (l_arr > n)):
        raise DomainError("need 1 <= k, l <= n")
    out = (gammaln(2 * n - k_arr - l_arr + 1) + gammaln(k_arr + l_arr - 1)
           - gammaln(n - l_arr + 1) - gammaln(l_arr))
    return float(out) if out.ndim == 0 else out


def _phi_row(n: int, k: int) -> np.ndarray:
    return phi_log(n, k, np.arange(1, n + 1))


def _log_prefix(n: int, k: int) -> float:
    return (math.log(n) + gammaln(n + 1) - gammaln(2 * n) + gammaln(n) - gammaln(k) - gammaln(n - k + 1))


def log_performance_curve(n: int, k: int, x0: float = 1.0) -> np.ndarray:
    """log of the k-th rank performance under the cutoff at j, for j = 1..n."""
    _check_nk(n, k)
    row = _phi_row(n, k)
    cum = np.logaddexp.accumulate(row)
    j = np.arange(1, n + 1)
    return math.log(x0) + _log_prefix(n, k) + cum - np.log(j)


def cutoff_rank_performance(n: int, k: int, j: int, x0: float = 1.0,
                            params: Optional[ModelParams] = None) -> float:
    """Expected k-th largest stopping level when ranks 1..j share the prize (zero drift).

    j = n is the constant reward, under which everyone stops at x0.
    """
    if params is not None:
        x0 = _zero_drift(params)
    _check_nk(n, k)
    if not 1 <= j <= n:
        raise DomainError("cutoff rank must satisfy 1 <= j <= n")
    row = phi_log(n, k, np.arange(1, j + 1))
    return float(x0 * math.exp(_log_prefix(n, k) + logsumexp(row) - math.log(j)))


def performance_curve(n: int, k: int, x0: float = 1.0) -> np.ndarray:
    return np.exp(log_performance_curve(n, k, x0))


def optimal_cutoff_rank(n: int, k: int, params: Optional[ModelParams] = None) -> int:
    """k*_n = max{j >= k : phi(k, j) >= mean of phi(k, 1..j-1)}; the empty mean counts as -inf."""
    _zero_drift(params)
    _check_nk(n, k)
    row = _phi_row(n, k)
    cum = np.logaddexp.accumulate(row)
    j = np.arange(1, n + 1)
    mean_prev = np.full(n, -np.inf)
    mean_prev[1:] = cum[:-1] - np.log(j[1:] - 1)
    ok = row >= mean_prev - _LOG_TIE * np.maximum(1.0, np.abs(mean_prev))
    ok[: k - 1] = False
    return int(j[ok][-1])


def cutoff_rank_maximizers(n: int, k: int, rtol: float = 1e-12) -> list:
    """All j maximizing the cutoff performance (brute force over j = 1..n)."""
    logp = log_performance_curve(n, k)
    best = logp.max()
    return [int(j) for j in np.nonzero(logp >= best - rtol)[0] + 1]


def order_statistic_performance(n: int, k: int, j: int, x0: float = 1.0, nodes: int = 400) -> float:
    """Independent check: E[k-th largest of n draws from the zero-drift equilibrium]
    for the cutoff-j vector, integrating the quantile against the Beta order-statistic law."""
    from scipy.stats import beta

    from .nplayer import g_n
    _check_nk(n, k)
    if j >= n:
        return x0
    vec = RewardVector.cutoff(n, j)
    m = n - k + 1
    law = beta(m, k)
    lo, hi = law.ppf(1e-15), law.isf(1e-15)
    t, w = np.polynomial.legendre.leggauss(nodes)
    edges = np.linspace(lo, hi, 33)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        y = 0.5 * (b - a) * t + 0.5 * (a + b)
        q = x0 * g_n(vec, y) / vec.Rbar
        total += 0.5 * (b - a) * float(np.sum(w * q * law.pdf(y)))
    return total


def nplayer_optimal_design(n: int, k: int, params: Optional[ModelParams] = None) -> DesignResult:
    x0 = _zero_drift(params)
    _check_nk(n, k)
    if k == n:
        raise DomainError("the last rank is maximized by the constant reward; no cutoff applies")
    j = optimal_cutoff_rank(n, k)
    perf = cutoff_rank_performance(n, k, j, x0)
    return DesignResult(RewardVector.cutoff(n, j), k, perf,
                        {"n": n, "k": k, "k_star": j, "ratio": j / n,
                         "maximizers": cutoff_rank_maximizers(n, k)})
