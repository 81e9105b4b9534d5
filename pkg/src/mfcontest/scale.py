"""Model parameters, the scale function h and feasibility of stopping laws."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConstantRewardError, DomainError, RewardError
from .reward import RewardFunction

# |2 mu x0 / sigma^2| below this uses the driftless branch; the expm1 ratio
# differs from x / x0 by O(c * x) there.
LINEAR_BRANCH_THRESHOLD = 1e-13


@dataclass(frozen=True)
class ModelParams:
    x0: float = 1.0
    mu: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        for name in ("x0", "mu", "sigma"):
            val = getattr(self, name)
            if not isinstance(val, (int, float)) or not math.isfinite(val):
                raise DomainError(f"{name} must be a finite number")
            object.__setattr__(self, name, float(val))
        if self.x0 <= 0:
            raise DomainError("x0 must be positive")
        if self.sigma <= 0:
            raise DomainError("sigma must be positive")

    @classmethod
    def from_dict(cls, d: dict) -> "ModelParams":
        return cls(x0=d.get("x0", 1.0), mu=d.get("mu", 0.0), sigma=d.get("sigma", 1.0))

    def to_dict(self) -> dict:
        return {"x0": self.x0, "mu": self.mu, "sigma": self.sigma}

    @property
    def c(self) -> float:
        """Exponential rate 2 mu / sigma^2 of the scale function."""
        return 2.0 * self.mu / self.sigma ** 2

    @property
    def linear(self) -> bool:
        return abs(self.c * self.x0) < LINEAR_BRANCH_THRESHOLD

    @property
    def h_sup(self) -> float:
        """h(infinity): finite only for positive drift."""
        if self.linear or self.mu < 0:
            return math.inf
        return -1.0 / math.expm1(-self.c * self.x0)

    def h(self, x):
        """Scale function normalized by h(0) = 0, h(x0) = 1."""
        x_arr = np.asarray(x, dtype=float)
        if np.any(x_arr < 0) or np.any(np.isnan(x_arr)):
            raise DomainError("h is defined on [0, inf)")
        if self.linear:
            out = x_arr / self.x0
        else:
            with np.errstate(over="ignore"):
                out = np.expm1(-self.c * x_arr) / math.expm1(-self.c * self.x0)
            if self.mu > 0:
                out = np.where(np.isinf(x_arr), self.h_sup, out)
        return float(out) if x_arr.ndim == 0 else out

    def h_inverse(self, w):
        w_arr = np.asarray(w, dtype=float)
        if np.any(w_arr < 0) or np.any(np.isnan(w_arr)):
            raise DomainError("h_inverse needs w >= 0")
        if np.any(w_arr >= self.h_sup) and math.isfinite(self.h_sup):
            raise DomainError(f"w must be below h(inf) = {self.h_sup}")
        if self.linear:
            out = w_arr * self.x0
        else:
            with np.errstate(over="ignore"):
                out = -np.log1p(w_arr * math.expm1(-self.c * self.x0)) / self.c
        return float(out) if w_arr.ndim == 0 else out

    def h_prime(self, x):
        x_arr = np.asarray(x, dtype=float)
        if self.linear:
            out = np.full_like(x_arr, 1.0 / self.x0)
        else:
            out = -self.c * np.exp(-self.c * x_arr) / math.expm1(-self.c * self.x0)
        return float(out) if x_arr.ndim == 0 else out


def _log_ratio_threshold(params: ModelParams, top: float, bottom: float, mean: float) -> float:
    if not top > bottom:
        raise ConstantRewardError("reward must be non-constant")
    return params.sigma ** 2 / (2.0 * params.x0) * math.log((top - bottom) / (top - mean))


def mu_bar_infinity(params: ModelParams, R: RewardFunction) -> float:
    """Largest drift for which the mean field equilibrium exists."""
    return _log_ratio_threshold(params, R.R0, R.R1, R.average_reward())


def mu_bar_n(params: ModelParams, values) -> float:
    """Drift threshold of the n-player game for reward vector R_1 >= ... >= R_n."""
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or len(v) < 2:
        raise RewardError("reward vector needs at least two entries")
    return _log_ratio_threshold(params, float(v[0]), float(v[-1]), float(v.mean()))


class Feasibility(str, enum.Enum):
    EQUALITY = "feasible-equality"
    INEQUALITY = "feasible-inequality"
    INFEASIBLE = "infeasible"

    @property
    def feasible(self) -> bool:
        return self is not Feasibility.INFEASIBLE


def integrate_h(dist, params: ModelParams) -> float:
    return dist.integrate_h(params)


def is_feasible(dist, params: ModelParams, tol: float = 1e-9) -> Feasibility:
    """Classify a law by its h-mean: =1 for mu > 0, <=1 for mu <= 0."""
    val = dist.integrate_h(params)
    if abs(val - 1.0) <= tol:
        return Feasibility.EQUALITY
    if params.mu <= 0 and val < 1.0:
        return Feasibility.INEQUALITY
    return Feasibility.INFEASIBLE


def feasibility_residual(dist, params: ModelParams) -> float:
    """Distance of the h-mean from the feasible set (0 when feasible)."""
    val = dist.integrate_h(params)
    if params.mu > 0:
        return abs(val - 1.0)
    return max(0.0, val - 1.0)


from .distribution import Piece, StoppingDistribution  # noqa: E402  re-export

__all__ = [
    "ModelParams", "mu_bar_infinity", "mu_bar_n", "Feasibility", "integrate_h",
    "is_feasible", "feasibility_residual", "StoppingDistribution", "Piece",
]
