"""Rank-based stochastic stopping contests."""
from .distribution import StoppingDistribution
from .mfe import mf_equilibrium, verify_equilibrium
from .nplayer import RewardVector, discretize_reward, n_equilibrium, nash_gap
from .reward import RewardFunction
from .scale import ModelParams

__all__ = ["ModelParams", "RewardFunction", "RewardVector", "StoppingDistribution", "discretize_reward",
           "mf_equilibrium", "n_equilibrium", "nash_gap", "verify_equilibrium"]
