"""Exception hierarchy shared across the package."""


class ContestError(ValueError):
    """Base class for invalid inputs to the contest model."""


class DomainError(ContestError):
    """An argument lies outside the domain of the function."""


class RewardError(ContestError):
    """The reward function or vector violates its invariants."""

    code = "invalid-reward"


class LeftContinuityError(RewardError):
    """R(1-) > R(1): the reward jumps at the last rank."""

    code = "jump-at-last-rank"


class ConstantRewardError(RewardError):
    code = "constant-reward"


class DistributionError(ContestError):
    """A stopping distribution violates its invariants."""


class DivergentIntegralError(DistributionError):
    pass


class DriftTooLargeError(ContestError):
    """The drift is at or above the threshold that guarantees an equilibrium."""


class InfeasibleError(ContestError):
    """The stopping distribution cannot be attained by stopping the process."""


class UnsupportedError(ContestError):
    """The requested computation has no known closed form (e.g. non-zero drift design)."""


class ExactModeCapError(ContestError):
    """Exact O(n^2) evaluation refused for large n; use the Monte Carlo estimator."""


class DeviationError(ContestError):
    """The knife-edge deviation cannot be constructed with the given parameters."""


class ConfigError(ContestError):
    """Experiment configuration is malformed."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid config: " + "; ".join(self.problems))
