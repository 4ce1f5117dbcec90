"""Exception types raised across the package."""


class RdmeLabError(Exception):
    """Base class for all package errors."""


class ConvergenceError(RdmeLabError):
    """An iterative solve did not reach its tolerance within the iteration cap."""

    def __init__(self, message, residual, iterations):
        super().__init__(f"{message} (residual={residual:.3e}, iterations={iterations})")
        self.residual = residual
        self.iterations = iterations


class StepBudgetExceeded(RdmeLabError):
    """A stochastic trajectory used up its event budget without terminating."""

    def __init__(self, sample_index, budget):
        super().__init__(f"sample {sample_index} exceeded the step budget of {budget} events")
        self.sample_index = sample_index
        self.budget = budget


class UnsupportedModelError(RdmeLabError):
    """A rate model was requested in a dimension where it is not defined."""


class DomainError(RdmeLabError, ValueError):
    """A rate model was evaluated outside its domain of validity."""


class BelowCriticalMeshError(RdmeLabError, ValueError):
    """No finite local propensity exists: the diffusion-limited time already exceeds the target."""

    def __init__(self, h, h_star):
        super().__init__(f"mesh size h={h:.6g} m is at or below the critical mesh size h*={h_star:.6g} m")
        self.h = h
        self.h_star = h_star


class ConfigError(RdmeLabError, ValueError):
    """Invalid experiment configuration."""
