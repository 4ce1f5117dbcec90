"""Microscopic reference times: closed forms and a Brownian-dynamics capture oracle.

The BD oracle moves the A-B separation vector with Gaussian increments inside
the square/cube (periodic wrap or reflective fold) and stops at the first
step whose end point lies within the contact radius. Far from the contact
sphere the step grows with the distance to it, so no capture can be missed
there; within ``safety`` near-field standard deviations of the sphere the step
is the fixed ``dt`` whose O(sqrt(dt)) bias :func:`bd_estimate` extrapolates out.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from numpy.random import Generator, Philox

from . import kernels
from .errors import StepBudgetExceeded, UnsupportedModelError
from .fpt_mc import DEFAULT_STEP_BUDGET, FptStats, run_sampler
from .model import Boundary, PhysParams
from .rates import conventional_ka

DEFAULT_SAFETY = 6.0


def tau_micro_analytic(params: PhysParams) -> float:
    """Mean microscopic association time (s) from a uniform start.

    3D: well-mixed ``L**3 / k_a``. 2D (absorbing contact only): the mean capture
    time on the disk with the same area as the square, target at its centre.
    """
    if params.dim == 3:
        return params.volume / conventional_ka(params)
    if not params.absorbing:
        raise UnsupportedModelError("the 2D closed form is only available for k_r = inf")
    L, D, rho = params.L, params.D, params.rho
    return L**2 / (2 * math.pi * D) * (math.log(L / (math.sqrt(math.pi) * rho)) - 0.75)


@dataclass(frozen=True)
class MicroConfig:
    params: PhysParams
    dt: float
    n_samples: int = 10_000
    seed: int = 0
    boundary: Boundary = Boundary.PERIODIC
    start: tuple[float, ...] | None = None
    safety: float = DEFAULT_SAFETY
    step_budget: int = DEFAULT_STEP_BUDGET

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if not self.safety > 0:
            raise ValueError("safety must be positive")
        object.__setattr__(self, "boundary", Boundary.parse(self.boundary))
        if self.start is not None:
            if len(self.start) != self.params.dim:
                raise ValueError("start must have one coordinate per dimension")
            object.__setattr__(self, "start", tuple(float(v) for v in self.start))
        step = math.sqrt(2 * self.params.dim * self.params.D * self.dt)
        if step > self.params.rho / 5:
            warnings.warn(f"BD step length {step:.3g} m exceeds rho/5; capture times will be biased high",
                          stacklevel=2)

    @property
    def centre(self) -> tuple[float, ...]:
        """Position of the contact sphere's centre in the box."""
        return (0.5 * self.params.L,) * self.params.dim


def _bd_sampler(config: MicroConfig, stream: int):
    p = config.params
    if not p.absorbing:
        raise UnsupportedModelError("the BD oracle only covers the perfectly absorbing contact")
    reflective = int(config.boundary is Boundary.REFLECTIVE)

    def sample_chunk(indices):
        times, failed = kernels.bd_batch(p.dim, p.L, p.rho, p.D, config.dt, reflective, config.safety,
                                         config.seed, stream, indices, config.start, config.step_budget)
        if failed >= 0:
            raise StepBudgetExceeded(failed, config.step_budget)
        return times

    return sample_chunk


def bd_sample(config: MicroConfig, sample_index: int, stream: int = 0) -> float:
    """Capture time (s) of BD trajectory ``sample_index``."""
    return float(_bd_sampler(config, stream)(np.array([sample_index], dtype=np.int64))[0])


def bd_times(config: MicroConfig, workers: int = 1, stream: int = 0) -> np.ndarray:
    return run_sampler(_bd_sampler(config, stream), config.n_samples, workers)


def brownian_increments(D: float, dt: float, n: int, dim: int = 3, seed: int = 0) -> np.ndarray:
    """``n`` Gaussian displacement vectors with per-axis variance ``2*D*dt``."""
    g = Generator(Philox(key=np.array([seed, 0], dtype=np.uint64)))
    return math.sqrt(2 * D * dt) * g.standard_normal((n, dim))


@dataclass(frozen=True)
class BdEstimate:
    dts: tuple[float, ...]
    levels: tuple[FptStats, ...]
    extrapolated: float
    extrapolated_stderr: float


def extrapolate_sqrt_dt(dts, levels) -> tuple[float, float]:
    """Weighted least-squares fit ``mean = a + b*sqrt(dt)`` over per-level stats; returns ``(a, stderr(a))``.

    When every level has the same ``dt`` the samples are simply pooled.
    """
    x = np.sqrt(np.asarray(dts, dtype=float))
    y = np.array([s.mean for s in levels])
    se = np.array([s.stderr for s in levels])
    n = np.array([s.n for s in levels], dtype=float)
    if np.ptp(x) == 0:
        mean = float(np.sum(n * y) / np.sum(n))
        return mean, float(math.sqrt(np.sum((n * se) ** 2)) / np.sum(n))
    if np.any(se <= 0):
        raise ValueError("extrapolation needs positive standard errors")
    w = 1.0 / se**2
    design = np.stack([np.ones_like(x), x], axis=1)
    normal = design.T @ (design * w[:, None])
    coef = np.linalg.solve(normal, design.T @ (w * y))
    return float(coef[0]), float(math.sqrt(np.linalg.inv(normal)[0, 0]))


def bd_estimate(config: MicroConfig, dt_levels, workers: int = 1) -> BdEstimate:
    """BD capture-time statistics per ``dt`` level and the ``dt -> 0`` extrapolation.

    Each level uses its own independent random streams.
    """
    dts = tuple(float(dt) for dt in dt_levels)
    if len(dts) < 2:
        raise ValueError("need at least two dt levels")
    levels = []
    for i, dt in enumerate(dts):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            level_cfg = replace(config, dt=dt)
        levels.append(FptStats.from_samples(bd_times(level_cfg, workers, stream=i)))
    mean, stderr = extrapolate_sqrt_dt(dts, levels)
    return BdEstimate(dts, tuple(levels), mean, stderr)
