"""Exact-SSA Monte Carlo estimates of first-encounter and association times."""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import StepBudgetExceeded
from .model import Lattice, LatticeSpec, build_lattice, total_jump_rate

DEFAULT_STEP_BUDGET = 10**10


class InitialDistribution(str, enum.Enum):
    UNIFORM_ALL = "uniform_all"
    UNIFORM_EXCLUDING_TARGET = "uniform_excluding_target"
    FIXED = "fixed"


_INIT_CODES = {
    InitialDistribution.UNIFORM_ALL: 0,
    InitialDistribution.UNIFORM_EXCLUDING_TARGET: 1,
    InitialDistribution.FIXED: 2,
}


@dataclass(frozen=True)
class SsaConfig:
    lattice: LatticeSpec
    D: float
    k_meso: float = math.inf
    n_samples: int = 10_000
    seed: int = 0
    initial: InitialDistribution = InitialDistribution.UNIFORM_ALL
    start_voxel: int | None = None
    step_budget: int = DEFAULT_STEP_BUDGET

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if not self.D > 0:
            raise ValueError("D must be positive")
        if not self.k_meso > 0:
            raise ValueError("k_meso must be positive (math.inf for instant reaction)")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")
        object.__setattr__(self, "initial", InitialDistribution(self.initial))
        if self.initial is InitialDistribution.FIXED:
            if self.start_voxel is None or not 0 <= self.start_voxel < self.lattice.n_voxels:
                raise ValueError("fixed initial distribution needs a valid start_voxel")


@dataclass(frozen=True)
class FptStats:
    """Sample mean of a passage time with its standard error (s)."""

    mean: float
    stderr: float
    n: int
    min: float
    max: float

    @classmethod
    def from_samples(cls, samples) -> FptStats:
        x = np.asarray(samples, dtype=float)
        if x.size == 0:
            raise ValueError("no samples")
        mean = float(x.mean())
        stderr = float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else 0.0
        # the pairwise-summed mean can fall an ulp outside [min, max] for constant samples
        lo, hi = float(x.min()), float(x.max())
        return cls(min(max(mean, lo), hi), stderr, int(x.size), lo, hi)

    def z_score(self, reference: float) -> float:
        if self.stderr == 0:
            return 0.0 if self.mean == reference else math.inf
        return (self.mean - reference) / self.stderr


def _chunks(n, workers):
    bounds = np.linspace(0, n, workers + 1).astype(np.int64)
    return [np.arange(a, b, dtype=np.int64) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def run_sampler(sample_chunk, n_samples: int, workers: int = 1) -> np.ndarray:
    """Evaluate ``sample_chunk(indices) -> times`` over ``0..n_samples-1`` in index order.

    Each sample owns its random stream, so the output does not depend on ``workers``.
    """
    workers = max(1, min(int(workers), n_samples))
    chunks = _chunks(n_samples, workers)
    if workers == 1:
        parts = [sample_chunk(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(sample_chunk, chunks))
    return np.concatenate(parts)


def _ssa_sampler(config: SsaConfig, lattice: Lattice | None = None):
    lattice = lattice if lattice is not None else build_lattice(config.lattice)
    tau_j = total_jump_rate(config.lattice, config.D)
    init = _INIT_CODES[config.initial]
    start = -1 if config.start_voxel is None else int(config.start_voxel)

    def sample_chunk(indices):
        times, failed = kernels.ssa_batch(lattice.neighbors, lattice.target, tau_j, float(config.k_meso),
                                          init, start, config.seed, indices, config.step_budget)
        if failed >= 0:
            raise StepBudgetExceeded(failed, config.step_budget)
        return times

    return sample_chunk


def simulate_pair(config: SsaConfig, sample_index: int, lattice: Lattice | None = None) -> float:
    """Reaction time (s) of trajectory ``sample_index``; a pure function of ``(config, sample_index)``."""
    return float(_ssa_sampler(config, lattice)(np.array([sample_index], dtype=np.int64))[0])


def sample_times(config: SsaConfig, workers: int = 1, lattice: Lattice | None = None) -> np.ndarray:
    return run_sampler(_ssa_sampler(config, lattice), config.n_samples, workers)


def estimate(config: SsaConfig, workers: int = 1, lattice: Lattice | None = None) -> FptStats:
    """Monte Carlo mean association time over ``config.n_samples`` trajectories."""
    return FptStats.from_samples(sample_times(config, workers, lattice))
