import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rdmelab.errors import StepBudgetExceeded
from rdmelab.fpt_exact import solve_absorption, solve_hitting, tau_D_uniform, tau_meso_uniform
from rdmelab.fpt_mc import FptStats, InitialDistribution, SsaConfig, estimate, sample_times, simulate_pair
from rdmelab.model import Boundary, LatticeSpec, build_lattice, total_jump_rate


def spec(dim, n, boundary=Boundary.PERIODIC, h=1e-8):
    return LatticeSpec(dim, n, n * h, boundary)


def test_start_at_target_with_instant_reaction_is_zero():
    s = spec(2, 5)
    cfg = SsaConfig(s, 1e-14, n_samples=5, initial=InitialDistribution.FIXED, start_voxel=s.target)
    assert np.all(sample_times(cfg) == 0.0)


def test_3x3_uniform_mean():
    cfg = SsaConfig(spec(2, 3), 1e-14, n_samples=100_000, seed=7)
    stats = estimate(cfg)
    assert abs(stats.mean - 0.02) <= 3 * stats.stderr


def test_infinite_k_is_embedded_walk_hitting_time():
    # every trajectory's time is a sum of Exp(tau_J) holding times, one per jump
    s = spec(2, 4)
    cfg = SsaConfig(s, 1e-14, n_samples=2000, seed=3, initial=InitialDistribution.UNIFORM_EXCLUDING_TARGET)
    stats = estimate(cfg)
    ref = tau_D_uniform(solve_hitting(build_lattice(s), 1e-14), include_target=False)
    assert abs(stats.mean - ref) <= 3 * stats.stderr
    assert stats.min > 0


def test_single_sample_stats():
    stats = estimate(SsaConfig(spec(2, 4), 1e-14, n_samples=1, seed=1))
    assert stats.n == 1
    assert stats.stderr == 0.0
    assert stats.min == stats.max == stats.mean


def test_finite_k_matches_exact_on_16_cubed():
    s = spec(3, 16)
    D = 1e-12
    k = total_jump_rate(s, D)
    stats = estimate(SsaConfig(s, D, k, n_samples=3000, seed=11))
    exact = tau_meso_uniform(solve_absorption(build_lattice(s), D, k))
    assert abs(stats.mean - exact) <= 3 * stats.stderr


@pytest.mark.parametrize("boundary", list(Boundary))
def test_finite_k_matches_exact_small(boundary):
    s = spec(2, 6, boundary)
    D = 1e-14
    k = 50.0
    stats = estimate(SsaConfig(s, D, k, n_samples=20_000, seed=5))
    exact = tau_meso_uniform(solve_absorption(build_lattice(s), D, k))
    assert abs(stats.mean - exact) <= 3 * stats.stderr


def test_kac_from_target_neighbor():
    s = spec(2, 8)
    lat = build_lattice(s)
    start = int(lat.target_neighbors[0])
    cfg = SsaConfig(s, 1e-14, n_samples=20_000, seed=2, initial=InitialDistribution.FIXED, start_voxel=start)
    tau_j = total_jump_rate(s, 1e-14)
    stats = estimate(cfg)
    assert abs(stats.mean * tau_j - (s.n_voxels - 1)) <= 3 * stats.stderr * tau_j


def test_worker_count_does_not_change_results():
    cfg = SsaConfig(spec(3, 6), 1e-12, 1e5, n_samples=997, seed=123)
    a = sample_times(cfg, workers=1)
    b = sample_times(cfg, workers=8)
    assert np.array_equal(a, b)
    assert estimate(cfg, 1).mean == estimate(cfg, 8).mean


def test_simulate_pair_is_pure_function_of_index():
    cfg = SsaConfig(spec(2, 5), 1e-14, 10.0, n_samples=50, seed=9)
    times = sample_times(cfg)
    for i in (0, 17, 49):
        assert simulate_pair(cfg, i) == times[i]


def test_seed_changes_results():
    a = sample_times(SsaConfig(spec(2, 5), 1e-14, n_samples=20, seed=1))
    b = sample_times(SsaConfig(spec(2, 5), 1e-14, n_samples=20, seed=2))
    assert not np.array_equal(a, b)


def test_step_budget():
    cfg = SsaConfig(spec(3, 10), 1e-12, 1e-3, n_samples=4, seed=0, step_budget=10)
    with pytest.raises(StepBudgetExceeded) as info:
        sample_times(cfg)
    assert info.value.sample_index == 0


@pytest.mark.parametrize("kwargs", [
    dict(n_samples=0), dict(D=0.0), dict(k_meso=0.0), dict(seed=-1),
    dict(initial=InitialDistribution.FIXED), dict(initial=InitialDistribution.FIXED, start_voxel=99),
])
def test_config_validation(kwargs):
    base = dict(lattice=spec(2, 4), D=1e-14)
    base.update(kwargs)
    with pytest.raises(ValueError):
        SsaConfig(**base)


def test_uniform_excluding_target_never_starts_on_target():
    s = spec(2, 3)
    cfg = SsaConfig(s, 1e-14, n_samples=5000, seed=4, initial="uniform_excluding_target")
    assert np.all(sample_times(cfg) > 0)


def test_z_score():
    s = FptStats(1.0, 0.5, 10, 0.0, 2.0)
    assert s.z_score(0.0) == 2.0
    assert FptStats(1.0, 0.0, 1, 1.0, 1.0).z_score(1.0) == 0.0
    assert math.isinf(FptStats(1.0, 0.0, 1, 1.0, 1.0).z_score(2.0))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0, 1e6, allow_subnormal=False), min_size=1, max_size=50))
def test_stats_invariants(xs):
    s = FptStats.from_samples(xs)
    assert s.stderr >= 0
    assert s.min <= s.mean <= s.max
    assert s.n == len(xs)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**64 - 1), st.integers(1, 40), st.integers(1, 5))
def test_determinism_property(seed, n, workers):
    cfg = SsaConfig(spec(2, 4), 1e-14, 100.0, n_samples=n, seed=seed)
    assert np.array_equal(sample_times(cfg, 1), sample_times(cfg, workers))
