"""Mesh-size sweeps: first-encounter times against the microscopic time, and
association times under each rate model."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from ..errors import DomainError
from ..fpt_exact import n_steps_one, solve_absorption, solve_hitting, tau_D_asymptotic, tau_D_uniform, tau_meso_uniform
from ..fpt_mc import SsaConfig, estimate
from ..micro import tau_micro_analytic
from ..model import Boundary, LatticeSpec, build_lattice
from ..rates import (
    conventional_ka,
    critical_h,
    erban_chapman_h_crit,
    fange_min_h,
    model_propensity,
)
from .config import ExperimentConfig, stream_seed


@dataclass
class ModelResult:
    rate: float | None = None
    tau_meso: float | None = None
    relerr: float | None = None
    mc_mean: float | None = None
    mc_stderr: float | None = None


@dataclass
class SweepRow:
    """One mesh size with every prediction side by side. Times in seconds, rates in 1/s."""

    h: float
    h_over_rho: float
    n_voxels: int
    tau_D_exact: float | None
    tau_D_asym: float | None
    tau_micro: float
    models: dict[str, ModelResult] = field(default_factory=dict)
    flags: tuple[str, ...] = ()
    tau_D_mc_mean: float | None = None
    tau_D_mc_stderr: float | None = None
    # exact tau_D under the boundary not selected in the config; not written to CSV
    tau_D_exact_alt: float | None = None

    @property
    def below_h_star(self) -> bool:
        return "below_h_star" in self.flags


@dataclass
class SweepResult:
    rows: list[SweepRow]
    tau_micro: float
    h_star: float | None
    h_star_sweep: float | None = None
    bracket: tuple[float, float] | None = None
    h_crit: float | None = None


def _reference(config: ExperimentConfig):
    p = config.params
    tau_micro = tau_micro_analytic(p)
    try:
        h_star = critical_h(p, tau_micro)
    except DomainError:
        h_star = None
    h_crit = erban_chapman_h_crit(conventional_ka(p), p.D) if p.dim == 3 else None
    return tau_micro, h_star, h_crit


def _row_flags(config, h, tau_D_exact, tau_micro, h_star, h_crit):
    flags = []
    if h_star is not None and h <= h_star:
        flags.append("below_h_star")
    if tau_D_exact is not None and tau_D_exact >= tau_micro:
        flags.append("tau_D_above_micro")
    if h_crit is not None and h <= h_crit:
        flags.append("below_h_crit")
    if h < fange_min_h(config.params):
        flags.append("outside_fange_domain")
    return tuple(flags)


def _asym(p, h):
    return tau_D_asymptotic(p, h) if h < p.L else None


def _map(config, fn, items):
    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _sorted(rows):
    return sorted(rows, key=lambda r: r.h, reverse=True)


def locate_crossing(rows, tau_micro):
    """First sign change of ``tau_D_exact - tau_micro`` scanning from coarse to fine.

    Returns ``(h_interp, (h_fine, h_coarse))``; the crossing is interpolated
    linearly in ``log h`` on ``log(tau_D / tau_micro)``.
    """
    rows = [r for r in _sorted(rows) if r.tau_D_exact is not None]
    for coarse, fine in zip(rows, rows[1:]):
        g0 = math.log(coarse.tau_D_exact / tau_micro)
        g1 = math.log(fine.tau_D_exact / tau_micro)
        if g0 < 0 <= g1:
            x0, x1 = math.log(coarse.h), math.log(fine.h)
            h = math.exp(x0 + (x1 - x0) * g0 / (g0 - g1))
            return h, (fine.h, coarse.h)
    return None, None


def run_fig1_sweep(config: ExperimentConfig, with_mc: bool | None = None) -> SweepResult:
    """Exact first-encounter time against mesh size, with the microscopic reference line."""
    p = config.params
    with_mc = config.with_mc if with_mc is None else with_mc
    tau_micro, h_star, h_crit = _reference(config)
    other = Boundary.PERIODIC if config.boundary is Boundary.REFLECTIVE else Boundary.REFLECTIVE

    def row(n):
        spec = LatticeSpec(p.dim, n, p.L, config.boundary)
        lat = build_lattice(spec)
        tau_D = tau_D_uniform(solve_hitting(lat, p.D, config.tol))
        alt_lat = build_lattice(LatticeSpec(p.dim, n, p.L, other))
        tau_alt = tau_D_uniform(solve_hitting(alt_lat, p.D, config.tol))
        r = SweepRow(spec.h, spec.h / p.rho, spec.n_voxels, tau_D, _asym(p, spec.h), tau_micro,
                     flags=_row_flags(config, spec.h, tau_D, tau_micro, h_star, h_crit), tau_D_exact_alt=tau_alt)
        if with_mc:
            stats = estimate(SsaConfig(spec, p.D, math.inf, config.samples, stream_seed(config.seed, n)), lattice=lat)
            r.tau_D_mc_mean, r.tau_D_mc_stderr = stats.mean, stats.stderr
        return r

    rows = _sorted(_map(config, row, config.mesh))
    h_sweep, bracket = locate_crossing(rows, tau_micro)
    return SweepResult(rows, tau_micro, h_star, h_sweep, bracket, h_crit)


def run_fig2_sweep(config: ExperimentConfig, with_mc: bool | None = None) -> SweepResult:
    """Exact mean association time under every configured rate model, per mesh size."""
    p = config.params
    with_mc = config.with_mc if with_mc is None else with_mc
    tau_micro, h_star, h_crit = _reference(config)

    def row(n):
        spec = LatticeSpec(p.dim, n, p.L, config.boundary)
        lat = build_lattice(spec)
        hit = solve_hitting(lat, p.D, config.tol)
        tau_D = tau_D_uniform(hit)
        n1 = n_steps_one(hit, lat)
        r = SweepRow(spec.h, spec.h / p.rho, spec.n_voxels, tau_D, _asym(p, spec.h), tau_micro,
                     flags=_row_flags(config, spec.h, tau_D, tau_micro, h_star, h_crit))
        for m_idx, model in enumerate(config.models):
            rate = model_propensity(model, p, spec.h, tau_micro, tau_D, n1).propensity
            result = ModelResult(rate)
            if rate is not None:
                tau = tau_D if math.isinf(rate) else tau_meso_uniform(solve_absorption(lat, p.D, rate, config.tol))
                result.tau_meso = tau
                result.relerr = (tau - tau_micro) / tau_micro
                if with_mc:
                    seed = stream_seed(config.seed, n, m_idx)
                    stats = estimate(SsaConfig(spec, p.D, rate, config.samples, seed), lattice=lat)
                    result.mc_mean, result.mc_stderr = stats.mean, stats.stderr
            r.models[model.value] = result
        return r

    rows = _sorted(_map(config, row, config.mesh))
    return SweepResult(rows, tau_micro, h_star, None, None, h_crit)


def rates_table(config: ExperimentConfig) -> SweepResult:
    """Model propensities over the mesh grid without any lattice solves."""
    p = config.params
    tau_micro, h_star, h_crit = _reference(config)
    rows = []
    for n in config.mesh:
        spec = LatticeSpec(p.dim, n, p.L, config.boundary)
        r = SweepRow(spec.h, spec.h / p.rho, spec.n_voxels, None, _asym(p, spec.h), tau_micro,
                     flags=_row_flags(config, spec.h, None, tau_micro, h_star, h_crit))
        for model in config.models:
            r.models[model.value] = ModelResult(model_propensity(model, p, spec.h, tau_micro).propensity)
        rows.append(r)
    return SweepResult(_sorted(rows), tau_micro, h_star, None, None, h_crit)


def corrected_band(result: SweepResult, h_upper: float):
    """Rows with ``h* < h <= h_upper``."""
    lo = result.h_star if result.h_star is not None else 0.0
    return [r for r in result.rows if lo < r.h <= h_upper * (1 + 1e-12)]


def models_beat_baseline(row: SweepRow, baseline: str, contenders) -> dict[str, bool]:
    """Whether each contender's ``|tau_meso - tau_micro|`` is at most the baseline's."""
    ref = row.models[baseline]
    out = {}
    for name in contenders:
        res = row.models[name]
        if res.tau_meso is None or ref.tau_meso is None:
            out[name] = False
            continue
        out[name] = abs(res.tau_meso - row.tau_micro) <= abs(ref.tau_meso - row.tau_micro)
    return out

