"""Lattice identities and asymptotic laws checked as one machine-readable report."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..fpt_exact import (
    mean_steps,
    montroll_asymptotic,
    n_steps_one,
    solve_absorption,
    solve_hitting,
    tau_D_asymptotic,
    tau_D_uniform,
    tau_meso_uniform,
)
from ..micro import tau_micro_analytic
from ..model import Boundary, LatticeSpec, PhysParams, build_lattice
from ..rates import MatchMode, critical_h, critical_h_bisect, matched_k_meso

# (dim, n_per_side, D) with h = 1e-8 m
IDENTITY_LATTICES = ((2, 16, 1e-14), (3, 12, 1e-12))
K_MESO_VALUES = (10.0, 1e3, 1e5)
H = 1e-8


@dataclass
class Check:
    name: str
    measured: float
    expected: float
    tolerance: float
    passed: bool
    note: str = ""


@dataclass
class ValidationReport:
    checks: list[Check]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "checks": [asdict(c) for c in self.checks]}


def _rel(a, b):
    return abs(a - b) / abs(b)


def _rel_check(name, measured, expected, tol, note=""):
    return Check(name, float(measured), float(expected), tol, bool(_rel(measured, expected) <= tol), note)


def montroll_ratio(dim: int, n: int, tol: float = 1e-10) -> tuple[float, float]:
    """Exact and predicted mean step count per voxel from a uniform non-target start."""
    lat = build_lattice(LatticeSpec(dim, n, float(n)))
    field = solve_hitting(lat, 1.0, tol)
    N = lat.n_voxels
    return mean_steps(field, include_target=False) / N, montroll_asymptotic(dim, N).n_steps / N


def run_validation_suite(config=None, tol: float = 1e-10) -> ValidationReport:
    """Run every lattice identity and asymptotic check. ``config`` may override ``tol``."""
    if config is not None:
        tol = config.tol
    checks = []

    for dim, n, D in IDENTITY_LATTICES:
        tag = f"{dim}d_{n}"
        lat = build_lattice(LatticeSpec(dim, n, n * H))
        hit = solve_hitting(lat, D, tol)
        N = lat.n_voxels
        n1 = n_steps_one(hit, lat)
        checks.append(_rel_check(f"kac_{tag}", n1, N - 1, 1e-9, "steps from a neighbour equal N-1"))
        tau_D = tau_D_uniform(hit)
        prev = None
        dominated = True
        for k in K_MESO_VALUES:
            field = solve_absorption(lat, D, k, tol)
            lhs = tau_meso_uniform(field)
            rhs = tau_D + (1 + n1) / k
            checks.append(_rel_check(f"renewal_{tag}_k{k:g}", lhs, rhs, 1e-9,
                                     "tau_meso = tau_D + (1 + N1)/k_meso"))
            dominated &= bool(np.all(field.steps >= hit.steps))
            if prev is not None:
                checks.append(Check(f"monotone_k_{tag}_k{k:g}", float(np.max(field.times - prev)), 0.0, 0.0,
                                    bool(np.all(field.times <= prev)), "absorption times non-increasing in k_meso"))
            prev = field.times
        checks.append(Check(f"absorption_dominates_hitting_{tag}", float(dominated), 1.0, 0.0, dominated))

        # inverting the renewal identity reproduces an arbitrary target time
        tau_target = 3.0 * tau_D
        p = PhysParams(rho=H / 10, D=D, L=n * H, dim=dim)
        k = matched_k_meso(p, lat.spec.h, tau_target, MatchMode.EXACT, tau_D, n1)
        checks.append(_rel_check(f"matched_exact_inversion_{tag}",
                                 tau_meso_uniform(solve_absorption(lat, D, k, tol)), tau_target, 1e-9))

        odd = n | 1
        refl = build_lattice(LatticeSpec(dim, odd, odd * H, Boundary.REFLECTIVE))
        per = build_lattice(LatticeSpec(dim, odd, odd * H, Boundary.PERIODIC))
        checks.append(_rel_check(f"reflective_equals_periodic_{dim}d_{odd}",
                                 tau_D_uniform(solve_hitting(refl, D, tol)), tau_D_uniform(solve_hitting(per, D, tol)),
                                 1e-8, "centred target on an odd lattice"))

    r20, pred = montroll_ratio(3, 20, tol)
    checks.append(_rel_check("montroll_3d_20", r20, pred, 0.03, "N_steps/N vs 1.5164"))
    r64, p64 = montroll_ratio(2, 64, tol)
    r128, p128 = montroll_ratio(2, 128, tol)
    checks.append(_rel_check("montroll_2d_64", r64, p64, 0.015, "N_steps/N vs ln(N)/pi + 0.1951"))
    shrink = _rel(r128, p128) < _rel(r64, p64)
    checks.append(Check("montroll_2d_residual_shrinks_128", _rel(r128, p128), _rel(r64, p64), 0.0, shrink,
                        "relative residual at 128^2 below the one at 64^2"))

    for preset_dim, L_over_rho, D in ((3, 100.0, 1e-12), (2, 250.0, 1e-14)):
        rho = 2e-9
        p = PhysParams(rho=rho, D=D, L=L_over_rho * rho, dim=preset_dim)
        tau_micro = tau_micro_analytic(p)
        closed = critical_h(p, tau_micro)
        bisect = critical_h_bisect(lambda h: tau_D_asymptotic(p, h), tau_micro, 0.5 * rho, 0.5 * p.L)
        checks.append(_rel_check(f"critical_h_closed_vs_bisect_{preset_dim}d", closed, bisect, 1e-12))

    return ValidationReport(checks)

