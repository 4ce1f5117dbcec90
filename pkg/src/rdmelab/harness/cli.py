"""Command-line entry point.

Exit status: 0 success, 1 failed validation, 2 configuration error, 3 numerical failure
(solver not converged or step budget exhausted).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from ..errors import ConfigError, ConvergenceError, StepBudgetExceeded
from ..fpt_exact import tau_D_asymptotic
from ..micro import MicroConfig, bd_estimate, tau_micro_analytic
from ..model import Boundary
from ..rates import conventional_ka, critical_h, critical_h_bisect, erban_chapman_h_crit
from .config import PRESETS, build_config, load_config_file, with_overrides
from .csvio import format_csv, write_csv
from .sweeps import rates_table, run_fig1_sweep, run_fig2_sweep
from .validation import run_validation_suite

EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3

# subcommand -> default boundary
DEFAULT_BOUNDARY = {
    "sweep-fig1": "reflective",
    "sweep-fig2": "periodic",
    "rates-table": "periodic",
    "critical-h": "periodic",
    "validate": "periodic",
    "micro-bd": "periodic",
}


def _u64(s: str) -> int:
    v = int(s, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def _positive_int(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _float_list(s: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in s.split(",") if x.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key = value configuration file")
    common.add_argument("--preset", choices=sorted(PRESETS), help="parameter preset (default: cube)")
    common.add_argument("--seed", type=_u64, help="master seed for every random stream")
    common.add_argument("--out", type=Path, help="output file (default: stdout)")
    common.add_argument("--samples", type=_positive_int, help="Monte Carlo samples per estimate")
    common.add_argument("--threads", type=_positive_int, help="worker threads")
    common.add_argument("--boundary", choices=[b.value for b in Boundary], help="lattice boundary")

    parser = argparse.ArgumentParser(prog="rdmelab", description="Mesh-size dependence of lattice association times.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("sweep-fig1", parents=[common], help="tau_D against mesh size with the tau_micro line")
    p.add_argument("--with-mc", action="store_true", help="add SSA estimates of tau_D")
    p = sub.add_parser("sweep-fig2", parents=[common], help="tau_meso under each rate model against mesh size")
    p.add_argument("--with-mc", action="store_true", help="add SSA estimates of tau_meso")
    sub.add_parser("rates-table", parents=[common], help="model propensities over the mesh grid")
    p = sub.add_parser("critical-h", parents=[common], help="critical mesh size h*")
    p.add_argument("--exact", action="store_true", help="also locate h* from exact lattice solves")
    sub.add_parser("validate", parents=[common], help="run the lattice identity checks")
    p = sub.add_parser("micro-bd", parents=[common], help="Brownian-dynamics estimate of tau_micro")
    p.add_argument("--dt-levels", type=_float_list, help="comma-separated BD time steps (s)")
    return parser


def load_config(args):
    values = load_config_file(args.config) if args.config else {}
    if args.preset:
        values["preset"] = args.preset
    if args.boundary:
        values["boundary"] = args.boundary
    config = build_config(values, boundary=DEFAULT_BOUNDARY[args.command])
    config = with_overrides(config, seed=args.seed, samples=args.samples, threads=args.threads, out=args.out)
    if getattr(args, "with_mc", False):
        config = with_overrides(config, with_mc=True)
    if getattr(args, "dt_levels", None):
        config = with_overrides(config, dt_levels=args.dt_levels)
    return config


def _emit(text: str, out: Path | None):
    if out is None:
        sys.stdout.write(text)
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text, encoding="utf-8")


def _emit_json(obj, out):
    _emit(json.dumps(obj, indent=2, default=_json_default) + "\n", out)


def _json_default(x):
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    raise TypeError(f"cannot serialise {type(x).__name__}")


def _emit_rows(result, config):
    if config.out is None:
        sys.stdout.write(format_csv(result.rows))
    else:
        write_csv(result.rows, config.out)


def _over_rho(h, rho):
    return None if h is None else h / rho


def cmd_sweep_fig1(config):
    result = run_fig1_sweep(config)
    _emit_rows(result, config)
    rho = config.rho
    msg = f"tau_micro = {result.tau_micro:.6g} s; h* closed form = {_over_rho(result.h_star, rho)} rho"
    if result.bracket:
        lo, hi = result.bracket
        msg += f"; sweep crossing = {result.h_star_sweep / rho:.4f} rho in [{lo / rho:.4f}, {hi / rho:.4f}] rho"
    else:
        msg += "; no sign change on the mesh grid"
    print(msg, file=sys.stderr)
    return EXIT_OK


def cmd_sweep_fig2(config):
    result = run_fig2_sweep(config)
    _emit_rows(result, config)
    print(f"tau_micro = {result.tau_micro:.6g} s; h* = {_over_rho(result.h_star, config.rho)} rho",
          file=sys.stderr)
    return EXIT_OK


def cmd_rates_table(config):
    _emit_rows(rates_table(config), config)
    return EXIT_OK


def cmd_critical_h(config, exact=False):
    p = config.params
    tau_micro = tau_micro_analytic(p)
    out = {"dim": p.dim, "rho_m": p.rho, "L_m": p.L, "D_m2_s": p.D, "tau_micro_s": tau_micro}
    h_star = critical_h(p, tau_micro)
    out["h_star_m"] = h_star
    out["h_star_over_rho"] = h_star / p.rho
    out["h_star_bisect_m"] = critical_h_bisect(lambda h: tau_D_asymptotic(p, h), tau_micro,
                                               p.L * 1e-6, p.L * (1 - 1e-9))
    if p.dim == 3:
        h_crit = erban_chapman_h_crit(conventional_ka(p), p.D)
        out["h_crit_m"] = h_crit
        out["h_crit_over_rho"] = h_crit / p.rho
    if exact:
        result = run_fig1_sweep(with_overrides(config, with_mc=False))
        out["boundary"] = config.boundary.value
        out["h_star_sweep_m"] = result.h_star_sweep
        out["bracket_m"] = list(result.bracket) if result.bracket else None
    _emit_json(out, config.out)
    return EXIT_OK


def cmd_validate(config):
    report = run_validation_suite(config)
    _emit_json(report.to_dict(), config.out)
    for c in report.checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name}: measured {c.measured:.10g}, "
              f"expected {c.expected:.10g}, tol {c.tolerance:g}", file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_VALIDATION


def cmd_micro_bd(config):
    p = config.params
    boundary = config.boundary
    micro = MicroConfig(p, max(config.dt_levels), config.samples, config.seed, boundary)
    est = bd_estimate(micro, config.dt_levels, config.threads)
    ref = tau_micro_analytic(p)
    out = {
        "dim": p.dim,
        "boundary": boundary.value,
        "tau_micro_analytic_s": ref,
        "extrapolated_s": est.extrapolated,
        "extrapolated_stderr_s": est.extrapolated_stderr,
        "relative_error": (est.extrapolated - ref) / ref,
        "levels": [
            {"dt_s": dt, "mean_s": s.mean, "stderr_s": s.stderr, "n": s.n} for dt, s in zip(est.dts, est.levels)
        ],
    }
    _emit_json(out, config.out)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args)
    except ConfigError as exc:
        print(f"rdmelab: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "sweep-fig1":
            return cmd_sweep_fig1(config)
        if args.command == "sweep-fig2":
            return cmd_sweep_fig2(config)
        if args.command == "rates-table":
            return cmd_rates_table(config)
        if args.command == "critical-h":
            return cmd_critical_h(config, args.exact)
        if args.command == "validate":
            return cmd_validate(config)
        return cmd_micro_bd(config)
    except (ConvergenceError, StepBudgetExceeded) as exc:
        print(f"rdmelab: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        # ConfigError, DomainError and BelowCriticalMeshError are all ValueErrors
        print(f"rdmelab: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
