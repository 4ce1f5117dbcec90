"""Experiment configuration: presets and the flat ``key = value`` file format."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from ..errors import ConfigError
from ..model import Boundary, PhysParams
from ..rates import RateModel

RHO = 2e-9

PRESETS = {
    # 3D cube and 2D square desk configurations
    "cube": dict(dim=3, rho=RHO, D=1e-12, L_over_rho=100.0, h_min_over_rho=1.45, h_max_over_rho=22.0,
                 h_corr_max_over_rho=10.0),
    "square": dict(dim=2, rho=RHO, D=1e-14, L_over_rho=250.0, h_min_over_rho=2.1, h_max_over_rho=50.0,
                   h_corr_max_over_rho=25.0),
}

ALL_MODELS = tuple(RateModel)

#: Default BD near-field step lengths (per-axis standard deviation / rho).
BD_STEP_FRACTIONS = (0.1, 0.05, 0.025)


def default_dt_levels(params: PhysParams) -> tuple[float, ...]:
    return tuple((f * params.rho) ** 2 / (2 * params.D) for f in BD_STEP_FRACTIONS)


def geometric_mesh(L: float, h_lo: float, h_hi: float, per_decade: int = 12) -> tuple[int, ...]:
    """Sorted ``n_per_side`` values for the mesh sizes ``h_k = 10**(k/per_decade)`` in ``[h_lo, h_hi]``.

    ``L``, ``h_lo`` and ``h_hi`` share one length unit (the presets use rho);
    each grid point maps to ``n = round(L / h_k)``.
    """
    if not 0 < h_lo < h_hi:
        raise ConfigError("need 0 < h_lo < h_hi")
    k_lo = math.ceil(per_decade * math.log10(h_lo) - 1e-9)
    k_hi = math.floor(per_decade * math.log10(h_hi) + 1e-9)
    ns = {max(2, round(L / 10 ** (k / per_decade))) for k in range(k_lo, k_hi + 1)}
    return tuple(sorted(ns))


@dataclass(frozen=True)
class ExperimentConfig:
    params: PhysParams
    boundary: Boundary
    mesh: tuple[int, ...]
    models: tuple[RateModel, ...] = ALL_MODELS
    tol: float = 1e-10
    samples: int = 10_000
    with_mc: bool = False
    seed: int = 0
    threads: int = 1
    out: Path | None = None
    h_corr_max: float | None = None
    dt_levels: tuple[float, ...] | None = None

    def __post_init__(self):
        if not self.mesh:
            raise ConfigError("mesh list is empty")
        if any(b <= a for a, b in zip(self.mesh, self.mesh[1:])):
            raise ConfigError("mesh n_per_side values must be strictly increasing")
        if min(self.mesh) < 2:
            raise ConfigError("n_per_side must be >= 2")
        for m in self.models:
            if not m.available_in(self.params.dim):
                raise ConfigError(f"rate model {m.value} is not defined in {self.params.dim}D")
        if not self.tol > 0:
            raise ConfigError("tol must be positive")
        if self.samples < 1:
            raise ConfigError("samples must be >= 1")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.dt_levels is None:
            object.__setattr__(self, "dt_levels", default_dt_levels(self.params))
        elif len(self.dt_levels) < 2 or min(self.dt_levels) <= 0:
            raise ConfigError("dt_levels needs at least two positive values")

    @property
    def rho(self) -> float:
        return self.params.rho


def _bool(v: str) -> bool:
    s = v.strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _float(v: str) -> float:
    s = v.strip().lower()
    if s in ("inf", "infinity", "+inf"):
        return math.inf
    return float(s)


def _list(conv):
    return lambda v: tuple(conv(x) for x in v.split(",") if x.strip())


_KEYS = {
    "preset": str,
    "dim": int,
    "rho": _float,
    "D": _float,
    "L": _float,
    "L_over_rho": _float,
    "k_r": _float,
    "boundary": str,
    "n_per_side": _list(int),
    "h_min_over_rho": _float,
    "h_max_over_rho": _float,
    "per_decade": int,
    "models": _list(str),
    "tol": _float,
    "samples": int,
    "with_mc": _bool,
    "seed": int,
    "threads": int,
    "out": str,
    "h_corr_max_over_rho": _float,
    "dt_levels": _list(_float),
}


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse ``key = value`` lines (``#`` starts a comment) into typed values."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        try:
            values[key] = _KEYS[key](value)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key}: {exc}") from None
    return values


def load_config_file(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config_text(text, str(path))


def build_config(values: dict | None = None, preset: str = "cube", boundary: str | None = None) -> ExperimentConfig:
    """Merge ``values`` over a preset and validate.

    ``boundary`` is the subcommand default, used when the values do not set one.
    """
    values = dict(values or {})
    preset = values.pop("preset", preset)
    if preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}; expected one of {', '.join(PRESETS)}")
    merged = {**PRESETS[preset], **values}
    try:
        dim = int(merged["dim"])
        rho = float(merged["rho"])
        L = float(merged["L"]) if "L" in merged else merged["L_over_rho"] * rho
        params = PhysParams(rho=rho, D=float(merged["D"]), L=L, dim=dim, k_r=merged.get("k_r", math.inf))
        bnd = Boundary.parse(merged.get("boundary", boundary or "periodic"))
        if "n_per_side" in merged:
            mesh = tuple(sorted(set(merged["n_per_side"])))
        else:
            mesh = geometric_mesh(L / rho, merged["h_min_over_rho"], merged["h_max_over_rho"],
                                  merged.get("per_decade", 12))
        if "models" in merged:
            models = tuple(RateModel.parse(m) for m in merged["models"])
        else:
            models = tuple(m for m in ALL_MODELS if m.available_in(dim))
        out = merged.get("out")
        return ExperimentConfig(
            params=params,
            boundary=bnd,
            mesh=mesh,
            models=models,
            tol=merged.get("tol", 1e-10),
            samples=merged.get("samples", 10_000),
            with_mc=merged.get("with_mc", False),
            seed=merged.get("seed", 0),
            threads=merged.get("threads", 1),
            out=Path(out) if out else None,
            h_corr_max=merged["h_corr_max_over_rho"] * rho,
            dt_levels=merged.get("dt_levels"),
        )
    except ConfigError:
        raise
    except (ValueError, KeyError) as exc:
        raise ConfigError(str(exc)) from None


def with_overrides(config: ExperimentConfig, **kwargs) -> ExperimentConfig:
    """Copy of ``config`` with the non-``None`` keyword arguments applied."""
    kwargs = {k: v for k, v in kwargs.items() if v is not None}
    try:
        return replace(config, **kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def stream_seed(seed: int, *parts: int) -> int:
    """Independent 64-bit seed for a sub-experiment identified by ``parts``."""
    ss = np.random.SeedSequence([seed, *parts])
    return int(ss.generate_state(1, np.uint64)[0])
