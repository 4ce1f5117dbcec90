"""Association-rate models, unit conversion and critical mesh sizes.

Two kinds of quantity live here and must not be mixed:

* macroscopic rate constants in m**dim/s (:func:`conventional_ka`, :func:`fange_p`);
* per-voxel propensities in 1/s (:func:`erban_chapman_q`, :func:`matched_k_meso`).

:func:`to_propensity` is the only bridge from the first to the second.
"""

from __future__ import annotations

import enum
import math
import sys
from dataclasses import dataclass

from scipy.optimize import brentq

from .errors import BelowCriticalMeshError, DomainError, UnsupportedModelError
from .fpt_exact import MONTROLL_2D_CONST, MONTROLL_3D, tau_D_asymptotic
from .model import PhysParams

#: Erban-Chapman lattice constant in the L >> h limit.
BETA_INF = 0.25272
FANGE_3D_COEF = 0.58
FANGE_2D_COEF = 0.544


class RateModel(str, enum.Enum):
    CONVENTIONAL = "conventional"
    ERBAN_CHAPMAN = "erban_chapman"
    FANGE = "fange"
    MATCHED_ASYM = "matched_asym"
    MATCHED_EXACT = "matched_exact"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            names = ", ".join(m.value for m in cls)
            raise ValueError(f"unknown rate model {value!r}; expected one of {names}") from None

    def available_in(self, dim: int) -> bool:
        if dim == 2:
            return self not in (RateModel.CONVENTIONAL, RateModel.ERBAN_CHAPMAN)
        return True


class MatchMode(str, enum.Enum):
    ASYMPTOTIC = "asymptotic"
    EXACT = "exact"


def smoluchowski_rate(params: PhysParams) -> float:
    """Diffusion-limited rate ``4*pi*rho*D`` (3D, m^3/s)."""
    return 4 * math.pi * params.rho * params.D


def conventional_ka(params: PhysParams) -> float:
    """Conventional macroscopic association rate (m^3/s), 3D only."""
    if params.dim != 3:
        raise UnsupportedModelError("the conventional rate constant is not defined in 2D")
    kd = smoluchowski_rate(params)
    if params.absorbing:
        return kd
    return kd * params.k_r / (kd + params.k_r)


def erban_chapman_h_crit(k_a: float, D: float) -> float:
    """Mesh size at which the Erban-Chapman propensity diverges (root of its denominator)."""
    return BETA_INF * k_a / D


def erban_chapman_q(h: float, k_a: float, D: float) -> float:
    """Erban-Chapman mesh-dependent propensity (1/s); infinite at or below ``h_crit``."""
    if not h > 0:
        raise ValueError("h must be positive")
    if h <= erban_chapman_h_crit(k_a, D):
        return math.inf
    return D * k_a / (D * h**3 - BETA_INF * k_a * h**2)


def fange_beta(params: PhysParams, h: float) -> float:
    """``rho / R`` where ``R`` is the radius of the disk (2D) or sphere (3D) with the voxel's size."""
    if params.dim == 3:
        radius = (3 * h**3 / (4 * math.pi)) ** (1 / 3)
    else:
        radius = h / math.sqrt(math.pi)
    return params.rho / radius


def fange_min_h(params: PhysParams) -> float:
    """Smallest mesh size where the Fange et al. correction is defined (``beta == 1``)."""
    if params.dim == 3:
        return (4 * math.pi / 3) ** (1 / 3) * params.rho
    return math.sqrt(math.pi) * params.rho


def fange_p(params: PhysParams, h: float) -> float:
    """Fange et al. mesh-dependent macroscopic rate (m^dim/s)."""
    beta = fange_beta(params, h)
    if beta > 1.0 + 1e-12:
        raise DomainError(f"h={h:.6g} m is below the Fange et al. domain bound {fange_min_h(params):.6g} m")
    beta = min(beta, 1.0)
    if params.dim == 3:
        shape = (1 - beta) * (1 - FANGE_3D_COEF * beta)
        if params.absorbing:
            kd = smoluchowski_rate(params)
            return math.inf if shape == 0 else kd / shape
        alpha = params.k_r / smoluchowski_rate(params)
        return params.k_r / (1 + alpha * shape)
    shape = math.log(1 + FANGE_2D_COEF * (1 - beta) / beta)
    if params.absorbing:
        return math.inf if shape == 0 else 2 * math.pi * params.D / shape
    alpha = params.k_r / (2 * math.pi * params.D)
    return params.k_r / (1 + alpha * shape)


def to_propensity(rate: float, h: float, dim: int) -> float:
    """Per-voxel propensity (1/s) of a macroscopic rate constant (m^dim/s)."""
    if rate < 0:
        raise ValueError("rate must be non-negative")
    return rate / h**dim


def matched_k_meso(params: PhysParams, h: float, tau_micro: float,
                   mode: MatchMode = MatchMode.ASYMPTOTIC, tau_D: float | None = None,
                   n_steps_one: float | None = None) -> float:
    """Propensity that makes the mesoscopic mean association time equal ``tau_micro``.

    ``k = (1 + N1) / (tau_micro - tau_D)``. In asymptotic mode ``N1 = (L/h)**dim``
    and ``tau_D`` is the small-voxel asymptote; in exact mode both come from the
    exact hitting-time solve and must be passed in.
    """
    mode = MatchMode(mode)
    if mode is MatchMode.ASYMPTOTIC:
        tau_D = tau_D_asymptotic(params, h)
        n_steps_one = (params.L / h) ** params.dim
    elif tau_D is None or n_steps_one is None:
        raise ValueError("exact mode needs tau_D and n_steps_one")
    if tau_micro <= tau_D:
        try:
            h_star = critical_h(params, tau_micro)
        except DomainError:
            h_star = math.nan
        raise BelowCriticalMeshError(h, h_star)
    return (1 + n_steps_one) / (tau_micro - tau_D)


def critical_h(params: PhysParams, tau_micro: float) -> float:
    """Mesh size where the asymptotic first-encounter time equals ``tau_micro``."""
    if not tau_micro > 0:
        raise ValueError("tau_micro must be positive")
    L, D = params.L, params.D
    if params.dim == 3:
        h = MONTROLL_3D * L**3 / (6 * D * tau_micro)
    else:
        h = L * math.exp(-2 * math.pi * D / L**2 * (tau_micro - MONTROLL_2D_CONST * L**2 / (4 * D)))
    if not 0 < h < L:
        raise DomainError(f"no critical mesh size in (0, L): closed form gives {h:.6g} m")
    return h


def critical_h_bisect(tau_D, tau_micro: float, lo: float, hi: float, rtol: float = 4 * sys.float_info.epsilon) -> float:
    """Root of ``tau_D(h) = tau_micro`` for a decreasing ``tau_D`` bracketed by ``[lo, hi]``."""
    f_lo = tau_D(lo) - tau_micro
    f_hi = tau_D(hi) - tau_micro
    if f_lo * f_hi > 0:
        raise DomainError("tau_D - tau_micro does not change sign on the bracket")
    return brentq(lambda h: tau_D(h) - tau_micro, lo, hi, xtol=1e-300, rtol=rtol, maxiter=500)


@dataclass(frozen=True)
class ModelRate:
    """A propensity (1/s) with the reason it is missing, if it is."""

    propensity: float | None
    flag: str | None = None


def model_propensity(model: RateModel, params: PhysParams, h: float, tau_micro: float,
                     tau_D_exact: float | None = None, n_steps_one: float | None = None) -> ModelRate:
    """Propensity of ``model`` at mesh size ``h``; domain failures become flags, not exceptions."""
    model = RateModel.parse(model)
    if not model.available_in(params.dim):
        return ModelRate(None, "unsupported_in_2d")
    if model is RateModel.CONVENTIONAL:
        return ModelRate(to_propensity(conventional_ka(params), h, 3))
    if model is RateModel.ERBAN_CHAPMAN:
        k_a = conventional_ka(params)
        q = erban_chapman_q(h, k_a, params.D)
        return ModelRate(q, "below_h_crit" if math.isinf(q) else None)
    if model is RateModel.FANGE:
        try:
            return ModelRate(to_propensity(fange_p(params, h), h, params.dim))
        except DomainError:
            return ModelRate(None, "outside_fange_domain")
    try:
        if model is RateModel.MATCHED_ASYM:
            return ModelRate(matched_k_meso(params, h, tau_micro))
        if tau_D_exact is None:
            return ModelRate(None, "needs_exact_solve")
        return ModelRate(matched_k_meso(params, h, tau_micro, MatchMode.EXACT, tau_D_exact, n_steps_one))
    except BelowCriticalMeshError:
        return ModelRate(None, "below_h_star")
