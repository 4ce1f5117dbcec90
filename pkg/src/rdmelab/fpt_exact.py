"""Exact mean hitting and association times on the lattice.

The linear systems are solved in step units (one unit = one mean jump time
``1/tau_J``) by matrix-free conjugate gradients on the symmetric operator
``I - P + kappa * e_T e_T^T``, where ``P`` is the jump kernel and
``kappa = k_meso / tau_J``. In hitting mode the target row and column are
removed instead (Dirichlet condition ``t_T = 0``).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ConvergenceError
from .model import Boundary, Lattice, PhysParams, total_jump_rate

#: Mean first-passage constants for nearest-neighbour walks on periodic lattices.
MONTROLL_3D = 1.5164
MONTROLL_2D_LOG = 1.0 / math.pi
MONTROLL_2D_CONST = 0.1951

DEFAULT_TOL = 1e-10


class FieldMode(str, enum.Enum):
    HITTING = "hitting"
    ABSORPTION = "absorption"


@dataclass(frozen=True, eq=False)
class ExactFptField:
    """Per-voxel mean times to first occupancy of the target (hitting) or to reaction (absorption)."""

    steps: np.ndarray = field(repr=False)
    tau_j: float
    mode: FieldMode
    k_meso: float
    residual: float
    iterations: int
    target: int

    @property
    def times(self) -> np.ndarray:
        """Mean times in seconds."""
        return self.steps / self.tau_j

    @property
    def n_voxels(self) -> int:
        return self.steps.size


@dataclass(frozen=True)
class AsymptoticPrediction:
    n_steps: float
    n_steps_one: float
    regime: str


def _cg(apply, b, tol, max_iter, a_norm):
    """Conjugate gradients stopped on the max-norm backward error.

    The residual is measured relative to ``||A|| ||x|| + ||b||``; a residual
    relative to ``||b||`` alone is not attainable in floating point once the
    solution is many orders of magnitude larger than the right-hand side. The
    recursive residual is replaced by the true one every 50 iterations and
    before convergence is declared.
    """
    bnorm = np.max(np.abs(b))

    def backward(res_vec):
        return np.max(np.abs(res_vec)) / (a_norm * np.max(np.abs(x)) + bnorm)

    x = np.zeros_like(b)
    r = b - apply(x)
    p = r.copy()
    rr = r @ r
    it = 0
    while True:
        res = backward(r)
        if res <= tol:
            r_true = b - apply(x)
            res = backward(r_true)
            if res <= tol:
                return x, res, it
            r = r_true
            p = r.copy()
            rr = r @ r
        if it >= max_iter:
            raise ConvergenceError("conjugate gradients did not converge", res, it)
        ap = apply(p)
        alpha = rr / (p @ ap)
        x += alpha * p
        it += 1
        if it % 50 == 0:
            r = b - apply(x)
        else:
            r -= alpha * ap
        rr_new = r @ r
        p *= rr_new / rr
        p += r
        rr = rr_new


def _operator(lattice: Lattice, kappa: float):
    nb = lattice.neighbors
    target = lattice.target
    scale = 1.0 / nb.shape[1]
    buf = np.empty(lattice.n_voxels)
    hitting = math.isinf(kappa)

    def apply(x):
        if hitting:
            x = x.copy()
            x[target] = 0.0
        kernels.neighbor_sum(nb, x, buf)
        y = x - scale * buf
        if hitting:
            y[target] = 0.0
        else:
            y[target] += kappa * x[target]
        return y

    return apply


def _solve(lattice, D, k_meso, tol, max_iter):
    if not tol > 0:
        raise ValueError("tol must be positive")
    tau_j = total_jump_rate(lattice.spec, D)
    n = lattice.n_voxels
    kappa = k_meso / tau_j
    b = np.ones(n)
    if math.isinf(kappa):
        b[lattice.target] = 0.0
    if max_iter is None:
        max_iter = max(1000, 20 * n)
    a_norm = 2.0 if math.isinf(kappa) else 2.0 + kappa
    steps, res, it = _cg(_operator(lattice, kappa), b, tol, max_iter, a_norm)
    if math.isinf(kappa):
        steps[lattice.target] = 0.0
    np.maximum(steps, 0.0, out=steps)
    steps.setflags(write=False)
    mode = FieldMode.HITTING if math.isinf(kappa) else FieldMode.ABSORPTION
    return ExactFptField(steps, tau_j, mode, float(k_meso), res, it, lattice.target)


def solve_hitting(lattice: Lattice, D: float, tol: float = DEFAULT_TOL, max_iter=None) -> ExactFptField:
    """Mean time until the B walker first occupies the target voxel, from every voxel."""
    return _solve(lattice, D, math.inf, tol, max_iter)


def solve_absorption(lattice: Lattice, D: float, k_meso: float, tol: float = DEFAULT_TOL, max_iter=None) -> ExactFptField:
    """Mean association time when the pair reacts at propensity ``k_meso`` while co-located.

    ``k_meso = inf`` reduces to :func:`solve_hitting`.
    """
    if not k_meso > 0:
        raise ValueError("k_meso must be positive")
    return _solve(lattice, D, k_meso, tol, max_iter)


def mean_steps(field: ExactFptField, include_target: bool = True) -> float:
    """Uniform average of the field in step units."""
    s = field.steps
    if include_target:
        return float(s.mean())
    mask = np.ones(s.size, dtype=bool)
    mask[field.target] = False
    return float(s[mask].mean())


def tau_D_uniform(field: ExactFptField, include_target: bool = True) -> float:
    """Mean time (s) to first share a voxel from a uniform start.

    With ``include_target`` the start may be the target voxel itself (weight
    ``1/N``, contributing zero time); otherwise only non-target starts count.
    """
    if field.mode is not FieldMode.HITTING:
        raise ValueError("tau_D_uniform needs a hitting-mode field")
    return mean_steps(field, include_target) / field.tau_j


def tau_meso_uniform(field: ExactFptField) -> float:
    """Mean association time (s) from a start uniform over all voxels."""
    return mean_steps(field, include_target=True) / field.tau_j


def n_steps_one(field: ExactFptField, lattice: Lattice) -> float:
    """Mean step count to reach the target from a uniformly chosen neighbour of it."""
    if field.mode is not FieldMode.HITTING:
        raise ValueError("n_steps_one needs a hitting-mode field")
    if lattice.spec.boundary is Boundary.PERIODIC:
        nbrs = lattice.neighbors[lattice.target]
    else:
        nbrs = lattice.target_neighbors
    return float(field.steps[nbrs].mean())


def montroll_asymptotic(dim: int, n_voxels: int) -> AsymptoticPrediction:
    """Large-lattice mean step counts from a uniform non-target start and from a neighbour."""
    if n_voxels < 2:
        raise ValueError("need at least two voxels")
    n = float(n_voxels)
    if dim == 2:
        return AsymptoticPrediction(MONTROLL_2D_LOG * n * math.log(n) + MONTROLL_2D_CONST * n, n, "2D: N ln N / pi + 0.1951 N")
    if dim == 3:
        return AsymptoticPrediction(MONTROLL_3D * n, n, "3D: 1.5164 N")
    raise ValueError(f"dim must be 2 or 3, got {dim}")


def tau_D_asymptotic(params: PhysParams, h: float) -> float:
    """Small-voxel asymptote of the mean time (s) until the pair first shares a voxel."""
    if not 0 < h < params.L:
        raise ValueError("need 0 < h < L")
    L, D = params.L, params.D
    if params.dim == 2:
        return L**2 / (2 * math.pi * D) * math.log(L / h) + MONTROLL_2D_CONST * L**2 / (4 * D)
    return MONTROLL_3D * L**3 / (6 * D * h)
