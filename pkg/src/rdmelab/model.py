"""Physical parameters and Cartesian lattice geometry for the one-A/one-B pair problem."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np


class Boundary(str, enum.Enum):
    PERIODIC = "periodic"
    REFLECTIVE = "reflective"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValueError(f"unknown boundary {value!r}; expected 'periodic' or 'reflective'") from None


@dataclass(frozen=True)
class PhysParams:
    """Constants of the pair problem.

    ``rho`` is the contact radius (sum of the reaction radii), ``D`` the relative
    diffusivity, ``k_r`` the microscopic association rate (``math.inf`` for the
    perfectly absorbing limit) and ``L`` the side of the square/cubic domain.
    SI units throughout.
    """

    rho: float
    D: float
    L: float
    dim: int = 3
    k_r: float = math.inf

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        if not self.rho > 0:
            raise ValueError("rho must be positive")
        if not self.D > 0:
            raise ValueError("D must be positive")
        if not self.L > self.rho:
            raise ValueError("L must exceed rho")
        if not self.k_r > 0:
            raise ValueError("k_r must be positive (use math.inf for the absorbing limit)")

    @property
    def absorbing(self) -> bool:
        return math.isinf(self.k_r)

    @property
    def volume(self) -> float:
        return self.L**self.dim


@dataclass(frozen=True)
class LatticeSpec:
    """Grid of ``n_per_side**dim`` voxels of side ``h = L / n_per_side``.

    ``target`` is the voxel holding the stationary A molecule; it defaults to the
    central voxel (exactly central when ``n_per_side`` is odd).
    """

    dim: int
    n_per_side: int
    L: float
    boundary: Boundary = Boundary.PERIODIC
    target: int | None = None

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        if int(self.n_per_side) != self.n_per_side or self.n_per_side < 2:
            raise ValueError(f"n_per_side must be an integer >= 2, got {self.n_per_side}")
        if not self.L > 0:
            raise ValueError("L must be positive")
        object.__setattr__(self, "n_per_side", int(self.n_per_side))
        object.__setattr__(self, "boundary", Boundary.parse(self.boundary))
        if self.target is None:
            centre = self.n_per_side // 2
            object.__setattr__(self, "target", self.index((centre,) * self.dim))
        elif not 0 <= self.target < self.n_voxels:
            raise ValueError(f"target {self.target} outside [0, {self.n_voxels})")

    @classmethod
    def from_h(cls, dim, L, h, **kwargs):
        """Spec with ``n_per_side = round(L / h)``."""
        return cls(dim=dim, n_per_side=max(2, round(L / h)), L=L, **kwargs)

    @property
    def h(self) -> float:
        return self.L / self.n_per_side

    @property
    def n_voxels(self) -> int:
        return self.n_per_side**self.dim

    @property
    def voxel_volume(self) -> float:
        return self.h**self.dim

    def index(self, coords) -> int:
        """Row-major voxel index of ``coords`` (axis order x, y[, z])."""
        if len(coords) != self.dim:
            raise ValueError(f"expected {self.dim} coordinates")
        idx = 0
        for c in coords:
            if not 0 <= c < self.n_per_side:
                raise ValueError(f"coordinate {c} outside [0, {self.n_per_side})")
            idx = idx * self.n_per_side + int(c)
        return idx

    def coords(self, index) -> tuple[int, ...]:
        return tuple(int(c) for c in np.unravel_index(index, (self.n_per_side,) * self.dim))


@dataclass(frozen=True, eq=False)
class Lattice:
    """A :class:`LatticeSpec` together with its neighbour table.

    ``neighbors[i]`` lists ``2*dim`` voxel indices in direction order
    (+x, -x, +y, -y[, +z, -z]). Under reflective boundaries a direction that
    would leave the domain points back at ``i`` itself: the jump is a null event.
    """

    spec: LatticeSpec
    neighbors: np.ndarray = field(repr=False)

    @property
    def n_voxels(self) -> int:
        return self.spec.n_voxels

    @property
    def target(self) -> int:
        return self.spec.target

    @cached_property
    def target_neighbors(self) -> np.ndarray:
        """Distinct voxels reachable from the target in one jump."""
        return self.neighbor_set(self.target)

    def neighbor_set(self, index) -> np.ndarray:
        nb = self.neighbors[index]
        return np.unique(nb[nb != index])


def build_lattice(spec: LatticeSpec) -> Lattice:
    n, dim = spec.n_per_side, spec.dim
    idx = np.arange(spec.n_voxels, dtype=np.intp).reshape((n,) * dim)
    columns = []
    for axis in range(dim):
        for shift in (-1, 1):
            # np.roll by -1 brings the +1 neighbour into place
            nb = np.roll(idx, shift, axis=axis)
            if spec.boundary is Boundary.REFLECTIVE:
                edge = [slice(None)] * dim
                edge[axis] = -1 if shift == -1 else 0
                nb[tuple(edge)] = idx[tuple(edge)]
            columns.append(nb.ravel())
    table = np.ascontiguousarray(np.stack(columns, axis=1))
    table.setflags(write=False)
    return Lattice(spec=spec, neighbors=table)


def total_jump_rate(spec: LatticeSpec, D: float) -> float:
    """Total diffusive jump rate out of a voxel, ``2*dim*D/h**2`` (1/s)."""
    if not D > 0:
        raise ValueError("D must be positive")
    return 2 * spec.dim * D / spec.h**2
