"""Moving morphable component (MMC) geometry on a structured grid.

Element arrays are indexed ``[ix, iy]`` with shape ``(nx, ny)``; nodal arrays
have shape ``(nx + 1, ny + 1)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

VOID_DENSITY = 1e-9

# Box bounds of one component's (xc, yc, theta, length, thickness) on the 100 x 50 plate.
COMPONENT_LOWER = np.array([0.0, 0.0, -np.pi / 2, 5.0, 1.0])
COMPONENT_UPPER = np.array([100.0, 50.0, np.pi / 2, 100.0, 25.0])


@dataclass(frozen=True)
class Domain:
    lx: float = 100.0
    ly: float = 50.0
    nx: int = 100
    ny: int = 50

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ValueError("element counts must be positive")
        if not np.isclose(self.lx / self.nx, self.ly / self.ny):
            raise ValueError("elements must be square")

    @property
    def element_size(self) -> float:
        return self.lx / self.nx

    @property
    def n_elements(self) -> int:
        return self.nx * self.ny

    def node_coordinates(self) -> tuple[np.ndarray, np.ndarray]:
        """Nodal (X, Y) grids, each of shape (nx + 1, ny + 1)."""
        x = np.linspace(0.0, self.lx, self.nx + 1)
        y = np.linspace(0.0, self.ly, self.ny + 1)
        return np.meshgrid(x, y, indexing="ij")

    def element_centroids(self) -> np.ndarray:
        """Centroids of shape (nx, ny, 2)."""
        h = self.element_size
        x = (np.arange(self.nx) + 0.5) * h
        y = (np.arange(self.ny) + 0.5) * h
        X, Y = np.meshgrid(x, y, indexing="ij")
        return np.stack([X, Y], axis=-1)

    @classmethod
    def with_mesh(cls, nx: int, ny: int) -> "Domain":
        """Benchmark plate (100 x 50) at a different resolution."""
        return cls(100.0, 50.0, nx, ny)


@dataclass(frozen=True)
class Component:
    xc: float
    yc: float
    theta: float
    length: float
    thick: float

    def __post_init__(self):
        if self.length <= 0 or self.thick <= 0:
            raise ValueError(f"component size must be positive: {self}")

    def as_array(self) -> np.ndarray:
        return np.array([self.xc, self.yc, self.theta, self.length, self.thick])


@dataclass(frozen=True)
class DesignTopology:
    components: tuple[Component, ...]
    mirror: bool = True
    m: int = 6

    def __post_init__(self):
        if self.m < 2 or self.m % 2:
            raise ValueError(f"exponent m must be an even integer >= 2, got {self.m}")
        object.__setattr__(self, "components", tuple(self.components))


@dataclass(frozen=True)
class LevelSetField:
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise ValueError("level-set field must be finite")
        self.values.setflags(write=False)


@dataclass(frozen=True)
class DensityField:
    rho: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.rho.setflags(write=False)

    @property
    def solid(self) -> np.ndarray:
        return self.rho == 1.0

    @property
    def shape(self) -> tuple[int, int]:
        return self.rho.shape


def local_lsf(c: Component, m: int, x, y):
    """Superellipse level set of one component: 1 at the centre, 0 on its boundary."""
    dx = np.asarray(x, dtype=float) - c.xc
    dy = np.asarray(y, dtype=float) - c.yc
    ct, st = np.cos(c.theta), np.sin(c.theta)
    xi = ct * dx + st * dy
    eta = -st * dx + ct * dy
    return -((xi / (c.length / 2)) ** m + (eta / (c.thick / 2)) ** m - 1.0)


def mirror_component(c: Component, ly: float = 50.0) -> Component:
    return replace(c, yc=ly - c.yc, theta=-c.theta)


def global_lsf(topo: DesignTopology, domain: Domain) -> LevelSetField:
    """Nodal max-composition of all component level sets.

    The mirrored copies are realised by flipping the field of the originals
    about y = ly/2.  This equals evaluating the mirrored components directly
    and keeps the field bit-exactly symmetric.
    """
    X, Y = domain.node_coordinates()
    phi = np.full(X.shape, -np.inf)
    for c in topo.components:
        phi = np.maximum(phi, local_lsf(c, topo.m, X, Y))
    if topo.mirror:
        phi = np.maximum(phi, phi[:, ::-1])
    return LevelSetField(phi)


def element_center_values(phi: LevelSetField) -> np.ndarray:
    v = phi.values
    # Bilinear interpolation at the element centre is the mean of its corners.
    # Summing bottom and top pairs separately keeps mirrored elements bit-identical.
    return 0.25 * ((v[:-1, :-1] + v[1:, :-1]) + (v[:-1, 1:] + v[1:, 1:]))


def density_field(phi: LevelSetField) -> DensityField:
    center = element_center_values(phi)
    return DensityField(np.where(center >= 0.0, 1.0, VOID_DENSITY))


def volume_count(rho: DensityField) -> tuple[int, float]:
    count = int(np.count_nonzero(rho.rho == 1.0))
    return count, count / rho.rho.size


def density_to_csv(rho: DensityField, path) -> None:
    """Write ny rows x nx columns (row j is element row iy = j), 1 solid / 0 void."""
    grid = rho.solid.T.astype(int)
    Path(path).write_text("\n".join(",".join(map(str, row)) for row in grid) + "\n")


def density_from_csv(path) -> DensityField:
    rows = [line.split(",") for line in Path(path).read_text().split()]
    grid = np.array(rows, dtype=int).T
    return DensityField(np.where(grid == 1, 1.0, VOID_DENSITY))
