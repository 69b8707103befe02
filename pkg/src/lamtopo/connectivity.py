"""Disconnection measures of a solid/void element mask.

All distances are measured between element centroids in physical units.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from .geometry import DensityField, Domain

FOUR_CONNECTED = ndimage.generate_binary_structure(2, 1)


@dataclass(frozen=True)
class ConnectivityReport:
    psi1: float
    psi2: float
    psi3: float
    n_components: int

    @property
    def psi_total(self) -> float:
        return self.psi1 + self.psi2 + self.psi3

    @property
    def connected(self) -> bool:
        return self.psi_total == 0.0


def solid_mask(rho: DensityField) -> np.ndarray:
    return rho.rho == 1.0


def label_components(mask: np.ndarray) -> tuple[np.ndarray, int]:
    """4-connected labelling; ids 1..n in raster order over ``[ix, iy]``, 0 = void."""
    labels, n = ndimage.label(np.asarray(mask, dtype=bool), structure=FOUR_CONNECTED)
    return labels, int(n)


def _centroids(mask: np.ndarray, h: float) -> np.ndarray:
    ix, iy = np.nonzero(mask)
    return np.column_stack([(ix + 0.5) * h, (iy + 0.5) * h])


def load_elements(domain: Domain) -> list[tuple[int, int]]:
    """Elements of the last column touching the load point (lx, ly/2)."""
    y_load = domain.ly / 2
    h = domain.element_size
    return [(domain.nx - 1, j) for j in range(domain.ny)
            if j * h <= y_load <= (j + 1) * h]


def psi_load(mask: np.ndarray, domain: Domain) -> float:
    mask = np.asarray(mask, dtype=bool)
    if any(mask[e] for e in load_elements(domain)):
        return 0.0
    if not mask.any():
        return float(np.hypot(domain.lx, domain.ly))
    c = _centroids(mask, domain.element_size)
    return float(np.min(np.hypot(c[:, 0] - domain.lx, c[:, 1] - domain.ly / 2)))


def psi_support(mask: np.ndarray, domain: Domain) -> float:
    mask = np.asarray(mask, dtype=bool)
    if mask[0].any():
        return 0.0
    cols = np.nonzero(mask.any(axis=1))[0]
    if cols.size == 0:
        return float(domain.lx)
    return float((cols[0] + 0.5) * domain.element_size)


def psi_fragmentation(labels: np.ndarray, n_components: int, domain: Domain) -> float:
    """Sum over components of the gap to the nearest other component."""
    if n_components <= 1:
        return 0.0
    h = domain.element_size
    total = 0.0
    for k in range(1, n_components + 1):
        own = labels == k
        others = (labels > 0) & ~own
        tree = cKDTree(_centroids(others, h))
        dist, _ = tree.query(_centroids(own & _boundary(own), h))
        total += float(dist.min())
    return total


def _boundary(mask: np.ndarray) -> np.ndarray:
    # an element whose four neighbours all belong to the set cannot be a nearest point
    interior = ndimage.binary_erosion(mask, structure=FOUR_CONNECTED, border_value=0)
    return mask & ~interior


def connectivity_penalty(mask: np.ndarray, domain: Domain) -> ConnectivityReport:
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != (domain.nx, domain.ny):
        raise ValueError(f"mask shape {mask.shape} does not match mesh {(domain.nx, domain.ny)}")
    labels, n = label_components(mask)
    return ConnectivityReport(
        psi1=psi_load(mask, domain),
        psi2=psi_support(mask, domain),
        psi3=psi_fragmentation(labels, n, domain),
        n_components=n,
    )
