"""The cantilever benchmark objective.

A design vector holds 3 x (xc, yc, theta, length, thickness) for the MMCs,
followed by (rr, V3 at node 1, V3 at node 2) for the lamination-parameter
field.  Disconnected designs are penalised without running the FE solve.
"""
from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import connectivity as conn
from . import fem
from .geometry import (
    COMPONENT_LOWER, COMPONENT_UPPER, VOID_DENSITY, Component, DensityField,
    DesignTopology, Domain, density_field, global_lsf, volume_count,
)
from .laminate import (
    BENCHMARK_MATERIAL, LpFieldSpec, MaterialProperties, a_matrix_batch,
    interpolation_fraction, material_invariants, reduced_stiffness,
    v1_on_curve, v3_at_arc_fraction,
)

N_COMPONENTS = 3
N_MMC = 5 * N_COMPONENTS
N_LP = 3
N_DIM = N_MMC + N_LP

# (rr, V3_1, V3_2) giving (V1, V3) = (0, 0) everywhere.
QUASI_ISOTROPIC_LP = (0.5, 0.0, 0.0)


class OutOfBoundsError(ValueError):
    def __init__(self, indices):
        self.indices = list(indices)
        super().__init__(f"design variables out of bounds at indices {self.indices}")


@dataclass(frozen=True)
class Bounds:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        if lo.shape != hi.shape or np.any(lo >= hi):
            raise ValueError("bounds need lower < upper componentwise")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def benchmark(cls) -> "Bounds":
        lo = np.concatenate([np.tile(COMPONENT_LOWER, N_COMPONENTS), [0.0, -1.0, -1.0]])
        hi = np.concatenate([np.tile(COMPONENT_UPPER, N_COMPONENTS), [1.0, 1.0, 1.0]])
        return cls(lo, hi)

    @property
    def dim(self) -> int:
        return self.lower.size

    def normalize(self, x) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.lower) / (self.upper - self.lower)

    def denormalize(self, z) -> np.ndarray:
        return self.lower + np.asarray(z, dtype=float) * (self.upper - self.lower)

    def violations(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.nonzero((x < self.lower) | (x > self.upper) | ~np.isfinite(x))[0]

    def subset(self, idx) -> "Bounds":
        return Bounds(self.lower[idx], self.upper[idx])


DEFAULT_BOUNDS = Bounds.benchmark()


@dataclass(frozen=True)
class PenaltyConfig:
    gamma1: float = 0.02
    gamma2: float = 200.0
    v_max_fraction: float = 0.5
    volume_basis: str = "count"  # or "fraction"

    def __post_init__(self):
        if self.gamma1 <= 0 or self.gamma2 <= 0:
            raise ValueError("penalty weights must be positive")
        if not 0 < self.v_max_fraction <= 1:
            raise ValueError("v_max_fraction must lie in (0, 1]")
        if self.volume_basis not in ("count", "fraction"):
            raise ValueError(f"unknown volume basis {self.volume_basis!r}")

    def v_max(self, n_elements: int) -> float:
        if self.volume_basis == "count":
            return self.v_max_fraction * n_elements
        return self.v_max_fraction

    def volume_excess(self, count: int, n_elements: int) -> float:
        v = count if self.volume_basis == "count" else count / n_elements
        return max(v - self.v_max(n_elements), 0.0)


@dataclass
class EvaluationRecord:
    compliance: float | None
    volume_count: int
    volume_fraction: float
    connectivity: conn.ConnectivityReport
    objective: float
    fe_solved: bool
    wall_time: float = field(default=0.0, compare=False)

    @property
    def psi(self) -> float:
        return self.connectivity.psi_total

    def to_dict(self) -> dict:
        d = asdict(self)
        d["connectivity"]["psi_total"] = self.connectivity.psi_total
        return d


def decode(x, bounds: Bounds = DEFAULT_BOUNDS, domain: Domain = Domain(),
           m: int = 6) -> tuple[DesignTopology, LpFieldSpec]:
    x = np.asarray(x, dtype=float)
    if x.shape != (N_DIM,):
        raise ValueError(f"expected {N_DIM} design variables, got shape {x.shape}")
    bad = bounds.violations(x)
    if bad.size:
        raise OutOfBoundsError(bad)
    comps = tuple(Component(*x[5 * i:5 * i + 5]) for i in range(N_COMPONENTS))
    spec = LpFieldSpec.for_domain(*x[N_MMC:], lx=domain.lx, ly=domain.ly)
    return DesignTopology(comps, mirror=True, m=m), spec


def encode(topo: DesignTopology, spec: LpFieldSpec) -> np.ndarray:
    return np.concatenate([c.as_array() for c in topo.components]
                          + [[spec.rr, spec.v3_node1, spec.v3_node2]])


@dataclass
class FrozenTopology:
    """Geometry, volume and connectivity of a fixed MMC layout."""

    x_mmc: np.ndarray
    density: DensityField
    volume_count: int
    connectivity: conn.ConnectivityReport


class CantileverProblem:
    """Evaluation context for one mesh resolution.

    Keeps precomputed mesh data and counts FE solves; evaluations never share
    any other state.
    """

    def __init__(self, nx: int = 100, ny: int = 50,
                 penalty: PenaltyConfig = PenaltyConfig(),
                 material: MaterialProperties = BENCHMARK_MATERIAL,
                 bounds: Bounds = DEFAULT_BOUNDS, m: int = 6):
        self.domain = Domain.with_mesh(nx, ny)
        self.mesh = fem.Mesh(self.domain)
        self.penalty = penalty
        self.material = material
        self.invariants = material_invariants(reduced_stiffness(material))
        self.bounds = bounds
        self.m = m
        self.centroids = self.domain.element_centroids()
        self.n_fe_solves = 0
        self.n_evaluations = 0
        self._frac = interpolation_fraction(
            LpFieldSpec.for_domain(0.5, 0.0, 0.0, self.domain.lx, self.domain.ly),
            self.centroids)

    @property
    def dim(self) -> int:
        return N_DIM

    def decode(self, x):
        return decode(x, self.bounds, self.domain, self.m)

    def lp_field(self, spec: LpFieldSpec) -> tuple[np.ndarray, np.ndarray]:
        """Element (V1, V3) grids of shape (nx, ny)."""
        default = LpFieldSpec.for_domain(spec.rr, spec.v3_node1, spec.v3_node2,
                                         self.domain.lx, self.domain.ly)
        frac = self._frac if spec == default else interpolation_fraction(spec, self.centroids)
        v3 = v3_at_arc_fraction(spec.rr, spec.v3_node1, spec.v3_node2, frac)
        v1 = v1_on_curve(spec.rr, v3)
        return np.broadcast_to(v1, v3.shape).copy(), v3

    def element_stiffness_field(self, density: DensityField, spec: LpFieldSpec) -> np.ndarray:
        v1, v3 = self.lp_field(spec)
        a0 = a_matrix_batch(self.invariants, v1, v3)
        return density.rho[..., None, None] * a0

    def freeze(self, x_mmc) -> FrozenTopology:
        x_mmc = np.array(x_mmc, dtype=float)
        x = np.concatenate([x_mmc, QUASI_ISOTROPIC_LP])
        topo, _ = self.decode(x)
        rho = density_field(global_lsf(topo, self.domain))
        count, _ = volume_count(rho)
        report = conn.connectivity_penalty(rho.solid, self.domain)
        return FrozenTopology(x_mmc, rho, count, report)

    def _finish(self, frozen: FrozenTopology, spec: LpFieldSpec, t0: float) -> EvaluationRecord:
        n_el = self.domain.n_elements
        pen = self.penalty
        excess = pen.volume_excess(frozen.volume_count, n_el)
        report = frozen.connectivity
        if report.psi_total <= 0.0:
            sol = fem.solve_cantilever(self.mesh, self.element_stiffness_field(frozen.density, spec))
            self.n_fe_solves += 1
            compliance = sol.compliance
            objective = compliance + pen.gamma1 * excess
            solved = True
        else:
            compliance = None
            objective = pen.gamma1 * excess + pen.gamma2 * report.psi_total
            solved = False
        self.n_evaluations += 1
        return EvaluationRecord(
            compliance=compliance,
            volume_count=frozen.volume_count,
            volume_fraction=frozen.volume_count / n_el,
            connectivity=report,
            objective=float(objective),
            fe_solved=solved,
            wall_time=time.perf_counter() - t0,
        )

    def evaluate(self, x) -> EvaluationRecord:
        """Modified compliance of a physical design vector."""
        t0 = time.perf_counter()
        x = np.asarray(x, dtype=float)
        _, spec = self.decode(x)
        frozen = self.freeze(x[:N_MMC])
        return self._finish(frozen, spec, t0)

    def evaluate_unit(self, z) -> EvaluationRecord:
        return self.evaluate(self.bounds.denormalize(z))

    def evaluate_lp_only(self, x_lp, frozen: FrozenTopology) -> EvaluationRecord:
        """Evaluate new lamination parameters on a frozen layout, reusing its geometry."""
        t0 = time.perf_counter()
        x = np.concatenate([frozen.x_mmc, np.asarray(x_lp, dtype=float)])
        _, spec = self.decode(x)
        return self._finish(frozen, spec, t0)


def evaluate(x, cfg: PenaltyConfig = PenaltyConfig(), nx: int = 100, ny: int = 50) -> EvaluationRecord:
    """One-off evaluation; build a CantileverProblem to evaluate many designs."""
    return CantileverProblem(nx, ny, penalty=cfg).evaluate(x)


__all__ = [
    "Bounds", "CantileverProblem", "DEFAULT_BOUNDS", "EvaluationRecord", "FrozenTopology",
    "N_DIM", "N_LP", "N_MMC", "OutOfBoundsError", "PenaltyConfig", "QUASI_ISOTROPIC_LP",
    "VOID_DENSITY", "decode", "encode", "evaluate",
]
