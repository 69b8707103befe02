"""Classical laminate theory for symmetric, balanced laminates.

Stiffness is described through the material invariants U1..U5 and the two
lamination parameters (V1, V3).  The convention used throughout is
V1 = cos(2a), V3 = cos(4a), so a pure 0 degree laminate sits at (1, 1).

Spatial variation of (V1, V3) follows a fixed-volumetric-ratio curve

    V1 = (2 rr - 1) * sqrt((V3 + 1) / 2)

between two master design points, with the interpolated point placed by an
arc-length rule driven by distances to master nodes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

MIKI_TOL = 1e-9


class DegenerateMaterialError(ValueError):
    pass


class InfeasibleLaminationError(ValueError):
    pass


@dataclass(frozen=True)
class MaterialProperties:
    e1: float
    e2: float
    g12: float
    nu12: float


# Material of the cantilever benchmark (epoxy-like proportions).
BENCHMARK_MATERIAL = MaterialProperties(e1=25.0, e2=1.0, g12=0.5, nu12=0.25)


@dataclass(frozen=True)
class ReducedStiffness:
    q11: float
    q22: float
    q12: float
    q66: float

    def as_array(self) -> np.ndarray:
        return np.array([self.q11, self.q22, self.q12, self.q66])


@dataclass(frozen=True)
class MaterialInvariants:
    u1: float
    u2: float
    u3: float
    u4: float
    u5: float

    def as_array(self) -> np.ndarray:
        return np.array([self.u1, self.u2, self.u3, self.u4, self.u5])


@dataclass(frozen=True)
class LaminationPoint:
    v1: float
    v3: float


@dataclass(frozen=True)
class StackingSpec:
    """Ply angles (radians) with their thickness fractions."""

    plies: Sequence[tuple[float, float]]

    def __post_init__(self):
        fractions = np.array([f for _, f in self.plies], dtype=float)
        if np.any(fractions < 0):
            raise ValueError("ply fractions must be non-negative")
        if abs(fractions.sum() - 1.0) > 1e-12:
            raise ValueError(f"ply fractions sum to {fractions.sum()!r}, expected 1")


@dataclass(frozen=True)
class LpFieldSpec:
    """Lamination-parameter design: volumetric ratio and V3 at two master nodes.

    ``node1`` and its mirror sit on the clamped edge corners, ``node2`` at the
    middle of the loaded edge.
    """

    rr: float
    v3_node1: float
    v3_node2: float
    node1: tuple[float, float] = (0.0, 0.0)
    node1_mirror: tuple[float, float] = (0.0, 50.0)
    node2: tuple[float, float] = (100.0, 25.0)

    def __post_init__(self):
        if not 0.0 <= self.rr <= 1.0:
            raise ValueError(f"rr={self.rr} outside [0, 1]")
        for name in ("v3_node1", "v3_node2"):
            v = getattr(self, name)
            if not -1.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [-1, 1]")

    @classmethod
    def for_domain(cls, rr: float, v3_node1: float, v3_node2: float,
                   lx: float = 100.0, ly: float = 50.0) -> "LpFieldSpec":
        return cls(rr, v3_node1, v3_node2, (0.0, 0.0), (0.0, ly), (lx, ly / 2))


@dataclass(frozen=True)
class FiberAngles:
    alpha_r: float
    alpha_l: float


# Rows map (Q11, Q22, Q12, Q66) to U1..U5.
_INVARIANT_MATRIX = np.array([
    [3 / 8, 3 / 8, 1 / 4, 1 / 2],
    [1 / 2, -1 / 2, 0.0, 0.0],
    [1 / 8, 1 / 8, -1 / 4, -1 / 2],
    [1 / 8, 1 / 8, 3 / 4, -1 / 2],
    [1 / 8, 1 / 8, -1 / 4, 1 / 2],
])


def reduced_stiffness(m: MaterialProperties) -> ReducedStiffness:
    nu21 = m.nu12 * m.e2 / m.e1
    gamma = 1.0 - m.nu12 * nu21
    if gamma <= 0.0:
        raise DegenerateMaterialError(
            f"1 - nu12*nu21 = {gamma} <= 0 for {m}")
    return ReducedStiffness(
        q11=m.e1 / gamma,
        q22=m.e2 / gamma,
        q12=m.nu12 * m.e2 / gamma,
        q66=m.g12,
    )


def material_invariants(q: ReducedStiffness) -> MaterialInvariants:
    return MaterialInvariants(*(_INVARIANT_MATRIX @ q.as_array()))


def is_miki_feasible(v1, v3, tol: float = MIKI_TOL):
    v1 = np.asarray(v1)
    v3 = np.asarray(v3)
    return ((np.abs(v1) <= 1 + tol) & (v3 <= 1 + tol)
            & (2 * v1 ** 2 - 1 <= v3 + tol))


def a_matrix_batch(u: MaterialInvariants, v1, v3, h: float = 1.0) -> np.ndarray:
    """In-plane stiffness for arrays of lamination parameters, shape (..., 3, 3).

    No feasibility check; callers feeding LPIM output are feasible by construction.
    """
    v1 = np.asarray(v1, dtype=float)
    v3 = np.asarray(v3, dtype=float)
    a = np.zeros(v1.shape + (3, 3))
    a[..., 0, 0] = u.u1 + u.u2 * v1 + u.u3 * v3
    a[..., 1, 1] = u.u1 - u.u2 * v1 + u.u3 * v3
    a[..., 0, 1] = a[..., 1, 0] = u.u4 - u.u3 * v3
    a[..., 2, 2] = u.u5 - u.u3 * v3
    return h * a


def a_matrix(u: MaterialInvariants, p: LaminationPoint, h: float = 1.0) -> np.ndarray:
    """Normalised in-plane stiffness A0 of a symmetric balanced laminate."""
    if h <= 0:
        raise ValueError("thickness must be positive")
    if not is_miki_feasible(p.v1, p.v3):
        raise InfeasibleLaminationError(f"{p} lies outside Miki's diagram")
    base = np.array([[u.u1, u.u4, 0.0], [u.u4, u.u1, 0.0], [0.0, 0.0, u.u5]])
    term_v1 = np.array([[u.u2, 0.0, 0.0], [0.0, -u.u2, 0.0], [0.0, 0.0, 0.0]])
    term_v3 = np.array([[u.u3, -u.u3, 0.0], [-u.u3, u.u3, 0.0], [0.0, 0.0, -u.u3]])
    return h * (base + term_v1 * p.v1 + term_v3 * p.v3)


def lps_from_plies(s: StackingSpec) -> tuple[float, float, float, float]:
    """Return (V1, V2, V3, V4) as the thickness-weighted trigonometric moments.

    Sums are exactly rounded, so +/- ply pairs cancel V2 and V4 to exactly 0.
    """
    out = []
    for fn, k in ((math.cos, 2), (math.sin, 2), (math.cos, 4), (math.sin, 4)):
        out.append(math.fsum(f * fn(k * a) for a, f in s.plies))
    return tuple(out)


def balanced_two_group_stack(rr: float, alpha_r: float, alpha_l: float) -> StackingSpec:
    """+/-alpha_r plies over a fraction rr, +/-alpha_l over the rest."""
    return StackingSpec([
        (alpha_r, rr / 2), (-alpha_r, rr / 2),
        (alpha_l, (1 - rr) / 2), (-alpha_l, (1 - rr) / 2),
    ])


def v1_on_curve(rr, v3):
    """V1 on the fixed volumetric-ratio curve through V3 (broadcasts)."""
    v3 = np.asarray(v3, dtype=float)
    t = np.sqrt(np.clip((v3 + 1.0) / 2.0, 0.0, 1.0))
    out = (2.0 * np.asarray(rr, dtype=float) - 1.0) * t
    return float(out) if out.ndim == 0 else out


def _arc_primitive(a, t):
    # Antiderivative of sqrt(a^2 + 16 t^2) dt.
    a = np.abs(np.asarray(a, dtype=float))
    t = np.asarray(t, dtype=float)
    root = np.sqrt(a * a + 16.0 * t * t)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_term = np.where(a > 0, a * a / 8.0 * np.arcsinh(4.0 * t / np.where(a > 0, a, 1.0)), 0.0)
    return 0.5 * t * root + log_term


def arc_length(rr, v3_a, v3_b):
    """Length of the fixed-rr curve between two V3 values.

    With t = sqrt((V3 + 1)/2) the curve is (a t, 2 t^2 - 1), a = 2 rr - 1, and the
    arc-length element sqrt(a^2 + 16 t^2) dt integrates in closed form.  The sign
    of the result follows the order of the arguments.
    """
    a = 2.0 * np.asarray(rr, dtype=float) - 1.0
    ta = np.sqrt(np.clip((np.asarray(v3_a, dtype=float) + 1) / 2, 0, 1))
    tb = np.sqrt(np.clip((np.asarray(v3_b, dtype=float) + 1) / 2, 0, 1))
    out = _arc_primitive(a, tb) - _arc_primitive(a, ta)
    return float(out) if np.ndim(out) == 0 else out


def master_node_distances(spec: LpFieldSpec, points) -> tuple[np.ndarray, np.ndarray]:
    """(d1, d2) for points of shape (..., 2); d1 uses the nearer of node1 / its mirror."""
    p = np.asarray(points, dtype=float)
    d1a = np.hypot(p[..., 0] - spec.node1[0], p[..., 1] - spec.node1[1])
    d1b = np.hypot(p[..., 0] - spec.node1_mirror[0], p[..., 1] - spec.node1_mirror[1])
    d2 = np.hypot(p[..., 0] - spec.node2[0], p[..., 1] - spec.node2[1])
    return np.minimum(d1a, d1b), d2


def interpolation_fraction(spec: LpFieldSpec, points) -> np.ndarray:
    d1, d2 = master_node_distances(spec, points)
    return d1 / (d1 + d2)


def v3_at_arc_fraction(rr: float, v3_start: float, v3_end: float, frac,
                       tol: float = 1e-10, max_iter: int = 200) -> np.ndarray:
    """V3 of the point whose arc length from v3_start is frac * arc(start, end).

    Vectorised bracketed bisection.  It runs on t = sqrt((V3 + 1)/2), where the
    arc coordinate is monotone with bounded slope, so the residual tolerance is
    reachable even next to V3 = -1.
    """
    frac = np.asarray(frac, dtype=float)
    if v3_start == v3_end:
        return np.full(frac.shape, float(v3_start))
    a = 2.0 * rr - 1.0
    t0 = np.sqrt((v3_start + 1.0) / 2.0)
    t1 = np.sqrt((v3_end + 1.0) / 2.0)
    p0 = _arc_primitive(a, t0)
    target = frac * (_arc_primitive(a, t1) - p0)
    lo = np.full(frac.shape, min(t0, t1))
    hi = np.full(frac.shape, max(t0, t1))
    mid = 0.5 * (lo + hi)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        resid = _arc_primitive(a, mid) - p0 - target
        if np.all(np.abs(resid) < tol):
            break
        # the primitive is increasing in t, whichever way the arc runs
        above = resid > 0
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
    v3 = 2.0 * mid * mid - 1.0
    # master nodes reproduce their design points exactly
    return np.where(frac == 0.0, v3_start, np.where(frac == 1.0, v3_end, v3))


def interpolate_lp_field(spec: LpFieldSpec, centroids) -> tuple[np.ndarray, np.ndarray]:
    """(V1, V3) arrays for every centroid in ``centroids`` (shape (..., 2))."""
    frac = interpolation_fraction(spec, centroids)
    v3 = v3_at_arc_fraction(spec.rr, spec.v3_node1, spec.v3_node2, frac)
    return v1_on_curve(spec.rr, v3) * np.ones_like(v3), v3


def interpolate_lp(spec: LpFieldSpec, centroid: tuple[float, float]) -> LaminationPoint:
    v1, v3 = interpolate_lp_field(spec, np.asarray(centroid, dtype=float))
    return LaminationPoint(float(v1), float(v3))


def fiber_angles(p: LaminationPoint) -> FiberAngles:
    """Ply-group angles of the two-group laminate realising V3.

    The right group (fraction rr) lies on V1 = +s, the left group on V1 = -s,
    with s = sqrt((V3 + 1)/2); each maps back to an angle via arccos(V1)/2.
    """
    if not is_miki_feasible(p.v1, p.v3):
        raise InfeasibleLaminationError(f"{p} lies outside Miki's diagram")
    alpha_r, alpha_l = fiber_angle_field(p.v3)
    return FiberAngles(float(alpha_r), float(alpha_l))


def fiber_angle_field(v3) -> tuple[np.ndarray, np.ndarray]:
    s = np.sqrt(np.clip((np.asarray(v3, dtype=float) + 1.0) / 2.0, 0.0, 1.0))
    return np.arccos(s) / 2.0, np.arccos(-s) / 2.0


def d_matrix(a0: np.ndarray, h: float = 1.0) -> np.ndarray:
    """Bending stiffness h^3/12 * A0 of a laminate with uniformly spread plies.

    ``a0`` is the thickness-normalised in-plane matrix.  Not used by the
    membrane FE model.
    """
    return np.asarray(a0) * h ** 3 / 12.0


BENCHMARK_INVARIANTS = material_invariants(reduced_stiffness(BENCHMARK_MATERIAL))
