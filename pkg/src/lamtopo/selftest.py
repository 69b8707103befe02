"""Quick invariant checks that run from an installed package (no test suite needed)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import campaign, fem, laminate
from .evaluation import CantileverProblem
from .geometry import Domain


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def _lp_anchors() -> CheckResult:
    a = float(laminate.v1_on_curve(0.25, -0.75))
    b = float(laminate.v1_on_curve(0.25, 0.75))
    ok = round(a, 4) == -0.1768 and round(b, 4) == -0.4677
    return CheckResult("lp curve anchors", ok, f"{a:.6f}, {b:.6f}")


def _miki_closure(rng) -> CheckResult:
    rr = rng.random(20000)
    v3 = rng.uniform(-1, 1, 20000)
    v1 = laminate.v1_on_curve(rr, v3)
    feasible = bool(np.all(laminate.is_miki_feasible(v1, v3)))
    a = laminate.a_matrix_batch(laminate.BENCHMARK_INVARIANTS, v1, v3)
    min_eig = float(np.linalg.eigvalsh(a).min())
    return CheckResult("miki closure and A positive definite", feasible and min_eig > 0,
                       f"min eigenvalue {min_eig:.4g}")


def _round_trip(rng) -> CheckResult:
    worst = 0.0
    for rr, v3 in zip(rng.random(200), rng.uniform(-1, 1, 200)):
        p = laminate.LaminationPoint(float(laminate.v1_on_curve(rr, v3)), float(v3))
        ang = laminate.fiber_angles(p)
        v1b, v2b, v3b, v4b = laminate.lps_from_plies(
            laminate.balanced_two_group_stack(rr, ang.alpha_r, ang.alpha_l))
        worst = max(worst, abs(v1b - p.v1), abs(v3b - p.v3), abs(v2b), abs(v4b))
    return CheckResult("ply round trip", worst < 1e-10, f"max error {worst:.3g}")


def _fe_work_identity() -> CheckResult:
    mesh = fem.Mesh(Domain.with_mesh(20, 10))
    a = laminate.a_matrix_batch(laminate.BENCHMARK_INVARIANTS, np.zeros((20, 10)), np.zeros((20, 10)))
    k = fem.assemble(mesh, a)
    sol = fem.solve_cantilever(mesh, a)
    rel = abs(sol.u @ (k @ sol.u) - sol.compliance) / sol.compliance
    return CheckResult("fe work identity", rel < 1e-8 and sol.compliance > 0, f"relative gap {rel:.3g}")


def _wilcoxon(rng) -> CheckResult:
    worst = 0.0
    for n in (5, 8, 12):
        a = np.round(rng.normal(size=n), 1)
        b = np.round(rng.normal(size=n), 1)
        if np.all(a == b):
            continue
        worst = max(worst, abs(campaign.wilcoxon_signed_rank(a, b).p_value
                               - campaign.wilcoxon_enumerate(a, b)))
    return CheckResult("wilcoxon exact vs enumeration", worst < 1e-12, f"max gap {worst:.3g}")


def _budget() -> CheckResult:
    got = campaign.budget_split(1000, 15, 3)
    return CheckResult("budget split", got == (833, 167), str(got))


def _determinism() -> CheckResult:
    problem = CantileverProblem(20, 10)
    x = problem.bounds.denormalize(np.full(problem.dim, 0.5))
    r1, r2 = problem.evaluate(x), problem.evaluate(x)
    return CheckResult("evaluation determinism", r1 == r2, f"objective {r1.objective:.6g}")


def run_checks(seed: int = 0) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    return [_lp_anchors(), _miki_closure(rng), _round_trip(rng), _fe_work_identity(),
            _wilcoxon(rng), _budget(), _determinism()]
