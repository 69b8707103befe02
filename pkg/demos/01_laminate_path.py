"""Walk along the feasible lamination-parameter curve and print ply angles.

For a fixed ratio rr the admissible (V1, V3) pairs lie on one curve.  This
script samples the curve, recovers a balanced two-group stack for each point
and confirms the stack reproduces the point.
"""
import numpy as np

from lamtopo import laminate as lam

RR = 0.25

print(f"rr = {RR}")
print(f"{'V3':>7} {'V1':>9} {'alpha_r deg':>12} {'alpha_l deg':>12} {'round-trip err':>15}")
for v3 in np.linspace(-1.0, 1.0, 9):
    p = lam.LaminationPoint(float(lam.v1_on_curve(RR, v3)), float(v3))
    ang = lam.fiber_angles(p)
    v1b, _, v3b, _ = lam.lps_from_plies(lam.balanced_two_group_stack(RR, ang.alpha_r, ang.alpha_l))
    err = max(abs(v1b - p.v1), abs(v3b - p.v3))
    print(f"{v3:7.3f} {p.v1:9.5f} {np.degrees(ang.alpha_r):12.3f} {np.degrees(ang.alpha_l):12.3f} {err:15.2e}")

a = lam.a_matrix(lam.BENCHMARK_INVARIANTS, lam.LaminationPoint(0.0, 0.0))
print("\nin-plane stiffness at V1 = V3 = 0:")
print(np.array2string(a, precision=4, suppress_small=True))
