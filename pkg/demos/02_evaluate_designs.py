"""Evaluate three hand-made cantilever designs and write their pictures.

One design is a single beam, one is split into two pieces and one exceeds the
material cap.  The printout shows which branch of the objective each takes.
Pictures are written to ./demo_out/.
"""
from pathlib import Path

from lamtopo import render
from lamtopo.evaluation import CantileverProblem

OUT = Path("demo_out")
LP = [0.3, -0.6, 0.8]
DESIGNS = {
    "beam": [50, 25, 0, 100, 10] * 3 + LP,
    "two_pieces": [20, 25, 0, 40, 10, 80, 25, 0, 40, 10, 20, 25, 0, 40, 10] + LP,
    "over_cap": [50, 25, 0, 100, 25, 50, 12, 0, 100, 25, 50, 25, 0, 100, 25] + LP,
}

problem = CantileverProblem()
for name, x in DESIGNS.items():
    r = problem.evaluate(x)
    comp = "skipped" if r.compliance is None else f"{r.compliance:.4f}"
    print(f"{name:11s} volume {r.volume_count:5d}  disconnection {r.psi:7.2f}  "
          f"compliance {comp:>8s}  objective {r.objective:.4f}")
    for target in ("density", "v3", "fiber_r"):
        render.write(render.render_design(problem, x, target), OUT / f"{name}_{target}.svg")
print(f"pictures in {OUT.resolve()}")
