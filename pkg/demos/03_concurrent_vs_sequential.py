"""Small concurrent vs sequential comparison on a coarse mesh.

Runs TuRBO-1 and CMA-ES for a few seeds in both modes, prints the per-cell
medians and the paired signed-rank p-value, and draws the convergence plot.
Takes a few minutes on one core.  Output goes to ./demo_out/campaign/.
"""
from pathlib import Path

from lamtopo import campaign as cp
from lamtopo import render

OUT = Path("demo_out/campaign")
base = cp.RunConfig(strategy=cp.StrategySpec("concurrent", 150), nx=40, ny=20, output_dir=str(OUT))
cfg = cp.CampaignConfig(base, ("cmaes", "turbo1"), ("concurrent", "sequential"), tuple(range(6)))
cells, summary = cp.run_campaign(cfg, workers=1)

for key, cell in summary["cells"].items():
    print(f"{key:20s} median final {cell['final_median']:.4f}  IQR [{cell['final_q1']:.4f}, {cell['final_q3']:.4f}]")
for alg, c in summary["comparisons"].items():
    print(f"{alg}: sequential median {c['sequential_median']:.4f} vs concurrent {c['concurrent_median']:.4f}, "
          f"p = {c['p_value']}")

series = [render.series_from_traces(alg, mode, traces) for (alg, mode), traces in sorted(cells.items())]
print("convergence plot:", render.write(render.render_convergence(series), OUT / "convergence.svg"))
