"""Command-line front end: evaluate, optimize, campaign, render, selftest."""
from __future__ import annotations

import argparse
import hashlib
import json
import re
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import campaign as cp
from . import fem, render
from .evaluation import N_DIM, CantileverProblem, OutOfBoundsError, PenaltyConfig
from .geometry import density_to_csv


class UsageError(ValueError):
    pass


def parse_mesh(text: str) -> tuple[int, int]:
    m = re.fullmatch(r"\s*(\d+)\s*[xX]\s*(\d+)\s*", text)
    if not m:
        raise UsageError(f"--mesh expects NXxNY (e.g. 100x50), got {text!r}")
    nx, ny = int(m.group(1)), int(m.group(2))
    if nx < 2 or ny < 2:
        raise UsageError(f"--mesh needs at least 2x2 elements, got {text!r}")
    return nx, ny


def read_design(path) -> np.ndarray:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read design file {path}: {exc}") from exc
    return parse_design(re.split(r"[\s,;]+", text.strip()), f"design file {path}")


def parse_design(tokens, where: str = "design vector") -> np.ndarray:
    tokens = [t for t in tokens if t]
    try:
        x = np.array([float(t) for t in tokens])
    except ValueError as exc:
        raise UsageError(f"{where}: {exc}") from exc
    if x.size != N_DIM:
        raise UsageError(f"{where} needs {N_DIM} numbers, got {x.size}")
    return x


def _sha256(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def _run_config(args) -> cp.RunConfig:
    cfg = cp.RunConfig.from_toml(args.config) if args.config else cp.RunConfig()
    return _apply_overrides(cfg, args)


def _apply_overrides(cfg: cp.RunConfig, args) -> cp.RunConfig:
    if args.seed is not None:
        if args.seed < 0:
            raise UsageError("--seed must be non-negative")
        cfg = replace(cfg, seed=args.seed)
    if args.mesh is not None:
        nx, ny = parse_mesh(args.mesh)
        cfg = replace(cfg, nx=nx, ny=ny)
    if args.out is not None:
        cfg = replace(cfg, output_dir=str(args.out))
    return cfg


# --- subcommands -------------------------------------------------------------

def cmd_evaluate(args) -> int:
    nx, ny = parse_mesh(args.mesh) if args.mesh else (100, 50)
    if args.design is not None:
        x = read_design(args.design)
    elif args.values:
        x = parse_design(args.values)
    else:
        raise UsageError("evaluate needs 18 numbers or --design FILE")
    problem = CantileverProblem(nx, ny, penalty=PenaltyConfig(volume_basis=args.volume_basis))
    rec = problem.evaluate(x)
    out = {"design": x.tolist(), "mesh": [nx, ny], **rec.to_dict()}
    if args.out is not None or args.dump_k or args.dump_u:
        _, spec = problem.decode(x)
        frozen = problem.freeze(x[:15])
        per_el = problem.element_stiffness_field(frozen.density, spec)
        if args.dump_k:
            fem.dump_triplets(fem.assemble(problem.mesh, per_el), args.dump_k)
        if args.dump_u:
            fem.dump_vector(fem.solve_cantilever(problem.mesh, per_el).u, args.dump_u)
        if args.out is not None:
            Path(args.out).mkdir(parents=True, exist_ok=True)
            density_to_csv(frozen.density, Path(args.out) / "density.csv")
    if args.format == "csv":
        keys = ["objective", "compliance", "volume_count", "volume_fraction", "fe_solved"]
        vals = ["" if out[k] is None else str(out[k]) for k in keys]
        text = ",".join(keys + ["psi"]) + "\n" + ",".join(vals + [str(rec.psi)]) + "\n"
    else:
        text = json.dumps(out, indent=2, sort_keys=True) + "\n"
    if args.out is not None:
        (Path(args.out) / f"evaluation.{args.format}").write_text(text)
    sys.stdout.write(text)
    return 0


def cmd_optimize(args) -> int:
    cfg = _run_config(args)
    trace = cp.run(cfg)
    text = trace.to_csv()
    best = trace.best_row()
    result = {"label": cfg.label, "evaluations": len(trace), "final_best": trace.final_best,
              "best_index": best.index, "best_design": best.x.tolist(),
              "stage_boundary": trace.stage_boundary(), "trace_sha256": _sha256(text)}
    if cfg.trace_path() is not None:
        result["trace"] = str(cfg.trace_path())
    if args.render:
        out = Path(cfg.output_dir or ".")
        problem = CantileverProblem(cfg.nx, cfg.ny, penalty=cfg.penalty, bounds=cfg.bounds)
        for target in args.render:
            if target == "convergence":
                doc = render.render_convergence(
                    [render.series_from_traces(cfg.algorithm, cfg.strategy.mode, [trace])])
            else:
                doc = render.render_design(problem, best.x, target)
            result.setdefault("graphics", []).append(
                str(render.write(doc, out / f"{cfg.label}_{target}.svg")))
    if args.format == "csv":
        sys.stdout.write(text)
    else:
        sys.stdout.write(json.dumps(result, indent=2, sort_keys=True) + "\n")
    return 0


def cmd_campaign(args) -> int:
    if not args.config:
        raise UsageError("campaign needs --config FILE")
    ccfg = cp.CampaignConfig.from_toml(args.config)
    base = _apply_overrides(ccfg.base, args)
    ccfg = replace(ccfg, base=base)
    if args.seed is not None:
        ccfg = replace(ccfg, seeds=(args.seed,))
    cells, summary = cp.run_campaign(ccfg)
    if args.render and "convergence" in args.render:
        series = [render.series_from_traces(a, m, cells[(a, m)]) for a, m in sorted(cells)]
        out = Path(base.output_dir or ".")
        summary["graphics"] = [str(render.write(render.render_convergence(series),
                                                out / "convergence.svg"))]
    if args.format == "csv":
        lines = ["cell,n_runs,final_median,final_q1,final_q3"]
        for name, cell in sorted(summary["cells"].items()):
            lines.append(f"{name},{cell['n_runs']},{cell['final_median']!r},"
                         f"{cell['final_q1']!r},{cell['final_q3']!r}")
        sys.stdout.write("\n".join(lines) + "\n")
    else:
        sys.stdout.write(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return 0


def cmd_render(args) -> int:
    targets = args.render or ["density"]
    out = Path(args.out or ".")
    written = []
    if args.trace:
        traces = [cp.Trace.read(p) for p in args.trace]
        if "convergence" in targets:
            series = []
            for t in traces:
                mode = "sequential" if t.stage_boundary() is not None else "concurrent"
                series.append(render.series_from_traces(t.label, mode, [t]))
            written.append(render.write(render.render_convergence(series), out / "convergence.svg"))
        design = traces[0].best_row().x
    elif args.design:
        design = read_design(args.design)
    else:
        raise UsageError("render needs --design FILE or --trace FILE")
    nx, ny = parse_mesh(args.mesh) if args.mesh else (100, 50)
    problem = CantileverProblem(nx, ny)
    for target in targets:
        if target == "convergence":
            if not args.trace:
                raise UsageError("--render convergence needs --trace")
            continue
        written.append(render.write(render.render_design(problem, design, target),
                                    out / f"{target}.svg"))
    sys.stdout.write("\n".join(str(p) for p in written) + "\n")
    return 0


def cmd_selftest(args) -> int:
    from .selftest import run_checks

    results = run_checks(seed=args.seed or 0)
    for r in results:
        sys.stdout.write(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail}\n")
    return 0 if all(r.passed for r in results) else 1


# --- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lamtopo", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config=True):
        if config:
            sp.add_argument("--config", help="TOML run configuration")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--mesh", help="mesh as NXxNY, e.g. 100x50")
        sp.add_argument("--render", action="append", choices=render.TARGETS,
                        help="graphic to write (repeatable)")
        sp.add_argument("--format", choices=("json", "csv"), default="json")

    ev = sub.add_parser("evaluate", help="evaluate one 18-number design vector")
    ev.add_argument("values", nargs="*", help="design vector in physical units")
    ev.add_argument("--design", help="file holding the design vector")
    ev.add_argument("--volume-basis", choices=("count", "fraction"), default="count")
    ev.add_argument("--dump-k", help="write the global stiffness as 'row col value' lines")
    ev.add_argument("--dump-u", help="write the displacement vector")
    common(ev, config=False)
    ev.set_defaults(func=cmd_evaluate)

    op = sub.add_parser("optimize", help="run one optimisation and write its trace")
    common(op)
    op.set_defaults(func=cmd_optimize)

    ca = sub.add_parser("campaign", help="run an (algorithm x mode x seed) matrix")
    common(ca)
    ca.set_defaults(func=cmd_campaign)

    re_ = sub.add_parser("render", help="draw a design or traces as SVG")
    re_.add_argument("--design", help="file holding a design vector")
    re_.add_argument("--trace", action="append", help="trace CSV (repeatable)")
    common(re_, config=False)
    re_.set_defaults(func=cmd_render)

    st = sub.add_parser("selftest", help="run the built-in invariant checks")
    st.add_argument("--seed", type=int)
    st.set_defaults(func=cmd_selftest)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (UsageError, cp.ConfigError, OutOfBoundsError) as exc:
        sys.stderr.write(f"lamtopo {args.command}: error: {exc}\n")
        return 2
    except (cp.CampaignError, fem.SingularSystemError, ValueError, OSError) as exc:
        sys.stderr.write(f"lamtopo {args.command}: error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
