"""Concurrent and sequential optimisation runs, traces, and their statistics."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy.stats import norm, rankdata

from .evaluation import (
    DEFAULT_BOUNDS, N_DIM, N_LP, N_MMC, QUASI_ISOTROPIC_LP, Bounds, CantileverProblem,
    EvaluationRecord, PenaltyConfig,
)
from .fem import SingularSystemError
from .optimizers import KINDS, OptimizerSpec, make_optimizer

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

MODES = ("concurrent", "sequential")
WORKERS_ENV = "LAMTOPO_WORKERS"
EXACT_WILCOXON_MAX_N = 25


class CampaignError(RuntimeError):
    pass


class ConfigError(ValueError):
    pass


class DegenerateSampleError(ValueError):
    pass


# --- budget ------------------------------------------------------------------

def budget_split(total: int, n1: int, n2: int) -> tuple[int, int]:
    """Stage budgets proportional to the stage dimensions (B1 rounded half to even)."""
    if total < 2 or n1 < 1 or n2 < 1:
        raise ValueError("need total >= 2 and positive stage dimensions")
    b1 = round(Fraction(total * n1, n1 + n2))
    b1 = min(max(b1, 1), total - 1)
    return b1, total - b1


@dataclass(frozen=True)
class StrategySpec:
    mode: str = "concurrent"
    budget: int = 1000
    n_topology: int = N_MMC
    n_material: int = N_LP

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.budget < 2:
            raise ConfigError("budget must be at least 2")

    @property
    def stage_budgets(self) -> tuple[int, ...]:
        if self.mode == "concurrent":
            return (self.budget,)
        return budget_split(self.budget, self.n_topology, self.n_material)


# --- configuration -----------------------------------------------------------

@dataclass(frozen=True)
class RunConfig:
    strategy: StrategySpec = StrategySpec()
    algorithm: str = "turbo1"
    optimizer_params: dict = field(default_factory=dict)
    penalty: PenaltyConfig = PenaltyConfig()
    nx: int = 100
    ny: int = 50
    seed: int = 0
    bounds: Bounds = DEFAULT_BOUNDS
    output_dir: str | None = None
    record_time: bool = False

    def __post_init__(self):
        if self.algorithm not in KINDS:
            raise ConfigError(f"algorithm must be one of {KINDS}, got {self.algorithm!r}")
        if self.nx < 2 or self.ny < 2:
            raise ConfigError("mesh needs at least 2 x 2 elements")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if self.bounds.dim != N_DIM:
            raise ConfigError(f"bounds must have {N_DIM} entries")

    @property
    def label(self) -> str:
        return f"{self.algorithm}_{self.strategy.mode}_seed{self.seed}"

    def trace_path(self) -> Path | None:
        if self.output_dir is None:
            return None
        return Path(self.output_dir) / f"trace_{self.label}.csv"

    @classmethod
    def from_mapping(cls, d: dict) -> "RunConfig":
        known = {"mode", "algorithm", "budget", "seed", "mesh", "penalties", "bounds",
                 "output_dir", "optimizer", "record_time"}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        mesh = d.get("mesh", {})
        pen = d.get("penalties", {})
        try:
            strategy = StrategySpec(mode=d.get("mode", "concurrent"),
                                    budget=int(d.get("budget", 1000)))
            penalty = PenaltyConfig(
                gamma1=float(pen.get("gamma1", 0.02)), gamma2=float(pen.get("gamma2", 200.0)),
                v_max_fraction=float(pen.get("v_max_fraction", 0.5)),
                volume_basis=pen.get("volume_basis", "count"))
            bounds = DEFAULT_BOUNDS
            if "bounds" in d:
                lo = np.array(d["bounds"].get("lower", DEFAULT_BOUNDS.lower), dtype=float)
                hi = np.array(d["bounds"].get("upper", DEFAULT_BOUNDS.upper), dtype=float)
                bounds = Bounds(lo, hi)
            return cls(strategy=strategy, algorithm=d.get("algorithm", "turbo1"),
                       optimizer_params=dict(d.get("optimizer", {})), penalty=penalty,
                       nx=int(mesh.get("nx", 100)), ny=int(mesh.get("ny", 50)),
                       seed=int(d.get("seed", 0)), bounds=bounds,
                       output_dir=d.get("output_dir"), record_time=bool(d.get("record_time", False)))
        except (TypeError, AttributeError) as exc:
            raise ConfigError(f"malformed configuration: {exc}") from exc

    @classmethod
    def from_toml(cls, path) -> "RunConfig":
        return cls.from_mapping(load_toml(path))


def load_toml(path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path} is not valid TOML: {exc}") from exc


# --- traces ------------------------------------------------------------------

TRACE_HEADER = (["eval", "stage"] + [f"x{i}" for i in range(N_DIM)]
                + ["compliance", "volume_count", "psi", "objective", "best", "seconds"])


def _fmt(v: float | None) -> str:
    return "" if v is None else format(float(v), ".17g")


@dataclass
class TraceRow:
    index: int
    stage: int
    x: np.ndarray
    compliance: float | None
    volume_count: int
    psi: float
    objective: float
    best: float
    seconds: float | None = None

    def cells(self) -> list[str]:
        return ([str(self.index), str(self.stage)] + [_fmt(v) for v in self.x]
                + [_fmt(self.compliance), str(self.volume_count), _fmt(self.psi),
                   _fmt(self.objective), _fmt(self.best), _fmt(self.seconds)])


@dataclass
class Trace:
    rows: list[TraceRow] = field(default_factory=list)
    label: str = ""

    def __len__(self) -> int:
        return len(self.rows)

    def append(self, stage: int, x, rec: EvaluationRecord, seconds: float | None) -> None:
        best = rec.objective if not self.rows else min(self.rows[-1].best, rec.objective)
        self.rows.append(TraceRow(len(self.rows), stage, np.asarray(x, dtype=float).copy(),
                                  rec.compliance, rec.volume_count, rec.psi,
                                  rec.objective, best, seconds))

    @property
    def best(self) -> np.ndarray:
        return np.array([r.best for r in self.rows])

    @property
    def objective(self) -> np.ndarray:
        return np.array([r.objective for r in self.rows])

    @property
    def final_best(self) -> float:
        return self.rows[-1].best

    def stage_boundary(self) -> int | None:
        """Index of the first stage-2 row, if any."""
        for r in self.rows:
            if r.stage == 2:
                return r.index
        return None

    def best_row(self) -> TraceRow:
        return min(self.rows, key=lambda r: (r.objective, r.index))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for r in self.rows:
            w.writerow(r.cells())
        return buf.getvalue()

    def write(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_csv())

    @classmethod
    def read(cls, path) -> "Trace":
        def num(s):
            return None if s == "" else float(s)

        try:
            with open(path, newline="") as fh:
                reader = csv.reader(fh)
                header = next(reader)
                if header != TRACE_HEADER:
                    raise ConfigError(f"{path} does not have the trace header")
                rows = []
                for cells in reader:
                    if len(cells) != len(TRACE_HEADER):
                        raise ConfigError(f"{path}: row with {len(cells)} fields")
                    rows.append(TraceRow(
                        int(cells[0]), int(cells[1]), np.array([float(c) for c in cells[2:2 + N_DIM]]),
                        num(cells[-6]), int(cells[-5]), float(cells[-4]), float(cells[-3]),
                        float(cells[-2]), num(cells[-1])))
        except (OSError, StopIteration, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"cannot parse trace {path}: {exc}") from exc
        return cls(rows, Path(path).stem)


# --- runs --------------------------------------------------------------------

def _stage_seed(seed: int, stage: int) -> int:
    return int(np.random.SeedSequence([seed, stage]).generate_state(1)[0])


def _drive(opt, budget: int, evaluate, on_record) -> tuple[np.ndarray, float]:
    """Ask/tell until ``budget`` evaluations; a truncated last batch is not told.

    Returns the best evaluated unit-cube point and its value.
    """
    used = 0
    best_z, best_f = None, np.inf
    while used < budget:
        asked = opt.ask()
        batch = asked[:budget - used]
        values = []
        for z in batch:
            f = on_record(z, evaluate(z))
            values.append(f)
            if f < best_f:
                best_z, best_f = z.copy(), f
        used += len(batch)
        if len(batch) == len(asked):
            opt.tell(batch, values)
    return best_z, best_f


def run(cfg: RunConfig) -> Trace:
    """Execute one run; writes the trace to ``cfg.output_dir`` when set."""
    problem = CantileverProblem(cfg.nx, cfg.ny, penalty=cfg.penalty, bounds=cfg.bounds)
    trace = Trace(label=cfg.label)
    clock = time.perf_counter

    def record(stage, x_phys, rec, t0):
        trace.append(stage, x_phys, rec, clock() - t0 if cfg.record_time else None)
        return rec.objective

    try:
        if cfg.strategy.mode == "concurrent":
            opt = make_optimizer(OptimizerSpec(cfg.algorithm, N_DIM, cfg.seed, cfg.optimizer_params))
            cache = {}

            def evaluate(z):
                cache["t0"] = clock()
                x = cfg.bounds.denormalize(z)
                cache["x"] = x
                return problem.evaluate(x)

            _drive(opt, cfg.strategy.budget, evaluate,
                   lambda z, rec: record(1, cache["x"], rec, cache["t0"]))
        else:
            _run_sequential(cfg, problem, record, clock)
    except SingularSystemError as exc:
        path = cfg.trace_path()
        if path is not None:
            trace.write(path)
        raise CampaignError(f"FE solve failed at evaluation {len(trace)}: {exc}") from exc

    assert len(trace) == cfg.strategy.budget
    path = cfg.trace_path()
    if path is not None:
        trace.write(path)
    return trace


def _run_sequential(cfg: RunConfig, problem: CantileverProblem, record, clock) -> None:
    b1, b2 = cfg.strategy.stage_budgets
    topo_bounds = cfg.bounds.subset(slice(0, N_MMC))
    lp_bounds = cfg.bounds.subset(slice(N_MMC, N_DIM))
    qi = np.array(QUASI_ISOTROPIC_LP)
    cache = {}

    def eval_topology(z):
        cache["t0"] = clock()
        x = np.concatenate([topo_bounds.denormalize(z), qi])
        cache["x"] = x
        return problem.evaluate(x)

    stage1 = make_optimizer(OptimizerSpec(cfg.algorithm, N_MMC, _stage_seed(cfg.seed, 1),
                                          cfg.optimizer_params))
    best_z, best_f = _drive(stage1, b1, eval_topology,
                            lambda z, rec: record(1, cache["x"], rec, cache["t0"]))

    frozen = problem.freeze(topo_bounds.denormalize(best_z))
    stage2 = make_optimizer(OptimizerSpec(cfg.algorithm, N_LP, _stage_seed(cfg.seed, 2),
                                          cfg.optimizer_params))
    # Incumbent: the stage-1 best at the quasi-isotropic LP, whose value is already known.
    stage2.warm_start(lp_bounds.normalize(qi), best_f)

    def eval_material(z):
        cache["t0"] = clock()
        x_lp = lp_bounds.denormalize(z)
        cache["x"] = np.concatenate([frozen.x_mmc, x_lp])
        return problem.evaluate_lp_only(x_lp, frozen)

    _drive(stage2, b2, eval_material, lambda z, rec: record(2, cache["x"], rec, cache["t0"]))


# --- statistics --------------------------------------------------------------

@dataclass(frozen=True)
class WilcoxonResult:
    statistic: float
    p_value: float
    n: int
    method: str


def _signed_ranks(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("paired samples must be 1-D and of equal length")
    if a.size < 5:
        raise ValueError("need at least 5 pairs")
    d = a - b
    d = d[d != 0]
    if d.size == 0:
        raise DegenerateSampleError("all paired differences are zero")
    return rankdata(np.abs(d)), d > 0


def wilcoxon_signed_rank(a, b) -> WilcoxonResult:
    """Two-sided signed-rank test; zero differences dropped.

    Exact null distribution (all sign assignments, ties kept as midranks) for
    up to 25 non-zero pairs, otherwise a normal approximation with continuity
    and tie corrections.  The statistic is min(W+, W-).
    """
    ranks, positive = _signed_ranks(a, b)
    n = ranks.size
    w_plus = float(ranks[positive].sum())
    total = float(ranks.sum())
    stat = min(w_plus, total - w_plus)
    if n <= EXACT_WILCOXON_MAX_N:
        doubled = np.rint(2 * ranks).astype(int)
        top = int(doubled.sum())
        counts = np.zeros(top + 1, dtype=np.int64)
        counts[0] = 1
        for r in doubled:
            counts[r:] = counts[r:] + counts[:top + 1 - r].copy()
        obs = int(np.rint(2 * w_plus))
        dev = abs(2 * obs - top)
        sums = np.arange(top + 1)
        extreme = np.abs(2 * sums - top) >= dev
        p = Fraction(int(sum(counts[extreme])), 2 ** n)
        return WilcoxonResult(stat, float(min(p, 1)), n, "exact")
    _, tie_counts = np.unique(ranks, return_counts=True)
    var = n * (n + 1) * (2 * n + 1) / 24 - np.sum(tie_counts ** 3 - tie_counts) / 48
    z = max(abs(w_plus - total / 2) - 0.5, 0.0) / math.sqrt(var)
    return WilcoxonResult(stat, float(min(2 * norm.sf(z), 1.0)), n, "normal")


def wilcoxon_enumerate(a, b) -> float:
    """Brute-force two-sided p-value over all 2^n sign flips (for testing)."""
    ranks, positive = _signed_ranks(a, b)
    n = ranks.size
    doubled = np.rint(2 * ranks).astype(np.int64)
    top = int(doubled.sum())
    obs_dev = abs(2 * int(doubled[positive].sum()) - top)
    signs = ((np.arange(2 ** n)[:, None] >> np.arange(n)) & 1).astype(np.int64)
    sums = signs @ doubled
    return float(np.count_nonzero(np.abs(2 * sums - top) >= obs_dev)) / 2 ** n


def _quartiles(v: np.ndarray) -> tuple[float, float, float]:
    q1, med, q3 = np.percentile(v, [25, 50, 75])
    return float(q1), float(med), float(q3)


def summarize_cell(traces: list[Trace]) -> dict:
    if not traces:
        raise ValueError("a cell needs at least one trace")
    finals = np.array([t.final_best for t in traces])
    q1, med, q3 = _quartiles(finals)
    length = min(len(t) for t in traces)
    curve = np.mean([t.best[:length] for t in traces], axis=0)
    return {
        "n_runs": len(traces),
        "final_median": med,
        "final_q1": q1,
        "final_q3": q3,
        "box": {"min": float(finals.min()), "q1": q1, "median": med, "q3": q3,
                "max": float(finals.max()), "values": finals.tolist()},
        "mean_best_curve": curve.tolist(),
        "stage_boundary": traces[0].stage_boundary(),
    }


def aggregate(cells: dict[tuple[str, str], list[Trace]]) -> dict:
    """Per-(algorithm, mode) summaries plus paired concurrent/sequential tests.

    Pairs are formed by position, so traces in both cells must be in seed order.
    """
    out = {"cells": {}, "comparisons": {}}
    for key in sorted(cells):
        out["cells"][f"{key[0]}/{key[1]}"] = summarize_cell(cells[key])
    for alg in sorted({k[0] for k in cells}):
        conc, seq = cells.get((alg, "concurrent")), cells.get((alg, "sequential"))
        if not conc or not seq or len(conc) != len(seq):
            continue
        a = [t.final_best for t in conc]
        b = [t.final_best for t in seq]
        entry = {"concurrent_median": float(np.median(a)), "sequential_median": float(np.median(b))}
        try:
            res = wilcoxon_signed_rank(a, b)
            entry.update(statistic=res.statistic, p_value=res.p_value, n=res.n, method=res.method)
        except (ValueError, DegenerateSampleError) as exc:
            entry.update(statistic=None, p_value=None, note=str(exc))
        out["comparisons"][alg] = entry
    return out


# --- campaigns ---------------------------------------------------------------

@dataclass(frozen=True)
class CampaignConfig:
    base: RunConfig
    algorithms: tuple[str, ...]
    modes: tuple[str, ...]
    seeds: tuple[int, ...]

    @classmethod
    def from_mapping(cls, d: dict) -> "CampaignConfig":
        d = dict(d)
        algorithms = tuple(d.pop("algorithms", [d.get("algorithm", "turbo1")]))
        modes = tuple(d.pop("modes", [d.get("mode", "concurrent")]))
        seeds = tuple(int(s) for s in d.pop("seeds", [d.get("seed", 0)]))
        base = RunConfig.from_mapping(d)
        for a in algorithms:
            if a not in KINDS:
                raise ConfigError(f"unknown algorithm {a!r}")
        for m in modes:
            if m not in MODES:
                raise ConfigError(f"unknown mode {m!r}")
        if not seeds:
            raise ConfigError("campaign needs at least one seed")
        return cls(base, algorithms, modes, seeds)

    @classmethod
    def from_toml(cls, path) -> "CampaignConfig":
        return cls.from_mapping(load_toml(path))

    def runs(self) -> list[RunConfig]:
        return [replace(self.base, algorithm=a, seed=s,
                        strategy=replace(self.base.strategy, mode=m))
                for a in self.algorithms for m in self.modes for s in self.seeds]


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(int(raw), 1)
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None


def run_campaign(cfg: CampaignConfig, workers: int | None = None) -> tuple[dict, dict]:
    """Run every (algorithm, mode, seed) cell; returns (traces by cell, summary).

    Writes one trace per run and ``summary.json`` when an output directory is set.
    """
    configs = cfg.runs()
    workers = worker_count() if workers is None else workers
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            traces = list(pool.map(run, configs))
    else:
        traces = [run(c) for c in configs]
    cells: dict[tuple[str, str], list[Trace]] = {}
    for c, t in zip(configs, traces):
        cells.setdefault((c.algorithm, c.strategy.mode), []).append(t)
    summary = aggregate(cells)
    summary["config"] = {"algorithms": list(cfg.algorithms), "modes": list(cfg.modes),
                         "seeds": list(cfg.seeds), "budget": cfg.base.strategy.budget,
                         "mesh": [cfg.base.nx, cfg.base.ny]}
    if cfg.base.output_dir is not None:
        out = Path(cfg.base.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return cells, summary
