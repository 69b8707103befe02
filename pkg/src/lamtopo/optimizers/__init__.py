"""Unit-cube minimisers behind a common ask/tell interface."""
from __future__ import annotations

from dataclasses import dataclass, field

from .base import Optimizer, clip_unit
from .cmaes import CMAES, cmaes_config
from .de import DifferentialEvolution
from .random_search import RandomSearch
from .turbo import TrustRegionBO, TrustRegionConfig
from .vanilla_bo import VanillaBO, log_expected_improvement

KINDS = ("cmaes", "de", "turbo1", "vanilla_bo", "random")


@dataclass(frozen=True)
class OptimizerSpec:
    kind: str
    dim: int
    seed: int = 0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown optimizer kind {self.kind!r}; choose from {KINDS}")
        if self.dim < 1:
            raise ValueError("dimension must be >= 1")


def make_optimizer(spec: OptimizerSpec) -> Optimizer:
    p = dict(spec.params)
    if spec.kind == "cmaes":
        return CMAES(spec.dim, spec.seed, **p)
    if spec.kind == "de":
        return DifferentialEvolution(spec.dim, spec.seed, **p)
    if spec.kind == "turbo1":
        return TrustRegionBO(spec.dim, spec.seed, TrustRegionConfig(**p))
    if spec.kind == "vanilla_bo":
        return VanillaBO(spec.dim, spec.seed, **p)
    return RandomSearch(spec.dim, spec.seed, **p)


def minimize_batch(opt: Optimizer, func, budget: int) -> list[float]:
    """Drive ``opt`` on ``func`` (row-wise) for exactly ``budget`` evaluations; returns the values."""
    values: list[float] = []
    while len(values) < budget:
        asked = opt.ask()
        x = asked[:budget - len(values)]
        f = [float(func(row)) for row in x]
        values.extend(f)
        if len(x) == len(asked):
            opt.tell(x, f)
    return values


__all__ = [
    "CMAES", "DifferentialEvolution", "KINDS", "Optimizer", "OptimizerSpec", "RandomSearch",
    "TrustRegionBO", "TrustRegionConfig", "VanillaBO", "clip_unit", "cmaes_config",
    "log_expected_improvement", "make_optimizer", "minimize_batch",
]
