"""Laminated-composite cantilever topology benchmark for black-box optimisers.

Three mirrored moving morphable components define the material layout, a
lamination-parameter field interpolated from three master values defines the
stiffness, and a membrane finite-element model returns the compliance.
"""
from .campaign import (
    CampaignConfig, RunConfig, StrategySpec, Trace, aggregate, budget_split, run,
    run_campaign, wilcoxon_signed_rank,
)
from .evaluation import (
    DEFAULT_BOUNDS, N_DIM, Bounds, CantileverProblem, EvaluationRecord, PenaltyConfig,
    decode, encode, evaluate,
)
from .optimizers import OptimizerSpec, make_optimizer

__version__ = "0.1.0"

__all__ = [
    "Bounds", "CampaignConfig", "CantileverProblem", "DEFAULT_BOUNDS", "EvaluationRecord",
    "N_DIM", "OptimizerSpec", "PenaltyConfig", "RunConfig", "StrategySpec", "Trace",
    "aggregate", "budget_split", "decode", "encode", "evaluate", "make_optimizer", "run",
    "run_campaign", "wilcoxon_signed_rank",
]
