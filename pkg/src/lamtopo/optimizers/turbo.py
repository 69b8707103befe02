"""Trust-region Bayesian optimisation with a single local GP (TuRBO-1 style).

Batch size is one: after the initial design every ask returns the Thompson
minimiser over candidates drawn inside the trust region.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc

from .. import surrogate as gp
from .base import Optimizer, clip_unit


@dataclass(frozen=True)
class TrustRegionConfig:
    length_init: float = 0.8
    length_min: float = 0.5 ** 7
    length_max: float = 1.6
    success_tolerance: int = 3
    failure_tolerance: int | None = None  # None -> max(4, d)
    n_candidates: int = 512
    n_initial: int | None = None  # None -> 3 d
    max_train: int = 200
    refit_every: int = 1
    refit_maxiter: int = 30
    improvement_rtol: float = 1e-3

    def __post_init__(self):
        if not 0 < self.length_min < self.length_init <= self.length_max:
            raise ValueError("need 0 < length_min < length_init <= length_max")
        if (self.success_tolerance < 1 or self.max_train < 2 or self.refit_every < 1
                or self.n_candidates < 1):
            raise ValueError("tolerances and sizes must be positive")


class TrustRegionBO(Optimizer):
    kind = "turbo1"

    def __init__(self, dim: int, seed: int = 0, config: TrustRegionConfig = TrustRegionConfig()):
        super().__init__(dim, seed)
        d = self.dim
        self.config = config
        self.failure_tolerance = config.failure_tolerance or max(4, d)
        self.n_candidates = int(config.n_candidates)
        self.n_initial = config.n_initial or 3 * d
        self.length = config.length_init
        self.success_count = 0
        self.failure_count = 0
        self.n_restarts = 0
        self.n_surrogate_failures = 0
        self.length_history: list[float] = [self.length]
        self._run_x = np.empty((0, d))
        self._run_f = np.empty(0)
        self._params: gp.KernelParams | None = None
        self._fits_since_full = 0
        self._need_refit = True
        self._pending_init = self._initial_design()

    # --- design generation -------------------------------------------------
    def _sub_seed(self) -> int:
        return int(self.rng.integers(2 ** 63))

    def _initial_design(self) -> np.ndarray:
        lhs = qmc.LatinHypercube(d=self.dim, seed=self._sub_seed())
        return lhs.random(self.n_initial)

    def trust_region(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(center, lower, upper) of the current region."""
        center = self._run_x[int(np.argmin(self._run_f))]
        if self._params is None:
            weights = np.ones(self.dim)
        else:
            ls = self._params.lengthscales
            weights = ls / ls.mean()
            weights = weights / np.prod(weights) ** (1.0 / self.dim)
        half = weights * self.length / 2.0
        return center, clip_unit(center - half), clip_unit(center + half)

    def _candidates(self, center, lo, hi) -> np.ndarray:
        sobol = qmc.Sobol(d=self.dim, scramble=True, seed=self._sub_seed())
        m = max(int(np.ceil(np.log2(self.n_candidates))), 0)
        pert = lo + (hi - lo) * sobol.random_base2(m)[:self.n_candidates]
        prob = min(20.0 / self.dim, 1.0)
        mask = self.rng.random((self.n_candidates, self.dim)) <= prob
        empty = ~mask.any(axis=1)
        mask[empty, self.rng.integers(self.dim, size=int(empty.sum()))] = True
        return np.where(mask, pert, center)

    # --- surrogate ---------------------------------------------------------
    def _training_set(self) -> gp.Dataset:
        x, f = self._run_x, self._run_f
        if f.size > self.config.max_train:
            center = x[int(np.argmin(f))]
            near = np.argsort(np.sum((x - center) ** 2, axis=1), kind="stable")
            keep = np.sort(near[:self.config.max_train])
            x, f = x[keep], f[keep]
        return gp.Dataset(x, f)

    def _fit(self, data: gp.Dataset) -> gp.KernelParams:
        cold = self._params is None
        if cold:
            params = gp.fit_mle(data, n_restarts=4, seed=self._sub_seed())
        else:
            params = gp.fit_mle(data, n_restarts=1, seed=0, init=self._params,
                                maxiter=self.config.refit_maxiter)
        return params

    # --- protocol ----------------------------------------------------------
    def ask(self) -> np.ndarray:
        if self._pending_init is not None:
            return self._pending_init.copy()
        center, lo, hi = self.trust_region()
        try:
            data = self._training_set()
            if self._need_refit or self._params is None:
                self._params = self._fit(data)
                self._need_refit = False
            cand = self._candidates(center, lo, hi)
            idx = gp.thompson_sample(self._params, data, cand, self.rng)
            return cand[idx:idx + 1].copy()
        except (gp.SurrogateError, np.linalg.LinAlgError, ValueError):
            self.n_surrogate_failures += 1
            self._params = None
            self._need_refit = True
            return (lo + (hi - lo) * self.rng.random(self.dim))[None, :]

    def warm_start(self, x, f: float) -> None:
        super().warm_start(x, f)
        x = clip_unit(np.asarray(x, dtype=float).reshape(1, self.dim))
        self._run_x = np.vstack([self._run_x, x])
        self._run_f = np.append(self._run_f, float(f))

    def tell(self, x, f) -> None:
        x, f = self._check(x, f)
        self._record(x, f)
        if self._pending_init is not None:
            self._pending_init = None
            self._add(x, f)
            self._need_refit = True
            return
        prev_best = float(self._run_f.min())
        self._add(x, f)
        if f.min() < prev_best - self.config.improvement_rtol * abs(prev_best):
            self.success_count += 1
            self.failure_count = 0
        else:
            self.success_count = 0
            self.failure_count += 1
        self._adjust_length()
        self._fits_since_full += 1
        if self._fits_since_full >= self.config.refit_every:
            self._fits_since_full = 0
            self._need_refit = True

    def _add(self, x, f) -> None:
        self._run_x = np.vstack([self._run_x, x])
        self._run_f = np.concatenate([self._run_f, f])

    def _adjust_length(self) -> None:
        cfg = self.config
        if self.success_count >= cfg.success_tolerance:
            self.length = min(2.0 * self.length, cfg.length_max)
            self.success_count = 0
        elif self.failure_count >= self.failure_tolerance:
            self.length /= 2.0
            self.failure_count = 0
        self.length_history.append(self.length)
        if self.length < cfg.length_min:
            self._restart()

    def _restart(self) -> None:
        self.n_restarts += 1
        self.length = self.config.length_init
        self.success_count = self.failure_count = 0
        self._run_x = np.empty((0, self.dim))
        self._run_f = np.empty(0)
        self._params = None
        self._need_refit = True
        self._pending_init = self._initial_design()
