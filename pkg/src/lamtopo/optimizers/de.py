"""Differential evolution, best/1/bin with generational (batch) selection."""
from __future__ import annotations

import numpy as np

from .base import Optimizer, clip_unit


class DifferentialEvolution(Optimizer):
    kind = "de"

    def __init__(self, dim: int, seed: int = 0, popsize_factor: int = 10,
                 crossover: float = 0.7, mutation: float = 0.8):
        super().__init__(dim, seed)
        if not 0.0 <= crossover <= 1.0:
            raise ValueError("crossover probability must lie in [0, 1]")
        self.n_pop = max(int(popsize_factor) * self.dim, 4)
        self.cr = float(crossover)
        self.f = float(mutation)
        self.population = self.rng.random((self.n_pop, self.dim))
        self.fitness = np.full(self.n_pop, np.inf)
        self._known = np.zeros(self.n_pop, dtype=bool)
        self._trials: np.ndarray | None = None
        self.generation = 0

    def warm_start(self, x, f: float) -> None:
        super().warm_start(x, f)
        self.population[0] = clip_unit(np.asarray(x, dtype=float).ravel())
        self.fitness[0] = f
        self._known[0] = True

    @property
    def initialized(self) -> bool:
        return bool(self._known.all())

    def ask(self) -> np.ndarray:
        if not self.initialized:
            self._trials = None
            return self.population[~self._known].copy()
        self._trials = self._make_trials()
        return self._trials.copy()

    def _make_trials(self) -> np.ndarray:
        n, d = self.n_pop, self.dim
        best = self.population[int(np.argmin(self.fitness))]
        trials = np.empty((n, d))
        for i in range(n):
            r1, r2 = self.rng.choice(np.delete(np.arange(n), i), 2, replace=False)
            mutant = best + self.f * (self.population[r1] - self.population[r2])
            mask = self.rng.random(d) < self.cr
            mask[self.rng.integers(d)] = True
            trials[i] = np.where(mask, mutant, self.population[i])
        return clip_unit(trials)

    def tell(self, x, f) -> None:
        x, f = self._check(x, f)
        self._record(x, f)
        if self._trials is None:
            idx = np.nonzero(~self._known)[0]
            if idx.size != f.size:
                raise ValueError("initial population must be told in full")
            self.population[idx] = x
            self.fitness[idx] = f
            self._known[idx] = True
            return
        if f.size != self.n_pop:
            raise ValueError(f"DE needs all {self.n_pop} trials, got {f.size}")
        better = f <= self.fitness
        self.population[better] = x[better]
        self.fitness[better] = f[better]
        self._trials = None
        self.generation += 1
