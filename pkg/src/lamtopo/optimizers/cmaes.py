"""Active CMA-ES (rank-one + rank-mu updates with negative recombination weights).

Constants follow Hansen's 2016 tutorial.  Samples leaving the cube are
clamped, and the update uses the step actually taken, so the mean stays a
convex combination of feasible points.
"""
from __future__ import annotations

import math

import numpy as np

from .base import Optimizer, clip_unit


def cmaes_config(d: int) -> tuple[int, int]:
    """Default (lambda, mu) = (4 + floor(3 ln d), floor(lambda / 2))."""
    if d < 1:
        raise ValueError("dimension must be >= 1")
    lam = 4 + int(math.floor(3 * math.log(d)))
    return lam, lam // 2


class CMAES(Optimizer):
    kind = "cmaes"

    def __init__(self, dim: int, seed: int = 0, sigma0: float = 0.3, mean0=None,
                 popsize: int | None = None, active: bool = True):
        super().__init__(dim, seed)
        n = self.dim
        lam, mu = cmaes_config(n)
        if popsize is not None:
            lam, mu = int(popsize), int(popsize) // 2
        self.lam, self.mu = lam, mu
        self.active = active

        raw = math.log((lam + 1) / 2) - np.log(np.arange(1, lam + 1))
        pos, neg = raw[:mu], raw[mu:]
        self.mueff = pos.sum() ** 2 / (pos ** 2).sum()
        mueff_neg = neg.sum() ** 2 / (neg ** 2).sum() if neg.size and np.any(neg) else 0.0

        self.cc = (4 + self.mueff / n) / (n + 4 + 2 * self.mueff / n)
        self.cs = (self.mueff + 2) / (n + self.mueff + 5)
        self.c1 = 2 / ((n + 1.3) ** 2 + self.mueff)
        self.cmu = min(1 - self.c1,
                       2 * (0.25 + self.mueff + 1 / self.mueff - 2) / ((n + 2) ** 2 + self.mueff))
        self.damps = 1 + 2 * max(0.0, math.sqrt((self.mueff - 1) / (n + 1)) - 1) + self.cs
        self.chi_n = math.sqrt(n) * (1 - 1 / (4 * n) + 1 / (21 * n * n))

        w = np.zeros(lam)
        w[:mu] = pos / pos.sum()
        if active and neg.size and np.any(neg):
            alpha = min(1 + self.c1 / self.cmu,
                        1 + 2 * mueff_neg / (self.mueff + 2),
                        (1 - self.c1 - self.cmu) / (n * self.cmu))
            w[mu:] = alpha * neg / np.abs(neg).sum()
        self.weights = w

        self.mean = np.full(n, 0.5) if mean0 is None else clip_unit(np.asarray(mean0, float))
        self.sigma = float(sigma0)
        self.C = np.eye(n)
        self.B = np.eye(n)
        self.D = np.ones(n)
        self.ps = np.zeros(n)
        self.pc = np.zeros(n)
        self.generation = 0
        self._pending: np.ndarray | None = None

    def warm_start(self, x, f: float) -> None:
        super().warm_start(x, f)
        self.mean = clip_unit(np.asarray(x, dtype=float).ravel())

    def ask(self) -> np.ndarray:
        z = self.rng.standard_normal((self.lam, self.dim))
        y = (z * self.D) @ self.B.T
        x = clip_unit(self.mean + self.sigma * y)
        self._pending = x
        return x.copy()

    def tell(self, x, f) -> None:
        x, f = self._check(x, f)
        if f.size != self.lam:
            raise ValueError(f"CMA-ES needs all {self.lam} offspring, got {f.size}")
        self._record(x, f)
        n = self.dim
        order = np.argsort(f, kind="stable")
        y = (x[order] - self.mean) / self.sigma
        w = self.weights

        y_w = w[:self.mu] @ y[:self.mu]
        self.mean = self.mean + self.sigma * y_w

        inv_sqrt_c = (self.B / self.D) @ self.B.T
        self.ps = ((1 - self.cs) * self.ps
                   + math.sqrt(self.cs * (2 - self.cs) * self.mueff) * inv_sqrt_c @ y_w)
        self.generation += 1
        ps_norm = np.linalg.norm(self.ps)
        hsig = ps_norm / math.sqrt(1 - (1 - self.cs) ** (2 * self.generation)) \
            < (1.4 + 2 / (n + 1)) * self.chi_n
        self.pc = ((1 - self.cc) * self.pc
                   + hsig * math.sqrt(self.cc * (2 - self.cc) * self.mueff) * y_w)

        w_eff = w.copy()
        neg = w < 0
        if np.any(neg):
            mahal = np.sum((y[neg] @ inv_sqrt_c.T) ** 2, axis=1)
            w_eff[neg] = w[neg] * n / np.maximum(mahal, 1e-300)
        delta_h = (1 - hsig) * self.cc * (2 - self.cc)
        rank_mu = (y * w_eff[:, None]).T @ y
        self.C = ((1 + self.c1 * delta_h - self.c1 - self.cmu * w.sum()) * self.C
                  + self.c1 * np.outer(self.pc, self.pc) + self.cmu * rank_mu)

        self.sigma *= math.exp(min(1.0, (self.cs / self.damps) * (ps_norm / self.chi_n - 1)))
        self._decompose()

    def _decompose(self) -> None:
        c = 0.5 * (self.C + self.C.T)
        evals, evecs = np.linalg.eigh(c)
        floor = 1e-14 * max(np.trace(c), 1e-300)
        if evals.min() < floor:
            evals = np.maximum(evals, floor)
            c = (evecs * evals) @ evecs.T
        self.C = c
        self.B = evecs
        self.D = np.sqrt(evals)
