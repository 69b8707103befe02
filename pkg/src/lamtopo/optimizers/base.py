"""Ask/tell protocol shared by all optimizers; every search space is the unit cube."""
from __future__ import annotations

import numpy as np


class Optimizer:
    """Minimiser over [0, 1]^dim.

    ``ask`` returns a batch of points (rows); ``tell`` receives the same rows
    with their objective values, in ask order.
    """

    kind = "base"

    def __init__(self, dim: int, seed: int = 0):
        if dim < 1:
            raise ValueError("dimension must be >= 1")
        self.dim = int(dim)
        self.seed = int(seed)
        self.rng = np.random.default_rng(seed)
        self.n_told = 0
        self.best_x: np.ndarray | None = None
        self.best_f = np.inf

    def ask(self) -> np.ndarray:
        raise NotImplementedError

    def tell(self, x, f) -> None:
        x, f = self._check(x, f)
        self._record(x, f)

    def warm_start(self, x, f: float) -> None:
        """Register an already evaluated point (does not count toward the budget)."""
        x = np.clip(np.asarray(x, dtype=float).reshape(1, self.dim), 0.0, 1.0)
        if f < self.best_f:
            self.best_f, self.best_x = float(f), x[0].copy()

    def _check(self, x, f) -> tuple[np.ndarray, np.ndarray]:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        f = np.atleast_1d(np.asarray(f, dtype=float))
        if x.shape != (f.size, self.dim):
            raise ValueError(f"tell got x of shape {x.shape} for {f.size} values")
        return x, f

    def _record(self, x: np.ndarray, f: np.ndarray) -> None:
        self.n_told += f.size
        i = int(np.argmin(f))
        if f[i] < self.best_f:
            self.best_f, self.best_x = float(f[i]), x[i].copy()


def clip_unit(x: np.ndarray) -> np.ndarray:
    return np.clip(x, 0.0, 1.0)
