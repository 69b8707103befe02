"""Uniform random search baseline."""
from __future__ import annotations

import numpy as np

from .base import Optimizer


class RandomSearch(Optimizer):
    kind = "random"

    def __init__(self, dim: int, seed: int = 0, batch: int = 1):
        super().__init__(dim, seed)
        self.batch = int(batch)

    def ask(self) -> np.ndarray:
        return self.rng.random((self.batch, self.dim))
