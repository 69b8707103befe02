"""Global GP optimisation with the log expected-improvement acquisition."""
from __future__ import annotations

import numpy as np
from scipy.optimize import minimize
from scipy.special import erfcx, log_ndtr
from scipy.stats import qmc

from .. import surrogate as gp
from .base import Optimizer, clip_unit

_LOG_SQRT_2PI = 0.5 * np.log(2 * np.pi)
_SQRT_HALF_PI = np.sqrt(np.pi / 2)


def log_h(z) -> np.ndarray:
    """log(phi(z) + z Phi(z)), stable for very negative z."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    big = z > -1.0
    zb = z[big]
    out[big] = np.log(np.exp(-0.5 * zb * zb - _LOG_SQRT_2PI) + zb * np.exp(log_ndtr(zb)))
    zs = z[~big]
    # phi(z) (1 + z Phi(z)/phi(z)), with Phi/phi = sqrt(pi/2) erfcx(-z/sqrt2)
    inner = np.log1p(zs * _SQRT_HALF_PI * erfcx(-zs / np.sqrt(2.0)))
    out[~big] = -0.5 * zs * zs - _LOG_SQRT_2PI + inner
    return out


def log_expected_improvement(mean, var, best) -> np.ndarray:
    sigma = np.sqrt(np.maximum(var, 1e-300))
    return log_h((best - mean) / sigma) + np.log(sigma)


class VanillaBO(Optimizer):
    kind = "vanilla_bo"

    def __init__(self, dim: int, seed: int = 0, n_initial: int | None = None,
                 n_raw: int = 1000, n_local: int = 3, max_train: int = 300):
        super().__init__(dim, seed)
        self.n_initial = n_initial or 3 * self.dim
        self.n_raw, self.n_local, self.max_train = n_raw, n_local, max_train
        self._x = np.empty((0, self.dim))
        self._f = np.empty(0)
        self._params: gp.KernelParams | None = None
        lhs = qmc.LatinHypercube(d=self.dim, seed=int(self.rng.integers(2 ** 63)))
        self._pending_init = lhs.random(self.n_initial)

    def warm_start(self, x, f: float) -> None:
        super().warm_start(x, f)
        self._x = np.vstack([self._x, clip_unit(np.asarray(x, float).reshape(1, self.dim))])
        self._f = np.append(self._f, float(f))

    def _data(self) -> gp.Dataset:
        x, f = self._x, self._f
        if f.size > self.max_train:
            keep = np.sort(np.argsort(f, kind="stable")[:self.max_train])
            x, f = x[keep], f[keep]
        return gp.Dataset(x, f)

    def ask(self) -> np.ndarray:
        if self._pending_init is not None:
            return self._pending_init.copy()
        try:
            data = self._data()
            self._params = gp.fit_mle(data, n_restarts=1 if self._params else 4,
                                      seed=int(self.rng.integers(2 ** 31)),
                                      init=self._params, maxiter=50)
            post = gp._Posterior.build(self._params, data)
            best = float(data.standardized().min())

            def neg_acq(q):
                m, v = post.standardized_moments(np.atleast_2d(q))
                return -log_expected_improvement(m, np.maximum(v, self._params.noise_variance), best)

            raw = self.rng.random((self.n_raw, self.dim))
            vals = neg_acq(raw)
            starts = raw[np.argsort(vals, kind="stable")[:self.n_local]]
            best_x, best_v = starts[0], float(vals.min())
            for s in starts:
                res = minimize(lambda q: float(neg_acq(q)[0]), s, method="L-BFGS-B",
                               bounds=[(0.0, 1.0)] * self.dim, options={"maxiter": 50})
                if np.isfinite(res.fun) and res.fun < best_v:
                    best_x, best_v = res.x, float(res.fun)
            return clip_unit(np.asarray(best_x))[None, :]
        except (gp.SurrogateError, np.linalg.LinAlgError, ValueError):
            self._params = None
            return self.rng.random((1, self.dim))

    def tell(self, x, f) -> None:
        x, f = self._check(x, f)
        self._record(x, f)
        self._pending_init = None
        self._x = np.vstack([self._x, x])
        self._f = np.concatenate([self._f, f])
