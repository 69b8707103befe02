"""Gaussian-process regression with an ARD Matern-5/2 kernel.

Outputs are standardised before fitting; kernel amplitudes and the noise
variance therefore live in standardised units, while ``predict`` returns
means and variances on the original scale.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.optimize import minimize

SQRT5 = np.sqrt(5.0)
NOISE_FLOOR = 1e-8
LENGTHSCALE_BOUNDS = (1e-3, 1e3)
SIGNAL_BOUNDS = (1e-2, 1e2)
NOISE_BOUNDS = (NOISE_FLOOR, 1.0)
JITTERS = (0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6)


class SurrogateError(RuntimeError):
    pass


@dataclass(frozen=True)
class KernelParams:
    lengthscales: np.ndarray
    signal_variance: float = 1.0
    noise_variance: float = 1e-6

    def __post_init__(self):
        ls = np.atleast_1d(np.asarray(self.lengthscales, dtype=float))
        if np.any(ls <= 0) or self.signal_variance <= 0 or self.noise_variance <= 0:
            raise ValueError("kernel parameters must be positive")
        object.__setattr__(self, "lengthscales", ls)
        object.__setattr__(self, "noise_variance", max(float(self.noise_variance), NOISE_FLOOR))

    def to_log(self) -> np.ndarray:
        return np.log(np.concatenate([self.lengthscales, [self.signal_variance, self.noise_variance]]))

    @classmethod
    def from_log(cls, theta) -> "KernelParams":
        e = np.exp(theta)
        return cls(e[:-2], float(e[-2]), float(e[-1]))


@dataclass
class Dataset:
    inputs: np.ndarray
    outputs: np.ndarray

    def __post_init__(self):
        self.inputs = np.atleast_2d(np.asarray(self.inputs, dtype=float))
        self.outputs = np.asarray(self.outputs, dtype=float).ravel()
        if self.inputs.shape[0] != self.outputs.size:
            raise ValueError("inputs and outputs differ in length")

    @property
    def dim(self) -> int:
        return self.inputs.shape[1]

    def __len__(self) -> int:
        return self.outputs.size

    @property
    def mean(self) -> float:
        return float(self.outputs.mean())

    @property
    def std(self) -> float:
        s = float(self.outputs.std())
        return s if s > 0 else 1.0

    def standardized(self) -> np.ndarray:
        return (self.outputs - self.mean) / self.std


def _scaled_sqdist(x1, x2, lengthscales) -> np.ndarray:
    a = np.asarray(x1, dtype=float) / lengthscales
    b = np.asarray(x2, dtype=float) / lengthscales
    d2 = (a * a).sum(1)[:, None] + (b * b).sum(1)[None, :] - 2.0 * a @ b.T
    return np.maximum(d2, 0.0)


def matern52_matrix(params: KernelParams, x1, x2) -> np.ndarray:
    r = np.sqrt(_scaled_sqdist(np.atleast_2d(x1), np.atleast_2d(x2), params.lengthscales))
    return params.signal_variance * (1 + SQRT5 * r + 5.0 / 3.0 * r * r) * np.exp(-SQRT5 * r)


def matern52(params: KernelParams, x, x2) -> float:
    """Covariance of two single points."""
    r = np.sqrt(np.sum(((np.asarray(x, float) - np.asarray(x2, float)) / params.lengthscales) ** 2))
    return float(params.signal_variance * (1 + SQRT5 * r + 5.0 / 3.0 * r * r) * np.exp(-SQRT5 * r))


def _cholesky(k: np.ndarray) -> np.ndarray:
    scale = max(float(np.mean(np.diag(k))), 1e-300)
    for jitter in JITTERS:
        try:
            return np.linalg.cholesky(k + jitter * scale * np.eye(k.shape[0]))
        except np.linalg.LinAlgError:
            continue
    raise SurrogateError("covariance matrix is not positive definite even with jitter")


def neg_log_likelihood(theta: np.ndarray, x: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
    """Negative log marginal likelihood and its gradient in log-parameters."""
    n = y.size
    ls = np.exp(theta[:-2])
    sf2, sn2 = np.exp(theta[-2]), np.exp(theta[-1])
    d2 = _scaled_sqdist(x, x, ls)
    r = np.sqrt(d2)
    e = np.exp(-SQRT5 * r)
    kern = (1 + SQRT5 * r + 5.0 / 3.0 * d2) * e
    k = sf2 * kern + sn2 * np.eye(n)
    try:
        chol = np.linalg.cholesky(k)
    except np.linalg.LinAlgError:
        return 1e25, np.zeros_like(theta)
    alpha = cho_solve((chol, True), y)
    nll = 0.5 * y @ alpha + np.log(np.diag(chol)).sum() + 0.5 * n * np.log(2 * np.pi)
    w = np.outer(alpha, alpha) - cho_solve((chol, True), np.eye(n))
    # dK/dlog(l_i) = sf2 * 5/3 (1 + sqrt5 r) e^{-sqrt5 r} * (dx_i / l_i)^2
    m = w * (sf2 * 5.0 / 3.0 * (1 + SQRT5 * r) * e)
    xs = x / ls
    grad_ls = (xs * xs).T @ m.sum(1) - np.sum(xs * (m @ xs), axis=0)
    grad = np.concatenate([grad_ls, [0.5 * np.sum(w * (sf2 * kern)), 0.5 * sn2 * np.trace(w)]])
    return float(nll), -grad


def _log_bounds(d: int) -> list[tuple[float, float]]:
    return ([tuple(np.log(LENGTHSCALE_BOUNDS))] * d
            + [tuple(np.log(SIGNAL_BOUNDS)), tuple(np.log(NOISE_BOUNDS))])


def median_heuristic(data: Dataset) -> KernelParams:
    x = data.inputs
    d2 = _scaled_sqdist(x, x, np.ones(data.dim))
    iu = np.triu_indices(len(data), 1)
    med = float(np.sqrt(np.median(d2[iu]))) if iu[0].size else 1.0
    ls = np.clip(med if med > 0 else 1.0, *LENGTHSCALE_BOUNDS)
    return KernelParams(np.full(data.dim, ls), 1.0, 1e-6)


def fit_mle(data: Dataset, n_restarts: int = 4, seed: int = 0,
            init: KernelParams | None = None, maxiter: int = 200) -> KernelParams:
    """Maximise the log marginal likelihood by multi-start L-BFGS-B.

    Starts: ``init`` (or a default of lengthscale 0.5), then random log-uniform
    draws from a seeded generator.  The best point found, start points
    included, is returned.
    """
    if len(data) < 2:
        raise ValueError("need at least two observations")
    x, y = data.inputs, data.standardized()
    d = data.dim
    bounds = _log_bounds(d)
    rng = np.random.default_rng(seed)
    first = init if init is not None else KernelParams(np.full(d, 0.5), 1.0, 1e-4)
    starts = [np.clip(first.to_log(), [b[0] for b in bounds], [b[1] for b in bounds])]
    for _ in range(n_restarts - 1):
        starts.append(np.concatenate([
            rng.uniform(np.log(0.05), np.log(2.0), d),
            [rng.uniform(np.log(0.5), np.log(2.0)), rng.uniform(np.log(1e-6), np.log(1e-2))],
        ]))
    best_theta, best_val = None, np.inf
    for theta0 in starts:
        val0, _ = neg_log_likelihood(theta0, x, y)
        if np.isfinite(val0) and val0 < best_val:
            best_theta, best_val = theta0, val0
        try:
            res = minimize(neg_log_likelihood, theta0, args=(x, y), jac=True,
                           method="L-BFGS-B", bounds=bounds, options={"maxiter": maxiter})
        except (ValueError, np.linalg.LinAlgError):
            continue
        if np.isfinite(res.fun) and res.fun < best_val:
            best_theta, best_val = res.x, float(res.fun)
    if best_theta is None or best_val >= 1e25:
        return median_heuristic(data)
    return KernelParams.from_log(best_theta)


@dataclass
class _Posterior:
    params: KernelParams
    data: Dataset
    chol: np.ndarray
    alpha: np.ndarray

    @classmethod
    def build(cls, params: KernelParams, data: Dataset) -> "_Posterior":
        k = matern52_matrix(params, data.inputs, data.inputs)
        k[np.diag_indices_from(k)] += params.noise_variance
        chol = _cholesky(k)
        return cls(params, data, chol, cho_solve((chol, True), data.standardized()))

    def standardized_moments(self, q: np.ndarray, full_cov: bool = False):
        kxq = matern52_matrix(self.params, self.data.inputs, q)
        mean = kxq.T @ self.alpha
        v = solve_triangular(self.chol, kxq, lower=True)
        if full_cov:
            return mean, matern52_matrix(self.params, q, q) - v.T @ v
        var = self.params.signal_variance - np.sum(v * v, axis=0)
        return mean, var


def predict(params: KernelParams, data: Dataset, query_points) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and latent variance (floored at the noise variance), original units."""
    q = np.atleast_2d(np.asarray(query_points, dtype=float))
    post = _Posterior.build(params, data)
    mean, var = post.standardized_moments(q)
    var = np.maximum(var, params.noise_variance)
    return data.mean + data.std * mean, data.std ** 2 * var


def thompson_sample(params: KernelParams, data: Dataset, candidates, rng: np.random.Generator) -> int:
    """Index of the minimiser of one joint posterior draw over ``candidates``."""
    c = np.atleast_2d(np.asarray(candidates, dtype=float))
    if c.shape[0] == 1:
        return 0
    post = _Posterior.build(params, data)
    mean, cov = post.standardized_moments(c, full_cov=True)
    chol = _cholesky(0.5 * (cov + cov.T))
    draw = mean + chol @ rng.standard_normal(c.shape[0])
    return int(np.argmin(draw))
