"""Gaussian-process surrogate in the (eta, r) parameterization.

The covariance of the observations is ``V_X = W_X / eta`` with
``W_X = r K_X + (1 - r) I``, so ``sigma^2 = r / eta`` is the surface variance
and ``tau^2 = (1 - r) / eta`` the nugget. Predictions are of the latent
surface, not of a new noisy observation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from solidopt import kernels

__all__ = [
    "GpParams",
    "FittedSurface",
    "MarginalSurface",
    "kernel",
    "build_surface",
    "predict",
    "predict_gradients",
    "log_likelihood",
    "marginal_surface",
]

LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class GpParams:
    """One posterior state of the GP parameters."""

    mu: float
    eta: float
    r: float
    u: np.ndarray
    b: np.ndarray
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "u", np.asarray(self.u, dtype=float))
        object.__setattr__(self, "b", np.asarray(self.b, dtype=np.int8))
        if not self.eta > 0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if not 0.0 < self.r < 1.0:
            raise ValueError(f"r must lie in (0, 1), got {self.r}")
        if np.any(self.u < 0):
            raise ValueError("range magnitudes u must be non-negative")
        if not np.all((self.b == 0) | (self.b == 1)):
            raise ValueError("inclusion indicators b must be 0 or 1")
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError(f"theta must lie in [0, 1], got {self.theta}")
        if self.u.shape != self.b.shape:
            raise ValueError("u and b must have the same length")

    @property
    def p(self) -> int:
        return self.u.size

    @property
    def gamma(self) -> np.ndarray:
        return self.u * self.b

    @property
    def sigma2(self) -> float:
        return self.r / self.eta

    @property
    def tau2(self) -> float:
        return (1.0 - self.r) / self.eta

    def with_inactive(self, k: int) -> "GpParams":
        """Copy with variable ``k`` switched off (gamma_k = 0), everything else unchanged."""
        b = self.b.copy()
        b[k] = 0
        return replace(self, b=b)

    def subset(self, keep) -> "GpParams":
        keep = np.asarray(keep)
        return replace(self, u=self.u[keep], b=self.b[keep])


def kernel(x, x2, gamma) -> float:
    """Squared-exponential correlation exp(-sum_k gamma_k (x_k - x2_k)^2)."""
    gamma = np.asarray(gamma, dtype=float)
    if np.any(gamma < 0):
        raise ValueError("correlation ranges gamma must be non-negative")
    d = np.asarray(x, dtype=float) - np.asarray(x2, dtype=float)
    return float(np.exp(-np.dot(gamma, d * d)))


@dataclass(frozen=True, eq=False)
class FittedSurface:
    """GP conditioned on (X, y) under one parameter state, with the factorization cached."""

    params: GpParams
    X: np.ndarray
    y: np.ndarray
    chol: np.ndarray
    alpha: np.ndarray
    logdet: float
    _linv: list = field(default_factory=list, repr=False)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    def w_matrix(self) -> np.ndarray:
        """W_X without jitter."""
        E = kernels.sq_exp_exponent(self.X, self.X, self.params.gamma)
        W = self.params.r * np.exp(-E)
        W[np.diag_indices(self.n)] = 1.0
        return W

    @property
    def chol_inv(self) -> np.ndarray:
        if not self._linv:
            self._linv.append(solve_triangular(self.chol, np.eye(self.n), lower=True, check_finite=False))
        return self._linv[0]

    def cross_corr(self, x) -> np.ndarray:
        x = np.atleast_2d(x)
        return np.exp(-kernels.sq_exp_exponent(x, self.X, self.params.gamma))

    def mean(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        m = self.params.mu + self.params.r * (self.cross_corr(x) @ self.alpha)
        return m if x.ndim == 2 else float(m[0])

    def predict(self, x):
        """Predictive mean and variance at one point (p,) or a batch (q, p)."""
        x = np.asarray(x, dtype=float)
        k = self.cross_corr(x)
        pr = self.params
        mean = pr.mu + pr.r * (k @ self.alpha)
        v = solve_triangular(self.chol, k.T, lower=True, check_finite=False)
        var = pr.sigma2 * (1.0 - pr.r * np.einsum("ij,ij->j", v, v))
        var = np.maximum(var, 0.0)
        if x.ndim == 1:
            return float(mean[0]), float(var[0])
        return mean, var

    def gradients(self, x):
        """Gradients of the predictive mean and variance at a single point."""
        x = np.asarray(x, dtype=float)
        pr = self.params
        diff = x - self.X
        k = np.exp(-(diff * diff) @ pr.gamma)
        dk = -2.0 * pr.gamma * diff * k[:, None]  # (n, p)
        dmean = pr.r * (self.alpha @ dk)
        winv_k = cho_solve((self.chol, True), k, check_finite=False)
        dvar = -2.0 * pr.sigma2 * pr.r * (winv_k @ dk)
        return dmean, dvar

    def without(self, k: int) -> "FittedSurface":
        """Refactorized surface with gamma_k temporarily set to zero."""
        return build_surface(self.params.with_inactive(k), self.X, self.y)


def build_surface(params: GpParams, X, y) -> FittedSurface:
    """Assemble and factorize W_X (with jitter escalation) and cache W_X^-1 (y - mu 1)."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.shape[0] or y.shape[0] < 1:
        raise ValueError("X must be (n, p) with n = len(y) >= 1")
    if X.shape[1] != params.p:
        raise ValueError(f"X has {X.shape[1]} columns but params have {params.p}")
    E = kernels.sq_exp_exponent(X, X, params.gamma)
    L, logdet, *_ = kernels.factor_stats(E, params.r, y)
    alpha = cho_solve((L, True), y - params.mu, check_finite=False)
    return FittedSurface(params, X, y, L, alpha, logdet)


def predict(surface: FittedSurface, x):
    return surface.predict(x)


def predict_gradients(surface: FittedSurface, x):
    return surface.gradients(x)


def log_likelihood(params: GpParams, X, y) -> float:
    """Gaussian log-density of y under mean mu and covariance W_X / eta."""
    surf = build_surface(params, X, y)
    n = surf.n
    resid = np.asarray(y, dtype=float) - params.mu
    z = solve_triangular(surf.chol, resid, lower=True, check_finite=False)
    return float(-0.5 * n * LOG_2PI - 0.5 * (surf.logdet - n * math.log(params.eta)) - 0.5 * params.eta * (z @ z))


class MarginalSurface:
    """Average of the per-draw predictive surfaces over a set of fitted draws.

    Mean, variance and their gradients are plain averages over draws. The
    stacked per-draw quantities feed the compiled kernels directly.
    """

    def __init__(self, surfaces):
        surfaces = list(surfaces)
        if not surfaces:
            raise ValueError("marginal surface needs at least one draw")
        self.surfaces = surfaces
        self.X = surfaces[0].X
        self.gammas = np.ascontiguousarray([s.params.gamma for s in surfaces], dtype=float)
        self.alphas = np.ascontiguousarray([s.alpha for s in surfaces], dtype=float)
        self.rs = np.array([s.params.r for s in surfaces])
        self.mus = np.array([s.params.mu for s in surfaces])
        self.sig2s = np.array([s.params.sigma2 for s in surfaces])
        self._linvs = None

    def __len__(self):
        return len(self.surfaces)

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def linvs(self) -> np.ndarray:
        if self._linvs is None:
            self._linvs = np.ascontiguousarray([s.chol_inv for s in self.surfaces])
        return self._linvs

    @property
    def tau2(self) -> float:
        """Posterior mean nugget (1 - r) / eta over the draws."""
        return float(np.mean([s.params.tau2 for s in self.surfaces]))

    def mean(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            return self.mean_grad(x)[0]
        return np.mean([s.mean(x) for s in self.surfaces], axis=0)

    def mean_grad(self, x):
        x = np.ascontiguousarray(x, dtype=float)
        return kernels.marginal_mean_grad(x, self.X, self.gammas, self.alphas, self.rs, self.mus)

    def moments(self, x):
        """Averaged predictive mean and variance at one point (p,) or a batch (q, p)."""
        x = np.asarray(x, dtype=float)
        means, vars_ = zip(*(s.predict(x) for s in self.surfaces))
        return np.mean(means, axis=0), np.mean(vars_, axis=0)

    def moments_grad(self, x):
        x = np.ascontiguousarray(x, dtype=float)
        return kernels.marginal_moments_grad(
            x, self.X, self.gammas, self.alphas, self.rs, self.mus, self.sig2s, self.linvs
        )


def marginal_surface(draws, X, y, x):
    """Draw-averaged predictive mean at ``x`` and its gradient.

    ``draws`` may be fitted surfaces or raw parameter states (refit on X, y).
    """
    surfaces = [d if isinstance(d, FittedSurface) else build_surface(d, X, y) for d in draws]
    return MarginalSurface(surfaces).mean_grad(np.asarray(x, dtype=float))
