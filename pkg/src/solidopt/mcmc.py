"""Metropolis-Hastings within Gibbs sampling of the spike-and-slab GP posterior.

mu, eta, theta and the inclusion indicators b_k are drawn from their
conjugate full conditionals; the variance proportion r and the range
magnitudes u_k get Metropolis-Hastings steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from solidopt import kernels
from solidopt.errors import NotPositiveDefiniteError
from solidopt.gp import LOG_2PI, FittedSurface, GpParams, MarginalSurface, build_surface

__all__ = [
    "Priors",
    "ChainConfig",
    "LikelihoodCache",
    "PosteriorDraws",
    "eta_conditional",
    "mu_conditional",
    "theta_conditional",
    "inclusion_probability",
    "proposal_eps",
    "proposal_interval",
    "gibbs_conjugate_sweep",
    "mh_update_r",
    "mh_update_u",
    "run_chain",
    "thin_indices",
]

R_PROPOSAL_A = 10.0  # Beta(10, 1) independence proposal for r


@dataclass(frozen=True)
class Priors:
    """Hyperparameters. Gamma(a_eta, b_eta) is shape/rate, Gamma(a_u, b_u) is shape/scale."""

    sigma_mu: float = 100.0
    a_eta: float = 0.1
    b_eta: float = 0.1
    a_theta: float = 1.0
    b_theta: float = 1.0
    a_u: float = 1.0
    b_u: float = 10.0

    def __post_init__(self):
        for name, val in vars(self).items():
            if not val > 0:
                raise ValueError(f"prior {name} must be positive, got {val}")

    def log_u_prior(self, u: float) -> float:
        if u < 0:
            return -math.inf
        if u == 0:
            return 0.0 if self.a_u == 1 else (math.inf if self.a_u < 1 else -math.inf)
        return (self.a_u - 1.0) * math.log(u) - u / self.b_u


@dataclass(frozen=True)
class ChainConfig:
    M: int = 1000
    burn_in: int | None = None  # None -> M
    seed: int | None = None

    def __post_init__(self):
        if self.M < 1:
            raise ValueError(f"M must be >= 1, got {self.M}")
        if self.burn_in is not None and self.burn_in < 0:
            raise ValueError("burn_in must be >= 0")

    @property
    def n_burn(self) -> int:
        return self.M if self.burn_in is None else self.burn_in


class LikelihoodCache:
    """Per-dimension squared distances of a design plus the factorization of the current W_X.

    The response is centered internally (``shift``) so the quadratic forms stay
    well conditioned; the conditionals are expressed in terms of the original y.
    """

    def __init__(self, X, y, gamma, r):
        X = np.asarray(X, dtype=float)
        self.y = np.asarray(y, dtype=float)
        self.n, self.p = X.shape
        diff = X[:, None, :] - X[None, :, :]
        self.D = np.ascontiguousarray(np.moveaxis(diff * diff, 2, 0))  # (p, n, n)
        self.shift = float(self.y.mean())
        self.yc = self.y - self.shift
        self.set(np.asarray(gamma, dtype=float), r)

    def exponent(self, gamma) -> np.ndarray:
        return np.tensordot(gamma, self.D, axes=1)

    def evaluate(self, gamma, r):
        return kernels.factor_stats_d(self.D, gamma, r, self.yc)

    def set(self, gamma, r, stats=None):
        self.gamma = np.array(gamma, dtype=float)
        self.r = r
        self.stats = self.evaluate(self.gamma, r) if stats is None else stats

    def quad(self, mu, stats=None) -> float:
        """(y - mu 1)' W^-1 (y - mu 1)."""
        _, _, yWy, oWy, oWo = self.stats if stats is None else stats
        mc = mu - self.shift
        return max(yWy - 2.0 * mc * oWy + mc * mc * oWo, 0.0)

    def one_w_y(self, stats=None) -> float:
        """1' W^-1 y for the uncentered response."""
        _, _, _, oWy, oWo = self.stats if stats is None else stats
        return oWy + self.shift * oWo

    def one_w_one(self, stats=None) -> float:
        return (self.stats if stats is None else stats)[4]

    def loglik(self, mu, eta, stats=None) -> float:
        st = self.stats if stats is None else stats
        n = self.n
        return -0.5 * n * LOG_2PI - 0.5 * st[1] + 0.5 * n * math.log(eta) - 0.5 * eta * self.quad(mu, st)


def eta_conditional(n: int, quad: float, priors: Priors):
    """(shape, rate) of the Gamma full conditional of eta."""
    return n / 2.0 + priors.a_eta, priors.b_eta + 0.5 * quad


def mu_conditional(eta: float, one_w_y: float, one_w_one: float, priors: Priors):
    """(mean, variance) of the Normal full conditional of mu."""
    prec = priors.sigma_mu ** -2 + eta * one_w_one
    return eta * one_w_y / prec, 1.0 / prec


def theta_conditional(b, priors: Priors):
    """(a, b) of the Beta full conditional of theta."""
    s = float(np.sum(b))
    return priors.a_theta + s, priors.b_theta + len(b) - s


def inclusion_probability(loglik1: float, loglik0: float, theta: float) -> float:
    """P(b_k = 1 | rest) from the two log-likelihoods and the prior inclusion probability."""
    if theta >= 1.0:
        return 1.0
    if theta <= 0.0:
        return 0.0
    lp1 = loglik1 + math.log(theta)
    lp0 = loglik0 + math.log1p(-theta)
    d = lp0 - lp1
    if d > 700:
        return 0.0
    return 1.0 / (1.0 + math.exp(d))


def gibbs_conjugate_sweep(state: GpParams, cache: LikelihoodCache, priors: Priors, rng) -> GpParams:
    """Update eta, mu, theta and every b_k in that order from their full conditionals.

    ``cache`` must hold the factorization for ``state``; it is updated in place
    whenever an indicator flips.
    """
    shape, rate = eta_conditional(cache.n, cache.quad(state.mu), priors)
    eta = rng.gamma(shape, 1.0 / rate)
    mean, var = mu_conditional(eta, cache.one_w_y(), cache.one_w_one(), priors)
    mu = rng.normal(mean, math.sqrt(var))
    a, b_ = theta_conditional(state.b, priors)
    theta = rng.beta(a, b_)

    b = state.b.copy()
    u = state.u
    ll_cur = cache.loglik(mu, eta)
    for k in range(state.p):
        gamma_alt = u * b
        gamma_alt[k] = 0.0 if b[k] else u[k]
        stats_alt = cache.evaluate(gamma_alt, cache.r)
        ll_alt = cache.loglik(mu, eta, stats_alt)
        ll1, ll0 = (ll_cur, ll_alt) if b[k] else (ll_alt, ll_cur)
        new_bk = int(rng.random() < inclusion_probability(ll1, ll0, theta))
        if new_bk != b[k]:
            b[k] = new_bk
            cache.set(gamma_alt, cache.r, stats_alt)
            ll_cur = ll_alt
    return replace(state, mu=mu, eta=eta, theta=theta, b=b)


def mh_update_r(state: GpParams, cache: LikelihoodCache, rng) -> GpParams:
    """Independence Metropolis-Hastings step for r with a Beta(10, 1) proposal and a uniform prior."""
    r_new = rng.beta(R_PROPOSAL_A, 1.0)
    if not 0.0 < r_new < 1.0:
        return state
    try:
        stats_new = cache.evaluate(cache.gamma, r_new)
    except NotPositiveDefiniteError:
        return state
    log_ratio = (
        cache.loglik(state.mu, state.eta, stats_new)
        - cache.loglik(state.mu, state.eta)
        + (R_PROPOSAL_A - 1.0) * (math.log(state.r) - math.log(r_new))
    )
    if math.log(rng.random()) < log_ratio:
        cache.set(cache.gamma, r_new, stats_new)
        return replace(state, r=r_new)
    return state


def proposal_eps(u: float, h: float) -> float:
    """Half-width scale of the sliding uniform proposal for a range magnitude."""
    if u >= 30.0:
        return min(50.0, u * h)
    return max(1.0, u * h)


def proposal_interval(u: float, h: float):
    """Support of the sliding uniform proposal from current value ``u``."""
    eps = proposal_eps(u, h)
    return max(0.0, u - 50.0 * eps), u + eps


def mh_update_u(state: GpParams, k: int, cache: LikelihoodCache, priors: Priors, rng) -> GpParams:
    """Refresh u_k from its prior when b_k = 0, otherwise one sliding-uniform MH step.

    The proposal correction conditions on the drawn h: the reverse move uses
    the interval implied by the proposed value under the same h.
    """
    u = state.u.copy()
    if not state.b[k]:
        u[k] = rng.gamma(priors.a_u, priors.b_u)
        return replace(state, u=u)
    h = rng.uniform(0.5, 2.0)
    lo, hi = proposal_interval(u[k], h)
    u_new = rng.uniform(lo, hi)
    lo_back, hi_back = proposal_interval(u_new, h)
    if not lo_back <= u[k] <= hi_back:
        return state
    gamma_new = cache.gamma.copy()
    gamma_new[k] = u_new
    try:
        stats_new = cache.evaluate(gamma_new, cache.r)
    except NotPositiveDefiniteError:
        return state
    log_ratio = (
        cache.loglik(state.mu, state.eta, stats_new)
        - cache.loglik(state.mu, state.eta)
        + priors.log_u_prior(u_new)
        - priors.log_u_prior(u[k])
        + math.log(hi - lo)
        - math.log(hi_back - lo_back)
    )
    if math.log(rng.random()) < log_ratio:
        u[k] = u_new
        cache.set(gamma_new, cache.r, stats_new)
        return replace(state, u=u)
    return state


def thin_indices(M: int, m: int) -> np.ndarray:
    """``m`` evenly spaced indices into a chain of length ``M``, always ending at the last draw."""
    if not 1 <= m <= M:
        raise ValueError(f"need 1 <= m <= M, got m={m}, M={M}")
    return (np.arange(1, m + 1) * M) // m - 1


class PosteriorDraws:
    """Retained chain states for one design, with lazily built and cached surfaces."""

    def __init__(self, states, X, y, accept=None):
        self.states = list(states)
        self.X = np.asarray(X, dtype=float)
        self.y = np.asarray(y, dtype=float)
        self.accept = accept or {}
        self._surfaces: dict[int, FittedSurface] = {}

    def __len__(self):
        return len(self.states)

    def __getitem__(self, t) -> GpParams:
        return self.states[t]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def b_matrix(self) -> np.ndarray:
        return np.array([s.b for s in self.states], dtype=np.int8).reshape(len(self), self.p)

    def surface(self, t: int) -> FittedSurface:
        if t not in self._surfaces:
            self._surfaces[t] = build_surface(self.states[t], self.X, self.y)
        return self._surfaces[t]

    def thinned(self, m: int) -> np.ndarray:
        return thin_indices(len(self), m)

    def marginal(self, indices) -> MarginalSurface:
        return MarginalSurface(self.surface(int(t)) for t in indices)


def initial_state(y, p: int, priors: Priors, rng) -> GpParams:
    y = np.asarray(y, dtype=float)
    var = y.var(ddof=1)
    eta = 1.0 / var if var > 0 else 1.0
    u = rng.gamma(priors.a_u, priors.b_u, size=p)
    return GpParams(mu=float(y.mean()), eta=eta, r=0.9, u=u, b=np.ones(p, dtype=np.int8), theta=0.5)


def run_chain(y, X, priors: Priors | None = None, config: ChainConfig | None = None, rng=None) -> PosteriorDraws:
    """Run burn-in plus M sweeps and keep the last M states.

    One sweep is the conjugate Gibbs block, the r step, then a u_k step for
    every variable. ``rng`` overrides the seed in ``config``.
    """
    priors = priors or Priors()
    config = config or ChainConfig()
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.size:
        raise ValueError("X must be (n, p) with n = len(y)")
    if y.size < 2:
        raise ValueError("run_chain needs at least two observations")
    rng = np.random.default_rng(config.seed) if rng is None else rng
    p = X.shape[1]
    state = initial_state(y, p, priors, rng)
    cache = LikelihoodCache(X, y, state.gamma, state.r)
    kept = []
    acc_r = acc_u = tries_u = 0
    total = config.n_burn + config.M
    for it in range(total):
        state = gibbs_conjugate_sweep(state, cache, priors, rng)
        new = mh_update_r(state, cache, rng)
        acc_r += new is not state
        state = new
        for k in range(p):
            new = mh_update_u(state, k, cache, priors, rng)
            if state.b[k]:
                tries_u += 1
                acc_u += new is not state
            state = new
        if it >= config.n_burn:
            kept.append(state)
    accept = {"r": acc_r / total, "u": acc_u / tries_u if tries_u else float("nan")}
    return PosteriorDraws(kept, X, y, accept)
