"""Expected improvement, augmented expected improvement and their maximization
over restricted and unrestricted candidate sets."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from solidopt.design import maximin_lhs, rescale_to_box
from solidopt.gp import MarginalSurface
from solidopt.region import SearchRegion

__all__ = [
    "SearchRegion",
    "CandidateSet",
    "AeiObjective",
    "select_incumbent",
    "ei",
    "ei_grad_parts",
    "aei",
    "aei_gradient",
    "build_restricted_region",
    "build_active_region",
    "build_candidates",
    "choose_candidate_set",
    "line_search_maximize",
]

INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _pdf(z):
    return INV_SQRT_2PI * np.exp(-0.5 * np.square(z))


def ei(mean, sd, incumbent):
    """Closed-form expected improvement of a normal(mean, sd^2) over ``incumbent``.

    Vectorized. At ``sd == 0`` returns the limit ``max(mean - incumbent, 0)``.
    """
    mean = np.asarray(mean, dtype=float)
    sd = np.asarray(sd, dtype=float)
    if np.any(sd < 0):
        raise ValueError("sd must be non-negative")
    diff = mean - incumbent
    pos = sd > 0
    safe = np.where(pos, sd, 1.0)
    z = diff / safe
    val = np.where(pos, safe * (z * ndtr(z) + _pdf(z)), np.maximum(diff, 0.0))
    val = np.maximum(val, 0.0)
    return float(val) if val.ndim == 0 else val


def ei_grad_parts(mean: float, var: float, incumbent: float):
    """Partial derivatives of EI with respect to the mean and the variance at one point."""
    if var <= 0.0:
        return (1.0 if mean > incumbent else 0.0), 0.0
    s = math.sqrt(var)
    z = (mean - incumbent) / s
    return float(ndtr(z)), float(_pdf(z)) / (2.0 * s)


def _augment(var, tau):
    """1 - tau / sqrt(var + tau^2), and its derivative with respect to var."""
    if tau <= 0.0:
        return np.ones_like(var), np.zeros_like(var)
    root = np.sqrt(var + tau * tau)
    return 1.0 - tau / root, 0.5 * tau / root**3


def aei(x, marginal: MarginalSurface, incumbent: float, tau: float):
    """AEI at one point (p,) or a batch (q, p), for maximization."""
    mean, var = marginal.moments(x)
    factor, _ = _augment(np.asarray(var), tau)
    val = ei(mean, np.sqrt(var), incumbent) * factor
    return float(val) if np.ndim(val) == 0 else val


def aei_value_grad(x, marginal: MarginalSurface, incumbent: float, tau: float, active=None):
    """AEI and its gradient at one point; components outside ``active`` are zero."""
    mean, var, dmean, dvar = marginal.moments_grad(x)
    var = max(var, 0.0)
    e = ei(mean, math.sqrt(var), incumbent)
    factor, dfactor = _augment(var, tau)
    de_dm, de_dv = ei_grad_parts(mean, var, incumbent)
    grad = factor * (de_dm * dmean + de_dv * dvar) + e * dfactor * dvar
    if active is not None:
        mask = np.zeros(grad.size, dtype=bool)
        mask[list(active)] = True
        grad = np.where(mask, grad, 0.0)
    return float(e * factor), grad


def aei_gradient(x, marginal: MarginalSurface, incumbent: float, tau: float, active=None) -> np.ndarray:
    return aei_value_grad(x, marginal, incumbent, tau, active)[1]


class AeiObjective:
    """AEI bound to one marginal surface, incumbent and noise level, restricted to ``active`` coordinates."""

    def __init__(self, marginal: MarginalSurface, incumbent: float, tau: float, active=None):
        self.marginal = marginal
        self.incumbent = incumbent
        self.tau = tau
        self.active = tuple(range(marginal.p)) if active is None else tuple(active)

    def __call__(self, x):
        return aei(x, self.marginal, self.incumbent, self.tau)

    def value_grad(self, x):
        return aei_value_grad(x, self.marginal, self.incumbent, self.tau, self.active)


def select_incumbent(marginal: MarginalSurface, X, nu: float = 1.0):
    """Design row maximizing mean - nu * sd of the marginal surface.

    Returns (row index, marginal mean at that row). Ties keep the first row.
    """
    if nu < 0:
        raise ValueError("nu must be non-negative")
    mean, var = marginal.moments(np.atleast_2d(X))
    score = mean - nu * np.sqrt(var)
    i = int(np.argmax(score))
    return i, float(mean[i])


def build_restricted_region(chi_draws, delta: float, chi_hat, active) -> SearchRegion:
    """Spread of the per-draw maximizers widened by ``delta`` on active coordinates, pins elsewhere."""
    chi_draws = np.atleast_2d(np.asarray(chi_draws, dtype=float))
    chi_hat = np.asarray(chi_hat, dtype=float)
    p = chi_hat.size
    lo = np.clip(chi_draws.min(axis=0) - delta, 0.0, 1.0)
    hi = np.clip(chi_draws.max(axis=0) + delta, 0.0, 1.0)
    fixed = np.ones(p, dtype=bool)
    fixed[list(active)] = False
    lo = np.where(fixed, chi_hat, lo)
    hi = np.where(fixed, chi_hat, hi)
    return SearchRegion(lo, hi, fixed)


def build_active_region(chi_hat, active) -> SearchRegion:
    """Full [0, 1] on active coordinates, pinned to ``chi_hat`` elsewhere."""
    chi_hat = np.asarray(chi_hat, dtype=float)
    fixed = np.ones(chi_hat.size, dtype=bool)
    fixed[list(active)] = False
    return SearchRegion(np.where(fixed, chi_hat, 0.0), np.where(fixed, chi_hat, 1.0), fixed)


@dataclass
class CandidateSet:
    points: np.ndarray
    origin: str
    aei: np.ndarray | None = None

    def best(self) -> float:
        return -np.inf if self.aei is None or self.aei.size == 0 else float(self.aei.max())


def build_candidates(region: SearchRegion, c: int, rng, origin: str = "restricted", restarts: int = 100):
    """Maximin LHS over the interval coordinates of ``region``; pinned columns are constant."""
    if c < 1:
        raise ValueError("need at least one candidate")
    dims = region.interval_dims
    if dims.size == 0:
        return CandidateSet(region.lower[None, :].copy(), origin)
    lhs = maximin_lhs(c, dims.size, restarts, rng)
    pts = np.tile(region.lower, (c, 1))
    pts[:, dims] = rescale_to_box(lhs, region.lower[dims], region.upper[dims])
    return CandidateSet(pts, origin)


def choose_candidate_set(restricted: CandidateSet, unrestricted: CandidateSet) -> CandidateSet:
    """The set holding the single largest AEI value; ties go to ``restricted``."""
    if restricted.aei is None or unrestricted.aei is None:
        raise ValueError("evaluate AEI on both candidate sets first")
    return unrestricted if unrestricted.best() > restricted.best() else restricted


def _golden_max(phi, tmax: float, n_evals: int):
    """Golden-section search for the max of phi on [0, tmax] with a fixed evaluation budget.

    Returns the best (t, value) among every evaluated point.
    """
    a, b = 0.0, tmax
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = phi(c), phi(d)
    best = max((fc, -c, c), (fd, -d, d))
    for _ in range(max(n_evals - 2, 0)):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = phi(c)
            best = max(best, (fc, -c, c))
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = phi(d)
            best = max(best, (fd, -d, d))
    return best[2], best[0]


def _search_from(x0, f0, value_grad, delta, active_mask, n_searches, n_evals):
    x, fx = x0.copy(), f0
    for _ in range(n_searches):
        _, g = value_grad(x)
        g = np.where(active_mask, g, 0.0)
        # coordinates sitting on the boundary with an outward gradient stay put
        g[(x <= 0.0) & (g < 0.0)] = 0.0
        g[(x >= 1.0) & (g > 0.0)] = 0.0
        gnorm = float(np.linalg.norm(g))
        if not gnorm > 0.0 or not np.isfinite(gnorm):
            break
        start = x

        def point(t, start=start, g=g):
            z = np.clip(start + t * g, 0.0, 1.0)
            d = z - x0
            nd = float(np.linalg.norm(d))
            if nd > delta:
                z = x0 + d * (delta / nd)
            return z

        t, ft = _golden_max(lambda t: value_grad(point(t))[0], delta / gnorm, n_evals)
        if not ft > fx:
            break
        x, fx = point(t), ft
    return x, fx


def line_search_maximize(cands: CandidateSet, delta: float, active, value_grad, n_starts: int = 5,
                         n_searches: int = 5, n_evals: int = 30):
    """Refine the top candidates by successive gradient line searches inside a delta-ball.

    Parameters
    ----------
    cands : CandidateSet
        Candidates with AEI already evaluated.
    delta : float
        Radius of the ball around each start that confines its trajectory.
    active : iterable of int
        Coordinates allowed to move; all others keep their start values.
    value_grad : callable
        ``value_grad(x) -> (aei, gradient)``.

    Returns
    -------
    (x, value)
        The best trajectory endpoint over all starts (never worse than the
        best raw candidate).
    """
    if cands.points.shape[0] == 0:
        raise ValueError("empty candidate set")
    vals = np.asarray(cands.aei, dtype=float) if cands.aei is not None else np.array(
        [value_grad(x)[0] for x in cands.points])
    active_mask = np.zeros(cands.points.shape[1], dtype=bool)
    active_mask[list(active)] = True
    order = np.argsort(-vals, kind="stable")[:n_starts]
    best_x, best_f = None, -np.inf
    for i in order:
        x, f = _search_from(cands.points[i], float(vals[i]), value_grad, delta, active_mask, n_searches, n_evals)
        if f > best_f:
            best_x, best_f = x, f
    return best_x, best_f
