"""Maximizer estimation on fitted surfaces.

All searches are multi-start bounded quasi-Newton (L-BFGS-B) runs over the
free coordinates of a :class:`SearchRegion`; pinned coordinates are held at
their exact values.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from solidopt.gp import FittedSurface, MarginalSurface
from solidopt.region import SearchRegion

__all__ = ["BoxOptProblem", "maximize_in_box", "top_rows", "estimate_chi_t", "estimate_chi_marginal"]

MAX_ITERS = 200
TOL = 1e-6


@dataclass
class BoxOptProblem:
    """``fun(x) -> (value, gradient)`` to be maximized over ``region`` from each of ``starts``."""

    fun: callable
    region: SearchRegion
    starts: list = field(default_factory=list)


def _local_max(fun, region, x0, max_iters, tol):
    free = ~region.fixed & (region.upper > region.lower)
    f0 = float(fun(x0)[0])
    if not free.any():
        return x0, f0
    base = x0.copy()

    def neg(z):
        x = base.copy()
        x[free] = z
        v, g = fun(x)
        return -v, -np.asarray(g)[free]

    res = minimize(
        neg,
        x0[free],
        jac=True,
        method="L-BFGS-B",
        bounds=list(zip(region.lower[free], region.upper[free])),
        options={"maxiter": max_iters, "ftol": 1e-13, "gtol": tol * 1e-2},
    )
    x = base.copy()
    x[free] = np.clip(res.x, region.lower[free], region.upper[free])
    f = float(fun(x)[0])
    if not f >= f0:  # also rejects NaN
        return x0, f0
    return x, f


def maximize_in_box(problem: BoxOptProblem, max_iters: int = MAX_ITERS, tol: float = TOL):
    """Best local maximum over all starts. Ties keep the earliest start.

    Returns
    -------
    (argmax, value)
    """
    if not problem.starts:
        raise ValueError("maximize_in_box needs at least one start")
    best_x, best_f = None, -np.inf
    for s in problem.starts:
        x0 = problem.region.project(s)
        x, f = _local_max(problem.fun, problem.region, x0, max_iters, tol)
        if best_x is None or f > best_f:
            best_x, best_f = x, f
    return best_x, best_f


def top_rows(X, y, k: int = 4) -> np.ndarray:
    """The ``k`` design rows with the largest observed responses (stable order)."""
    order = np.argsort(-np.asarray(y), kind="stable")[:k]
    return np.asarray(X)[order]


def _starts(X, y, prev_chi=None, extra=()):
    starts = [np.asarray(s, dtype=float) for s in extra]
    if prev_chi is not None:
        starts.append(np.asarray(prev_chi, dtype=float))
    starts.extend(top_rows(X, y))
    return starts


def estimate_chi_t(surface, prev_chi=None, X=None, y=None) -> np.ndarray:
    """Maximizer of one draw's predictive mean over the full unit box."""
    if not isinstance(surface, MarginalSurface):
        surface = MarginalSurface([surface])
    X = surface.X if X is None else X
    y = surface.surfaces[0].y if y is None else y
    region = SearchRegion.box(surface.p)
    x, _ = maximize_in_box(BoxOptProblem(surface.mean_grad, region, _starts(X, y, prev_chi)))
    return x


def estimate_chi_marginal(draws, X, y, region: SearchRegion | None = None, prev_chi=None, extra_starts=()):
    """Maximizer of the draw-averaged mean surface restricted to ``region``.

    ``draws`` is a :class:`MarginalSurface` or an iterable of fitted surfaces.
    Starts are ``extra_starts``, then ``prev_chi``, then the four best design rows.
    """
    marg = draws if isinstance(draws, MarginalSurface) else MarginalSurface(
        d for d in draws if isinstance(d, FittedSurface)
    )
    region = SearchRegion.box(marg.p) if region is None else region
    x, _ = maximize_in_box(BoxOptProblem(marg.mean_grad, region, _starts(X, y, prev_chi, extra_starts)))
    return x
