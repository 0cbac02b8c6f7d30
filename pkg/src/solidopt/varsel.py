"""Global variable selection from posterior inclusion frequencies and local
selection from perturbed predictions around the per-draw maximizers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from solidopt.design import truncated_normal_cloud
from solidopt.errors import EmptyModelError

__all__ = [
    "Design",
    "GlobalActivity",
    "LocalActivityReport",
    "global_activity",
    "apply_global_selection",
    "squared_correlation",
    "local_importance",
]


@dataclass
class Design:
    """Design matrix on the current (surviving) columns plus the map back to original variables."""

    X: np.ndarray
    y: np.ndarray
    columns: np.ndarray = None

    def __post_init__(self):
        # C order keeps reductions identical however the columns were selected
        self.X = np.ascontiguousarray(np.atleast_2d(np.asarray(self.X, dtype=float)))
        self.y = np.ascontiguousarray(self.y, dtype=float)
        if self.columns is None:
            self.columns = np.arange(self.X.shape[1])
        self.columns = np.asarray(self.columns, dtype=int)
        if self.X.shape[0] != self.y.size:
            raise ValueError("design rows and responses differ in length")
        if self.columns.size != self.X.shape[1]:
            raise ValueError("column map length must equal number of columns")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def augment(self, x, y_new) -> "Design":
        return Design(np.vstack([self.X, x]), np.append(self.y, y_new), self.columns)


@dataclass(frozen=True)
class GlobalActivity:
    bhat: np.ndarray
    g: float
    keep: tuple

    @property
    def dropped(self) -> tuple:
        return tuple(k for k in range(self.bhat.size) if k not in self.keep)


@dataclass
class LocalActivityReport:
    L: np.ndarray
    rho: float
    active: tuple
    r2: np.ndarray  # (m, p)
    chi_draws: np.ndarray  # (m, p)
    draw_indices: np.ndarray = field(default=None)


def global_activity(draws, g: float) -> GlobalActivity:
    """Posterior inclusion frequency of every variable and the set with frequency >= g."""
    if not 0.0 < g < 1.0:
        raise ValueError(f"threshold g must lie in (0, 1), got {g}")
    bmat = draws.b_matrix if hasattr(draws, "b_matrix") else np.asarray(draws)
    if len(bmat) < 1:
        raise ValueError("need at least one posterior draw")
    bhat = bmat.mean(axis=0)
    keep = tuple(int(k) for k in np.flatnonzero(bhat >= g))
    return GlobalActivity(bhat, g, keep)


def apply_global_selection(design: Design, activity: GlobalActivity):
    """Drop globally inactive columns for good. Returns (reduced design, refit_needed)."""
    if not activity.keep:
        raise EmptyModelError("global selection removed every variable")
    if len(activity.keep) == design.p:
        return design, False
    keep = list(activity.keep)
    return Design(design.X[:, keep], design.y, design.columns[keep]), True


def squared_correlation(a, b) -> float:
    """Squared sample correlation, defined as 0 when either vector is constant."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    da = a - a.mean()
    db = b - b.mean()
    saa = da @ da
    sbb = db @ db
    scale = max(np.abs(a).max(), np.abs(b).max(), 1e-300)
    tiny = (1e-13 * scale) ** 2 * a.size
    if saa <= tiny or sbb <= tiny:
        return 0.0
    r2 = (da @ db) ** 2 / (saa * sbb)
    return float(min(max(r2, 0.0), 1.0))


def local_importance(
    draws,
    m: int,
    delta: float,
    q: int,
    rho: float,
    chi_estimator,
    rng,
    indices=None,
) -> LocalActivityReport:
    """Local importance of each variable around the per-draw maximizers.

    Parameters
    ----------
    draws : PosteriorDraws
        Posterior states fitted on the current design.
    m : int
        Number of draws to use, taken by even thinning of the chain unless
        ``indices`` is given.
    delta : float
        Standard deviation of the truncated-normal prediction cloud.
    q : int
        Points per cloud.
    rho : float
        Threshold; variables with importance >= rho are locally active.
    chi_estimator : callable
        ``chi_estimator(surface) -> p-vector`` maximizing one draw's mean surface.
    rng : numpy.random.Generator
        Used for the prediction clouds only.
    """
    if q < 3:
        raise ValueError(f"q must be >= 3, got {q}")
    if not 0.0 < rho < 1.0:
        raise ValueError(f"rho must lie in (0, 1), got {rho}")
    if indices is None:
        indices = draws.thinned(m)
    p = draws.p
    r2 = np.ones((len(indices), p))
    chis = np.empty((len(indices), p))
    for row, t in enumerate(indices):
        surf = draws.surface(int(t))
        chi = chi_estimator(surf)
        chis[row] = chi
        cloud = truncated_normal_cloud(chi, delta, q, rng)
        base = surf.mean(cloud)
        for k in range(p):
            if surf.params.gamma[k] == 0.0:
                continue  # perturbation is a no-op, R^2 = 1
            alt = surf.without(k).mean(cloud)
            r2[row, k] = squared_correlation(base, alt)
    L = np.clip(1.0 - r2.mean(axis=0), 0.0, 1.0)
    active = tuple(int(k) for k in np.flatnonzero(L >= rho))
    return LocalActivityReport(L, rho, active, r2, chis, np.asarray(indices))
