"""Space-filling designs and local prediction clouds on the unit cube."""

from __future__ import annotations

import numpy as np
from scipy.spatial.distance import pdist
from scipy.special import ndtr, ndtri

__all__ = ["random_lhs", "maximin_lhs", "min_distance", "rescale_to_box", "truncated_normal_cloud"]


def random_lhs(n: int, p: int, rng: np.random.Generator) -> np.ndarray:
    """One random Latin hypercube: a uniform point in each stratum, columns permuted independently."""
    if n < 1 or p < 1:
        raise ValueError(f"LHS needs n >= 1 and p >= 1, got n={n}, p={p}")
    strata = np.argsort(rng.random((n, p)), axis=0)
    return (strata + rng.random((n, p))) / n


def min_distance(points: np.ndarray) -> float:
    """Smallest pairwise Euclidean distance (inf for a single point)."""
    if len(points) < 2:
        return np.inf
    return float(pdist(points).min())


def maximin_lhs(n: int, p: int, restarts: int = 100, rng: np.random.Generator | None = None) -> np.ndarray:
    """Best-of-``restarts`` random LHS under the maximin distance criterion.

    Parameters
    ----------
    n, p : int
        Number of rows and columns.
    restarts : int
        Number of independent random LHS candidates to compare.
    rng : numpy.random.Generator
        Source of randomness. The first candidate equals ``random_lhs(n, p, rng)``
        drawn from the same stream, so more restarts can never do worse.

    Returns
    -------
    ndarray of shape (n, p)
        The candidate with the largest minimum pairwise distance. Ties keep the
        earliest candidate.
    """
    if restarts < 1:
        raise ValueError(f"restarts must be >= 1, got {restarts}")
    rng = np.random.default_rng(rng)
    best = random_lhs(n, p, rng)
    if n < 2:
        return best
    best_d = min_distance(best)
    for _ in range(restarts - 1):
        cand = random_lhs(n, p, rng)
        d = min_distance(cand)
        if d > best_d:
            best, best_d = cand, d
    return best


def rescale_to_box(design: np.ndarray, lower, upper) -> np.ndarray:
    """Affinely map each column of a unit-cube design onto ``[lower_k, upper_k]``."""
    design = np.asarray(design, dtype=float)
    lower = np.broadcast_to(np.asarray(lower, dtype=float), design.shape[1:])
    upper = np.broadcast_to(np.asarray(upper, dtype=float), design.shape[1:])
    if np.any(lower > upper):
        raise ValueError("rescale_to_box: lower bound exceeds upper bound")
    if np.any(lower < 0.0) or np.any(upper > 1.0):
        raise ValueError("rescale_to_box: box must lie inside [0, 1]")
    return lower + design * (upper - lower)


def truncated_normal_cloud(center, delta: float, q: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``q`` points around ``center`` from a normal with per-coordinate sd ``delta``, truncated to [0,1]^p.

    Each coordinate is sampled independently by inverting the CDF restricted to
    the unit interval.
    """
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    if q < 2:
        raise ValueError(f"q must be >= 2, got {q}")
    center = np.asarray(center, dtype=float)
    lo = ndtr((0.0 - center) / delta)
    hi = ndtr((1.0 - center) / delta)
    u = lo + rng.random((q, center.size)) * (hi - lo)
    # Far tails: both CDF limits round to the same value, fall back to the nearest edge.
    pts = center + delta * ndtri(np.clip(u, 1e-300, 1.0 - 1e-16))
    degenerate = hi - lo <= 0.0
    if np.any(degenerate):
        pts[:, degenerate] = np.clip(center[degenerate], 0.0, 1.0)
    pts = np.where(np.isfinite(pts), pts, np.clip(center, 0.0, 1.0))
    return np.clip(pts, 0.0, 1.0)
