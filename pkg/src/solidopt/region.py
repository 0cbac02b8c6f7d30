"""Axis-aligned search regions with optionally pinned coordinates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["SearchRegion"]


@dataclass(frozen=True, eq=False)
class SearchRegion:
    """Per-dimension interval ``[lower_k, upper_k]`` inside [0, 1], or a fixed value.

    Fixed coordinates store their value in both ``lower`` and ``upper``.
    """

    lower: np.ndarray
    upper: np.ndarray
    fixed: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float).copy()
        hi = np.asarray(self.upper, dtype=float).copy()
        fixed = np.asarray(self.fixed, dtype=bool).copy()
        if not (lo.shape == hi.shape == fixed.shape) or lo.ndim != 1:
            raise ValueError("lower, upper and fixed must be 1-D arrays of equal length")
        if np.any(lo > hi):
            raise ValueError("region lower bound exceeds upper bound")
        if np.any(lo < 0.0) or np.any(hi > 1.0):
            raise ValueError("region must lie inside the unit cube")
        if np.any(lo[fixed] != hi[fixed]):
            raise ValueError("fixed coordinates need lower == upper")
        for arr in (lo, hi, fixed):
            arr.setflags(write=False)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        object.__setattr__(self, "fixed", fixed)

    @classmethod
    def box(cls, p: int) -> "SearchRegion":
        return cls(np.zeros(p), np.ones(p), np.zeros(p, dtype=bool))

    @classmethod
    def from_entries(cls, entries) -> "SearchRegion":
        """Build from a list of ``(lo, hi)`` tuples and plain floats (fixed values)."""
        lo, hi, fixed = [], [], []
        for e in entries:
            if np.ndim(e) == 0:
                lo.append(float(e))
                hi.append(float(e))
                fixed.append(True)
            else:
                lo.append(float(e[0]))
                hi.append(float(e[1]))
                fixed.append(False)
        return cls(np.array(lo), np.array(hi), np.array(fixed))

    @property
    def p(self) -> int:
        return self.lower.size

    @property
    def interval_dims(self) -> np.ndarray:
        return np.flatnonzero(~self.fixed)

    @property
    def n_intervals(self) -> int:
        return int((~self.fixed).sum())

    @property
    def pinned_values(self) -> np.ndarray:
        return self.lower[self.fixed]

    def entries(self) -> list:
        return [float(lo) if f else (float(lo), float(hi)) for lo, hi, f in zip(self.lower, self.upper, self.fixed)]

    def project(self, x) -> np.ndarray:
        """Clip into the region; fixed coordinates are set to their exact pins."""
        z = np.clip(np.asarray(x, dtype=float), self.lower, self.upper)
        z[self.fixed] = self.lower[self.fixed]
        return z

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        inside = np.all((x >= self.lower) & (x <= self.upper), axis=-1)
        pinned = np.all(x[..., self.fixed] == self.lower[self.fixed], axis=-1)
        return bool(np.all(inside & pinned))

    def __repr__(self):
        return f"SearchRegion({self.entries()})"
