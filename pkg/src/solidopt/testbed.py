"""Benchmark objectives: the 2-D toy, Beach, Drum and Simba test functions and a
Nadaraya-Watson smoothed dataset with cross-validated bandwidth."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

__all__ = [
    "toy_f",
    "beach_f",
    "drum_f",
    "simba_f",
    "Objective",
    "make_objective",
    "noisy_eval",
    "SmoothedDataset",
    "smoothed_objective",
    "cv_bandwidth",
    "load_dataset",
    "FUNCTIONS",
    "ARGMAX",
]

PI = np.pi
_phi = ndtr  # standard normal CDF


def _dnorm(z):
    return np.exp(-0.5 * z * z) / np.sqrt(2.0 * PI)


def _cols(x, d: int):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] < d:
        raise ValueError(f"function needs at least {d} coordinates, got {x.shape[-1]}")
    return [x[..., j] for j in range(d)]


def toy_f(x):
    x1, x2 = _cols(x, 2)
    return 10.0 * x2**2 * _phi(10.0 * (x1 - 0.4)) + np.sin(5.0 * PI * (x2 - x1**2) - x1 * x2) * _phi(10.0 * (0.4 - x1))


def beach_f(x):
    x1, x2, x3, x4, x5, x6 = _cols(x, 6)
    sdz = 0.2 + (2.0 + x6 + x5 - 1.5 * x1) * (3.0 + x4 - x3 - x2) / 12.0
    bumps = (
        5.0 * np.sin(6.0 * PI * x1 * x6) * (x3**2 + 1.0)
        - (x2**2 + 4.0 - x1 * x2 / (x3 - 7.0) + x4 * (x5 - 0.3)) ** 2
        * np.cos(4.0 * PI * x1 * x3**2) ** 10
        * (x1 * x2**2 - 0.5)
        * (x2 * x6 - 0.5)
        * (x5 - 0.5)
    ) * (_phi(10.0 * (0.8 - x3) / sdz) * _phi((x1 - 0.1) / sdz) * _phi((x2 - 0.1) / (2.0 * sdz)))
    horiz = (10.5 - 30.0 * (x1 - 0.3) ** 2) * (_phi((0.2 - x3) / sdz) * _phi(10.0 * (0.3 - x2) / sdz))
    vert = (10.5 - 30.0 * (x2 - 0.85) ** 2) * (_phi(5.0 * (x3 - 0.8) / sdz) * _phi(10.0 * (x1 - 0.8) / sdz))
    return bumps + horiz + vert - 0.97013 + 0.470418


def drum_f(x):
    x1, x2, x3, x4, x5, x6 = _cols(x, 6)
    rad = (x1 - 0.5) ** 2 + (x2 - 0.5) ** 2
    inner = (6.0 - x3 / 4.0) * np.cos(4.0 * PI * (x3 - 0.5)) * _dnorm(11.0 * (rad + 0.25) ** 2) * (1.0 - 3.0 * (x1 - 0.3) ** 2)
    middl = (
        (1.0 + 2.0 * x4)
        * np.sin(2.0 * PI * x4 * (x5 - 0.3))
        * (_phi(6.0 * (rad - 0.13)) * _phi(-8.0 * (rad - 0.11)))
        * (1.0 + x4**2 + x5**2 * (x2 - 0.2))
    )
    outer = (1.0 - 2.0 * x5) * np.cos(2.0 * PI * x5 * (x4 + 0.5)) * _phi(8.0 * (rad - 0.2)) * (1.0 - x6**2 - x5**2 * (x1 + 0.2))
    return (inner + middl + outer) * (10.0 / 2.032078) - 4.4831


def simba_f(x):
    x1, x2, x3, x4, x5, x6 = _cols(x, 6)
    t1 = (
        np.sin(2.0 * PI * (x1**2 - 2.0 * x2 * (1.0 + x3)))
        * (_phi(30.0 * (x2 - 0.3)) + _phi(30.0 * (0.8 - x2)) - 1.0)
        * 2.0
        * np.sin(4.0 * PI * x1 + 3.0 * PI * (1.0 + x3) + 2.0 * PI * (x4 + x5) + 3.0 * PI * (1.0 + x6))
    )
    t2 = (
        (4.0 + 6.0 * x1)
        * (_phi(30.0 * x2) + _phi(30.0 * (0.2 - x2)) - 1.0)
        * (_phi(30.0 * x1) + _phi(30.0 * (0.6 - x1)) - 1.0)
        * _phi(10.0 * (0.2 - x3))
    )
    t3 = (
        (1.0 - 8.0 * (x1 + x2 - x4 - x5 - x6) ** 2)
        * (_phi(40.0 * x2) + _phi(40.0 * (0.2 - x2)) - 1.0)
        * (_phi(40.0 * (x1 - 0.6)) + _phi(40.0 * (1.0 - x1)) - 1.0)
        * _phi(10.0 * (0.2 - x3))
    )
    t4 = (
        0.5
        * (1.0 - np.sin(8.0 * PI * x1 + 7.0 * PI * x2 * x3 - 4.0 * PI * x4 * x5 * x6))
        * (_phi(30.0 * x2) + _phi(30.0 * (0.3 - x2)) - 1.0)
        * _phi(8.0 * (x3 - 0.3))
    )
    t5 = (
        5.0 * np.cos(2.0 * (x2 + 0.5) * (-x4 + 0.5) * (-x5 + 0.5) ** 2) * (-x6 - 0.5)
        - 0.02
        * (
            (1.0 - x2) ** 2
            + (1.0 - x1) ** 2
            + (1.0 - x3 - 0.3 * x4) ** 2
            + (1.0 - x5 + 0.5 * x4) ** 2
            + (0.8 - x6 - 0.4 * x4) ** 2
        )
    ) * _phi(5.0 * (x2 - 1.0) + _phi(10.0 * (0.5 - x3)))
    return 3.14749 + t1 + t2 + t3 + t4 + t5


FUNCTIONS = {"toy": (toy_f, 2), "beach": (beach_f, 6), "drum": (drum_f, 6), "simba": (simba_f, 6)}

# Published maximizers of the 6-D functions.
ARGMAX = {
    "beach": np.array([1.0, 0.85, 1.0, 0.0, 0.0, 0.0]),
    "drum": np.array([0.368, 0.533, 0.0, 1.0, 0.555, 1.0]),
    "simba": np.array([0.523, 0.0999, 0.0, 0.298, 0.298, 0.245]),
}


@dataclass
class Objective:
    """Deterministic function on [0, 1]^p0 observed with additive N(0, noise_var) error."""

    name: str
    p0: int
    active: tuple
    fn: callable
    noise_var: float = 0.0
    known_max: tuple | None = None
    meta: dict = field(default_factory=dict)

    def __call__(self, x):
        return self.eval(x)

    def eval(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.p0:
            raise ValueError(f"{self.name} expects {self.p0} coordinates, got {x.shape[-1]}")
        val = self.fn(x)
        return float(val) if np.ndim(val) == 0 else val


def make_objective(name: str, p0: int | None = None, noise_var: float = 0.0) -> Objective:
    """One of the test functions embedded in ``p0`` dimensions; extra coordinates are ignored."""
    if name not in FUNCTIONS:
        raise KeyError(f"unknown objective {name!r}; choose from {sorted(FUNCTIONS)}")
    fn, d = FUNCTIONS[name]
    p0 = d if p0 is None else p0
    if p0 < d:
        raise ValueError(f"{name} needs p0 >= {d}")
    known = None
    if name in ARGMAX:
        arg = np.concatenate([ARGMAX[name], np.zeros(p0 - d)])
        known = (arg, float(fn(arg)))
    elif name == "toy":
        arg = np.concatenate([[1.0, 1.0], np.zeros(p0 - d)])
        known = (arg, float(fn(arg)))
    return Objective(name, p0, tuple(range(d)), fn, noise_var, known)


def noisy_eval(obj: Objective, x, rng):
    """Noiseless value plus a N(0, noise_var) draw."""
    val = obj.eval(x)
    if obj.noise_var == 0.0:
        return val
    noise = rng.normal(0.0, np.sqrt(obj.noise_var), size=np.shape(val))
    return val + (float(noise) if np.ndim(val) == 0 else noise)


@dataclass
class SmoothedDataset:
    inputs: np.ndarray
    responses: np.ndarray
    bandwidth: float
    names: list | None = None

    def __post_init__(self):
        self.inputs = np.atleast_2d(np.asarray(self.inputs, dtype=float))
        self.responses = np.asarray(self.responses, dtype=float)
        if self.inputs.shape[0] != self.responses.size or self.responses.size == 0:
            raise ValueError("dataset needs matching, non-empty inputs and responses")
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")

    @property
    def p(self) -> int:
        return self.inputs.shape[1]

    def as_objective(self, noise_var: float = 0.0) -> Objective:
        return Objective("dataset", self.p, tuple(range(self.p)), lambda x: smoothed_objective(self, x), noise_var)


def _nw(inputs, responses, h, x):
    x = np.atleast_2d(x)
    d2 = ((x[:, None, :] - inputs[None, :, :]) ** 2).sum(axis=-1) / (h * h)
    w = np.exp(-(d2 - d2.min(axis=1, keepdims=True)))  # shifted so the largest weight is 1
    return (w @ responses) / w.sum(axis=1)


def smoothed_objective(data: SmoothedDataset, x):
    """Nadaraya-Watson estimate with Gaussian kernel exp(-|x - x'|^2 / h^2)."""
    x = np.asarray(x, dtype=float)
    out = _nw(data.inputs, data.responses, data.bandwidth, x)
    return float(out[0]) if x.ndim == 1 else out


def cv_bandwidth(data: SmoothedDataset, folds: int = 5, grid=None, seed: int = 0, chunk: int = 2048) -> float:
    """Grid bandwidth with the smallest mean out-of-fold squared prediction error."""
    if folds < 2:
        raise ValueError("need at least two folds")
    grid = np.atleast_1d(np.asarray(grid if grid is not None else np.geomspace(0.01, 1.0, 25), dtype=float))
    if grid.size == 0:
        raise ValueError("bandwidth grid is empty")
    n = data.responses.size
    assign = np.random.default_rng(seed).permutation(n) % folds
    errs = np.zeros(grid.size)
    for f in range(folds):
        train = assign != f
        test = np.flatnonzero(~train)
        for j, h in enumerate(grid):
            for s in range(0, test.size, chunk):
                idx = test[s : s + chunk]
                pred = _nw(data.inputs[train], data.responses[train], h, data.inputs[idx])
                errs[j] += ((pred - data.responses[idx]) ** 2).sum()
    return float(grid[int(np.argmin(errs))])


def load_dataset(path, bandwidth: float = 1.0, response_col: int = -1) -> SmoothedDataset:
    """Read delimited text (comma or whitespace, optional header), min-max scale the inputs.

    The last column (or ``response_col``) is the response.
    """
    with open(path) as fh:
        text = fh.read()
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty dataset")
    delim = "," if "," in lines[0] else None
    names = None
    try:
        [float(v) for v in (lines[0].split(delim))]
    except ValueError:
        names = [v.strip() for v in next(csv.reader([lines[0]], delimiter=delim or " ", skipinitialspace=True))]
        lines = lines[1:]
    data = np.loadtxt(io.StringIO("\n".join(lines)), delimiter=delim, ndmin=2)
    y = data[:, response_col]
    X = np.delete(data, response_col % data.shape[1], axis=1)
    lo, hi = X.min(axis=0), X.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    return SmoothedDataset((X - lo) / span, y, bandwidth, names)
