"""Time the compiled kernels against the numpy fallback.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 5] [--chain]

Prints one line per (kernel, size) with the median time of each backend and
the speedup. ``--chain`` also times a short MCMC chain end to end with each
backend swapped in.
"""

import argparse
import contextlib
import statistics
import time

import numpy as np

from solidopt import _kernels_py, kernels
from solidopt.mcmc import ChainConfig, run_chain

try:
    from solidopt import _kernels_c
except ImportError:  # extension not built
    _kernels_c = None

KERNELS = ("factor_stats_d", "marginal_mean_grad", "marginal_moments_grad")


def _median_time(fn, repeat, inner):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        for _ in range(inner):
            fn()
        times.append((time.perf_counter() - t0) / inner)
    return statistics.median(times)


def _inputs(n, p, m, rng):
    X = rng.random((n, p))
    y = rng.normal(size=n)
    D = np.ascontiguousarray(np.moveaxis((X[:, None, :] - X[None, :, :]) ** 2, 2, 0))
    gammas = rng.gamma(1.0, 10.0, size=(m, p))
    rs = rng.uniform(0.5, 0.99, size=m)
    linvs = np.array([
        np.linalg.inv(_kernels_py.factor_stats(_kernels_py.sq_exp_exponent(X, X, g), r, y)[0])
        for g, r in zip(gammas, rs)
    ])
    return {
        "X": X,
        "y": y,
        "D": D,
        "gammas": gammas,
        "alphas": rng.normal(size=(m, n)),
        "rs": rs,
        "mus": rng.normal(size=m),
        "sig2s": rng.uniform(0.5, 2.0, size=m),
        "linvs": linvs,
        "x": rng.random(p),
    }


def _call(mod, name, a):
    if name == "factor_stats_d":
        return lambda: mod.factor_stats_d(a["D"], a["gammas"][0], a["rs"][0], a["y"])
    if name == "marginal_mean_grad":
        return lambda: mod.marginal_mean_grad(a["x"], a["X"], a["gammas"], a["alphas"], a["rs"], a["mus"])
    return lambda: mod.marginal_moments_grad(
        a["x"], a["X"], a["gammas"], a["alphas"], a["rs"], a["mus"], a["sig2s"], a["linvs"]
    )


@contextlib.contextmanager
def _backend(mod):
    saved = {k: getattr(kernels, k) for k in ("factor_stats", "factor_stats_d")}
    kernels.factor_stats = mod.factor_stats
    kernels.factor_stats_d = mod.factor_stats_d
    try:
        yield
    finally:
        for k, v in saved.items():
            setattr(kernels, k, v)


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--chain", action="store_true", help="also time a short MCMC chain")
    args = ap.parse_args()
    if _kernels_c is None:
        raise SystemExit("compiled extension not built; run `python3 setup.py build_ext --inplace`")
    rng = np.random.default_rng(0)
    print(f"{'kernel':24s} {'n':>4s} {'p':>3s} {'m':>4s} {'python_us':>11s} {'cython_us':>11s} {'speedup':>8s}")
    for n, p, m in ((20, 3, 25), (50, 8, 50), (100, 15, 100)):
        a = _inputs(n, p, m, rng)
        for name in KERNELS:
            inner = 200 if name == "factor_stats_d" else 50
            tp = _median_time(_call(_kernels_py, name, a), args.repeat, inner)
            tc = _median_time(_call(_kernels_c, name, a), args.repeat, inner)
            print(f"{name:24s} {n:4d} {p:3d} {m:4d} {tp * 1e6:11.1f} {tc * 1e6:11.1f} {tp / tc:8.2f}")
    if args.chain:
        X = rng.random((40, 8))
        y = np.sin(6 * X[:, 0]) + X[:, 1] ** 2 + 0.1 * rng.normal(size=40)
        cfg = ChainConfig(M=200, burn_in=200)
        res = {}
        for label, mod in (("python", _kernels_py), ("cython", _kernels_c)):
            with _backend(mod):
                t0 = time.perf_counter()
                run_chain(y, X, config=cfg, rng=np.random.default_rng(1))
                res[label] = time.perf_counter() - t0
        print(f"run_chain n=40 p=8 400 sweeps: python {res['python']:.2f} s, cython {res['cython']:.2f} s, "
              f"speedup {res['python'] / res['cython']:.2f}")


if __name__ == "__main__":
    main()
