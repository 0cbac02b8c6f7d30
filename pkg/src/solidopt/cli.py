"""Command-line entry point: single runs and paired-seed benchmarks written as CSV.

Configuration is resolved in layers: built-in defaults, then the preset for the
objective, then the ``--config`` file, then command-line flags.

The config file is either a JSON object or ``key = value`` lines (``#`` starts a
comment). Keys are the long flag names with dashes or underscores, for example::

    objective = beach
    p0 = 15
    chain-m = 1000
    oracle-active = 0,1,2,3,4,5
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from solidopt.errors import ConfigError, EmptyModelError
from solidopt.loop import MODES, RunConfig, run
from solidopt.testbed import FUNCTIONS, cv_bandwidth, load_dataset, make_objective

log = logging.getLogger("solidopt")

LONG_COLUMNS = ["objective", "mode", "seed", "step", "f_opt", "improvement", "n_global_kept", "n_local_active",
                "wall_ms"]
SUMMARY_COLUMNS = ["objective", "mode", "step", "n_runs", "mean_improvement", "se_improvement", "mean_f_opt",
                   "mean_n_global_kept", "mean_n_local_active"]
FAILURE_COLUMNS = ["objective", "mode", "seed", "error"]

# setting name -> (type, default)
DEFAULTS = {
    "objective": (str, None),
    "dataset": (str, None),
    "bandwidth": (float, None),
    "p0": (int, None),
    "mode": (str, "solid"),
    "modes": (str, "solid,gvs,oracle,none"),
    "seed": (int, 0),
    "reps": (int, 1),
    "steps": (int, 25),
    "n0": (int, None),
    "g": (float, 0.05),
    "rho": (float, 0.02),
    "delta": (float, 0.30),
    "line_delta": (float, None),
    "chain_m": (int, 1000),
    "burn_in": (int, None),
    "subsample_m": (int, 100),
    "candidates": (int, 300),
    "nu": (float, 1.0),
    "q": (int, 100),
    "noise_var": (float, 0.05),
    "oracle_active": (str, None),
    "threads": (int, None),
    "out": (str, None),
    "no_wall_time": (bool, False),
}

PRESETS = {
    "toy": {"p0": 3, "n0": 10, "steps": 9, "g": 0.5, "rho": 0.3, "delta": 0.15, "noise_var": 0.08,
            "chain_m": 500, "subsample_m": 25, "candidates": 300},
    "beach": {"p0": 15, "n0": 70},
    "drum": {"p0": 15, "n0": 70},
    "simba": {"p0": 15, "n0": 80},
}


def _coerce(key, value):
    typ = DEFAULTS[key][0]
    if value is None:
        return None
    if typ is bool:
        if isinstance(value, bool):
            return value
        return str(value).strip().lower() in ("1", "true", "yes", "on")
    try:
        return typ(value)
    except (TypeError, ValueError):
        raise ConfigError(f"setting {key!r} expects {typ.__name__}, got {value!r}") from None


def read_config_file(path) -> dict:
    """Parse a JSON object or ``key = value`` lines into a settings dict."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if text.lstrip().startswith("{"):
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    else:
        raw = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            raw[key] = value
    out = {}
    for key, value in raw.items():
        norm = key.replace("-", "_")
        if norm not in DEFAULTS:
            raise ConfigError(f"{path}: unknown setting {key!r}")
        if norm == "oracle_active" and isinstance(value, list):
            value = ",".join(str(v) for v in value)
        out[norm] = _coerce(norm, value)
    return out


def resolve_settings(args: argparse.Namespace) -> dict:
    settings = {k: v[1] for k, v in DEFAULTS.items()}
    from_file = read_config_file(args.config) if args.config else {}
    flags = {k: getattr(args, k) for k in DEFAULTS if getattr(args, k, None) is not None}
    objective = flags.get("objective", from_file.get("objective"))
    if objective in PRESETS:
        settings.update(PRESETS[objective])
    settings.update(from_file)
    settings.update(flags)
    if (settings["objective"] is None) == (settings["dataset"] is None):
        raise ConfigError("give exactly one of --objective or --dataset")
    if settings["objective"] is not None and settings["objective"] not in FUNCTIONS:
        raise ConfigError(f"unknown objective {settings['objective']!r}; choose from {sorted(FUNCTIONS)}")
    if settings["reps"] < 1:
        raise ConfigError("--reps must be >= 1")
    return settings


def parse_index_list(text):
    if text is None or str(text).strip() == "":
        return None
    try:
        return tuple(int(v) for v in str(text).replace(" ", "").split(",") if v != "")
    except ValueError:
        raise ConfigError(f"cannot parse index list {text!r}") from None


def build_objective(settings: dict):
    if settings["dataset"] is not None:
        try:
            data = load_dataset(settings["dataset"], bandwidth=settings["bandwidth"] or 1.0)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read dataset {settings['dataset']}: {exc}") from None
        if settings["bandwidth"] is None:
            data.bandwidth = cv_bandwidth(data)
            log.info("cross-validated bandwidth h = %.5g", data.bandwidth)
        obj = data.as_objective(settings["noise_var"])
        obj.name = os.path.splitext(os.path.basename(settings["dataset"]))[0]
        obj.meta["bandwidth"] = data.bandwidth
        return obj
    try:
        return make_objective(settings["objective"], settings["p0"], settings["noise_var"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def build_run_config(settings: dict, mode: str, seed: int, p0: int) -> RunConfig:
    n0 = settings["n0"] if settings["n0"] is not None else 10 * p0
    oracle = parse_index_list(settings["oracle_active"]) if mode == "oracle" else None
    return RunConfig(
        n0=n0,
        N=settings["steps"],
        g=settings["g"],
        rho=settings["rho"],
        delta=settings["delta"],
        M=settings["chain_m"],
        m=settings["subsample_m"],
        q=settings["q"],
        c=settings["candidates"],
        nu=settings["nu"],
        mode=mode,
        oracle_active=oracle,
        seed=seed,
        burn_in=settings["burn_in"],
        line_delta=settings["line_delta"],
    )


def trace_rows(trace, mode: str, seed: int, wall_time: bool = True) -> list:
    f0 = trace.steps[0].f_at_chi if trace.steps else float("nan")
    rows = []
    for s in trace.steps:
        rows.append({
            "objective": trace.objective,
            "mode": mode,
            "seed": seed,
            "step": s.step,
            "f_opt": repr(float(s.f_at_chi)),
            "improvement": repr(float(s.f_at_chi - f0)),
            "n_global_kept": len(s.global_keep),
            "n_local_active": len(s.local_active),
            "wall_ms": f"{s.wall_ms:.1f}" if wall_time else "0",
        })
    return rows


def _run_job(job):
    """Worker entry point: rebuild the objective, run one (mode, seed), return rows or the error."""
    settings, mode, seed = job
    _setup_logging(settings.get("_verbosity", 0))
    obj = build_objective(settings)
    cfg = build_run_config(settings, mode, seed, obj.p0)
    try:
        trace = run(obj, cfg)
    except (EmptyModelError, np.linalg.LinAlgError) as exc:
        return mode, seed, None, f"{type(exc).__name__}: {exc}"
    return mode, seed, trace_rows(trace, mode, seed, not settings["no_wall_time"]), None


def _write_csv(path, columns, rows):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


def summarize(rows) -> list:
    """Mean and standard error of improvement per (mode, step), plus per-mode overall rows."""
    groups: dict = {}
    for r in rows:
        groups.setdefault((r["objective"], r["mode"]), {}).setdefault(int(r["step"]), []).append(r)
    out = []
    for (objective, mode), by_step in groups.items():
        overall: dict = {}
        for step in sorted(by_step):
            rs = by_step[step]
            imp = np.array([float(r["improvement"]) for r in rs])
            out.append(_summary_row(objective, mode, step, imp, rs))
            if step > 0:
                for r, v in zip(rs, imp):
                    overall.setdefault(r["seed"], []).append(v)
        if overall:
            per_run = np.array([np.mean(v) for v in overall.values()])
            out.append(_summary_row(objective, mode, "overall", per_run, []))
    return out


def _summary_row(objective, mode, step, values, rows):
    n = values.size
    se = float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else float("nan")

    def avg(key):
        return repr(float(np.mean([float(r[key]) for r in rows]))) if rows else ""

    return {
        "objective": objective,
        "mode": mode,
        "step": step,
        "n_runs": n,
        "mean_improvement": repr(float(values.mean())),
        "se_improvement": repr(se),
        "mean_f_opt": avg("f_opt"),
        "mean_n_global_kept": avg("n_global_kept"),
        "mean_n_local_active": avg("n_local_active"),
    }


def _summary_path(out):
    root, ext = os.path.splitext(out)
    return f"{root}_summary{ext or '.csv'}"


def _failures_path(out):
    root, ext = os.path.splitext(out)
    return f"{root}_failures{ext or '.csv'}"


def cmd_run(settings: dict) -> int:
    mode = settings["mode"]
    if mode not in MODES:
        raise ConfigError(f"--mode must be one of {MODES}")
    out = settings["out"] or "run.csv"
    mode_, seed, rows, err = _run_job((settings, mode, settings["seed"]))
    if err is not None:
        log.error("run aborted (mode=%s, seed=%d): %s", mode_, seed, err)
        return 3
    _write_csv(out, LONG_COLUMNS, rows)
    log.info("wrote %d rows to %s", len(rows), out)
    return 0


def cmd_bench(settings: dict) -> int:
    modes = [m.strip() for m in settings["modes"].split(",") if m.strip()]
    if not modes or any(m not in MODES for m in modes):
        raise ConfigError(f"--modes must be a comma list drawn from {MODES}")
    if "oracle" in modes and parse_index_list(settings["oracle_active"]) is None:
        raise ConfigError("oracle mode needs --oracle-active")
    out = settings["out"] or "bench.csv"
    # fail fast on configuration problems before dispatching work
    obj = build_objective(settings)
    for m in modes:
        build_run_config(settings, m, settings["seed"], obj.p0)
    if settings["dataset"] is not None and settings["bandwidth"] is None:
        settings = dict(settings, bandwidth=obj.meta.get("bandwidth"))
    jobs = [(settings, m, settings["seed"] + r) for r in range(settings["reps"]) for m in modes]
    threads = settings["threads"] or os.cpu_count() or 1
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(threads, len(jobs))) as pool:
            results = list(pool.map(_run_job, jobs))
    else:
        results = [_run_job(j) for j in jobs]
    order = {m: i for i, m in enumerate(modes)}
    results.sort(key=lambda res: (order[res[0]], res[1]))
    rows, failures = [], []
    for mode, seed, rs, err in results:
        if err is None:
            rows.extend(rs)
            log.info("done mode=%s seed=%d", mode, seed)
        else:
            failures.append({"objective": obj.name, "mode": mode, "seed": seed, "error": err})
            log.error("failed mode=%s seed=%d: %s", mode, seed, err)
    _write_csv(out, LONG_COLUMNS, rows)
    _write_csv(_summary_path(out), SUMMARY_COLUMNS, summarize(rows))
    if failures:
        _write_csv(_failures_path(out), FAILURE_COLUMNS, failures)
        return 3
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="solidopt", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more log output on stderr")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="count", default=argparse.SUPPRESS, help="more log output on stderr")
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb, help_ in (("run", "one optimization run, per-step CSV"), ("bench", "replicated paired-seed runs")):
        p = sub.add_parser(verb, help=help_, parents=[common])
        p.add_argument("--config", help="settings file (JSON object or key = value lines)")
        p.add_argument("--objective", choices=sorted(FUNCTIONS))
        p.add_argument("--dataset", help="delimited text file, inputs then response")
        p.add_argument("--bandwidth", type=float, help="smoother bandwidth; cross-validated when omitted")
        p.add_argument("--p0", type=int, help="ambient dimension for test functions")
        if verb == "run":
            p.add_argument("--mode", choices=MODES)
        else:
            p.add_argument("--modes", help="comma list of modes")
            p.add_argument("--reps", type=int, help="replications; seeds are seed, seed+1, ...")
            p.add_argument("--threads", type=int, help="worker processes (default: all cores)")
        p.add_argument("--seed", type=int)
        p.add_argument("--steps", type=int, help="sequential budget N")
        p.add_argument("--out", help="CSV output path")
        p.add_argument("--n0", type=int, help="initial design size (default 10 * p0)")
        p.add_argument("--g", type=float, help="global selection threshold")
        p.add_argument("--rho", type=float, help="local selection threshold")
        p.add_argument("--delta", type=float, help="local radius")
        p.add_argument("--line-delta", dest="line_delta", type=float, help="line-search radius (default delta)")
        p.add_argument("--chain-m", dest="chain_m", type=int, help="retained MCMC draws M")
        p.add_argument("--burn-in", dest="burn_in", type=int, help="burn-in sweeps (default M)")
        p.add_argument("--subsample-m", dest="subsample_m", type=int, help="draws for marginal surfaces m")
        p.add_argument("--candidates", type=int, help="candidates per set c")
        p.add_argument("--nu", type=float, help="incumbent risk aversion")
        p.add_argument("--q", type=int, help="points per local prediction cloud")
        p.add_argument("--noise-var", dest="noise_var", type=float, help="observation noise variance")
        p.add_argument("--oracle-active", dest="oracle_active", help="comma list of active indices (oracle mode)")
        p.add_argument("--no-wall-time", dest="no_wall_time", action="store_const", const=True,
                       help="write wall_ms as 0 so repeated runs give identical files")
    return parser


def _setup_logging(verbosity: int):
    level = logging.WARNING if verbosity <= 0 else (logging.INFO if verbosity == 1 else logging.DEBUG)
    root = logging.getLogger("solidopt")
    if not root.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter("%(asctime)s %(name)s %(levelname)s %(message)s"))
        root.addHandler(handler)
    root.setLevel(level)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _setup_logging(args.verbose)
    try:
        settings = resolve_settings(args)
        settings["_verbosity"] = args.verbose
        if args.verb == "run":
            return cmd_run(settings)
        return cmd_bench(settings)
    except ConfigError as exc:
        print(f"solidopt: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
