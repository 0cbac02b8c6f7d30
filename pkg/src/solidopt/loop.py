"""The sequential design loop (SOLID) and its three baselines."""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from solidopt.acquisition import (
    AeiObjective,
    build_active_region,
    build_candidates,
    build_restricted_region,
    choose_candidate_set,
    line_search_maximize,
    select_incumbent,
)
from solidopt.design import maximin_lhs
from solidopt.errors import ConfigError, EmptyModelError
from solidopt.mcmc import ChainConfig, Priors, run_chain
from solidopt.optimum import estimate_chi_marginal, estimate_chi_t
from solidopt.region import SearchRegion
from solidopt.testbed import noisy_eval
from solidopt.varsel import Design, apply_global_selection, global_activity, local_importance

__all__ = ["MODES", "RunConfig", "StepRecord", "RunTrace", "run_solid", "run_baseline", "run", "improvement",
           "overall_improvement"]

log = logging.getLogger(__name__)

MODES = ("solid", "gvs", "oracle", "none")
ORACLE_FILL = 0.5  # value passed to the objective for coordinates an oracle run never models


@dataclass(frozen=True)
class RunConfig:
    n0: int = 70
    N: int = 25
    g: float = 0.05
    rho: float = 0.02
    delta: float = 0.30
    M: int = 1000
    m: int = 100
    q: int = 100
    c: int = 300
    nu: float = 1.0
    mode: str = "solid"
    oracle_active: tuple | None = None
    seed: int = 0
    burn_in: int | None = None
    line_delta: float | None = None  # line-search radius; defaults to delta
    lhs_restarts: int = 100
    priors: Priors = field(default_factory=Priors)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.mode == "oracle" and not self.oracle_active:
            raise ConfigError("oracle mode needs oracle_active")
        if self.mode != "oracle" and self.oracle_active is not None:
            raise ConfigError("oracle_active is only used in oracle mode")
        if self.oracle_active is not None:
            object.__setattr__(self, "oracle_active", tuple(int(k) for k in self.oracle_active))
        if self.n0 < 2 or self.N < 0:
            raise ConfigError("need n0 >= 2 and N >= 0")
        if not 1 <= self.m <= self.M:
            raise ConfigError(f"need 1 <= m <= M, got m={self.m}, M={self.M}")
        if not (0 < self.g < 1 and 0 < self.rho < 1 and self.delta > 0):
            raise ConfigError("need 0 < g < 1, 0 < rho < 1, delta > 0")
        if self.q < 3 or self.c < 1 or self.nu < 0:
            raise ConfigError("need q >= 3, c >= 1, nu >= 0")

    @property
    def search_radius(self) -> float:
        return self.delta if self.line_delta is None else self.line_delta

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("priors")
        return d


@dataclass
class StepRecord:
    step: int
    chi_hat: np.ndarray  # original coordinates
    f_at_chi: float
    global_keep: tuple  # original indices
    local_active: tuple  # original indices
    bhat: np.ndarray  # over original indices, nan for removed
    L: np.ndarray | None
    candidate_origin: str | None = None
    next_point: np.ndarray | None = None  # original coordinates
    observed_y: float | None = None
    wall_ms: float = 0.0


@dataclass
class RunTrace:
    objective: str
    config: RunConfig
    p0: int
    X0: np.ndarray
    y0: np.ndarray
    steps: list = field(default_factory=list)
    fill_in: np.ndarray | None = None
    error: str | None = None

    @property
    def f_values(self) -> np.ndarray:
        return np.array([s.f_at_chi for s in self.steps])

    @property
    def chi_hats(self) -> np.ndarray:
        return np.array([s.chi_hat for s in self.steps])


def improvement(trace: RunTrace) -> np.ndarray:
    """f(chi^i) - f(chi^0) for i = 1..N."""
    f = trace.f_values
    return f[1:] - f[0]


def overall_improvement(trace: RunTrace) -> float:
    imp = improvement(trace)
    return float(imp.mean()) if imp.size else 0.0


class _Streams:
    """Independent random streams so that every mode shares the initial design, responses and first chain."""

    def __init__(self, seed):
        design, init_noise, mcmc, local, cand, noise = np.random.SeedSequence(seed).spawn(6)
        self.design = np.random.default_rng(design)
        self.init_noise = np.random.default_rng(init_noise)
        self.mcmc = np.random.default_rng(mcmc)
        self.local = np.random.default_rng(local)
        self.cand = np.random.default_rng(cand)
        self.noise = np.random.default_rng(noise)


def initial_design(objective, config: RunConfig):
    """Maximin LHS and its noisy responses; identical for every mode given the seed."""
    streams = _Streams(config.seed)
    X0 = maximin_lhs(config.n0, objective.p0, config.lhs_restarts, streams.design)
    y0 = np.array([noisy_eval(objective, x, streams.init_noise) for x in X0])
    return X0, y0, streams


def _full(fill, columns, x):
    z = fill.copy()
    z[columns] = x
    return z


def _run(objective, config: RunConfig) -> RunTrace:
    mode = config.mode
    p0 = objective.p0
    X0, y0, rs = initial_design(objective, config)
    trace = RunTrace(objective.name, config, p0, X0, y0)
    fill = np.full(p0, ORACLE_FILL)
    if mode == "oracle":
        cols = np.array(config.oracle_active)
        if cols.min() < 0 or cols.max() >= p0:
            raise ConfigError(f"oracle_active indices must lie in [0, {p0})")
        design = Design(X0[:, cols], y0, cols)
    else:
        design = Design(X0, y0)
    chain_cfg = ChainConfig(M=config.M, burn_in=config.burn_in)
    select_global = mode in ("solid", "gvs")
    prev_chi = None

    for i in range(config.N + 1):
        t0 = time.perf_counter()
        while True:
            draws = run_chain(design.y, design.X, config.priors, chain_cfg, rng=rs.mcmc)
            if not select_global:
                break
            act = global_activity(draws, config.g)
            if not act.dropped:
                break
            if not act.keep:
                trace.error = f"step {i}: every variable globally inactive"
                trace.fill_in = fill
                raise EmptyModelError(trace.error)
            if prev_chi is None:
                marg0 = draws.marginal(draws.thinned(config.m))
                prev_chi = estimate_chi_marginal(marg0, design.X, design.y)
            for k in act.dropped:
                fill[design.columns[k]] = prev_chi[k]
            log.info("step %d: removing variables %s", i, [int(design.columns[k]) for k in act.dropped])
            prev_chi = prev_chi[list(act.keep)]
            design, _ = apply_global_selection(design, act)

        p = design.p
        bhat = np.full(p0, np.nan)
        bhat[design.columns] = draws.b_matrix.mean(axis=0)
        idx = draws.thinned(config.m)
        marg = draws.marginal(idx)
        box = SearchRegion.box(p)
        chi_box = estimate_chi_marginal(marg, design.X, design.y, box, prev_chi)

        L = None
        if mode == "solid":
            start = prev_chi
            report = local_importance(
                draws, config.m, config.delta, config.q, config.rho,
                lambda s: estimate_chi_t(s, start, design.X, design.y), rs.local, indices=idx,
            )
            L = np.full(p0, np.nan)
            L[design.columns] = report.L
            active = report.active if report.active else tuple(range(p))
            region_delta = build_restricted_region(report.chi_draws, config.delta, chi_box, active)
            region_a = build_active_region(chi_box, active)
            if len(active) < p:
                chi = estimate_chi_marginal(marg, design.X, design.y, region_a, prev_chi, extra_starts=[chi_box])
            else:
                chi = chi_box
        else:
            active = tuple(range(p))
            region_a = box
            chi = chi_box

        chi_full = _full(fill, design.columns, chi)
        rec = StepRecord(
            step=i,
            chi_hat=chi_full,
            f_at_chi=float(objective.eval(chi_full)),
            global_keep=tuple(int(c) for c in design.columns),
            local_active=tuple(int(design.columns[k]) for k in active),
            bhat=bhat,
            L=L,
        )

        if i < config.N:
            _, incumbent = select_incumbent(marg, design.X, config.nu)
            aei_obj = AeiObjective(marg, incumbent, float(np.sqrt(marg.tau2)), active)
            if mode == "solid":
                c_delta = build_candidates(region_delta, config.c, rs.cand, "restricted", config.lhs_restarts)
                c_a = build_candidates(region_a, config.c, rs.cand, "unrestricted", config.lhs_restarts)
                c_delta.aei = aei_obj(c_delta.points)
                c_a.aei = aei_obj(c_a.points)
                cands = choose_candidate_set(c_delta, c_a)
            else:
                cands = build_candidates(box, config.c, rs.cand, "unrestricted", config.lhs_restarts)
                cands.aei = aei_obj(cands.points)
            x_star, _ = line_search_maximize(cands, config.search_radius, active, aei_obj.value_grad)
            x_full = _full(fill, design.columns, x_star)
            y_new = float(noisy_eval(objective, x_full, rs.noise))
            design = design.augment(x_star, y_new)
            rec.candidate_origin = cands.origin
            rec.next_point = x_full
            rec.observed_y = y_new

        rec.wall_ms = 1e3 * (time.perf_counter() - t0)
        trace.steps.append(rec)
        log.info("step %d: f(chi)=%.4f |A|=%d p=%d (%.0f ms)", i, rec.f_at_chi, len(active), p, rec.wall_ms)
        prev_chi = chi

    trace.fill_in = fill
    return trace


def run_solid(objective, config: RunConfig, rng=None) -> RunTrace:
    """Run SOLID; ``rng`` (an int) overrides ``config.seed``."""
    if config.mode != "solid":
        config = replace(config, mode="solid", oracle_active=None)
    return run(objective, config, rng)


def run_baseline(objective, config: RunConfig, rng=None) -> RunTrace:
    if config.mode == "solid":
        raise ConfigError("run_baseline needs mode gvs, oracle or none")
    return run(objective, config, rng)


def run(objective, config: RunConfig, rng=None) -> RunTrace:
    if rng is not None:
        config = replace(config, seed=int(rng))
    return _run(objective, config)
