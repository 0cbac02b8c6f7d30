import numpy as np
import pytest

from solidopt import loop
from solidopt.errors import ConfigError, EmptyModelError
from solidopt.loop import (
    RunConfig,
    RunTrace,
    StepRecord,
    improvement,
    initial_design,
    overall_improvement,
    run,
    run_baseline,
    run_solid,
)
from solidopt.testbed import Objective, make_objective
from solidopt.varsel import GlobalActivity

SMALL = dict(n0=10, N=2, M=60, m=10, q=20, c=30, lhs_restarts=5, g=0.5, rho=0.3, delta=0.15)


class Recorder(Objective):
    """Objective wrapper that logs every point it is asked to evaluate."""

    def __init__(self, base):
        super().__init__(base.name, base.p0, base.active, base.fn, base.noise_var, base.known_max)
        self.calls = []

    def eval(self, x):
        self.calls.append(np.array(x, dtype=float))
        return super().eval(x)


def _trace(values):
    steps = [StepRecord(i, np.zeros(2), v, (0, 1), (0, 1), np.ones(2), None) for i, v in enumerate(values)]
    return RunTrace("t", RunConfig(), 2, np.zeros((2, 2)), np.zeros(2), steps)


class TestRunConfig:
    def test_oracle_needs_active(self):
        with pytest.raises(ConfigError):
            RunConfig(mode="oracle")
        with pytest.raises(ConfigError):
            RunConfig(mode="solid", oracle_active=(0,))

    @pytest.mark.parametrize(
        "kw",
        [dict(mode="x"), dict(m=20, M=10), dict(g=0.0), dict(rho=1.0), dict(delta=0.0), dict(q=2), dict(c=0),
         dict(nu=-1.0), dict(n0=1), dict(N=-1)],
    )
    def test_rejects(self, kw):
        with pytest.raises(ConfigError):
            RunConfig(**kw)

    def test_defaults(self):
        c = RunConfig()
        assert (c.g, c.rho, c.delta, c.M, c.m, c.c, c.nu, c.q) == (0.05, 0.02, 0.30, 1000, 100, 300, 1.0, 100)
        assert c.search_radius == 0.30
        assert RunConfig(line_delta=0.1).search_radius == 0.1
        assert "priors" not in c.to_dict()


class TestImprovement:
    def test_arithmetic(self):
        t = _trace([5.0, 6.0, 7.0, 8.0])
        np.testing.assert_array_equal(improvement(t), [1.0, 2.0, 3.0])
        assert overall_improvement(t) == 2.0

    def test_constant(self):
        t = _trace([3.0] * 4)
        assert np.all(improvement(t) == 0) and overall_improvement(t) == 0.0

    def test_no_steps(self):
        t = _trace([3.0])
        assert improvement(t).size == 0 and overall_improvement(t) == 0.0


class TestRun:
    def test_zero_budget(self):
        obj = make_objective("toy", p0=3, noise_var=0.08)
        t = run(obj, RunConfig(**dict(SMALL, N=0)))
        assert len(t.steps) == 1
        assert t.steps[0].next_point is None and t.steps[0].observed_y is None

    def test_solid_contracts(self):
        obj = Recorder(make_objective("toy", p0=3, noise_var=0.08))
        t = run_solid(obj, RunConfig(**dict(SMALL, N=4)), rng=3)
        assert t.config.seed == 3
        assert len(t.steps) == 5
        keeps = [set(s.global_keep) for s in t.steps]
        assert all(b <= a for a, b in zip(keeps, keeps[1:]))
        for s in t.steps:
            assert s.chi_hat.shape == (3,)
            assert np.all((s.chi_hat >= 0) & (s.chi_hat <= 1))
            assert set(s.local_active) <= set(s.global_keep)
            assert s.f_at_chi == obj.fn(s.chi_hat)
            assert np.all(np.isnan(s.bhat) == np.isin(np.arange(3), s.global_keep, invert=True))
        assert all(c.shape == (3,) for c in obj.calls)
        for s in t.steps[:-1]:
            assert s.candidate_origin in ("restricted", "unrestricted")
            assert np.all((s.next_point >= 0) & (s.next_point <= 1))

    def test_removed_coordinates_filled(self):
        obj = make_objective("toy", p0=3, noise_var=0.08)
        for seed in range(6):
            t = run(obj, RunConfig(**dict(SMALL, N=3, seed=seed)))
            removed = sorted(set(range(3)) - set(t.steps[-1].global_keep))
            for k in removed:
                first = next(s.step for s in t.steps if k not in s.global_keep)
                for s in t.steps[first:]:
                    assert s.chi_hat[k] == t.fill_in[k]
                    if s.next_point is not None:
                        assert s.next_point[k] == t.fill_in[k]

    def test_seed_reproducible(self):
        obj = make_objective("toy", p0=3, noise_var=0.08)
        a = run(obj, RunConfig(**dict(SMALL, seed=11)))
        b = run(obj, RunConfig(**dict(SMALL, seed=11)))
        np.testing.assert_array_equal(a.chi_hats, b.chi_hats)
        np.testing.assert_array_equal(a.f_values, b.f_values)
        assert [s.observed_y for s in a.steps] == [s.observed_y for s in b.steps]

    def test_modes_share_initial_state(self):
        obj = make_objective("toy", p0=3, noise_var=0.08)
        traces = {}
        for mode in ("solid", "gvs", "none"):
            traces[mode] = run(obj, RunConfig(**dict(SMALL, N=0, mode=mode, seed=2)))
        traces["oracle"] = run(obj, RunConfig(**dict(SMALL, N=0, mode="oracle", oracle_active=(0, 1, 2), seed=2)))
        ref = traces["solid"]
        for t in traces.values():
            np.testing.assert_array_equal(t.X0, ref.X0)
            np.testing.assert_array_equal(t.y0, ref.y0)
        # same first chain, so the same inclusion frequencies and global selection
        np.testing.assert_array_equal(traces["gvs"].steps[0].bhat, ref.steps[0].bhat)
        assert traces["gvs"].steps[0].global_keep == ref.steps[0].global_keep

    def test_initial_design_helper(self):
        obj = make_objective("toy", p0=3)
        X0, y0, _ = initial_design(obj, RunConfig(**SMALL))
        assert X0.shape == (10, 3)
        np.testing.assert_array_equal(y0, obj.fn(X0))

    def test_oracle_all_equals_none(self):
        obj = make_objective("toy", p0=3, noise_var=0.08)
        a = run(obj, RunConfig(**dict(SMALL, mode="oracle", oracle_active=(0, 1, 2), seed=5)))
        b = run(obj, RunConfig(**dict(SMALL, mode="none", seed=5)))
        np.testing.assert_array_equal(a.chi_hats, b.chi_hats)
        assert overall_improvement(a) == overall_improvement(b)

    def test_oracle_fixed_columns(self):
        obj = Recorder(make_objective("beach", p0=8, noise_var=0.05))
        cfg = RunConfig(**dict(SMALL, n0=20, mode="oracle", oracle_active=tuple(range(6))))
        t = run_baseline(obj, cfg)
        assert all(s.global_keep == tuple(range(6)) and len(s.local_active) == 6 for s in t.steps)
        assert all(np.all(s.chi_hat[6:] == loop.ORACLE_FILL) for s in t.steps)
        assert all(np.all(c[6:] == loop.ORACLE_FILL) for c in obj.calls[cfg.n0:])

    def test_oracle_index_range(self):
        obj = make_objective("toy", p0=3)
        with pytest.raises(ConfigError):
            run(obj, RunConfig(**dict(SMALL, mode="oracle", oracle_active=(0, 7))))

    def test_none_keeps_all_columns(self):
        obj = make_objective("beach", p0=15, noise_var=0.05)
        t = run(obj, RunConfig(**dict(SMALL, n0=20, N=1, mode="none")))
        assert all(len(s.global_keep) == 15 and len(s.local_active) == 15 for s in t.steps)
        assert all(s.L is None for s in t.steps)

    def test_gvs_no_local_selection(self):
        obj = make_objective("toy", p0=3, noise_var=0.08)
        t = run(obj, RunConfig(**dict(SMALL, mode="gvs")))
        for s in t.steps:
            assert s.local_active == s.global_keep and s.L is None
        assert all(s.candidate_origin == "unrestricted" for s in t.steps[:-1])

    def test_baseline_rejects_solid(self):
        with pytest.raises(ConfigError):
            run_baseline(make_objective("toy", p0=3), RunConfig(**SMALL))

    def test_empty_model_aborts(self, monkeypatch):
        monkeypatch.setattr(loop, "global_activity", lambda draws, g: GlobalActivity(np.zeros(draws.p), g, ()))
        with pytest.raises(EmptyModelError):
            run(make_objective("toy", p0=3), RunConfig(**SMALL))
