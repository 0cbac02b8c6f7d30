import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_params, random_surface
from oracles import central_diff, dense_loglik, dense_predict, rel_err
from solidopt.errors import NotPositiveDefiniteError
from solidopt.gp import (
    GpParams,
    MarginalSurface,
    build_surface,
    kernel,
    log_likelihood,
    marginal_surface,
    predict,
    predict_gradients,
)


class TestGpParams:
    def test_derived_quantities(self):
        pr = GpParams(mu=1.0, eta=2.0, r=0.75, u=[3.0, 4.0], b=[1, 0], theta=0.3)
        np.testing.assert_array_equal(pr.gamma, [3.0, 0.0])
        assert pr.sigma2 == pytest.approx(0.375)
        assert pr.tau2 == pytest.approx(0.125)

    @pytest.mark.parametrize(
        "kw",
        [dict(eta=0.0), dict(r=1.0), dict(r=0.0), dict(u=[-1.0, 1.0]), dict(b=[2, 0]), dict(theta=1.5)],
    )
    def test_invariants_enforced(self, kw):
        base = dict(mu=0.0, eta=1.0, r=0.5, u=[1.0, 1.0], b=[1, 1], theta=0.5)
        base.update(kw)
        with pytest.raises(ValueError):
            GpParams(**base)

    def test_with_inactive_touches_only_b(self):
        pr = GpParams(mu=1.0, eta=2.0, r=0.5, u=[3.0, 4.0], b=[1, 1], theta=0.3)
        alt = pr.with_inactive(0)
        assert alt.b.tolist() == [0, 1]
        assert (alt.mu, alt.eta, alt.r, alt.theta) == (pr.mu, pr.eta, pr.r, pr.theta)
        np.testing.assert_array_equal(alt.u, pr.u)


class TestKernel:
    def test_zero_distance(self):
        assert kernel([0.3, 0.7], [0.3, 0.7], [5.0, 2.0]) == 1.0

    def test_zero_gamma(self):
        assert kernel([0.0, 0.0], [1.0, 1.0], [0.0, 0.0]) == 1.0

    def test_closed_form(self):
        assert kernel([0.0, 0.0], [1.0, 0.0], [math.log(2.0), 7.0]) == pytest.approx(0.5, abs=1e-15)

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            kernel([0.0], [1.0], [-0.1])


class TestBuildSurface:
    def test_single_point(self):
        s = build_surface(GpParams(0.0, 1.0, 0.6, [2.0], [1], 0.5), np.array([[0.3]]), np.array([1.0]))
        np.testing.assert_allclose(s.w_matrix(), [[1.0]])

    def test_constant_kernel(self):
        pr = GpParams(0.0, 1.0, 0.5, np.zeros(2), np.ones(2), 0.5)
        s = build_surface(pr, np.random.default_rng(0).random((3, 2)), np.zeros(3))
        np.testing.assert_allclose(s.w_matrix(), 0.5 * np.ones((3, 3)) + 0.5 * np.eye(3), atol=1e-15)

    def test_factorization_residual(self, rng):
        for _ in range(10):
            s = random_surface(rng, n=10, p=3)
            assert np.max(np.abs(s.chol @ s.chol.T - s.w_matrix())) < 1e-10

    def test_shape_mismatch(self):
        pr = GpParams(0.0, 1.0, 0.5, np.ones(2), np.ones(2), 0.5)
        with pytest.raises(ValueError):
            build_surface(pr, np.zeros((3, 3)), np.zeros(3))

    def test_duplicate_rows_need_jitter(self):
        # r -> 1 with duplicated rows makes W_X singular without jitter
        pr = GpParams(0.0, 1.0, 1 - 1e-14, np.ones(1), np.ones(1), 0.5)
        X = np.array([[0.2], [0.2], [0.7]])
        s = build_surface(pr, X, np.array([1.0, 1.0, 2.0]))
        assert np.all(np.isfinite(s.alpha))

    def test_indefinite_raises(self, monkeypatch):
        from solidopt import kernels

        def bad(E, r, y):
            raise NotPositiveDefiniteError("forced")

        monkeypatch.setattr(kernels, "factor_stats", bad)
        with pytest.raises(NotPositiveDefiniteError):
            build_surface(GpParams(0.0, 1.0, 0.5, [1.0], [1], 0.5), np.array([[0.1], [0.2]]), np.zeros(2))


class TestPredict:
    def test_dense_oracle(self, rng):
        for _ in range(20):
            n, p = rng.integers(2, 9), rng.integers(1, 4)
            X = rng.random((n, p))
            y = rng.normal(size=n)
            pr = random_params(rng, p)
            s = build_surface(pr, X, y)
            x = rng.random(p)
            m, v = predict(s, x)
            m0, v0 = dense_predict(pr.mu, pr.eta, pr.r, pr.gamma, X, y, x)
            assert abs(m - m0) < 1e-8 * max(1, abs(m0))
            assert abs(v - max(v0, 0.0)) < 1e-8

    def test_six_point_tight(self, rng):
        X = rng.random((6, 2))
        y = rng.normal(size=6)
        pr = random_params(rng, 2)
        s = build_surface(pr, X, y)
        for x in rng.random((5, 2)):
            m, v = s.predict(x)
            m0, v0 = dense_predict(pr.mu, pr.eta, pr.r, pr.gamma, X, y, x)
            assert abs(m - m0) < 1e-10
            assert abs(v - v0) < 1e-10

    def test_single_point_algebra(self):
        pr = GpParams(0.5, 2.0, 0.8, [3.0], [1], 0.5)
        s = build_surface(pr, np.array([[0.2]]), np.array([1.7]))
        x = np.array([0.6])
        k = math.exp(-3.0 * 0.16)
        m, v = s.predict(x)
        assert m == pytest.approx(0.5 + 0.8 * k * (1.7 - 0.5), abs=1e-14)
        assert v == pytest.approx(pr.sigma2 * (1 - 0.8 * k * k), abs=1e-14)

    def test_interpolation_as_r_to_one(self, rng):
        X = rng.random((8, 2))
        y = rng.normal(size=8)
        pr = GpParams(0.0, 1.0, 1 - 1e-12, [4.0, 6.0], [1, 1], 0.5)
        s = build_surface(pr, X, y)
        for i in range(8):
            m, v = s.predict(X[i])
            assert abs(m - y[i]) < 1e-6
            assert v < 1e-6

    def test_batch_matches_single(self, rng):
        s = random_surface(rng)
        pts = rng.random((7, 3))
        mb, vb = s.predict(pts)
        for i, x in enumerate(pts):
            m, v = s.predict(x)
            assert mb[i] == pytest.approx(m, abs=1e-14)
            assert vb[i] == pytest.approx(v, abs=1e-14)

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**31))
    def test_variance_nonnegative(self, seed):
        rng = np.random.default_rng(seed)
        s = random_surface(rng, n=10, p=2)
        _, v = s.predict(np.vstack([rng.random((20, 2)), s.X]))
        assert np.all(v >= 0)


class TestGradients:
    def test_zero_gamma(self):
        pr = GpParams(0.0, 1.0, 0.5, np.zeros(2), np.ones(2), 0.5)
        s = build_surface(pr, np.random.default_rng(0).random((4, 2)), np.arange(4.0))
        dm, dv = predict_gradients(s, np.array([0.3, 0.6]))
        assert np.all(dm == 0) and np.all(dv == 0)

    def test_finite_differences(self, rng):
        worst = 0.0
        for _ in range(5):
            s = random_surface(rng, n=12, p=3)
            for x in rng.uniform(0.05, 0.95, size=(20, 3)):
                dm, dv = s.gradients(x)
                worst = max(worst, rel_err(dm, central_diff(lambda z: s.predict(z)[0], x)))
                worst = max(worst, rel_err(dv, central_diff(lambda z: s.predict(z)[1], x)))
        assert worst < 1e-5

    def test_symmetric_midpoint(self):
        pr = GpParams(0.0, 1.0, 0.7, [5.0, 5.0], [1, 1], 0.5)
        X = np.array([[0.3, 0.5], [0.7, 0.5]])
        s = build_surface(pr, X, np.array([1.0, 1.0]))
        dm, _ = s.gradients(np.array([0.5, 0.5]))
        assert abs(dm[0]) < 1e-10


class TestLogLikelihood:
    def test_univariate(self):
        pr = GpParams(0.4, 2.5, 0.5, [1.0], [1], 0.5)
        ll = log_likelihood(pr, np.array([[0.2]]), np.array([1.1]))
        expect = -0.5 * math.log(2 * math.pi) + 0.5 * math.log(2.5) - 0.5 * 2.5 * 0.7**2
        assert ll == pytest.approx(expect, abs=1e-14)

    def test_independence_limit(self, rng):
        y = rng.normal(size=5)
        pr = GpParams(0.3, 1.7, 1e-12, np.zeros(1), np.ones(1), 0.5)
        ll = log_likelihood(pr, rng.random((5, 1)), y)
        iid = sum(-0.5 * math.log(2 * math.pi / 1.7) - 0.5 * 1.7 * (v - 0.3) ** 2 for v in y)
        assert ll == pytest.approx(iid, abs=1e-9)

    def test_dense_oracle(self, rng):
        for _ in range(20):
            n, p = rng.integers(2, 9), rng.integers(1, 4)
            X = rng.random((n, p))
            y = rng.normal(size=n)
            pr = random_params(rng, p)
            ll0 = dense_loglik(pr.mu, pr.eta, pr.r, pr.gamma, X, y)
            assert abs(log_likelihood(pr, X, y) - ll0) < 1e-8

    def test_row_permutation_invariance(self, rng):
        X = rng.random((9, 2))
        y = rng.normal(size=9)
        pr = random_params(rng, 2)
        perm = rng.permutation(9)
        assert log_likelihood(pr, X, y) == pytest.approx(log_likelihood(pr, X[perm], y[perm]), abs=1e-10)


class TestMarginalSurface:
    def test_single_draw(self, rng):
        s = random_surface(rng)
        x = rng.random(3)
        m, g = marginal_surface([s], s.X, s.y, x)
        assert m == pytest.approx(s.predict(x)[0], abs=1e-13)
        np.testing.assert_allclose(g, s.gradients(x)[0], atol=1e-12)

    def test_two_draw_average(self, rng):
        X = rng.random((10, 2))
        y = rng.normal(size=10)
        a, b = build_surface(random_params(rng, 2), X, y), build_surface(random_params(rng, 2), X, y)
        x = rng.random(2)
        m, _ = marginal_surface([a, b], X, y, x)
        assert m == pytest.approx((a.mean(x) + b.mean(x)) / 2, abs=1e-13)

    def test_loop_average(self, rng):
        X = rng.random((15, 3))
        y = rng.normal(size=15)
        draws = [random_params(rng, 3, b=rng.integers(0, 2, 3).astype(np.int8)) for _ in range(25)]
        surfaces = [build_surface(d, X, y) for d in draws]
        marg = MarginalSurface(surfaces)
        for x in rng.random((10, 3)):
            explicit = np.mean([s.predict(x)[0] for s in surfaces])
            explicit_g = np.mean([s.gradients(x)[0] for s in surfaces], axis=0)
            m, g = marg.mean_grad(x)
            assert abs(m - explicit) < 1e-12
            assert np.max(np.abs(g - explicit_g)) < 1e-12
            mm, vv = marg.moments(x)
            assert abs(mm - explicit) < 1e-12
            assert abs(vv - np.mean([s.predict(x)[1] for s in surfaces])) < 1e-12

    def test_raw_states_refit(self, rng):
        X = rng.random((6, 2))
        y = rng.normal(size=6)
        draws = [random_params(rng, 2) for _ in range(3)]
        x = rng.random(2)
        m, _ = marginal_surface(draws, X, y, x)
        assert m == pytest.approx(np.mean([build_surface(d, X, y).mean(x) for d in draws]), abs=1e-13)

    def test_moments_grad_fd(self, rng):
        X = rng.random((12, 3))
        y = rng.normal(size=12)
        marg = MarginalSurface(build_surface(random_params(rng, 3), X, y) for _ in range(6))
        for x in rng.uniform(0.05, 0.95, (10, 3)):
            _, _, dm, dv = marg.moments_grad(x)
            assert rel_err(dm, central_diff(lambda z: marg.moments(z)[0], x)) < 1e-5
            assert rel_err(dv, central_diff(lambda z: marg.moments(z)[1], x)) < 1e-5

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            MarginalSurface([])
