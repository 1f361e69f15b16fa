import numpy as np
import pytest

from blockdpp import cpd_metrics as cm


def stats(mean, cov):
    mu = np.atleast_1d(np.asarray(mean, dtype=np.float64))
    C = np.atleast_2d(np.asarray(cov, dtype=np.float64))
    return cm.SegmentStats(count=2, mean=mu, cov=C)


class TestSeriesCoercion:
    def test_1d_becomes_column(self):
        assert cm.as_series([1.0, 2.0]).shape == (2, 1)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            cm.as_series([1.0, np.inf])

    def test_rejects_bad_shape(self):
        with pytest.raises(ValueError):
            cm.as_series(np.ones((2, 2, 2)))

    def test_events_must_increase(self):
        with pytest.raises(ValueError):
            cm.as_events([1.0, 1.0])


class TestSegmentStats:
    def test_ml_denominator(self):
        X = np.array([[0.0], [2.0]])
        s = cm.segment_stats(X, 0, 2, delta_reg=0.0)
        assert s.mean[0] == 1.0
        assert s.cov[0, 0] == pytest.approx(1.0)  # ((−1)²+1²)/2, not /1

    def test_ridge_added(self):
        X = np.zeros((5, 2))
        s = cm.segment_stats(X, 0, 5, delta_reg=1e-6)
        assert np.allclose(s.cov, 1e-6 * np.eye(2))

    def test_too_short(self):
        with pytest.raises(ValueError):
            cm.segment_stats(np.zeros((5, 1)), 0, 1)


class TestSymkl:
    def test_identical_is_zero(self):
        s = stats([1.0, 2.0], np.array([[2.0, 0.3], [0.3, 1.0]]))
        assert abs(cm.symkl(s, s)) <= 1e-10

    def test_symmetric(self):
        a = stats([0.0], [[1.0]])
        b = stats([1.5], [[2.5]])
        assert cm.symkl(a, b) == cm.symkl(b, a)

    def test_mean_shift_example(self):
        # unit variances, unit mean shift: 1 + 1 - 2 + (1 + 1) * 1 = 2
        assert cm.symkl(stats([0.0], [[1.0]]),
                        stats([1.0], [[1.0]])) == pytest.approx(2.0, abs=1e-10)

    def test_variance_ratio_example(self):
        # equal means, variances 1 and 2: 0.5 + 2 - 2 = 0.5
        assert cm.symkl(stats([0.0], [[1.0]]),
                        stats([0.0], [[2.0]])) == pytest.approx(0.5, abs=1e-10)

    def test_nonnegative(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            B1 = rng.standard_normal((5, 2))
            B2 = rng.standard_normal((5, 2))
            a = stats(rng.standard_normal(2), B1.T @ B1 + 0.1 * np.eye(2))
            b = stats(rng.standard_normal(2), B2.T @ B2 + 0.1 * np.eye(2))
            assert cm.symkl(a, b) >= -1e-10

    def test_affine_invariance(self):
        # same affine map on both segments, delta_reg = 0, full rank
        rng = np.random.default_rng(1)
        X1 = rng.standard_normal((50, 2))
        X2 = rng.standard_normal((50, 2)) + np.array([2.0, -1.0])
        A = np.array([[1.3, 0.4], [-0.2, 0.8]])
        b = np.array([5.0, -3.0])
        s = lambda X: cm.segment_stats(X, 0, X.shape[0], delta_reg=0.0)
        before = cm.symkl(s(X1), s(X2))
        after = cm.symkl(s(X1 @ A.T + b), s(X2 @ A.T + b))
        assert after == pytest.approx(before, rel=1e-8)


class TestGlrGaussian:
    def test_identical_segments_near_zero(self):
        rng = np.random.default_rng(2)
        X = rng.standard_normal(400)
        v = cm.glr_gaussian(X[:200], X[200:])
        assert -1e-9 <= v <= 5.0

    def test_mean_shift_strongly_positive(self):
        rng = np.random.default_rng(3)
        X1 = rng.standard_normal(100)
        X2 = rng.standard_normal(100) + 5.0
        assert cm.glr_gaussian(X1, X2) > 100.0

    def test_nonnegative(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            X1 = rng.standard_normal(20)
            X2 = rng.standard_normal(25)
            assert cm.glr_gaussian(X1, X2) >= -1e-9

    def test_single_sample_rejected(self):
        with pytest.raises(ValueError):
            cm.glr_gaussian([1.0], [1.0, 2.0])

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            cm.glr_gaussian(np.ones((3, 2)), np.ones((3, 1)))


class TestGlrPoisson:
    def test_equal_rate_example(self):
        # unit-rate segments: (-10) + (-10) - (-21) = 1
        e1 = np.arange(0.0, 11.0)
        e2 = np.arange(11.0, 22.0)
        assert cm.glr_poisson(e1, e2) == pytest.approx(1.0, abs=1e-10)

    def test_double_rate_example(self):
        e1 = np.arange(0.0, 11.0)
        e2 = 10.5 + 0.5 * np.arange(21.0)
        lam2 = 20.0 / 10.0
        lam_p = 31.0 / 20.5
        expect = (10.0 * np.log(1.0) - 10.0) + (20.0 * np.log(lam2) - 10.0 * lam2) \
            - (31.0 * np.log(lam_p) - 20.5 * lam_p)
        assert cm.glr_poisson(e1, e2) == pytest.approx(expect, abs=1e-10)
        assert expect == pytest.approx(2.041, abs=5e-3)

    def test_single_event_rejected(self):
        with pytest.raises(ValueError):
            cm.glr_poisson([1.0], [2.0, 3.0])

    def test_zero_span_rejected(self):
        with pytest.raises(ValueError):
            cm.glr_poisson([1.0, 1.0], [2.0, 3.0])

    def test_nonnegative(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            e1 = np.sort(rng.uniform(0, 10, 12))
            e2 = np.sort(rng.uniform(10, 30, 15))
            assert cm.glr_poisson(e1, e2) >= -1e-9


class TestProfiles:
    def test_constant_model_series_near_zero(self):
        rng = np.random.default_rng(6)
        X = rng.standard_normal(300)
        prof = cm.dissimilarity_profile(X, 40)
        assert np.all(prof.values < 1.0)
        assert np.array_equal(prof.times, np.arange(40, 261))

    def test_single_shift_peak_location(self):
        rng = np.random.default_rng(7)
        X = np.concatenate([rng.standard_normal(150),
                            rng.standard_normal(150) + 4.0])
        prof = cm.dissimilarity_profile(X, 40)
        tstar = prof.times[np.argmax(prof.values)]
        assert abs(tstar - 150) <= 2

    def test_too_short(self):
        with pytest.raises(ValueError):
            cm.dissimilarity_profile(np.zeros(79), 40)  # T = 2w - 1

    def test_unknown_metric(self):
        with pytest.raises(ValueError):
            cm.dissimilarity_profile(np.zeros(100), 10, metric="nope")

    def test_glr_metric_runs(self):
        rng = np.random.default_rng(8)
        X = rng.standard_normal(60)
        prof = cm.dissimilarity_profile(X, 10, metric="glr_gaussian")
        assert np.all(prof.values >= -1e-9)

    def test_poisson_profile_peak(self):
        rng = np.random.default_rng(9)
        e1 = np.cumsum(rng.exponential(1.0, 100))      # rate 1 until ~100
        e2 = e1[-1] + np.cumsum(rng.exponential(0.2, 100))  # then rate 5
        e = np.concatenate([e1, e2])
        prof = cm.poisson_profile(e, 20.0)
        tstar = prof.times[np.argmax(prof.values)]
        assert abs(tstar - e1[-1]) <= 20.0

    def test_poisson_profile_validation(self):
        with pytest.raises(ValueError):
            cm.poisson_profile([1.0], 5.0)
        with pytest.raises(ValueError):
            cm.poisson_profile([0.0, 1.0], 5.0)  # span too short
        with pytest.raises(ValueError):
            cm.poisson_profile([0.0, 100.0], -1.0)
