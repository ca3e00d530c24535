import numpy as np
import pytest

from recalib import (
    CvPlan,
    InputError,
    Normal,
    NonStandardizedT,
    SyntheticSpec,
    TrainingSet,
    aggregate,
    detrend_linear,
    fit_mos,
    generate_synthetic,
    paired_folds,
    run_cv,
)


class TestGenerateSynthetic:
    def test_noiseless_identity(self):
        spec = SyntheticSpec("mos", (0.0, 1.0, 1e-9), n=50, seed=0)
        train = generate_synthetic(spec)
        np.testing.assert_allclose(train.y, train.m, atol=1e-7)

    def test_mos_parameter_recovery(self):
        spec = SyntheticSpec("mos", (1.0, 2.0, 0.5), n=10**5, seed=1)
        fit = fit_mos(generate_synthetic(spec))
        assert fit.a_hat == pytest.approx(1.0, abs=0.01)
        assert fit.b_hat == pytest.approx(2.0, abs=0.01)
        assert fit.c2_hat == pytest.approx(0.25, abs=0.01)  # c^2, not c

    def test_deterministic(self):
        spec = SyntheticSpec("ngr", (0, 1, 0.5, 0.5), n=100, seed=9)
        a = generate_synthetic(spec)
        b = generate_synthetic(spec)
        np.testing.assert_array_equal(a.m, b.m)
        np.testing.assert_array_equal(a.v, b.v)
        np.testing.assert_array_equal(a.y, b.y)

    def test_ngr_variances_positive(self):
        spec = SyntheticSpec("ngr", (0, 1, 0.1, 1.0), n=1000, seed=2)
        train = generate_synthetic(spec)
        assert np.all(train.v > 0)

    def test_invalid_spec_rejected(self):
        with pytest.raises(InputError):
            SyntheticSpec("mos", (0.0, 1.0), n=10, seed=0)
        with pytest.raises(InputError):
            SyntheticSpec("weibull", (1.0, 1.0, 1.0), n=10, seed=0)
        with pytest.raises(InputError):
            SyntheticSpec("mos", (0.0, 1.0, -0.5), n=10, seed=0)


class TestDetrendLinear:
    def test_exact_line(self):
        t = np.arange(6)
        resid, (intercept, slope) = detrend_linear(zip(t, 2 + 3 * t))
        np.testing.assert_allclose(resid, 0.0, atol=1e-12)
        assert intercept == pytest.approx(2.0, abs=1e-12)
        assert slope == pytest.approx(3.0, abs=1e-12)

    def test_constant_series(self):
        resid, (intercept, slope) = detrend_linear([(i, 5.0) for i in range(5)])
        np.testing.assert_allclose(resid, 0.0, atol=1e-12)
        assert intercept == pytest.approx(5.0) and slope == pytest.approx(0.0)

    def test_quadratic_hand_case(self):
        t = np.arange(5)
        resid, (intercept, slope) = detrend_linear(zip(t, t**2.0))
        assert slope == pytest.approx(4.0, abs=1e-12)
        np.testing.assert_allclose(resid, [2, -1, -2, -1, 2], atol=1e-12)

    def test_residual_properties(self):
        rng = np.random.default_rng(3)
        t = np.arange(30)
        x = rng.normal(0, 1, 30) + 0.3 * t
        resid, _ = detrend_linear(zip(t, x))
        assert abs(resid.sum()) < 1e-9
        assert abs(np.dot(resid, t - t.mean())) < 1e-8

    def test_degenerate_t(self):
        with pytest.raises(InputError):
            detrend_linear([(1, 0.0), (1, 1.0), (1, 2.0)])


class TestRunCv:
    def test_minimal_rolling_fold_count(self):
        spec = SyntheticSpec("mos", (0, 1, 0.5), n=26, seed=4)
        plan = CvPlan(mode="rolling", recalibrator="mos-t", base_seed=0, window=25)
        res = run_cv(generate_synthetic(spec), plan)
        assert res.fold_count == 1
        assert res.folds[0].index == 25

    def test_leave_one_out_n20(self):
        spec = SyntheticSpec("ngr", (0, 1, 0.5, 0.5), n=20, seed=5)
        plan = CvPlan(mode="leave-one-out", recalibrator="ngr-plugin", base_seed=0)
        res = run_cv(generate_synthetic(spec), plan)
        assert res.fold_count == 20
        assert sorted(f.index for f in res.folds) == list(range(20))

    def test_mos_t_shares_plugin_location(self):
        spec = SyntheticSpec("mos", (0.5, 1.2, 0.8), n=60, seed=6)
        data = generate_synthetic(spec)
        plugin = run_cv(data, CvPlan("rolling", "mos-plugin", 0, window=25))
        t = run_cv(data, CvPlan("rolling", "mos-t", 0, window=25))
        assert plugin.fold_count == t.fold_count == 35
        for fp, ft in zip(plugin.folds, t.folds):
            assert isinstance(fp.forecast, Normal)
            assert isinstance(ft.forecast, NonStandardizedT)
            assert ft.forecast.mu == pytest.approx(fp.forecast.mu, abs=1e-12)
            assert ft.forecast.sigma2 > fp.forecast.sigma2

    def test_rolling_causality_and_out_of_sample(self):
        from recalib.harness import _fold_indices

        plan = CvPlan("rolling", "mos-t", 0, window=10)
        for i, idx in _fold_indices(30, plan):
            assert np.all(idx < i)
            assert len(idx) == 10
            assert i not in idx
        loo = CvPlan("leave-one-out", "mos-t", 0)
        for i, idx in _fold_indices(30, loo):
            assert i not in idx
            assert len(idx) == 29

    def test_window_below_minimum_rejected(self):
        with pytest.raises(InputError):
            CvPlan("rolling", "ngr-plugin", 0, window=3)

    def test_insufficient_data(self):
        spec = SyntheticSpec("mos", (0, 1, 0.5), n=10, seed=7)
        plan = CvPlan("rolling", "mos-t", 0, window=25)
        with pytest.raises(InputError):
            run_cv(generate_synthetic(spec), plan)

    def test_jobs_do_not_change_results(self):
        spec = SyntheticSpec("ngr", (0, 1, 0.5, 0.5), n=62, seed=8)
        data = generate_synthetic(spec)
        plan = CvPlan("rolling", "ngr-bootstrap", base_seed=3, window=50, K=5)
        serial = run_cv(data, plan, jobs=1)
        parallel = run_cv(data, plan, jobs=2)
        assert serial == parallel

    def test_detrend_adds_trend_back(self):
        # strongly trended observations: without detrending the rolling MOS
        # lags the trend; with it the predictive locations track y closely
        rng = np.random.default_rng(9)
        n = 80
        t = np.arange(n, dtype=float)
        m = rng.normal(0, 1, n)
        y = 0.2 * t + m + rng.normal(0, 0.1, n)
        data = TrainingSet(m, np.ones(n), y)
        plan = CvPlan("rolling", "mos-plugin", 0, window=30, detrend=True)
        res = run_cv(data, plan)
        errs = [abs(f.forecast.mu - f.y) for f in res.folds]
        assert np.mean(errs) < 0.5

    def test_failed_folds_recorded(self):
        # constant ensemble means make every MOS fit degenerate
        n = 30
        data = TrainingSet(np.ones(n), np.ones(n), np.random.default_rng(10).normal(0, 1, n))
        plan = CvPlan("rolling", "mos-plugin", 0, window=25)
        res = run_cv(data, plan)
        assert res.fold_count == 0
        assert res.failure_count == 5


@pytest.fixture(scope="module")
def small_result():
    spec = SyntheticSpec("mos", (0, 1, 0.7), n=40, seed=11)
    plan = CvPlan("rolling", "mos-t", 0, window=25)
    return run_cv(generate_synthetic(spec), plan)


class TestAggregate:

    def test_single_fold_summary_equals_record(self):
        spec = SyntheticSpec("mos", (0, 1, 0.7), n=26, seed=12)
        res = run_cv(generate_synthetic(spec), CvPlan("rolling", "mos-t", 0, window=25))
        summary = aggregate(res)
        record = res.folds[0].record
        assert summary.mean_ignorance == pytest.approx(record.ignorance_bits)
        assert summary.mean_crps == pytest.approx(record.crps)
        assert summary.fold_count == 1

    def test_mean_is_arithmetic(self, small_result):
        summary = aggregate(small_result)
        assert summary.mean_crps == pytest.approx(
            np.mean([f.record.crps for f in small_result.folds])
        )
        assert sum(summary.pit_hist.counts) == summary.fold_count

    def test_coverage_levels(self, small_result):
        summary = aggregate(small_result, levels=(0.5, 0.9))
        levels = [lv for lv, _ in summary.coverage]
        assert levels == [0.5, 0.9]
        for _, cov in summary.coverage:
            assert 0.0 <= cov <= 1.0

    def test_empty_errors(self):
        from recalib.harness import CvResult

        with pytest.raises(InputError):
            aggregate(CvResult(folds=(), failed_indices=(1, 2)))

    def test_paired_folds_drop_failures_from_both(self):
        from recalib.harness import CvResult

        spec = SyntheticSpec("mos", (0, 1, 0.7), n=30, seed=13)
        res = run_cv(generate_synthetic(spec), CvPlan("rolling", "mos-t", 0, window=25))
        # drop one fold from a copy to emulate a one-armed failure
        partial = CvResult(folds=res.folds[1:], failed_indices=(res.folds[0].index,))
        pairs = paired_folds(res, partial)
        assert len(pairs) == res.fold_count - 1
        assert all(a.index == b.index for a, b in pairs)
