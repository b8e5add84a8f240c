import math

import numpy as np
import pytest
from scipy import stats

from progbayes.data import TrialData
from progbayes.errors import DomainError, SingularDesignError
from progbayes.estimators import (
    AnalysisReport,
    ols_fit,
    prog_adjust_analysis,
    single_arm_analysis,
    t_test_report,
    unadjusted_analysis,
)

from conftest import random_trial


class TestOLS:
    def test_matches_pinv_oracle(self, rng):
        x = np.column_stack([np.ones(40), rng.normal(size=40), rng.normal(size=40)])
        y = x @ [1.0, -2.0, 0.5] + rng.normal(size=40)
        fit = ols_fit(x, y)
        coef = np.linalg.pinv(x) @ y
        np.testing.assert_allclose(fit.coef, coef, rtol=1e-10)
        resid = y - x @ coef
        assert fit.rss == pytest.approx(resid @ resid, rel=1e-10)
        np.testing.assert_allclose(fit.xtx_inv, np.linalg.inv(x.T @ x), rtol=1e-9)
        assert fit.df == 37

    def test_rank_deficient(self):
        x = np.column_stack([np.ones(6), np.arange(6.0), 2 * np.arange(6.0)])
        with pytest.raises(SingularDesignError):
            ols_fit(x, np.arange(6.0))


class TestUnadjusted:
    def test_equals_pooled_two_sample_t(self, rng):
        for _ in range(10):
            d = random_trial(rng)
            rep = unadjusted_analysis(d)
            w = d.w.astype(bool)
            ref = stats.ttest_ind(d.y[w], d.y[~w], equal_var=True)
            assert rep.estimate == pytest.approx(d.y[w].mean() - d.y[~w].mean(), rel=1e-9, abs=1e-12)
            assert rep.statistic == pytest.approx(ref.statistic, rel=1e-9)
            assert rep.df == d.n - 2
            assert rep.reject == (ref.pvalue < 0.05)

    def test_threshold(self, rng):
        d = random_trial(rng, n=30)
        rep = unadjusted_analysis(d, alpha=0.1)
        assert rep.threshold == pytest.approx(stats.t.ppf(0.95, 28), rel=1e-10)


class TestProgAdjust:
    def test_matches_lstsq(self, rng):
        for _ in range(10):
            d = random_trial(rng)
            rep = prog_adjust_analysis(d)
            x = np.column_stack([np.ones(d.n), d.w, d.m])
            coef, rss, *_ = np.linalg.lstsq(x, d.y, rcond=None)
            cov = np.linalg.inv(x.T @ x) * rss[0] / (d.n - 3)
            assert rep.estimate == pytest.approx(coef[1], rel=1e-8, abs=1e-12)
            assert rep.stddev == pytest.approx(math.sqrt(cov[1, 1]), rel=1e-8)
            assert rep.df == d.n - 3

    def test_score_shift_invariance(self, rng):
        d = random_trial(rng, n=80)
        shifted = TrialData(d.y, d.w, d.m + 123.0)
        a, b = prog_adjust_analysis(d), prog_adjust_analysis(shifted)
        assert a.estimate == pytest.approx(b.estimate, rel=1e-8)
        assert a.statistic == pytest.approx(b.statistic, rel=1e-8)

    def test_exact_fit_is_degenerate(self):
        m = np.array([0.0, 1.0, 2.0, 3.0, 4.0, 5.0])
        w = np.array([0, 1, 0, 1, 0, 1])
        d = TrialData(1.0 + 0.5 * w + 2.0 * m, w, m)
        rep = prog_adjust_analysis(d)
        assert rep.degenerate
        assert rep.estimate == pytest.approx(0.5)
        assert rep.statistic == math.inf
        assert rep.reject
        d0 = TrialData(1.0 + 2.0 * m, w, m)
        rep0 = prog_adjust_analysis(d0)
        assert rep0.degenerate and rep0.estimate == 0.0 and not rep0.reject


class TestSingleArm:
    def test_equals_one_sample_t(self, rng):
        for _ in range(10):
            d = random_trial(rng)
            rep = single_arm_analysis(d)
            w = d.w.astype(bool)
            ref = stats.ttest_1samp(d.y[w] - d.m[w], 0.0)
            assert rep.statistic == pytest.approx(ref.statistic, rel=1e-9)
            assert rep.df == d.n_treated - 1
            assert rep.reject == (ref.pvalue < 0.05)

    def test_control_rows_ignored(self, rng):
        d = random_trial(rng, n=60)
        w = d.w.astype(bool)
        y = d.y.copy()
        y[~w] = rng.normal(size=(~w).sum()) * 1000.0
        a, b = single_arm_analysis(d), single_arm_analysis(TrialData(y, d.w, d.m))
        assert a == b

    def test_zero_variance(self):
        d = TrialData([2.0, 5.0, 3.0, 7.0, 1.0], [1, 0, 1, 0, 1], [1.5, 0.0, 2.5, 1.0, 0.5])
        rep = single_arm_analysis(d)
        assert rep.degenerate and rep.reject and rep.statistic == math.inf
        d0 = TrialData([1.5, 5.0, 2.5, 7.0, 0.5], [1, 0, 1, 0, 1], [1.5, 0.0, 2.5, 1.0, 0.5])
        rep0 = single_arm_analysis(d0)
        assert rep0.degenerate and not rep0.reject and rep0.statistic == 0.0


class TestReport:
    def test_interval_and_format(self):
        rep = t_test_report("x", 1.234, 0.5, 10, 0.05)
        lo, hi = rep.interval_95
        assert lo == pytest.approx(1.234 - 0.98)
        assert hi == pytest.approx(1.234 + 0.98)
        assert rep.format_row() == "1.23 ± 0.98"
        doc = rep.to_dict()
        assert doc["interval_95"] == [lo, hi]
        assert isinstance(rep, AnalysisReport)

    def test_strict_inequality(self):
        thr = t_test_report("x", 0.0, 1.0, 20, 0.05).threshold
        assert not t_test_report("x", thr, 1.0, 20, 0.05).reject
        assert t_test_report("x", math.nextafter(thr, math.inf), 1.0, 20, 0.05).reject

    def test_alpha_domain(self):
        for alpha in (0.0, 1.0, -0.1):
            with pytest.raises(DomainError):
                t_test_report("x", 1.0, 1.0, 5, alpha)
