import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from progbayes.data import TrialData
from progbayes.errors import DomainError
from progbayes.estimators import prog_adjust_analysis
from progbayes.posterior import (
    ExtendedPriorSpec,
    Posterior,
    PriorSpec,
    bayes_analysis,
    bayes_beta2_analysis,
    compute_posterior,
    compute_posterior_beta2,
    decide,
    design_moments,
    inv3,
    posterior_arrays,
    prior_terms,
)

from conftest import random_trial


def reference_posterior(d, lam, lam2=None, mu2_0=0.0):
    """Direct construction from the design matrix, without the batched helpers."""
    p = d.w.mean()
    m_bar = d.m.mean()
    x = np.column_stack([np.ones(d.n), d.w - p, d.m - m_bar])
    y = d.y - m_bar
    prec = np.array([[1.0, -p, 0.0], [-p, p * p, 0.0], [0.0, 0.0, 0.0]]) / lam**2
    rhs = x.T @ y
    extra = 0.0
    if lam2 is not None:
        prec[2, 2] = 1.0 / lam2**2
        rhs = rhs + np.array([0.0, 0.0, mu2_0 / lam2**2])
        extra = mu2_0**2 / lam2**2
    vinv = prec + x.T @ x
    mu = np.linalg.solve(vinv, rhs)
    s2 = y @ y - mu @ vinv @ mu + extra
    return mu, np.linalg.inv(vinv), s2, x, y, prec


def cofactor_inverse(a):
    out = np.empty((3, 3))
    det = np.linalg.det(a)
    for i in range(3):
        for j in range(3):
            minor = np.delete(np.delete(a, i, axis=0), j, axis=1)
            out[j, i] = (-1) ** (i + j) * np.linalg.det(minor) / det
    return out


class TestKernels:
    def test_inv3_matches_cofactor_expansion(self, rng):
        for _ in range(20):
            a = rng.normal(size=(3, 3))
            a = a @ a.T + 0.1 * np.eye(3)
            np.testing.assert_allclose(inv3(a), cofactor_inverse(a), rtol=1e-9, atol=1e-12)

    def test_inv3_batched(self, rng):
        a = rng.normal(size=(5, 4, 3, 3))
        inv = inv3(a)
        eye = np.einsum("...ij,...jk->...ik", a, inv)
        np.testing.assert_allclose(eye, np.broadcast_to(np.eye(3), eye.shape), atol=1e-8)

    def test_design_moments_batched_equals_rows(self, rng):
        trials = [random_trial(rng, n=30, p=0.4) for _ in range(4)]
        y = np.stack([t.y for t in trials])
        w = np.stack([t.w for t in trials])
        m = np.stack([t.m for t in trials])
        xtx, xty, yty, p = design_moments(y, w, m)
        for k, t in enumerate(trials):
            a = design_moments(t.y, t.w, t.m)
            np.testing.assert_allclose(xtx[k], a[0], rtol=1e-13)
            np.testing.assert_allclose(xty[k], a[1], rtol=1e-13)
            assert yty[k] == pytest.approx(a[2], rel=1e-13)
            assert p[k] == a[3]

    def test_prior_terms_layout(self):
        prec, shift, extra = prior_terms(0.5, 0.3, lam2=2.0, mu2_0=1.5)
        expected = np.array([[4.0, -1.2, 0.0], [-1.2, 0.36, 0.0], [0.0, 0.0, 0.25]])
        np.testing.assert_allclose(prec, expected, rtol=1e-14)
        np.testing.assert_allclose(shift, [0.0, 0.0, 0.375])
        assert extra == pytest.approx(0.5625)

    def test_flags_singular_precision(self):
        xtx = np.zeros((3, 3))
        prec, shift, extra = prior_terms(1.0, 0.5)
        *_, ok = posterior_arrays(xtx, np.zeros(3), 1.0, prec, shift, extra)
        assert not ok


class TestPosterior:
    def test_matches_reference_construction(self, rng):
        for _ in range(10):
            d = random_trial(rng)
            lam = rng.uniform(0.01, 2.0)
            post = compute_posterior(d, PriorSpec(lam))
            mu, V, s2, *_ = reference_posterior(d, lam)
            np.testing.assert_allclose(post.mu, mu, rtol=1e-8, atol=1e-10)
            np.testing.assert_allclose(post.V, V, rtol=1e-8, atol=1e-14)
            assert post.s2 == pytest.approx(s2, rel=1e-8)
            assert post.n == d.n

    def test_s2_identity(self, rng):
        for _ in range(10):
            d = random_trial(rng)
            lam, lam2, mu2_0 = rng.uniform(0.01, 1), rng.uniform(0.01, 1), rng.normal()
            ext = compute_posterior_beta2(d, ExtendedPriorSpec(lam, lam2, mu2_0))
            _, _, _, x, y, prec = reference_posterior(d, lam, lam2, mu2_0)
            prior_mean = np.array([0.0, 0.0, mu2_0])
            resid = y - x @ ext.mu
            dev = ext.mu - prior_mean
            assert ext.s2 == pytest.approx(resid @ resid + dev @ prec @ dev, rel=1e-8)

    def test_extended_matches_reference(self, rng):
        d = random_trial(rng, n=120)
        post = compute_posterior_beta2(d, ExtendedPriorSpec(0.1, 0.3, 0.8))
        mu, V, s2, *_ = reference_posterior(d, 0.1, 0.3, 0.8)
        np.testing.assert_allclose(post.mu, mu, rtol=1e-8)
        np.testing.assert_allclose(post.V, V, rtol=1e-8, atol=1e-14)
        assert post.s2 == pytest.approx(s2, rel=1e-8)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_flat_prior_recovers_ols(self, seed):
        d = random_trial(np.random.default_rng(seed))
        post = compute_posterior(d, PriorSpec(1e5))
        ols = prog_adjust_analysis(d)
        assert post.mu[1] == pytest.approx(ols.estimate, rel=1e-6, abs=1e-8)
        x = np.column_stack([np.ones(d.n), d.w, d.m])
        rss = np.sum((d.y - x @ np.linalg.lstsq(x, d.y, rcond=None)[0]) ** 2)
        assert post.s2 == pytest.approx(rss, rel=1e-6)

    def test_tight_prior_pins_intercept(self, rng):
        d = random_trial(rng, n=200)
        post = compute_posterior(d, PriorSpec(1e-4))
        # beta0 pinned at zero: y - mean(m) = beta1 * w + beta2 * (m - mean(m))
        x = np.column_stack([d.w, d.m - d.m.mean()])
        coef = np.linalg.lstsq(x, d.y - d.m.mean(), rcond=None)[0]
        assert post.mu[1] == pytest.approx(coef[0], rel=1e-4)
        assert post.mu[0] - d.p * post.mu[1] == pytest.approx(0.0, abs=1e-5)

    def test_shrinkage_is_monotone(self, rng):
        d = random_trial(rng, n=300, beta0=2.0, beta1=0.0)
        bias = [compute_posterior(d, PriorSpec(lam)) for lam in (1e-4, 0.01, 0.1, 1.0, 100.0)]
        beta0 = [abs(b.mu[0] - d.p * b.mu[1]) for b in bias]
        assert all(a <= b + 1e-12 for a, b in zip(beta0, beta0[1:]))

    def test_common_translation_invariance(self, rng):
        d = random_trial(rng, n=90)
        moved = TrialData(d.y + 40.0, d.w, d.m + 40.0)
        a = compute_posterior(d, PriorSpec(0.2))
        b = compute_posterior(moved, PriorSpec(0.2))
        np.testing.assert_allclose(a.mu, b.mu, rtol=1e-8, atol=1e-9)
        assert a.s2 == pytest.approx(b.s2, rel=1e-8)

    def test_treated_shift_moves_beta1_exactly(self, rng):
        d = random_trial(rng, n=90)
        delta = 0.75
        moved = TrialData(d.y + delta * d.w, d.w, d.m)
        a = compute_posterior(d, PriorSpec(0.05))
        b = compute_posterior(moved, PriorSpec(0.05))
        assert b.mu[1] - a.mu[1] == pytest.approx(delta, rel=1e-9)
        assert b.s2 == pytest.approx(a.s2, rel=1e-8)

    def test_wide_slope_prior_matches_base(self, rng):
        d = random_trial(rng, n=100)
        a = compute_posterior(d, PriorSpec(0.1))
        b = compute_posterior_beta2(d, ExtendedPriorSpec(0.1, 1e8, 0.0))
        np.testing.assert_allclose(a.mu, b.mu, rtol=1e-6, atol=1e-10)
        assert b.s2 == pytest.approx(a.s2, rel=1e-6)

    def test_tight_slope_prior_pins_slope(self, rng):
        d = random_trial(rng, n=100)
        post = compute_posterior_beta2(d, ExtendedPriorSpec(0.1, 1e-6, 0.6))
        assert post.mu[2] == pytest.approx(0.6, abs=1e-4)

    def test_prior_domain(self):
        for bad in (0.0, -1.0, math.inf, math.nan):
            with pytest.raises(DomainError):
                PriorSpec(bad)
            with pytest.raises(DomainError):
                ExtendedPriorSpec(0.1, bad)
        assert PriorSpec.from_n_lambda_sq(4.0, 100).lam == pytest.approx(0.2)


class TestDecision:
    def test_marginal_is_scaled_t(self, rng):
        d = random_trial(rng, n=60)
        post = compute_posterior(d, PriorSpec(0.3))
        scale = math.sqrt(post.V[1, 1] * post.s2 / post.n)
        assert post.beta1_scale == pytest.approx(scale)
        marginal = stats.t(df=post.n, loc=post.mu[1], scale=scale)
        assert post.beta1_sd == pytest.approx(marginal.std(), rel=1e-12)
        out = decide(post)
        assert out.posterior_prob_positive == pytest.approx(marginal.sf(0.0), rel=1e-9)

    def test_boundary_is_strict(self):
        n = 50
        thr = stats.t.ppf(0.975, n)
        threshold = decide(Posterior(np.array([0.0, thr, 0.0]), np.eye(3), float(n), n)).threshold
        at = Posterior(np.array([0.0, threshold, 0.0]), np.eye(3), float(n), n)
        out = decide(at)
        assert out.statistic == threshold
        assert not out.reject
        above = Posterior(np.array([0.0, math.nextafter(threshold, 10.0), 0.0]), np.eye(3), float(n), n)
        assert decide(above).reject
        below = Posterior(np.array([0.0, -math.nextafter(threshold, 10.0), 0.0]), np.eye(3), float(n), n)
        assert decide(below).reject

    def test_rule_equals_probability_of_sign(self, rng):
        for _ in range(40):
            d = random_trial(rng, beta1=rng.normal(0.0, 0.3))
            post = compute_posterior(d, PriorSpec(rng.uniform(0.01, 1.0)))
            for alpha in (0.01, 0.05, 0.2):
                out = decide(post, alpha)
                prob = out.posterior_prob_positive
                assert out.reject == (prob > 1 - alpha / 2 or prob < alpha / 2)

    def test_zero_scale_is_degenerate(self):
        post = Posterior(np.array([0.0, 0.3, 0.0]), np.eye(3), 0.0, 20)
        out = decide(post)
        assert out.degenerate and out.reject and out.statistic == math.inf
        flat = Posterior(np.zeros(3), np.eye(3), 0.0, 20)
        assert not decide(flat).reject

    def test_reports(self, rng):
        d = random_trial(rng, n=80)
        rep = bayes_analysis(d, PriorSpec(0.1))
        post = compute_posterior(d, PriorSpec(0.1))
        assert rep.method == "bayes"
        assert rep.estimate == post.mu[1]
        assert rep.stddev == post.beta1_sd
        assert rep.df == d.n
        ext = bayes_beta2_analysis(d, ExtendedPriorSpec(0.1, 0.5, 1.0))
        assert ext.method == "bayes_beta2"

    def test_flat_prior_statistic_ratio(self, rng):
        # flat-prior limit: same estimate and quadratic form, divisors n and n - 3
        for _ in range(10):
            d = random_trial(rng)
            b, f = bayes_analysis(d, PriorSpec(1e5)), prog_adjust_analysis(d)
            assert b.statistic / f.statistic == pytest.approx(math.sqrt(d.n / (d.n - 3)), rel=1e-6)

    def test_flat_prior_agrees_with_prog_adjust(self):
        rng = np.random.default_rng(7)
        agree = 0
        trials = 500
        for _ in range(trials):
            d = random_trial(rng, n=1000, p=0.5, beta1=rng.choice([0.0, 0.15]), sigma=1.5)
            agree += bayes_analysis(d, PriorSpec(1e5)).reject == prog_adjust_analysis(d).reject
        assert agree / trials >= 0.995
