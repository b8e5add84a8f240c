"""Frequentist comparator analyses: unadjusted, prognostic covariate adjustment, single-arm.

All three are t-tests on an OLS coefficient.  Residual variances use the
unbiased divisor ``n - k`` except the single-arm statistic, whose variance
uses divisor ``pn`` together with the ``sqrt(pn - 1)`` scaling; the two
forms are algebraically the ordinary one-sample t statistic.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DataError, DomainError, SingularDesignError
from .stats import student_t_quantile

__all__ = [
    "METHODS",
    "AnalysisReport",
    "OLSFit",
    "ols_fit",
    "unadjusted_analysis",
    "prog_adjust_analysis",
    "single_arm_analysis",
]

METHODS = ("unadjusted", "prog_adjust", "single_arm", "bayes", "bayes_beta2")

Z_95 = 1.96


@dataclass(frozen=True)
class AnalysisReport:
    """Result of one analysis of one trial.

    ``stddev`` is a standard error for frequentist methods and a posterior
    standard deviation for Bayesian ones.  ``degenerate`` marks fits whose
    variance estimate is exactly zero; their ``statistic`` is infinite (or
    zero when the estimate is zero too).
    """

    method: str
    estimate: float
    stddev: float
    statistic: float
    df: float
    threshold: float
    reject: bool
    alpha: float
    degenerate: bool = False

    @property
    def interval_95(self):
        half = Z_95 * self.stddev
        return (self.estimate - half, self.estimate + half)

    def to_dict(self):
        out = asdict(self)
        out["interval_95"] = list(self.interval_95)
        return out

    def format_row(self):
        return f"{self.estimate:.2f} ± {Z_95 * self.stddev:.2f}"


def _check_alpha(alpha):
    if not (0.0 < alpha < 1.0):
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")


def t_test_report(method, estimate, se, df, alpha, degenerate=False):
    """Two-sided t-test of ``estimate / se`` at level ``alpha``.

    With ``degenerate`` set the standard error is treated as exactly zero and
    the test rejects iff the estimate is nonzero.
    """
    _check_alpha(alpha)
    threshold = student_t_quantile(1.0 - alpha / 2.0, df)
    if degenerate:
        statistic = 0.0 if estimate == 0.0 else math.copysign(math.inf, estimate)
    else:
        statistic = estimate / se
    return AnalysisReport(
        method=method,
        estimate=float(estimate),
        stddev=float(se),
        statistic=float(statistic),
        df=float(df),
        threshold=threshold,
        reject=bool(abs(statistic) > threshold),
        alpha=float(alpha),
        degenerate=bool(degenerate),
    )


@dataclass(frozen=True)
class OLSFit:
    """Least-squares fit; ``xtx_inv * rss / df`` is the coefficient covariance."""

    coef: np.ndarray
    xtx_inv: np.ndarray
    rss: float
    df: int
    scale: float

    def se(self, j):
        return math.sqrt(self.xtx_inv[j, j] * self.rss / self.df)


def _zero_tol(values):
    # residuals this small relative to the response are exact fits
    return 1e-12 * max(1.0, float(np.max(np.abs(values))))


def ols_fit(design, response):
    """Ordinary least squares of ``response`` on the columns of ``design``.

    Raises
    ------
    SingularDesignError
        If ``design`` is not of full column rank.
    """
    x = np.asarray(design, dtype=float)
    y = np.asarray(response, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n, k = x.shape
    if n <= k:
        raise DataError(f"need more observations than regressors (n={n}, k={k})")
    if np.linalg.matrix_rank(x) < k:
        raise SingularDesignError("design matrix is rank deficient")
    q, r = np.linalg.qr(x)
    coef = np.linalg.solve(r, q.T @ y)
    resid = y - x @ coef
    r_inv = np.linalg.inv(r)
    xtx_inv = r_inv @ r_inv.T
    rss = float(resid @ resid)
    if np.max(np.abs(resid)) <= _zero_tol(y):
        rss = 0.0
    return OLSFit(coef=coef, xtx_inv=xtx_inv, rss=rss, df=n - k, scale=float(np.max(np.abs(y))))


def _snap(estimate, scale):
    return 0.0 if abs(estimate) <= 1e-12 * max(1.0, scale) else estimate


def unadjusted_analysis(data, alpha=0.05):
    """Regress Y on an intercept and W; test the W coefficient."""
    if data.n <= 2:
        raise DataError("unadjusted analysis needs n > 2")
    design = np.column_stack([np.ones(data.n), data.w])
    fit = ols_fit(design, data.y)
    est = _snap(fit.coef[1], fit.scale)
    return t_test_report("unadjusted", est, fit.se(1), fit.df, alpha, degenerate=fit.rss == 0.0)


def prog_adjust_analysis(data, alpha=0.05):
    """Regress Y on an intercept, W and the prognostic score M; test the W coefficient."""
    design = np.column_stack([np.ones(data.n), data.w, data.m])
    fit = ols_fit(design, data.y)
    est = _snap(fit.coef[1], fit.scale)
    return t_test_report("prog_adjust", est, fit.se(1), fit.df, alpha, degenerate=fit.rss == 0.0)


def single_arm_analysis(data, alpha=0.05):
    """One-sample t-test of Y - M on the treated arm; control rows are ignored."""
    n_t = data.n_treated
    if n_t < 2:
        raise DataError(f"single-arm analysis needs at least 2 treated subjects, got {n_t}")
    w = data.w.astype(bool)
    d = data.y[w] - data.m[w]
    est = float(np.mean(d))
    s2 = float(np.mean((d - est) ** 2))  # divisor pn
    degenerate = bool(np.max(np.abs(d - est)) <= _zero_tol(d))
    est = _snap(est, float(np.max(np.abs(d))))
    se = 0.0 if degenerate else math.sqrt(s2 / (n_t - 1))
    return t_test_report("single_arm", est, se, n_t - 1, alpha, degenerate=degenerate)
