"""Limiting Normal-Inverse-Gamma posterior for Bayesian prognostic covariate adjustment.

Coefficients are reparameterized as ``(beta0 + p*beta1, beta1, beta2)`` against
the design rows ``(1, w - p, m - mean(m))`` and centered outcomes
``y - mean(m)``.  A zero-mean Gaussian prior with scale ``lambda * sigma``
sits on ``beta0``; ``beta1`` and ``beta2`` get flat priors in the limit, or
``beta2`` gets an informative ``N(mu2_0, sigma^2 lambda2^2)`` prior in the
extended variant.  Given ``sigma^2`` the posterior is ``N(mu, sigma^2 V)``,
and ``sigma^2 ~ InvGamma(n/2, S^2/2)``, so the ``beta1`` marginal is a
scaled ``t_n``.

The moment and inversion helpers work on stacked arrays (leading batch
axes), which lets the simulator evaluate thousands of replicates at once
through the same code path as a single trial.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConsistencyError, DataError, DomainError, SingularDesignError
from .estimators import AnalysisReport, _check_alpha
from .stats import student_t_cdf, student_t_quantile

__all__ = [
    "PriorSpec",
    "ExtendedPriorSpec",
    "Posterior",
    "DecisionOutcome",
    "design_moments",
    "inv3",
    "compute_posterior",
    "compute_posterior_beta2",
    "decide",
    "bayes_analysis",
    "bayes_beta2_analysis",
]

MAX_CONDITION = 1e12
S2_CLAMP = 1e-9
EXACT_FIT = 1e-12


def _positive(value, name):
    value = float(value)
    if not (value > 0.0 and math.isfinite(value)):
        raise DomainError(f"{name} must be finite and positive, got {value}")
    return value


@dataclass(frozen=True)
class PriorSpec:
    """Prior standard deviation ``lam`` on ``beta0 / sigma``."""

    lam: float

    def __post_init__(self):
        object.__setattr__(self, "lam", _positive(self.lam, "lambda"))

    @classmethod
    def from_n_lambda_sq(cls, n_lambda_sq, n):
        return cls(math.sqrt(n_lambda_sq / n))


@dataclass(frozen=True)
class ExtendedPriorSpec:
    """Adds a ``N(mu2_0, sigma^2 * lam2^2)`` prior on the slope ``beta2``."""

    lam: float
    lam2: float
    mu2_0: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "lam", _positive(self.lam, "lambda"))
        object.__setattr__(self, "lam2", _positive(self.lam2, "lambda2"))
        object.__setattr__(self, "mu2_0", float(self.mu2_0))


@dataclass(frozen=True, eq=False)
class Posterior:
    """Posterior summary ``(mu, V, s2, n)``.

    ``mu`` is the mean of ``(beta0 + p*beta1, beta1, beta2)``; the
    coefficient covariance given ``sigma^2`` is ``sigma^2 * V``.
    """

    mu: np.ndarray
    V: np.ndarray
    s2: float
    n: int

    @property
    def beta1_scale(self):
        """Scale of the ``t_n`` marginal of ``beta1``."""
        return math.sqrt(self.V[1, 1] * self.s2 / self.n)

    @property
    def beta1_sd(self):
        """Standard deviation of the ``beta1`` marginal (needs ``n > 2``)."""
        if self.n <= 2:
            raise DataError("posterior standard deviation requires n > 2")
        return math.sqrt(self.V[1, 1] * self.s2 / (self.n - 2))


@dataclass(frozen=True)
class DecisionOutcome:
    statistic: float
    threshold: float
    reject: bool
    posterior_prob_positive: float
    degenerate: bool = False


# ---------------------------------------------------------------------------
# array kernels


def design_moments(y, w, m):
    """Sufficient statistics ``(XtX, XtY, YtY, p)`` of the centered design.

    Inputs have shape ``(..., n)``; outputs have shapes ``(..., 3, 3)``,
    ``(..., 3)``, ``(...)`` and ``(...)``.
    """
    y = np.asarray(y, dtype=float)
    w = np.asarray(w, dtype=float)
    m = np.asarray(m, dtype=float)
    n = y.shape[-1]
    p = w.sum(axis=-1) / n
    m_bar = m.mean(axis=-1, keepdims=True)
    x = np.stack([np.ones_like(y), w - p[..., None], m - m_bar], axis=-1)
    yc = y - m_bar
    xtx = np.einsum("...ni,...nj->...ij", x, x)
    xty = np.einsum("...ni,...n->...i", x, yc)
    yty = np.einsum("...n,...n->...", yc, yc)
    return xtx, xty, yty, p


def inv3(a):
    """Closed-form (adjugate over determinant) inverse of stacked 3x3 matrices."""
    a = np.asarray(a, dtype=float)
    a00, a01, a02 = a[..., 0, 0], a[..., 0, 1], a[..., 0, 2]
    a10, a11, a12 = a[..., 1, 0], a[..., 1, 1], a[..., 1, 2]
    a20, a21, a22 = a[..., 2, 0], a[..., 2, 1], a[..., 2, 2]
    c00 = a11 * a22 - a12 * a21
    c01 = a12 * a20 - a10 * a22
    c02 = a10 * a21 - a11 * a20
    det = a00 * c00 + a01 * c01 + a02 * c02
    adj = np.empty_like(a)
    adj[..., 0, 0] = c00
    adj[..., 1, 0] = c01
    adj[..., 2, 0] = c02
    adj[..., 0, 1] = a02 * a21 - a01 * a22
    adj[..., 1, 1] = a00 * a22 - a02 * a20
    adj[..., 2, 1] = a01 * a20 - a00 * a21
    adj[..., 0, 2] = a01 * a12 - a02 * a11
    adj[..., 1, 2] = a02 * a10 - a00 * a12
    adj[..., 2, 2] = a00 * a11 - a01 * a10
    # singular inputs yield inf/nan entries; callers screen them via ``ok``
    with np.errstate(divide="ignore", invalid="ignore"):
        return adj / det[..., None, None]


def prior_terms(lam, p, lam2=None, mu2_0=0.0):
    """Prior precision, shift added to XtY, and constant added to S^2.

    ``p`` may be an array of treated fractions (one per replicate).
    """
    p = np.asarray(p, dtype=float)
    prec = np.zeros(p.shape + (3, 3))
    inv_l2 = 1.0 / lam**2
    prec[..., 0, 0] = inv_l2
    prec[..., 0, 1] = prec[..., 1, 0] = -p * inv_l2
    prec[..., 1, 1] = p**2 * inv_l2
    shift = np.zeros(p.shape + (3,))
    extra = np.zeros(p.shape)
    if lam2 is not None:
        prec[..., 2, 2] = 1.0 / lam2**2
        shift[..., 2] = mu2_0 / lam2**2
        extra = extra + mu2_0**2 / lam2**2
    return prec, shift, extra


def posterior_arrays(xtx, xty, yty, prec, shift, extra):
    """Batched posterior.

    Returns ``(mu, V, s2, ok)`` where ``ok`` flags replicates whose precision
    matrix is well conditioned and whose ``S^2`` passed the non-negativity
    check (tiny negatives are clamped to zero).
    """
    vinv = prec + xtx
    eig = np.linalg.eigvalsh(vinv)
    lo, hi = eig[..., 0], np.abs(eig).max(axis=-1)
    ok = (lo > 0.0) & (hi < MAX_CONDITION * np.where(lo > 0.0, lo, np.inf))
    V = inv3(vinv)
    mu = np.einsum("...ij,...j->...i", V, xty + shift)
    quad = np.einsum("...i,...ij,...j->...", mu, vinv, mu)
    s2 = yty - quad + extra
    scale = yty + extra
    ok = ok & (s2 >= -S2_CLAMP * scale)
    # an exact fit leaves only rounding noise in S^2 and in zero coefficients
    s2 = np.where(s2 <= EXACT_FIT * scale, 0.0, s2)
    size = EXACT_FIT * np.maximum(1.0, np.sqrt(scale))
    mu = np.where(np.abs(mu) <= size[..., None], 0.0, mu)
    return mu, V, s2, ok


def _scalar_posterior(data, prec, shift, extra):
    xtx, xty, yty, _ = design_moments(data.y, data.w, data.m)
    vinv = prec + xtx
    eig = np.linalg.eigvalsh(vinv)
    if not (eig[0] > 0.0 and abs(eig).max() < MAX_CONDITION * eig[0]):
        raise SingularDesignError(
            f"posterior precision matrix is numerically singular (eigenvalues {eig.tolist()})"
        )
    mu, V, s2, ok = posterior_arrays(xtx, xty, yty, prec, shift, extra)
    if not ok:
        raise ConsistencyError(f"S^2 is significantly negative ({float(yty - mu @ vinv @ mu + extra)})")
    return Posterior(mu=mu, V=V, s2=float(s2), n=data.n)


def compute_posterior(data, prior):
    """Limiting posterior for ``data`` under the ``beta0`` prior ``prior``."""
    prec, shift, extra = prior_terms(prior.lam, data.p)
    return _scalar_posterior(data, prec, shift, extra)


def compute_posterior_beta2(data, prior):
    """Limiting posterior with the extra informative prior on ``beta2``."""
    prec, shift, extra = prior_terms(prior.lam, data.p, prior.lam2, prior.mu2_0)
    return _scalar_posterior(data, prec, shift, extra)


# ---------------------------------------------------------------------------
# decisions


def decide(post, alpha=0.05):
    """Two-sided probability-of-sign rule.

    Reject when ``P(beta1 > 0)`` exceeds ``1 - alpha/2`` or falls below
    ``alpha/2``, i.e. when ``|mu1| / sqrt(V11 S^2 / n)`` strictly exceeds the
    ``t_n`` quantile at ``1 - alpha/2``.
    """
    _check_alpha(alpha)
    threshold = student_t_quantile(1.0 - alpha / 2.0, post.n)
    mu1 = float(post.mu[1])
    scale = post.beta1_scale
    if scale == 0.0:
        if mu1 == 0.0:
            return DecisionOutcome(0.0, threshold, False, 0.5, degenerate=True)
        stat = math.copysign(math.inf, mu1)
        return DecisionOutcome(stat, threshold, True, 1.0 if mu1 > 0 else 0.0, degenerate=True)
    stat = mu1 / scale
    return DecisionOutcome(
        statistic=stat,
        threshold=threshold,
        reject=abs(stat) > threshold,
        posterior_prob_positive=student_t_cdf(stat, post.n),
    )


def _report(method, post, alpha):
    if post.n <= 2:
        raise DataError("Bayesian analysis requires n > 2")
    out = decide(post, alpha)
    return AnalysisReport(
        method=method,
        estimate=float(post.mu[1]),
        stddev=post.beta1_sd,
        statistic=out.statistic,
        df=float(post.n),
        threshold=out.threshold,
        reject=out.reject,
        alpha=float(alpha),
        degenerate=out.degenerate,
    )


def bayes_analysis(data, prior, alpha=0.05):
    """Posterior mean, posterior sd and decision for ``beta1``."""
    return _report("bayes", compute_posterior(data, prior), alpha)


def bayes_beta2_analysis(data, prior, alpha=0.05):
    """As :func:`bayes_analysis` with the informative ``beta2`` prior."""
    return _report("bayes_beta2", compute_posterior_beta2(data, prior), alpha)
