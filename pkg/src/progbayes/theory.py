"""Asymptotic operating characteristics.

Closed forms for the rejection rate of prognostic covariate adjustment, of
the single-arm analysis, and of the Bayesian rule in the regime
``n -> inf``, ``lambda -> 0`` with ``a = n * lambda^2`` held fixed.  All
formulas use the standard normal; finite-sample effects are left to the
simulator.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace

from scipy import optimize

from .errors import DomainError
from .stats import normal_cdf, normal_quantile

__all__ = [
    "OperatingPoint",
    "TheoryOutput",
    "two_sided_rate",
    "prog_adjust_power",
    "single_arm_power",
    "asymptotic_rejection_rate",
    "zero_limit_rate",
    "variance_factor",
    "beta1_for_prog_power",
    "beta0_for_single_arm_rate",
]


@dataclass(frozen=True)
class OperatingPoint:
    """True parameters plus design and analysis settings.

    ``beta0``: bias of the prognostic score; ``beta1``: treatment effect;
    ``beta2``: slope on the score; ``sigma``: residual sd; ``n``: subjects;
    ``p``: treated fraction; ``lam``: prior sd of ``beta0 / sigma``;
    ``alpha``: two-sided level.
    """

    beta0: float = 0.0
    beta1: float = 0.0
    beta2: float = 1.0
    sigma: float = math.sqrt(3.0)
    n: int = 1000
    p: float = 0.5
    lam: float = math.sqrt(1.0 / 1000)
    alpha: float = 0.05

    def __post_init__(self):
        problems = []
        if not self.sigma > 0:
            problems.append(f"sigma must be positive, got {self.sigma}")
        if not 0 < self.p < 1:
            problems.append(f"p must lie in (0, 1), got {self.p}")
        if not 0 < self.alpha < 1:
            problems.append(f"alpha must lie in (0, 1), got {self.alpha}")
        if int(self.n) != self.n or self.n < 1:
            problems.append(f"n must be a positive integer, got {self.n}")
        if not (self.lam > 0 and math.isfinite(self.lam)):
            problems.append(f"lambda must be finite and positive, got {self.lam}")
        for name in ("beta0", "beta1", "beta2"):
            if not math.isfinite(getattr(self, name)):
                problems.append(f"{name} must be finite")
        if problems:
            raise DomainError("; ".join(problems))
        object.__setattr__(self, "n", int(self.n))

    @property
    def n_lambda_sq(self):
        return self.n * self.lam**2

    @property
    def n_treated(self):
        return self.p * self.n

    def with_n_lambda_sq(self, a):
        return replace(self, lam=math.sqrt(a / self.n))

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class TheoryOutput:
    rejection_rate: float
    tau: float
    v_hat: float
    v11_limit: float
    variance_factor: float
    threshold_multiplier: float

    def to_dict(self):
        return asdict(self)


def two_sided_rate(alpha, shift, multiplier=1.0):
    """``Phi(z*k + shift) + Phi(z*k - shift)`` with ``z = Phi^{-1}(alpha/2)``."""
    z = normal_quantile(alpha / 2.0)
    return normal_cdf(z * multiplier + shift) + normal_cdf(z * multiplier - shift)


def prog_adjust_power(pt):
    shift = pt.beta1 * math.sqrt(pt.n * pt.p * (1 - pt.p)) / pt.sigma
    return two_sided_rate(pt.alpha, shift)


def single_arm_power(pt):
    shift = (pt.beta1 + pt.beta0) * math.sqrt(pt.p * pt.n) / pt.sigma
    return two_sided_rate(pt.alpha, shift)


def _rate_terms(n, p, a, beta0, beta1, sigma):
    q = 1.0 - p
    denom = a * q + 1.0
    v11 = (a + 1.0) / (a * p * q + p) / n
    v_hat = (p + q * (a + 1.0) ** 2) / (n * p * denom**2)
    inflation = 1.0 + q * beta0**2 / (sigma**2 * denom)
    tau = beta1 + beta0 / denom
    return v11, v_hat, inflation, tau


def asymptotic_rejection_rate(pt, n_lambda_sq=None):
    """Leading-order rejection rate of the Bayesian rule.

    ``n_lambda_sq`` overrides ``pt.n * pt.lam**2`` when given, so that sweeps
    over ``a`` do not round-trip through ``lambda``.
    """
    a = pt.n_lambda_sq if n_lambda_sq is None else float(n_lambda_sq)
    v11, v_hat, inflation, tau = _rate_terms(pt.n, pt.p, a, pt.beta0, pt.beta1, pt.sigma)
    mult = math.sqrt(v11 / v_hat * inflation)
    rate = two_sided_rate(pt.alpha, tau / (pt.sigma * math.sqrt(v_hat)), mult)
    return TheoryOutput(
        rejection_rate=rate,
        tau=tau,
        v_hat=v_hat,
        v11_limit=v11,
        variance_factor=variance_factor(a, pt.p),
        threshold_multiplier=mult,
    )


def zero_limit_rate(pt):
    """Rejection rate of the Bayesian rule as ``n * lambda^2 -> 0``."""
    mult = math.sqrt(1.0 + (1.0 - pt.p) * pt.beta0**2 / pt.sigma**2)
    shift = (pt.beta1 + pt.beta0) * math.sqrt(pt.n * pt.p) / pt.sigma
    return two_sided_rate(pt.alpha, shift, mult)


def variance_factor(n_lambda_sq, p):
    """Ratio of the Bayesian estimator's sampling variance to ``sigma^2 / (n p (1-p))``."""
    if not 0 < p < 1:
        raise DomainError(f"p must lie in (0, 1), got {p}")
    if n_lambda_sq < 0:
        raise DomainError(f"n*lambda^2 must be nonnegative, got {n_lambda_sq}")
    a, q = float(n_lambda_sq), 1.0 - p
    return (p * q + q**2 * (a + 1.0) ** 2) / (a * q + 1.0) ** 2


def _invert(fn, target, hi=1.0):
    # fn increasing on [0, inf) from alpha towards 1
    while fn(hi) < target:
        hi *= 2.0
        if hi > 1e12:
            raise DomainError(f"target rate {target} not attainable")
    return optimize.brentq(lambda x: fn(x) - target, 0.0, hi, xtol=1e-14, rtol=1e-14)


def beta1_for_prog_power(pt, power):
    """Positive ``beta1`` at which prognostic covariate adjustment has the given power."""
    if not pt.alpha < power < 1:
        raise DomainError(f"power must lie in (alpha, 1), got {power}")
    return _invert(lambda b: prog_adjust_power(replace(pt, beta1=b)), power, hi=pt.sigma)


def beta0_for_single_arm_rate(pt, rate):
    """Positive ``beta0`` at which the single-arm test rejects at ``rate`` when ``beta1 = 0``."""
    if not pt.alpha < rate < 1:
        raise DomainError(f"rate must lie in (alpha, 1), got {rate}")
    base = replace(pt, beta1=0.0)
    return _invert(lambda b: single_arm_power(replace(base, beta0=b)), rate, hi=pt.sigma)
