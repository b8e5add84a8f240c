"""Choosing the prior width ``lambda`` from historical control data.

Two procedures, both built on the standardized bias ``E = b0 / s`` of the
prognostic model, where ``b0`` is the mean of ``y - m`` and ``s^2`` its
variance with divisor equal to the number of subjects:

* subject level: pool every subject, ``lambda = max(floor / sqrt(N), |E_all|)``;
* study level: one ``E_j`` per study, modeled as IID ``N(0, lambda^2)``, and
  ``lambda^2`` is the upper end of the 95% interval for that variance,
  ``sum(E_j^2) / chi2_m^{-1}(0.025)``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DataError, DomainError
from .stats import chisq_quantile

__all__ = ["PriorEstimate", "standardized_bias", "subject_level_lambda", "study_level_lambda"]

DEFAULT_FLOOR = 3.0
ROUND_TOL = 1e-12


@dataclass(frozen=True)
class PriorEstimate:
    lam: float
    mode: str
    n_subjects: int
    beta0_hat: float | None = None
    sigma_hat: float | None = None
    e_all: float | None = None
    floor: float | None = None
    studies: list = field(default_factory=list)
    chisq_quantile: float | None = None

    def to_dict(self):
        out = asdict(self)
        out["lambda"] = out.pop("lam")
        return out

    @classmethod
    def from_dict(cls, doc):
        doc = dict(doc)
        if "lambda" not in doc:
            raise DataError("prior document has no 'lambda' field")
        doc["lam"] = doc.pop("lambda")
        known = set(cls.__dataclass_fields__)
        return cls(**{k: v for k, v in doc.items() if k in known})


def standardized_bias(y, m):
    """Return ``(b0, s, E)`` for paired outcomes and predictions."""
    y = np.asarray(y, dtype=float)
    m = np.asarray(m, dtype=float)
    d = y - m
    b0 = float(np.mean(d))
    s = math.sqrt(float(np.mean((d - b0) ** 2)))
    # differences below this are rounding noise in y - m
    tol = ROUND_TOL * max(float(np.max(np.abs(y))), float(np.max(np.abs(m))))
    if abs(b0) <= tol:
        b0 = 0.0
    if s <= tol:
        s = 0.0
    if s == 0.0:
        return b0, 0.0, math.nan
    return b0, s, b0 / s


def subject_level_lambda(hist, floor=DEFAULT_FLOOR):
    """Pooled-subject estimate ``max(floor / sqrt(N), |E_all|)``."""
    if not floor > 0:
        raise DomainError(f"floor must be positive, got {floor}")
    y, m = hist.pooled()
    n = len(y)
    if n < 2:
        raise DataError("subject-level prior needs at least 2 historical subjects")
    b0, s, e_all = standardized_bias(y, m)
    if s == 0.0:
        raise DataError("historical residuals y - m have zero variance")
    lam = max(floor / math.sqrt(n), abs(e_all))
    return PriorEstimate(
        lam=lam, mode="subject", n_subjects=n, beta0_hat=b0, sigma_hat=s, e_all=e_all, floor=floor
    )


def study_level_lambda(hist):
    """Study-level estimate from the upper 95% limit on the variance of the ``E_j``.

    Raises
    ------
    DataError
        If a study has zero residual variance, or if every ``E_j`` is zero
        (the resulting zero-width prior is unusable; fall back to the
        subject-level floor).
    """
    rows = []
    for sid, (y, m) in hist.studies.items():
        b0, s, e = standardized_bias(y, m)
        if s == 0.0:
            raise DataError(f"study {sid!r}: residuals y - m have zero variance")
        rows.append({"study_id": sid, "n": len(y), "beta0_hat": b0, "sigma_hat": s, "e": e})
    n_studies = len(rows)
    q = chisq_quantile(0.025, n_studies)
    ss = sum(r["e"] ** 2 for r in rows)
    if ss == 0.0:
        raise DataError(
            "every study has zero estimated bias, giving lambda = 0; "
            "use the subject-level estimate, whose floor keeps lambda positive"
        )
    return PriorEstimate(
        lam=math.sqrt(ss / q),
        mode="study",
        n_subjects=hist.n_subjects,
        studies=rows,
        chisq_quantile=q,
    )
