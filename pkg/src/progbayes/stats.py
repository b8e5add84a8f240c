"""Special functions, distributions and a counter-based random stream.

The normal CDF and quantile are thin wrappers over the Cephes routines in
``scipy.special`` (``ndtr``/``ndtri``).  The Student t and chi-square
families are computed here from the regularized incomplete beta and gamma
functions so that their tolerances are under our control.

Random variates come from :class:`RandomStream`, a Philox counter-based
generator keyed by ``(seed, stream_index)``.  Normals are produced by
inverse transform through :func:`normal_quantile`, which keeps every
replicate bit-reproducible regardless of platform or worker layout.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import optimize, special

from .errors import DomainError

__all__ = [
    "normal_cdf",
    "normal_quantile",
    "betainc_regularized",
    "gammainc_regularized",
    "student_t_cdf",
    "student_t_sf",
    "student_t_quantile",
    "chisq_cdf",
    "chisq_quantile",
    "RandomStream",
    "draw_normal",
]

_EPS = 2.0**-53
_TINY = 1e-300
_MAX_ITER = 20000
_UINT64_MAX = 2**64 - 1


def _as_checked(x, name):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite, got {x!r}")
    return arr


def _unwrap(arr):
    return float(arr) if np.ndim(arr) == 0 else arr


def normal_cdf(x):
    """Standard normal distribution function. Accepts scalars or arrays."""
    arr = _as_checked(x, "x")
    return _unwrap(special.ndtr(arr))


def normal_quantile(q):
    """Inverse of :func:`normal_cdf` on the open interval (0, 1)."""
    arr = np.asarray(q, dtype=float)
    if not np.all((arr > 0.0) & (arr < 1.0)):
        raise DomainError(f"quantile level must lie in (0, 1), got {q!r}")
    return _unwrap(special.ndtri(arr))


# ---------------------------------------------------------------------------
# Incomplete beta / gamma


def _beta_cf(a, b, x):
    """Modified Lentz evaluation of the incomplete beta continued fraction."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 4 * _EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def betainc_regularized(a, b, x, xc=None):
    """Regularized incomplete beta I_x(a, b).

    ``xc`` optionally supplies ``1 - x`` computed without cancellation; it is
    used for the reflected branch.
    """
    if a <= 0 or b <= 0:
        raise DomainError(f"incomplete beta needs a, b > 0, got a={a}, b={b}")
    if xc is None:
        xc = 1.0 - x
    if not (0.0 <= x <= 1.0):
        raise DomainError(f"incomplete beta needs 0 <= x <= 1, got {x}")
    if x == 0.0:
        return 0.0
    if xc == 0.0:
        return 1.0
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log(xc)
    )
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(a, b, x) / a
    return 1.0 - front * _beta_cf(b, a, xc) / b


def _gamma_series(a, x):
    # lower P(a, x), valid for x < a + 1
    ap = a
    total = 1.0 / a
    term = total
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            return total * math.exp(-x + a * math.log(x) - math.lgamma(a))
    raise ArithmeticError(f"incomplete gamma series did not converge (a={a}, x={x})")


def _gamma_cf(a, x):
    # upper Q(a, x), valid for x >= a + 1
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 4 * _EPS:
            return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h
    raise ArithmeticError(f"incomplete gamma continued fraction did not converge (a={a}, x={x})")


def gammainc_regularized(a, x, upper=False):
    """Regularized incomplete gamma: P(a, x), or Q(a, x) when ``upper``."""
    if a <= 0:
        raise DomainError(f"incomplete gamma needs a > 0, got {a}")
    if x < 0 or not math.isfinite(x):
        if x == math.inf:
            return 0.0 if upper else 1.0
        raise DomainError(f"incomplete gamma needs finite x >= 0, got {x}")
    if x == 0.0:
        return 1.0 if upper else 0.0
    if x < a + 1.0:
        p = _gamma_series(a, x)
        return 1.0 - p if upper else p
    q = _gamma_cf(a, x)
    return q if upper else 1.0 - q


# ---------------------------------------------------------------------------
# Student t


def _check_df(df):
    if not (df > 0) or math.isnan(df):
        raise DomainError(f"degrees of freedom must be positive, got {df}")
    return float(df)


def student_t_sf(x, df):
    """Upper tail P(T > x) for T ~ t_df."""
    df = _check_df(df)
    x = float(x)
    if math.isnan(x):
        raise DomainError("x must not be NaN")
    if math.isinf(x):
        return 0.0 if x > 0 else 1.0
    if x == 0.0:
        return 0.5
    x2 = x * x
    # P(|T| > |x|) = I_{df/(df+x^2)}(df/2, 1/2)
    two_tail = betainc_regularized(0.5 * df, 0.5, df / (df + x2), x2 / (df + x2))
    return 0.5 * two_tail if x > 0 else 1.0 - 0.5 * two_tail


def student_t_cdf(x, df):
    """Distribution function of Student's t with ``df`` degrees of freedom.

    Non-integer ``df`` is accepted.
    """
    return student_t_sf(-float(x), df)


def _bracket_upper(fn, target):
    # fn decreasing on [0, inf); find hi with fn(hi) <= target
    hi = 1.0
    while fn(hi) > target:
        hi *= 2.0
        if hi > 1e300:
            raise ArithmeticError("failed to bracket quantile")
    return hi


def student_t_quantile(q, df):
    """Inverse of :func:`student_t_cdf` in its first argument."""
    df = _check_df(df)
    q = float(q)
    if not (0.0 < q < 1.0):
        raise DomainError(f"quantile level must lie in (0, 1), got {q}")
    if q == 0.5:
        return 0.0
    upper = 1.0 - q if q > 0.5 else q  # exact for q >= 0.5
    sign = 1.0 if q > 0.5 else -1.0
    hi = _bracket_upper(lambda t: student_t_sf(t, df), upper)
    root = optimize.brentq(
        lambda t: student_t_sf(t, df) - upper, 0.0, hi, xtol=1e-300, rtol=8 * _EPS, maxiter=500
    )
    return sign * root


# ---------------------------------------------------------------------------
# Chi-square


def chisq_cdf(x, df):
    """Distribution function of the chi-square law with ``df`` degrees of freedom."""
    df = _check_df(df)
    if x <= 0:
        return 0.0
    return gammainc_regularized(0.5 * df, 0.5 * float(x))


def chisq_quantile(q, df):
    """Inverse of :func:`chisq_cdf`."""
    df = _check_df(df)
    q = float(q)
    if not (0.0 < q < 1.0):
        raise DomainError(f"quantile level must lie in (0, 1), got {q}")
    a = 0.5 * df
    if q <= 0.5:
        fn = lambda x: gammainc_regularized(a, 0.5 * x) - q  # noqa: E731
        hi = 1.0
        while fn(hi) < 0:
            hi *= 2.0
    else:
        upper = 1.0 - q
        fn = lambda x: upper - gammainc_regularized(a, 0.5 * x, upper=True)  # noqa: E731
        hi = df + 1.0
        while fn(hi) < 0:
            hi *= 2.0
    return optimize.brentq(fn, 0.0, hi, xtol=1e-300, rtol=8 * _EPS, maxiter=500)


# ---------------------------------------------------------------------------
# Random streams


def _check_u64(value, name):
    value = int(value)
    if not 0 <= value <= _UINT64_MAX:
        raise DomainError(f"{name} must be an unsigned 64-bit integer, got {value}")
    return value


class RandomStream:
    """Deterministic substream of uniform and normal variates.

    Each ``(seed, stream_index)`` pair keys an independent Philox-4x64
    counter sequence, so replicate ``r`` of an experiment always sees the
    same numbers no matter which worker evaluates it.  Streams are cheap;
    create one per replicate rather than sharing.

    Parameters
    ----------
    seed : int
        Unsigned 64-bit experiment seed.
    stream_index : int
        Unsigned 64-bit substream identifier (typically the replicate index).
    """

    __slots__ = ("seed", "stream_index", "position", "_bitgen")

    def __init__(self, seed, stream_index=0):
        self.seed = _check_u64(seed, "seed")
        self.stream_index = _check_u64(stream_index, "stream_index")
        self.position = 0
        key = np.array([self.seed, self.stream_index], dtype=np.uint64)
        self._bitgen = np.random.Philox(key=key)

    def __repr__(self):
        return f"RandomStream(seed={self.seed}, stream_index={self.stream_index}, position={self.position})"

    def uniforms(self, k):
        """Return ``k`` uniforms on the open interval (0, 1).

        Each value is ``(top 53 bits + 1/2) * 2**-53``, which never hits 0 or 1.
        """
        raw = self._bitgen.random_raw(int(k))
        self.position += int(k)
        return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * _EPS

    def normals(self, k):
        """Return ``k`` standard normals by inverse transform."""
        return np.asarray(normal_quantile(self.uniforms(k)))

    def uniform(self):
        return float(self.uniforms(1)[0])


def draw_normal(stream):
    """Draw one standard normal variate from ``stream``."""
    return float(stream.normals(1)[0])
