"""Seeded Monte Carlo estimation of rejection rates.

Trials are drawn from

    M ~ N(0, 1),   Y = beta0 + beta1 W + beta2 f(M) + sigma N(0, 1),

with ``f(M) = M`` (linear) or ``f(M) = M**3`` (cubic), and ``W`` a uniformly
random arrangement of exactly ``p n`` ones.  Replicate ``r`` draws all of
its variates from ``RandomStream(cell_seed, r)`` in a fixed order: ``n - 1``
uniforms for a Fisher-Yates shuffle of ``W``, then ``n`` normals for ``M``,
then ``n`` normals for the noise.  Because each replicate owns its substream,
results do not depend on how replicates are split across workers.

Analyses are evaluated for a whole block of replicates at once from the
sufficient statistics of each trial; :func:`generate_trial` plus the
per-trial analysis functions give the same decisions one trial at a time.
"""

from __future__ import annotations

import csv
import hashlib
import itertools
import json
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .data import TrialData
from .errors import ConfigError, DomainError
from .estimators import METHODS
from .posterior import design_moments, posterior_arrays, prior_terms
from .stats import RandomStream, normal_quantile, student_t_quantile
from .theory import (
    OperatingPoint,
    asymptotic_rejection_rate,
    beta0_for_single_arm_rate,
    beta1_for_prog_power,
    prog_adjust_power,
    single_arm_power,
)

__all__ = [
    "MODELS",
    "GenerativeSpec",
    "RateEstimate",
    "SweepConfig",
    "SweepResult",
    "generate_trial",
    "generate_batch",
    "Analyses",
    "replicate_decisions",
    "estimate_rates",
    "estimate_rejection_rate",
    "run_sweep",
    "derive_seed",
]

MODELS = ("linear", "cubic")
BLOCK = 2000
WORKERS_ENV = "PROGBAYES_WORKERS"


def treated_count(n, p):
    """Integer ``p * n``, or ``DomainError`` when it is not integral."""
    k = p * n
    r = round(k)
    if abs(k - r) > 1e-9 * max(1.0, n):
        raise DomainError(f"p * n = {k!r} is not an integer (p={p}, n={n})")
    return int(r)


@dataclass(frozen=True)
class GenerativeSpec:
    model: str
    point: OperatingPoint

    def __post_init__(self):
        if self.model not in MODELS:
            raise DomainError(f"model must be one of {MODELS}, got {self.model!r}")
        treated_count(self.point.n, self.point.p)


def _linkfn(model, m):
    return m if model == "linear" else m**3


def generate_trial(spec, stream):
    """Draw one trial from ``spec`` using variates from ``stream``."""
    pt = spec.point
    n = pt.n
    n_t = treated_count(n, pt.p)
    u = stream.uniforms(n - 1)
    w = np.zeros(n, dtype=np.int8)
    w[:n_t] = 1
    for k, i in enumerate(range(n - 1, 0, -1)):
        j = int(u[k] * (i + 1))
        w[i], w[j] = w[j], w[i]
    m = stream.normals(n)
    eps = stream.normals(n)
    y = pt.beta0 + pt.beta1 * w + pt.beta2 * _linkfn(spec.model, m) + pt.sigma * eps
    return TrialData(y, w, m)


def generate_batch(spec, seed, start, stop):
    """Replicates ``start .. stop-1`` as arrays ``(y, w, m)`` of shape ``(R, n)``.

    Row ``k`` equals ``generate_trial(spec, RandomStream(seed, start + k))``.
    """
    pt = spec.point
    n = pt.n
    n_t = treated_count(n, pt.p)
    R = stop - start
    raw = np.empty((R, 3 * n - 1))
    for k, r in enumerate(range(start, stop)):
        raw[k] = RandomStream(seed, r).uniforms(3 * n - 1)
    u = raw[:, : n - 1]
    m = normal_quantile(raw[:, n - 1 : 2 * n - 1])
    eps = normal_quantile(raw[:, 2 * n - 1 :])
    w = np.zeros((R, n), dtype=np.int8)
    w[:, :n_t] = 1
    rows = np.arange(R)
    for k, i in enumerate(range(n - 1, 0, -1)):
        j = (u[:, k] * (i + 1)).astype(np.intp)
        wi = w[:, i].copy()
        w[:, i] = w[rows, j]
        w[rows, j] = wi
    y = pt.beta0 + pt.beta1 * w + pt.beta2 * _linkfn(spec.model, m) + pt.sigma * eps
    return y, w, m


# ---------------------------------------------------------------------------
# batched analyses; each returns (reject, degenerate, error) boolean arrays


def _t_reject(est, se2, df, alpha):
    thr = student_t_quantile(1.0 - alpha / 2.0, df)
    degenerate = se2 <= 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        stat = est / np.sqrt(np.where(degenerate, 1.0, se2))
    reject = np.where(degenerate, est != 0.0, np.abs(stat) > thr)
    return reject, degenerate


def _bayes_block(moments, n, lam, alpha, lam2=None, mu2_0=0.0):
    xtx, xty, yty, p = moments
    prec, shift, extra = prior_terms(lam, p, lam2, mu2_0)
    mu, V, s2, ok = posterior_arrays(xtx, xty, yty, prec, shift, extra)
    reject, degenerate = _t_reject(mu[:, 1], V[:, 1, 1] * s2 / n, n, alpha)
    return reject & ok, degenerate & ok, ~ok


def _prog_block(moments, n, alpha):
    xtx, xty, yty, _ = moments
    inv = np.linalg.inv(xtx)
    coef = np.einsum("rij,rj->ri", inv, xty)
    rss = yty - np.einsum("ri,ri->r", coef, xty)
    rss = np.where(rss <= 1e-12 * yty, 0.0, rss)
    reject, degenerate = _t_reject(coef[:, 1], inv[:, 1, 1] * rss / (n - 3), n - 3, alpha)
    return reject, degenerate, np.zeros_like(reject)


def _unadjusted_block(y, w, alpha):
    n = y.shape[1]
    wt = w.astype(float)
    n_t = wt.sum(axis=1)
    n_c = n - n_t
    mean_t = (wt * y).sum(axis=1) / n_t
    mean_c = ((1 - wt) * y).sum(axis=1) / n_c
    dev = y - np.where(w == 1, mean_t[:, None], mean_c[:, None])
    pooled = (dev * dev).sum(axis=1) / (n - 2)
    reject, degenerate = _t_reject(mean_t - mean_c, pooled * (1 / n_t + 1 / n_c), n - 2, alpha)
    return reject, degenerate, np.zeros_like(reject)


def _single_arm_block(y, w, m, alpha):
    wt = w.astype(float)
    n_t = int(wt[0].sum())
    d = y - m
    mean = (wt * d).sum(axis=1) / n_t
    var = (wt * (d - mean[:, None]) ** 2).sum(axis=1) / n_t
    reject, degenerate = _t_reject(mean, var / (n_t - 1), n_t - 1, alpha)
    return reject, degenerate, np.zeros_like(reject)


@dataclass(frozen=True)
class Analyses:
    """Analysis settings applied to each simulated trial.

    ``lam2`` and ``mu2_0`` are only used by ``bayes_beta2``.
    """

    methods: tuple = ("bayes",)
    lam2: float | None = None
    mu2_0: float = 0.0

    def __post_init__(self):
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise DomainError(f"unknown method(s) {bad}; choose from {METHODS}")
        if "bayes_beta2" in self.methods and not (self.lam2 is not None and self.lam2 > 0):
            raise DomainError("bayes_beta2 requires a positive lambda2")


def replicate_decisions(spec, analyses, seed, start, stop):
    """Per-replicate ``(reject, degenerate, error)`` arrays for each method."""
    pt = spec.point
    out = {}
    for lo in range(start, stop, BLOCK):
        hi = min(stop, lo + BLOCK)
        y, w, m = generate_batch(spec, seed, lo, hi)
        need_moments = any(meth in ("bayes", "bayes_beta2", "prog_adjust") for meth in analyses.methods)
        moments = design_moments(y, w, m) if need_moments else None
        for meth in analyses.methods:
            if meth == "bayes":
                res = _bayes_block(moments, pt.n, pt.lam, pt.alpha)
            elif meth == "bayes_beta2":
                res = _bayes_block(moments, pt.n, pt.lam, pt.alpha, analyses.lam2, analyses.mu2_0)
            elif meth == "prog_adjust":
                res = _prog_block(moments, pt.n, pt.alpha)
            elif meth == "unadjusted":
                res = _unadjusted_block(y, w, pt.alpha)
            else:
                res = _single_arm_block(y, w, m, pt.alpha)
            out.setdefault(meth, []).append(res)
    return {
        meth: tuple(np.concatenate([blk[i] for blk in blocks]) for i in range(3))
        for meth, blocks in out.items()
    }


@dataclass(frozen=True)
class RateEstimate:
    rejections: int
    replicates: int
    degenerate: int = 0
    errors: int = 0

    @property
    def rate(self):
        return self.rejections / self.replicates

    @property
    def stderr(self):
        r = self.rate
        return math.sqrt(r * (1.0 - r) / self.replicates)


def _tally(decisions):
    return {
        meth: (int(rej.sum()), int(deg.sum()), int(err.sum()))
        for meth, (rej, deg, err) in decisions.items()
    }


def _chunks(R):
    # fixed block grid, so floating-point paths never depend on the worker count
    return [(lo, min(R, lo + BLOCK)) for lo in range(0, R, BLOCK)]


def resolve_workers(workers=None):
    if workers in (None, "auto", 0):
        env = os.environ.get(WORKERS_ENV)
        workers = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(workers))


def _run_task(task):
    spec, analyses, seed, lo, hi = task
    return _tally(replicate_decisions(spec, analyses, seed, lo, hi))


def _reduce(parts, methods, R):
    out = {}
    for meth in methods:
        rej = sum(p[meth][0] for p in parts)
        deg = sum(p[meth][1] for p in parts)
        err = sum(p[meth][2] for p in parts)
        out[meth] = RateEstimate(rej, R, deg, err)
    return out


def estimate_rates(spec, analyses, R, seed, workers=1):
    """Rejection counts for every method in ``analyses`` over ``R`` replicates."""
    if R < 1:
        raise DomainError(f"replicates must be >= 1, got {R}")
    tasks = [(spec, analyses, seed, lo, hi) for lo, hi in _chunks(R)]
    if workers == 1 or len(tasks) == 1:
        parts = [_run_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_task, tasks))
    return _reduce(parts, analyses.methods, R)


def estimate_rejection_rate(spec, method, alpha, R, seed, lam2=None, mu2_0=0.0, workers=1):
    """Simulated rejection rate of ``method`` at ``spec`` and level ``alpha``.

    Returns a :class:`RateEstimate` (``rate``, ``stderr``, degenerate and
    error tallies).
    """
    spec = replace(spec, point=replace(spec.point, alpha=alpha))
    analyses = Analyses((method,), lam2=lam2, mu2_0=mu2_0)
    return estimate_rates(spec, analyses, R, seed, workers)[method]


# ---------------------------------------------------------------------------
# sweeps


def derive_seed(*parts):
    """64-bit seed from a SHA-256 digest of the canonical JSON of ``parts``."""
    blob = json.dumps(parts, sort_keys=True, separators=(",", ":")).encode()
    return int.from_bytes(hashlib.sha256(blob).digest()[:8], "little")


POINT_FIELDS = ("beta0", "beta1", "beta2", "sigma", "n", "p", "alpha")
DERIVED_AXES = ("lambda", "n_lambda_sq", "beta0_over_sigma", "beta0_over_lambda_sigma")
EXTENDED_AXES = ("lambda2", "mu2_0")
AXIS_NAMES = POINT_FIELDS + DERIVED_AXES + EXTENDED_AXES
TARGETS = ("single_arm_type1", "prog_power")
CONFIG_KEYS = ("base", "axes", "targets", "replicates", "seed", "methods", "model", "lambda2", "mu2_0")

DEFAULT_BASE = {
    "beta0": 0.0,
    "beta1": 0.0,
    "beta2": 1.0,
    "sigma": math.sqrt(3.0),
    "n": 1000,
    "p": 0.5,
    "n_lambda_sq": 1.0,
    "alpha": 0.05,
}


@dataclass(frozen=True)
class SweepConfig:
    """Grid of operating points, replicate count, seed and analyses.

    ``base`` holds any of ``POINT_FIELDS`` plus ``lambda`` or
    ``n_lambda_sq``; ``axes`` maps any of ``AXIS_NAMES`` to a list of values
    and the grid is their Cartesian product (first axis slowest).
    ``targets`` optionally solves for ``beta0`` (``single_arm_type1``: the
    single-arm type I error) or ``beta1`` (``prog_power``: the power of
    prognostic covariate adjustment) in every cell.
    """

    base: dict = field(default_factory=lambda: dict(DEFAULT_BASE))
    axes: dict = field(default_factory=dict)
    replicates: int = 10000
    seed: int = 0
    methods: tuple = ("bayes",)
    model: str = "linear"
    targets: dict = field(default_factory=dict)
    lambda2: float | None = None
    mu2_0: float = 1.0

    @classmethod
    def from_dict(cls, doc):
        problems = validate_config(doc)
        if problems:
            raise ConfigError(problems)
        base = dict(DEFAULT_BASE)
        user_base = dict(doc.get("base", {}))
        if "lambda" in user_base:
            base.pop("n_lambda_sq")
        base.update(user_base)
        return cls(
            base=base,
            axes={k: list(v) for k, v in doc.get("axes", {}).items()},
            replicates=int(doc.get("replicates", 10000)),
            seed=int(doc.get("seed", 0)),
            methods=tuple(doc.get("methods", ["bayes"])),
            model=doc.get("model", "linear"),
            targets=dict(doc.get("targets", {})),
            lambda2=doc.get("lambda2"),
            mu2_0=float(doc.get("mu2_0", 1.0)),
        )

    @classmethod
    def from_json(cls, path):
        with open(path, encoding="utf-8") as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        return cls.from_dict(doc)

    def to_dict(self):
        return {
            "base": self.base,
            "axes": self.axes,
            "targets": self.targets,
            "replicates": self.replicates,
            "seed": self.seed,
            "methods": list(self.methods),
            "model": self.model,
            "lambda2": self.lambda2,
            "mu2_0": self.mu2_0,
        }


def _is_number(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def validate_config(doc):
    """Return a list of every schema violation in a sweep config document."""
    if not isinstance(doc, dict):
        return ["config must be a JSON object"]
    problems = [f"unknown key {k!r}" for k in doc if k not in CONFIG_KEYS]
    base = doc.get("base", {})
    if not isinstance(base, dict):
        problems.append("base must be an object")
        base = {}
    for k, v in base.items():
        if k not in POINT_FIELDS + ("lambda", "n_lambda_sq"):
            problems.append(f"base: unknown field {k!r}")
        elif not _is_number(v):
            problems.append(f"base.{k} must be a finite number")
    if "lambda" in base and "n_lambda_sq" in base:
        problems.append("base: give lambda or n_lambda_sq, not both")
    axes = doc.get("axes", {})
    if not isinstance(axes, dict):
        problems.append("axes must be an object")
        axes = {}
    for k, v in axes.items():
        if k not in AXIS_NAMES:
            problems.append(f"axes: unknown axis {k!r}")
        elif not isinstance(v, list) or not v:
            problems.append(f"axes.{k} must be a non-empty list")
        elif not all(_is_number(x) for x in v):
            problems.append(f"axes.{k} must contain only finite numbers")
    if "lambda" in axes and "n_lambda_sq" in axes:
        problems.append("axes: lambda and n_lambda_sq are mutually exclusive")
    if "beta0_over_sigma" in axes and "beta0_over_lambda_sigma" in axes:
        problems.append("axes: beta0_over_sigma and beta0_over_lambda_sigma are mutually exclusive")
    targets = doc.get("targets", {})
    if not isinstance(targets, dict):
        problems.append("targets must be an object")
        targets = {}
    for k, v in targets.items():
        if k not in TARGETS:
            problems.append(f"targets: unknown target {k!r}")
        elif not (_is_number(v) and 0 < v < 1):
            problems.append(f"targets.{k} must be a number in (0, 1)")
    if "single_arm_type1" in targets and any(
        a in axes for a in ("beta0", "beta0_over_sigma", "beta0_over_lambda_sigma")
    ):
        problems.append("targets.single_arm_type1 conflicts with a beta0 axis")
    if "prog_power" in targets and "beta1" in axes:
        problems.append("targets.prog_power conflicts with the beta1 axis")
    reps = doc.get("replicates", 10000)
    if not (isinstance(reps, int) and not isinstance(reps, bool) and reps >= 1):
        problems.append("replicates must be an integer >= 1")
    seed = doc.get("seed", 0)
    if not (isinstance(seed, int) and not isinstance(seed, bool) and 0 <= seed < 2**64):
        problems.append("seed must be an unsigned 64-bit integer")
    methods = doc.get("methods", ["bayes"])
    if not isinstance(methods, list) or not methods:
        problems.append("methods must be a non-empty list")
    else:
        problems += [f"methods: unknown method {m!r}" for m in methods if m not in METHODS]
        if len(set(methods)) != len(methods):
            problems.append("methods: duplicates")
    if doc.get("model", "linear") not in MODELS:
        problems.append(f"model must be one of {list(MODELS)}")
    uses_beta2 = isinstance(methods, list) and "bayes_beta2" in methods
    lam2 = doc.get("lambda2")
    if lam2 is not None and not (_is_number(lam2) and lam2 > 0):
        problems.append("lambda2 must be a positive number")
    if uses_beta2 and lam2 is None and "lambda2" not in axes:
        problems.append("bayes_beta2 requires lambda2 (top level or as an axis)")
    if "mu2_0" in doc and not _is_number(doc["mu2_0"]):
        problems.append("mu2_0 must be a finite number")
    return problems


@dataclass(frozen=True)
class Cell:
    index: int
    coords: dict
    spec: GenerativeSpec | None
    n_lambda_sq: float | None
    analyses: Analyses | None
    warning: str = ""


def _build_cell(config, index, coords):
    vals = dict(config.base)
    vals.update(coords)
    lam2 = vals.pop("lambda2", config.lambda2)
    mu2_0 = vals.pop("mu2_0", config.mu2_0)
    ratio = vals.pop("beta0_over_sigma", None)
    ratio_l = vals.pop("beta0_over_lambda_sigma", None)
    a = vals.pop("n_lambda_sq", None)
    lam = vals.pop("lambda", None)
    if "lambda" in coords:
        a = None
    elif "n_lambda_sq" in coords:
        lam = None
    n = vals["n"]
    if int(n) != n or n < 4:
        raise DomainError(f"n must be an integer >= 4, got {n}")
    n = int(n)
    vals["n"] = n
    if a is not None:
        if not a > 0:
            raise DomainError(f"n_lambda_sq must be positive, got {a}")
        lam = math.sqrt(a / n)
    pt = OperatingPoint(lam=lam, **vals)
    treated_count(pt.n, pt.p)
    if "prog_power" in config.targets:
        pt = replace(pt, beta1=beta1_for_prog_power(pt, config.targets["prog_power"]))
    if "single_arm_type1" in config.targets:
        pt = replace(pt, beta0=beta0_for_single_arm_rate(pt, config.targets["single_arm_type1"]))
    if ratio is not None:
        pt = replace(pt, beta0=ratio * pt.sigma)
    if ratio_l is not None:
        pt = replace(pt, beta0=ratio_l * pt.lam * pt.sigma)
    analyses = Analyses(config.methods, lam2=lam2, mu2_0=mu2_0)
    return Cell(index, coords, GenerativeSpec(config.model, pt), a if a is not None else pt.n_lambda_sq, analyses)


def expand_cells(config):
    names = list(config.axes)
    cells = []
    for index, combo in enumerate(itertools.product(*(config.axes[k] for k in names))):
        coords = dict(zip(names, combo))
        try:
            cells.append(_build_cell(config, index, coords))
        except DomainError as exc:
            if coords:
                warnings.warn(f"cell {index} {coords} skipped: {exc}", stacklevel=2)
            cells.append(Cell(index, coords, None, None, None, warning=str(exc)))
    if cells and all(c.spec is None for c in cells):
        raise DomainError(f"no valid cells: {cells[0].warning}")
    return cells


def data_seed(config, pt):
    """Seed for a cell's variates; depends only on the sweep seed, model and design.

    The coefficients ``beta0, beta1, beta2, sigma`` enter ``Y`` only after the
    uniforms and normals are drawn, so cells that share ``(n, p)`` reuse the
    same ``M`` and noise draws (common random numbers).  Differences between
    such cells then reflect the parameters rather than fresh sampling noise,
    and cells that differ only in analysis settings (lambda, alpha, the beta2
    prior) analyse the very same trials.
    """
    return derive_seed(config.seed, config.model, pt.n, pt.p)


def theory_rate(method, pt, n_lambda_sq):
    if method in ("bayes", "bayes_beta2"):
        return asymptotic_rejection_rate(pt, n_lambda_sq).rejection_rate
    if method == "prog_adjust":
        return prog_adjust_power(pt)
    if method == "single_arm":
        return single_arm_power(pt)
    return None


CSV_COLUMNS = (
    "cell", "model", "method", "beta0", "beta1", "beta2", "sigma", "n", "p", "lambda",
    "n_lambda_sq", "beta0_over_lambda_sigma", "alpha", "lambda2", "mu2_0", "replicates",
    "rejections", "rate", "stderr", "theory", "gap", "gap_z", "degenerate", "errors",
    "data_seed", "warning",
)  # fmt: skip


@dataclass
class SweepResult:
    config: SweepConfig
    rows: list

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            for row in self.rows:
                writer.writerow([_fmt(row.get(c)) for c in CSV_COLUMNS])

    def to_json(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump({"config": self.config.to_dict(), "rows": self.rows}, fh, indent=2, sort_keys=True)
            fh.write("\n")

    def select(self, method=None, **coords):
        out = []
        for row in self.rows:
            if method is not None and row.get("method") != method:
                continue
            if all(row.get(k) == v for k, v in coords.items()):
                out.append(row)
        return out


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _cell_rows(config, cell, rates):
    pt = cell.spec.point
    rows = []
    for meth in config.methods:
        est = rates[meth]
        theory = theory_rate(meth, pt, cell.n_lambda_sq)
        se = est.stderr
        gap = None if theory is None else est.rate - theory
        uses_b2 = meth == "bayes_beta2"
        rows.append(
            {
                "cell": cell.index,
                "model": config.model,
                "method": meth,
                "beta0": pt.beta0,
                "beta1": pt.beta1,
                "beta2": pt.beta2,
                "sigma": pt.sigma,
                "n": pt.n,
                "p": pt.p,
                "lambda": pt.lam,
                "n_lambda_sq": cell.n_lambda_sq,
                "beta0_over_lambda_sigma": pt.beta0 / (pt.lam * pt.sigma),
                "alpha": pt.alpha,
                "lambda2": cell.analyses.lam2 if uses_b2 else None,
                "mu2_0": cell.analyses.mu2_0 if uses_b2 else None,
                "replicates": est.replicates,
                "rejections": est.rejections,
                "rate": est.rate,
                "stderr": se,
                "theory": theory,
                "gap": gap,
                "gap_z": None if gap is None else (gap / se if se > 0 else (0.0 if gap == 0 else math.copysign(math.inf, gap))),
                "degenerate": est.degenerate,
                "errors": est.errors,
                "data_seed": data_seed(config, pt),
                "warning": "",
            }
        )
    return rows


def run_sweep(config, workers=1, progress=None):
    """Evaluate every cell and method of ``config``.

    ``progress`` is an optional callable receiving ``(done, total)`` cells.
    Output is identical for any ``workers``.
    """
    workers = resolve_workers(workers)
    cells = expand_cells(config)
    live = [c for c in cells if c.spec is not None]
    tasks, owners = [], []
    for cell in live:
        seed = data_seed(config, cell.spec.point)
        for lo, hi in _chunks(config.replicates):
            tasks.append((cell.spec, cell.analyses, seed, lo, hi))
            owners.append(cell.index)
    if workers == 1:
        results = map(_run_task, tasks)
        pool = None
    else:
        pool = ProcessPoolExecutor(max_workers=workers)
        results = pool.map(_run_task, tasks)
    parts, done = [], 0
    try:
        for i, part in enumerate(results):
            parts.append(part)
            if i + 1 == len(tasks) or owners[i + 1] != owners[i]:
                done += 1
                if progress:
                    progress(done, len(live))
    finally:
        if pool is not None:
            pool.shutdown()
    by_cell = {}
    for owner, part in zip(owners, parts):
        by_cell.setdefault(owner, []).append(part)
    rows = []
    for cell in cells:
        if cell.spec is None:
            coords = {k: v for k, v in cell.coords.items() if k in CSV_COLUMNS}
            rows.append({"cell": cell.index, "model": config.model, "warning": cell.warning, **coords})
            continue
        rates = _reduce(by_cell[cell.index], config.methods, config.replicates)
        rows.extend(_cell_rows(config, cell, rates))
    return SweepResult(config, rows)

