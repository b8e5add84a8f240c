"""Trial and historical data containers, CSV ingestion and validation.

Trial CSV columns: ``y,w,m`` (an optional leading ``subject_id`` column is
ignored).  Historical CSV columns: ``study_id,y,m``.  Files are UTF-8 with a
header row and ``.`` as the decimal separator.  Missing or non-finite cells
are rejected, never imputed.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError

__all__ = [
    "TrialData",
    "HistoricalSubjects",
    "GroupSummary",
    "load_trial_csv",
    "load_historical_csv",
    "write_trial_csv",
    "summarize",
]

MIN_SUBJECTS = 4


@dataclass(frozen=True, eq=False)
class TrialData:
    """Outcomes ``y``, assignments ``w`` (0 = placebo, 1 = active) and prognostic scores ``m``.

    The treated fraction ``p`` is derived from ``w``; ``p * n`` is always the
    integer count of treated subjects.
    """

    y: np.ndarray
    w: np.ndarray
    m: np.ndarray

    def __post_init__(self):
        y = np.array(self.y, dtype=float)
        m = np.array(self.m, dtype=float)
        w_raw = np.asarray(self.w)
        if y.ndim != 1 or m.ndim != 1 or w_raw.ndim != 1:
            raise DataError("y, w and m must be one-dimensional")
        if not (len(y) == len(w_raw) == len(m)):
            raise DataError(f"length mismatch: y={len(y)}, w={len(w_raw)}, m={len(m)}")
        if len(y) < MIN_SUBJECTS:
            raise DataError(f"need at least {MIN_SUBJECTS} subjects, got {len(y)}")
        for name, arr in (("y", y), ("m", m)):
            bad = np.flatnonzero(~np.isfinite(arr))
            if bad.size:
                raise DataError(f"non-finite {name} at index {int(bad[0])}")
        w_float = np.asarray(w_raw, dtype=float)
        bad = np.flatnonzero((w_float != 0.0) & (w_float != 1.0))
        if bad.size:
            raise DataError(f"assignment w must be 0 or 1, got {w_raw[bad[0]]!r} at index {int(bad[0])}")
        w = w_float.astype(np.int8)
        n_treated = int(w.sum())
        if n_treated in (0, len(w)):
            raise DataError("both arms must be non-empty")
        if not np.var(m) > 0.0:
            raise DataError("prognostic score has zero variance")
        for arr in (y, w, m):
            arr.setflags(write=False)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "m", m)

    @property
    def n(self):
        return len(self.y)

    @property
    def n_treated(self):
        return int(self.w.sum())

    @property
    def p(self):
        return self.n_treated / self.n

    def __eq__(self, other):
        if not isinstance(other, TrialData):
            return NotImplemented
        return (
            np.array_equal(self.y, other.y)
            and np.array_equal(self.w, other.w)
            and np.array_equal(self.m, other.m)
        )

    __hash__ = None


@dataclass(frozen=True)
class HistoricalSubjects:
    """Observed outcomes ``y`` and model predictions ``m`` grouped by study.

    ``studies`` maps study label to an ``(y, m)`` pair of arrays, in order of
    first appearance.
    """

    studies: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.studies:
            raise DataError("historical data contains no studies")
        for sid, (y, m) in self.studies.items():
            if len(y) != len(m):
                raise DataError(f"study {sid!r}: y and m differ in length")
            if len(y) < 2:
                raise DataError(f"study {sid!r} has {len(y)} row(s); at least 2 are required")
            if not (np.all(np.isfinite(y)) and np.all(np.isfinite(m))):
                raise DataError(f"study {sid!r} contains non-finite values")

    @classmethod
    def from_arrays(cls, study_id, y, m):
        study_id = list(study_id)
        y = np.asarray(y, dtype=float)
        m = np.asarray(m, dtype=float)
        if not (len(study_id) == len(y) == len(m)):
            raise DataError("study_id, y and m must have equal length")
        order = list(dict.fromkeys(study_id))
        labels = np.asarray(study_id, dtype=object)
        studies = {sid: (y[labels == sid], m[labels == sid]) for sid in order}
        return cls(studies)

    @property
    def n_studies(self):
        return len(self.studies)

    @property
    def n_subjects(self):
        return sum(len(y) for y, _ in self.studies.values())

    def pooled(self):
        """Return ``(y, m)`` concatenated over all studies."""
        ys = [y for y, _ in self.studies.values()]
        ms = [m for _, m in self.studies.values()]
        return np.concatenate(ys), np.concatenate(ms)


@dataclass(frozen=True)
class GroupSummary:
    """Arm-wise means used throughout the asymptotic algebra.

    ``s2_m`` is the variance of ``m`` over all subjects with divisor ``n``.
    """

    n: int
    p: float
    y_bar_c: float
    y_bar_t: float
    m_bar_c: float
    m_bar_t: float
    m_bar: float
    s2_m: float


def summarize(data):
    w = data.w.astype(bool)
    m_bar = float(np.mean(data.m))
    return GroupSummary(
        n=data.n,
        p=data.p,
        y_bar_c=float(np.mean(data.y[~w])),
        y_bar_t=float(np.mean(data.y[w])),
        m_bar_c=float(np.mean(data.m[~w])),
        m_bar_t=float(np.mean(data.m[w])),
        m_bar=m_bar,
        s2_m=float(np.mean((data.m - m_bar) ** 2)),
    )


# ---------------------------------------------------------------------------
# CSV


def _read_rows(path, required):
    path = Path(path)
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc.strerror}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: file is empty")
        header = [h.strip() for h in header]
        missing = [c for c in required if c not in header]
        if missing:
            raise DataError(f"{path}: missing column(s) {', '.join(missing)}")
        idx = {c: header.index(c) for c in required}
        rows = []
        # row numbers count data rows from 1, header excluded
        for rownum, row in enumerate(reader, start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise DataError(f"{path}: row {rownum} has {len(row)} fields, expected {len(header)}")
            rows.append((rownum, {c: row[i].strip() for c, i in idx.items()}))
    if not rows:
        raise DataError(f"{path}: no data rows")
    return path, rows


def _parse_float(path, rownum, col, text):
    try:
        value = float(text)
    except ValueError:
        raise DataError(f"{path}: row {rownum}, column {col}: cannot parse {text!r} as a number") from None
    if not math.isfinite(value):
        raise DataError(f"{path}: row {rownum}, column {col}: non-finite value {text!r}")
    return value


def load_trial_csv(path):
    """Read and validate a trial CSV with columns ``y,w,m``."""
    path, rows = _read_rows(path, ("y", "w", "m"))
    y, w, m = [], [], []
    for rownum, rec in rows:
        y.append(_parse_float(path, rownum, "y", rec["y"]))
        m.append(_parse_float(path, rownum, "m", rec["m"]))
        wv = _parse_float(path, rownum, "w", rec["w"])
        if wv not in (0.0, 1.0):
            raise DataError(f"{path}: row {rownum}, column w: assignment must be 0 or 1, got {rec['w']!r}")
        w.append(int(wv))
    try:
        return TrialData(np.array(y), np.array(w), np.array(m))
    except DataError as exc:
        raise DataError(f"{path}: {exc}") from None


def write_trial_csv(data, path):
    """Write ``data`` so that :func:`load_trial_csv` reproduces it exactly."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["y", "w", "m"])
        for yi, wi, mi in zip(data.y, data.w, data.m):
            writer.writerow([repr(float(yi)), int(wi), repr(float(mi))])


def load_historical_csv(path):
    """Read and validate a historical CSV with columns ``study_id,y,m``."""
    path, rows = _read_rows(path, ("study_id", "y", "m"))
    sid, y, m = [], [], []
    for rownum, rec in rows:
        if not rec["study_id"]:
            raise DataError(f"{path}: row {rownum}, column study_id: empty label")
        sid.append(rec["study_id"])
        y.append(_parse_float(path, rownum, "y", rec["y"]))
        m.append(_parse_float(path, rownum, "m", rec["m"]))
    try:
        return HistoricalSubjects.from_arrays(sid, y, m)
    except DataError as exc:
        raise DataError(f"{path}: {exc}") from None
