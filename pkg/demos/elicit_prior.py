"""Fit the prior width from historical control data in both supported modes."""

import numpy as np

from progbayes import HistoricalSubjects, study_level_lambda, subject_level_lambda

rng = np.random.default_rng(7)
ids, y, m = [], [], []
# four historical studies; the score is miscalibrated by a study-specific offset
for k, offset in enumerate((0.05, -0.10, 0.20, 0.02)):
    size = int(rng.integers(80, 200))
    score = rng.normal(size=size)
    ids += [f"study{k}"] * size
    m += list(score)
    y += list(score + offset + rng.normal(scale=1.2, size=size))
hist = HistoricalSubjects.from_arrays(ids, y, m)

sub = subject_level_lambda(hist)
floor = sub.floor / sub.n_subjects**0.5
print(f"subject level: lambda = {sub.lam:.4f}  (|E| = {abs(sub.e_all):.4f}, c/sqrt(N) = {floor:.4f})")

study = study_level_lambda(hist)
print(f"study level:   lambda = {study.lam:.4f}")
for s in study.studies:
    print(f"  {s['study_id']}: n={s['n']:<4d} E={s['e']:+.4f}")
