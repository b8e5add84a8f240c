"""Tabulate the asymptotic type I error and power as the prior widens.

With nλ² near zero the Bayesian test behaves like the single-arm analysis;
with nλ² large it recovers prognostic covariate adjustment.
"""

from dataclasses import replace

import numpy as np

from progbayes import OperatingPoint, asymptotic_rejection_rate, prog_adjust_power, zero_limit_rate
from progbayes.theory import beta0_for_single_arm_rate, beta1_for_prog_power

base = OperatingPoint(n=1000, p=0.5)
biased = replace(base, beta0=beta0_for_single_arm_rate(base, 0.2))
effect = replace(base, beta1=beta1_for_prog_power(base, 0.5))

print(f"biased null: beta0 = {biased.beta0:.5f}   effect: beta1 = {effect.beta1:.5f}\n")
print(f"{'n*lambda^2':>11} {'type I':>8} {'power':>8} {'variance factor':>16}")
for a in np.logspace(-2, 3, 11):
    t1 = asymptotic_rejection_rate(biased, a)
    pw = asymptotic_rejection_rate(effect, a)
    print(f"{a:11.3g} {t1.rejection_rate:8.4f} {pw.rejection_rate:8.4f} {pw.variance_factor:16.4f}")
print(f"\nlimits: zero-width power {zero_limit_rate(effect):.4f}, adjusted power {prog_adjust_power(effect):.4f}")
