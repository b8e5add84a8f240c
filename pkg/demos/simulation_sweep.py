"""Check the asymptotic type I rate against simulation on a small grid."""

from progbayes import SweepConfig, run_sweep

config = SweepConfig.from_dict(
    {
        "base": {"n": 1000, "p": 0.5},
        "axes": {"n_lambda_sq": [0.1, 1.0, 10.0]},
        "targets": {"single_arm_type1": 0.2},
        "replicates": 4000,
        "seed": 1,
        "methods": ["bayes", "prog_adjust"],
    }
)
result = run_sweep(config, progress=lambda done, total: print(f"cell {done}/{total}"))

print(f"\n{'method':<12} {'n*lambda^2':>10} {'simulated':>10} {'theory':>8} {'gap/se':>7}")
for row in result.rows:
    print(
        f"{row['method']:<12} {row['n_lambda_sq']:10.3g} {row['rate']:10.4f}"
        f" {row['theory']:8.4f} {row['gap_z']:7.2f}"
    )
