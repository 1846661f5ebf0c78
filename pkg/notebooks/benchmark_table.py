"""Regenerate the before/after comparison for every built-in benchmark.

Prints the same table as ``dftkit bench`` plus a Monte Carlo column.
Expect about ten seconds.
"""

from dftkit import builtin_models, simulate
from dftkit.bench import run_all

report = run_all()
print(report.to_text())

print("\nMonte Carlo on the original trees (10^5 trials, seed 0):")
for entry in report.entries:
    mc = simulate(builtin_models()[entry.model].original, entry.time_bound, 100_000, seed=0)
    z = abs(mc.p_hat - entry.prob_before) / mc.stderr if mc.stderr else float("nan")
    print(f"  {entry.model:6s} t={entry.time_bound:<6g} mc={mc.p_hat:.5e}  ctmc={entry.prob_before:.5e}  |z|={z:.2f}")
