"""From a Galileo file to a certified reduction and two probabilities.

Run with ``python3 notebooks/ahrs_walkthrough.py``.  Uses the built-in
AHRS-style benchmark, so no input files are needed.
"""

from dftkit import (
    apply_reduction,
    build_ctmc,
    builtin_models,
    extract_cut_sequences,
    format_term,
    minimize,
    serialize,
    simulate,
    transient_failure_probability,
)

bench = builtin_models()["ahrs"]
print("original tree:")
print(serialize(bench.original))

# The structure function carries side conditions (distinct failure times,
# activation order of the spares) that the reduction is allowed to use.
sf = bench.structure_function()
print("\nstructure function:", format_term(sf.term)[:120], "...")
print("conditions:", len(sf.conditions))

red = apply_reduction(sf.term, sf.conditions)
print("\nreduced:", format_term(red.reduced))
print("certificate:", red.certificate.describe())

summary = minimize(extract_cut_sequences(red.reduced))
print("cut sequences:", [[str(l) for l in s.ordered()] for s in summary.sequences])

# Quantitative side: the original and the hand-reduced tree should agree.
t = 10.0
for label, model in (("original", bench.original), ("reduced", bench.reduced)):
    chain = build_ctmc(model)
    p = transient_failure_probability(chain, t)
    print(f"{label:9s} states={chain.n_states:4d}  P(fail by {t:g}) = {p:.10f}")

mc = simulate(bench.original, t, 200_000, seed=1)
lo, hi = mc.interval()
print(f"Monte Carlo: {mc.p_hat:.5f}  3-sigma interval [{lo:.5f}, {hi:.5f}]")
