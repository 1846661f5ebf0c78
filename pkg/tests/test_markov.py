import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dftkit.galileo import parse
from dftkit.markov import (
    StateBudgetExceeded,
    build_ctmc,
    mean_time_to_failure,
    state_budget,
    transient_failure_probability,
)
from conftest import small_models


def model(body: str, top: str = "T"):
    return parse(f'toplevel "{top}"; {body}')


SINGLE = model('"A" lambda=0.1;', top="A")
OR2 = model('"T" or "A" "B"; "A" lambda=0.1; "B" lambda=0.1;')
AND2 = model('"T" and "A" "B"; "A" lambda=0.1; "B" lambda=0.1;')
CSP = model('"T" csp "A" "B"; "A" lambda=0.1; "B" lambda=0.1;')
PAND = model('"T" pand "A" "B"; "A" lambda=0.1; "B" lambda=0.1;')


@pytest.mark.parametrize("m, states, transitions", [(SINGLE, 2, 1), (AND2, 4, 4), (CSP, 3, 2), (OR2, 2, 1)])
def test_state_counts(m, states, transitions):
    for prune in (True, False):
        chain = build_ctmc(m, prune=prune)
        assert (chain.n_states, chain.n_transitions) == (states, transitions)


@pytest.mark.parametrize(
    "m, t, expected",
    [
        (SINGLE, 10, 1 - math.exp(-1)),
        (OR2, 10, 1 - math.exp(-2)),
        (AND2, 10, (1 - math.exp(-1)) ** 2),
        # B fails at rate 0.1 only after A failed: Erlang(2, 0.1)
        (CSP, 10, 1 - math.exp(-1) * 2),
        # P(A < B <= t) for two exponentials
        (PAND, 10, (1 - math.exp(-1)) - 0.5 * (1 - math.exp(-2))),
    ],
)
def test_closed_forms(m, t, expected):
    assert abs(transient_failure_probability(build_ctmc(m), t, 1e-10) - expected) <= 1e-8


def test_time_zero():
    assert transient_failure_probability(build_ctmc(AND2), 0.0) == 0.0


def test_bad_arguments():
    with pytest.raises(ValueError):
        transient_failure_probability(build_ctmc(AND2), -1.0)
    with pytest.raises(ValueError):
        transient_failure_probability(build_ctmc(AND2), 1.0, tol=0)


def test_mttf_closed_forms():
    assert math.isclose(mean_time_to_failure(build_ctmc(SINGLE)), 10.0, rel_tol=1e-9)
    m = model('"T" or "A" "B"; "A" lambda=0.3; "B" lambda=0.2;')
    assert math.isclose(mean_time_to_failure(build_ctmc(m)), 2.0, rel_tol=1e-9)
    # max of two exponentials: 1/a + 1/b - 1/(a+b)
    assert math.isclose(mean_time_to_failure(build_ctmc(AND2)), 15.0, rel_tol=1e-9)


def test_mttf_infinite():
    # the PAND can fail safe
    assert mean_time_to_failure(build_ctmc(PAND)) == math.inf
    # a cold spare still fails eventually once another gate claims it
    dead = model('"T" and "A" "S"; "G" csp "B" "S"; "A" lambda=1; "B" lambda=1; "S" lambda=1;')
    assert math.isfinite(mean_time_to_failure(build_ctmc(dead)))
    stuck = model('"T" and "A" "S"; "G" csp "B" "S"; "A" lambda=1; "B" lambda=1; "S" lambda=1; "F" fdep "A" "B";')
    assert math.isfinite(mean_time_to_failure(build_ctmc(stuck)))
    forced = model('"T" pand "A" "B"; "F" fdep "B" "A"; "A" lambda=1; "B" lambda=1;')
    # B first drags A along at the same instant, so the inclusive PAND fails
    assert math.isfinite(mean_time_to_failure(build_ctmc(forced)))


def test_warm_spare_rates():
    m = model('"T" wsp "A" "B"; "A" lambda=1; "B" lambda=2 dorm=0.25;')
    chain = build_ctmc(m)
    # initial state: A at 1, dormant B at 0.5
    assert sorted(chain.rates[chain.initial].data) == [0.5, 1.0]


def test_fdep_dependents_fail_with_trigger():
    m = model('"T" and "A" "B"; "F" fdep "C" "A" "B"; "A" lambda=1; "B" lambda=1; "C" lambda=1;')
    chain = build_ctmc(m)
    fail = next(iter(chain.absorbing))
    assert chain.rates[chain.initial, fail] == 1.0


def test_spare_claim_order():
    # both gates lose their primary; the first declared gate wins the spare
    m = model(
        '"T" or "G1" "G2"; "G1" wsp "A" "S"; "G2" wsp "B" "S"; "F" fdep "C" "A" "B";'
        '"A" lambda=1; "B" lambda=1; "C" lambda=1; "S" lambda=1;'
    )
    chain = build_ctmc(m, prune=False)
    assert chain.rates[chain.initial, next(iter(chain.absorbing))] == 1.0


def test_budget(monkeypatch):
    with pytest.raises(StateBudgetExceeded) as info:
        build_ctmc(AND2, prune=False, budget=2)
    assert info.value.budget == 2
    monkeypatch.setenv("DFT_STATE_BUDGET", "3")
    assert state_budget() == 3
    with pytest.raises(StateBudgetExceeded):
        build_ctmc(AND2, prune=False)


def test_export(tmp_path):
    chain = build_ctmc(CSP)
    chain.write(tmp_path / "t.txt", tmp_path / "l.txt")
    lines = (tmp_path / "t.txt").read_text().splitlines()
    assert lines[0].startswith("# states 3")
    rows = [tuple(map(float, l.split())) for l in lines[1:]]
    assert len(rows) == chain.n_transitions and all(r[2] > 0 for r in rows)
    labels = (tmp_path / "l.txt").read_text().splitlines()
    assert len(labels) == 3 and any("FAILED" in l for l in labels)


@settings(max_examples=150, deadline=None)
@given(small_models(max_events=5))
def test_pruning_and_composition_preserve_probability(m):
    full = build_ctmc(m, prune=False)
    for chain in (build_ctmc(m), build_ctmc(m, compose=False)):
        assert chain.n_states <= full.n_states
        assert abs(transient_failure_probability(chain, 0.7) - transient_failure_probability(full, 0.7)) < 1e-9


@settings(max_examples=100, deadline=None)
@given(small_models(max_events=5))
def test_generator_invariants(m):
    chain = build_ctmc(m)
    rates = chain.rates.tocoo()
    assert (rates.data > 0).all()
    assert (rates.row != rates.col).all()
    for f in chain.absorbing:
        assert chain.rates[f].nnz == 0
    exits = chain.exit_rates()
    assert np.allclose(exits, np.asarray(chain.rates.sum(axis=1)).ravel())


@settings(max_examples=60, deadline=None)
@given(small_models(max_events=4), st.lists(st.floats(0, 5), min_size=2, max_size=5))
def test_probability_monotone_and_bounded(m, times):
    chain = build_ctmc(m)
    ps = [transient_failure_probability(chain, t) for t in sorted(times)]
    assert all(0.0 <= p <= 1.0 for p in ps)
    assert all(b >= a - 1e-9 for a, b in zip(ps, ps[1:]))


def test_tiny_tolerance_is_clamped():
    m = parse('toplevel "A"; "A" lambda=0.5;')
    p = transient_failure_probability(build_ctmc(m), 3.0, tol=1e-30)
    assert abs(p - (1 - math.exp(-1.5))) < 1e-14
