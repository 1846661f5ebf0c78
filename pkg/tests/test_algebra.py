import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dftkit.algebra import (
    ALWAYS_TERM,
    NEVER,
    NEVER_TERM,
    AllDistinct,
    And,
    ArityMismatch,
    BadVoteThreshold,
    Before,
    ColdSpare,
    InclBefore,
    MissingVariable,
    NeverEvents,
    Or,
    Simult,
    TermEqNever,
    Var,
    conditions_hold,
    csp_time,
    desugar_gate,
    eval_array,
    eval_term,
    free_variables,
    substitute,
    vote,
)
from conftest import NAMES, terms, valuations

A, B, C = Var("A"), Var("B"), Var("C")


@pytest.mark.parametrize(
    "term, env, expected",
    [
        (And(A, B), {"A": 3, "B": 5}, 5),
        (Or(A, B), {"A": 3, "B": 5}, 3),
        (Before(A, B), {"A": 7, "B": 2}, NEVER),
        (Before(A, B), {"A": 2, "B": NEVER}, 2),
        (Simult(A, B), {"A": 4, "B": 4}, 4),
        (Simult(A, B), {"A": 4, "B": 5}, NEVER),
        (InclBefore(A, B), {"A": 2, "B": 2}, 2),
        (InclBefore(A, B), {"A": 3, "B": 2}, NEVER),
    ],
)
def test_operator_values(term, env, expected):
    assert eval_term(term, env) == expected


def test_missing_variable():
    with pytest.raises(MissingVariable):
        eval_term(And(A, B), {"A": 1.0})


def test_desugar_examples():
    assert desugar_gate("pand", [A, B]) == And(B, InclBefore(A, B))
    assert desugar_gate("fdep", [A, Var("T")]) == Or(A, Var("T"))
    assert desugar_gate("hsp", [A, B]) == And(A, B)
    assert vote(2, [A, B, C]) == Or(Or(And(A, B), And(A, C)), And(B, C))


def test_desugar_errors():
    with pytest.raises(ArityMismatch):
        desugar_gate("pand", [A])
    with pytest.raises(BadVoteThreshold):
        vote(4, [A, B, C])


def test_free_variables():
    assert free_variables(And(A, B)) == ("A", "B")
    assert free_variables(NEVER_TERM) == ()
    assert free_variables(Or(A, And(A, B))) == ("A", "B")


@given(terms(), terms(), valuations())
def test_and_or_are_max_min(x, y, env):
    assert eval_term(And(x, y), env) == max(eval_term(x, env), eval_term(y, env))
    assert eval_term(Or(x, y), env) == min(eval_term(x, env), eval_term(y, env))


@given(terms(), valuations())
def test_identities(t, env):
    assert eval_term(Or(t, NEVER_TERM), env) == eval_term(t, env)
    assert eval_term(And(t, ALWAYS_TERM), env) == eval_term(t, env)


@given(st.lists(st.floats(0.01, 100), min_size=2, max_size=2, unique=True))
def test_distinct_times_are_never_simultaneous(ts):
    assert eval_term(Simult(A, B), {"A": ts[0], "B": ts[1]}) == NEVER


@given(terms(), st.lists(valuations(), min_size=1, max_size=8))
def test_vectorised_matches_scalar(t, envs):
    arr = {n: np.array([e[n] for e in envs]) for n in NAMES}
    out = eval_array(t, arr, shape=(len(envs),))
    assert list(out) == [eval_term(t, e) for e in envs]


@given(valuations(("A", "B")))
def test_csp_matches_closed_form(env):
    assert eval_term(desugar_gate("csp", [A, B]), env) == csp_time(env["A"], env["B"])


@given(valuations(("A", "Ba", "Bd")))
def test_cold_warm_spare_is_cold_spare(env):
    conds = [ColdSpare("Bd"), AllDistinct(["A", "Ba"])]
    if not conditions_hold(conds, env):
        return
    wsp = desugar_gate("wsp", [A, Var("Ba"), Var("Bd")])
    assert eval_term(wsp, env) == eval_term(desugar_gate("csp", [A, Var("Ba")]), env)


@given(valuations(("A", "B")))
def test_hot_warm_spare_is_hot_spare(env):
    wsp = desugar_gate("wsp", [A, B, B])
    assert eval_term(wsp, env) == eval_term(desugar_gate("hsp", [A, B]), env)


def test_side_conditions():
    assert AllDistinct(["A", "B"]).holds({"A": 1, "B": 2})
    assert not AllDistinct(["A", "B"]).holds({"A": 1, "B": 1})
    # several NEVERs are not a tie
    assert AllDistinct(["A", "B"]).holds({"A": NEVER, "B": NEVER})
    assert ColdSpare("B").holds({"B": NEVER}) and not ColdSpare("B").holds({"B": 3})
    assert NeverEvents("A", "B").holds({"A": 1, "B": NEVER})
    assert not NeverEvents("A", "B").holds({"A": 1, "B": 2})
    assert TermEqNever(Before(A, B)).holds({"A": 3, "B": 1})


def test_substitute():
    assert substitute(And(A, B), {"B": C}) == And(A, C)
    assert math.isinf(eval_term(substitute(A, {"A": NEVER_TERM}), {}))
