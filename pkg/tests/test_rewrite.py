import pytest
from hypothesis import given, settings

from dftkit.algebra import NEVER_TERM, AllDistinct, And, Before, Or, Var, free_variables
from dftkit.rewrite import (
    BudgetExhausted,
    Equivalent,
    RewriteRule,
    apply_reduction,
    decide_equivalence,
    find_rule,
    normalize,
    rule_catalog,
    verify_catalog,
)
from dftkit.syntax import format_term, parse_term
from conftest import terms

A, B, C = Var("A"), Var("B"), Var("C")


def _has(lhs, rhs):
    return any(r.lhs == parse_term(lhs) and r.rhs == parse_term(rhs) for r in rule_catalog())


def test_catalog_size_and_arity():
    rules = rule_catalog()
    assert len(rules) >= 80
    assert all(len(set(free_variables(r.lhs)) | set(free_variables(r.rhs))) <= 3 for r in rules)
    assert len({r.provenance for r in rules}) == len(rules)


def test_catalog_contents():
    assert _has("A + A", "A")
    assert _has("A < NEVER", "A")
    assert _has("(A + B) <= C", "(A <= C) + (B <= C)")
    assert find_rule("OR/AND #1").provenance == "OR/AND #1"


def test_catalog_verifies():
    report = verify_catalog()
    assert report.ok and len(report) == len(rule_catalog())
    assert report.summary() == f"{len(report)} rules verified, 0 failures"


def test_corrupted_rule_is_caught():
    bad = RewriteRule(parse_term("A < B"), parse_term("B < A"), "corrupted")
    report = verify_catalog(rule_catalog() + [bad])
    assert len(report.failures) == 1
    (fail,) = report.failures
    assert fail.rule is bad and dict(fail.verdict.witness) == {"A": 1.0, "B": 2.0}


def test_empty_catalog():
    report = verify_catalog([])
    assert len(report) == 0 and report.summary() == "0 rules verified, 0 failures"


@pytest.mark.parametrize(
    "text, expected",
    [("A + A . B", "A"), ("A . NEVER", "NEVER"), ("(A + B) < C", "A < C + B < C"), ("A", "A")],
)
def test_normalize_examples(text, expected):
    assert format_term(normalize(parse_term(text))) == expected


def test_rules_normalize_to_the_same_form():
    # a few rows have several equally short normal forms; everything else must coincide
    same = sum(normalize(r.lhs) == normalize(r.rhs) for r in rule_catalog())
    assert same >= len(rule_catalog()) - 3


@settings(max_examples=80, deadline=None)
@given(terms(max_leaves=5))
def test_normalize_is_sound_and_idempotent(t):
    n = normalize(t)
    assert normalize(n) == n
    assert decide_equivalence(t, n)
    assert set(free_variables(n)) <= set(free_variables(t))


@settings(max_examples=60, deadline=None)
@given(terms(max_leaves=4), terms(max_leaves=4))
def test_normalize_commutes(x, y):
    assert normalize(And(x, y)) == normalize(And(y, x))
    assert normalize(Or(x, y)) == normalize(Or(y, x))


def test_budget():
    with pytest.raises(ValueError):
        normalize(A, budget=0)
    t = parse_term("(A + B) . (B + C) . (A + C) + A < B . B < C")
    try:
        normalize(t, budget=1)
    except BudgetExhausted as exc:
        assert exc.budget == 1 and decide_equivalence(t, exc.partial)


def test_conditions_remove_ties():
    t = parse_term("A <= B . B")
    assert format_term(normalize(t, conditions=[AllDistinct(["A", "B"])])) == "B . A < B"


def test_apply_reduction_single_variable():
    red = apply_reduction(A)
    assert red.reduced == A and isinstance(red.certificate, Equivalent)


def test_apply_reduction_never():
    red = apply_reduction(And(Before(A, B), Before(B, A)))
    assert red.reduced == NEVER_TERM
