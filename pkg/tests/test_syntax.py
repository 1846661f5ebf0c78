import pytest
from hypothesis import given

from dftkit.algebra import And, Before, InclBefore, Or, Simult, Var, desugar_gate
from dftkit.syntax import TermSyntaxError, format_term, parse_hol, parse_term
from conftest import terms

A, B, C = Var("A"), Var("B"), Var("C")


def test_precedence():
    assert parse_term("A + B . C") == Or(A, And(B, C))
    assert parse_term("A . B < C") == And(A, Before(B, C))
    assert parse_term("A <= B ~ C") == Simult(InclBefore(A, B), C)
    assert parse_term("A ◁ B") == parse_term("A < B")


def test_constants():
    assert format_term(parse_term("A . NEVER + ALWAYS")) == "A . NEVER + ALWAYS"


@given(terms())
def test_round_trip(t):
    assert parse_term(format_term(t)) == t


def test_hol_gates():
    assert parse_hol("PAND A B") == desugar_gate("pand", [A, B])
    assert parse_hol("D_OR (FDEP A T) B") == Or(Or(A, Var("T")), B)
    assert parse_hol("D2of3 A B C") == desugar_gate("vote", [A, B, C], k=2)


@pytest.mark.parametrize("text", ["A +", "(A . B", "A B", "A $ B", ""])
def test_infix_errors(text):
    with pytest.raises(TermSyntaxError):
        parse_term(text)


@pytest.mark.parametrize("text", ["D_OR A", "PAND A B C", "D_OR (A B"])
def test_hol_errors(text):
    with pytest.raises(TermSyntaxError):
        parse_hol(text)
