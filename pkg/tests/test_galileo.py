import pytest
from hypothesis import given, settings

from dftkit.algebra import AllDistinct, And, Before, ColdSpare, InclBefore, NeverEvents, Or, TermEqNever, Var, free_variables
from dftkit.galileo import (
    BadArity,
    CycleDetected,
    DormancyOutOfRange,
    DuplicateDefinition,
    GalileoSyntaxError,
    InvalidModel,
    MisplacedFdep,
    NoGateForm,
    NonPositiveRate,
    SpareNotBasic,
    UnknownReference,
    UnsupportedSharing,
    check,
    load,
    model_from_cut_sequences,
    parse,
    serialize,
    to_structure_function,
    validate,
)
from dftkit.qualitative import extract_cut_sequences
from dftkit.rewrite import decide_equivalence, normalize
from dftkit.syntax import format_term, parse_hol, parse_term
from conftest import small_models


def test_parse_pand():
    m = parse('toplevel "T"; "T" pand "A" "B"; "A" lambda=0.1 dorm=0.0; "B" lambda=0.2 dorm=0.0;')
    assert len(m.nodes) == 3 and m.gate("T").kind == "pand"
    assert m.gate("T").children == ("A", "B")
    assert [e.rate for e in m.events] == [0.1, 0.2]


def test_lexical_details():
    text = 'toplevel "T";\r\n// comment\r\n"T" 2of3 "A" "B" "C"; // trailing\n"A" lambda=1e-3; "B" lambda=2.5E-1 dorm=0.5;\n"C" lambda=.5;'
    m = parse(text)
    assert m.gate("T").kind == "vote" and m.gate("T").k == 2
    assert m.nodes["A"].rate == 1e-3 and m.nodes["B"].dorm == 0.5


@pytest.mark.parametrize(
    "text, error",
    [
        ('toplevel "T"; "T" pand "A"; "T" or "A"; "A" lambda=1;', DuplicateDefinition),
        ('toplevel "T"; "T" or "A" "X"; "A" lambda=1;', UnknownReference),
        ('toplevel "T"; "T" or "A" "B" "A" lambda=1;', GalileoSyntaxError),
        ('toplevel "T"; "T" frob "A"; "A" lambda=1;', GalileoSyntaxError),
        ('toplevel "T"; "T" 2of3 "A" "B"; "A" lambda=1; "B" lambda=1;', GalileoSyntaxError),
        ('toplevel "T"; "A" dorm=0.5;', GalileoSyntaxError),
    ],
)
def test_parse_errors(text, error):
    with pytest.raises(error):
        parse(text)


def test_syntax_error_position():
    with pytest.raises(GalileoSyntaxError) as info:
        parse('toplevel "T";\n"T" or "A" "B"\n"A" lambda=1;')
    assert info.value.line == 3


@pytest.mark.parametrize(
    "text, kind",
    [
        ('toplevel "A"; "A" lambda=-1;', NonPositiveRate),
        ('toplevel "A"; "A" lambda=1 dorm=1.5;', DormancyOutOfRange),
        ('toplevel "T"; "T" or "T" "A"; "A" lambda=1;', CycleDetected),
        ('toplevel "T"; "T" pand "A"; "A" lambda=1;', BadArity),
        ('toplevel "T"; "T" or "A" "F"; "F" fdep "A" "B"; "A" lambda=1; "B" lambda=1;', MisplacedFdep),
        ('toplevel "T"; "T" csp "A" "G"; "G" or "A" "B"; "A" lambda=1; "B" lambda=1;', SpareNotBasic),
    ],
)
def test_violations(text, kind):
    violations = validate(parse(text))
    assert any(isinstance(v, kind) for v in violations)
    with pytest.raises(InvalidModel):
        check(parse(text))


def test_cycle_path():
    (v,) = validate(parse('toplevel "G"; "G" or "G" "A"; "A" lambda=1;'))
    assert list(v.path) == ["G", "G"]


@settings(max_examples=150, deadline=None)
@given(small_models())
def test_round_trip(model):
    assert parse(serialize(model)) == model


def test_pand_structure_function():
    sf = to_structure_function(parse('toplevel "T"; "T" pand "A" "B"; "A" lambda=1; "B" lambda=1;'))
    assert sf.term == And(Var("B"), InclBefore(Var("A"), Var("B")))
    assert sf.conditions == (AllDistinct(["A", "B"]),)


def test_fdep_structure_function():
    m = parse('toplevel "T"; "T" or "A" "C"; "F" fdep "T1" "A"; "A" lambda=1; "C" lambda=1; "T1" lambda=1;')
    assert to_structure_function(m).term == Or(Or(Var("A"), Var("T1")), Var("C"))


def test_shared_spare_memories():
    m = parse(
        'toplevel "T"; "T" and "M1S" "M2S"; "M1S" wsp "M1" "M3"; "M2S" wsp "M2" "M3";'
        '"M1" lambda=1; "M2" lambda=1; "M3" lambda=1 dorm=0.5;'
    )
    sf = to_structure_function(m)
    expected = parse_hol("D_AND (shared_spare M1 M2 M3_a M3_d) (shared_spare M2 M1 M3_a M3_d)")
    assert sf.term == expected
    assert NeverEvents("M3_a", "M3_d") in sf.conditions
    assert not any(isinstance(c, ColdSpare) for c in sf.conditions)


def test_cold_spare_conditions(ahrs_text):
    sf = to_structure_function(parse(ahrs_text))
    assert ColdSpare("A2_d") in sf.conditions and ColdSpare("B3_d") in sf.conditions
    assert TermEqNever(Before(Var("A2_a"), Var("A1"))) in sf.conditions


def test_ahrs_reduces_to_three_sources(ahrs_text):
    sf = to_structure_function(parse(ahrs_text))
    assert format_term(normalize(sf.term, conditions=sf.conditions)) == "A3_a + B3_a + Tr"


def test_three_claimants_rejected():
    m = parse(
        'toplevel "T"; "T" and "G1" "G2" "G3"; "G1" wsp "A" "S"; "G2" wsp "B" "S"; "G3" wsp "C" "S";'
        '"A" lambda=1; "B" lambda=1; "C" lambda=1; "S" lambda=1;'
    )
    with pytest.raises(UnsupportedSharing):
        to_structure_function(m)


@settings(max_examples=100, deadline=None)
@given(small_models())
def test_free_variables_are_events_and_aliases(model):
    sf = to_structure_function(model)
    allowed = set()
    for e in model.events:
        allowed |= {e.name, f"{e.name}_a", f"{e.name}_d"}
    assert set(free_variables(sf.term)) <= allowed


@settings(max_examples=100, deadline=None)
@given(small_models(spares=False, fdeps=False))
def test_static_trees_use_and_or_only(model):
    static = all(g.kind in ("and", "or", "vote") for g in model.gates)
    term = to_structure_function(model).term
    if static:
        assert _only_and_or(term)


def _only_and_or(t):
    if isinstance(t, Var):
        return True
    return isinstance(t, (And, Or)) and _only_and_or(t.left) and _only_and_or(t.right)


def test_gate_synthesis():
    m = parse('toplevel "T"; "T" or "G" "A"; "G" pand "A" "B"; "A" lambda=1; "B" lambda=2;')
    sf = to_structure_function(m)
    reduced = normalize(sf.term, conditions=sf.conditions)
    g = model_from_cut_sequences(extract_cut_sequences(reduced), m)
    assert decide_equivalence(to_structure_function(g).term, sf.term, sf.conditions)
    with pytest.raises(NoGateForm):
        model_from_cut_sequences(extract_cut_sequences(parse_term("A . B < C")), parse(
            'toplevel "T"; "T" and "A" "B" "C"; "A" lambda=1; "B" lambda=1; "C" lambda=1;'))


def test_load(tmp_path, ahrs_text):
    path = tmp_path / "ahrs.dft"
    path.write_text(ahrs_text)
    assert load(path).toplevel == "AHRS"
