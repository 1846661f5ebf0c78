import json

import pytest

from dftkit.algebra import Before, Or, TermEqNever, Var, free_variables
from dftkit.bench import (
    ComparisonReport,
    UnknownBenchmark,
    builtin_models,
    certify,
    run_comparison,
)
from dftkit.galileo import to_structure_function, validate
from dftkit.qualitative import extract_cut_sequences, minimize
from dftkit.rewrite import NotEquivalent, Sampled, decide_equivalence


def _summands(t):
    return _summands(t.left) + _summands(t.right) if isinstance(t, Or) else [t]


def test_five_models():
    models = builtin_models()
    assert list(models) == ["cpand", "ahrs", "mcs", "hecs", "hcas"]
    for b in models.values():
        assert validate(b.original) == [] and validate(b.reduced) == []


def test_ahrs_has_three_summands():
    assert len(_summands(builtin_models()["ahrs"].reduced_term)) == 3


def test_cpand_events():
    b = builtin_models()["cpand"]
    assert len(b.original.events) == 30
    dropped = {"N1", "O1", "P1", "N2", "O2", "P2"}
    assert not dropped & set(free_variables(b.reduced_term))
    assert not dropped & {e.name for e in b.reduced.events}


def test_hcas_condition():
    assert TermEqNever(Before(Var("B_a"), Var("P"))) in builtin_models()["hcas"].conditions


def test_ahrs_cut_summary_names_three_sources():
    b = builtin_models()["ahrs"]
    summary = minimize(extract_cut_sequences(b.reduced_term))
    assert len(summary) == 3
    assert {frozenset(s.events) for s in summary.sequences} == {
        frozenset({"Tr"}),
        frozenset({"A1", "A2_a", "A3_a"}),
        frozenset({"B1", "B2_a", "B3_a"}),
    }


@pytest.mark.parametrize("name", ["cpand", "ahrs", "mcs", "hecs", "hcas"])
def test_reduced_tree_matches_reduced_term(name):
    # the gate-level reduced tree is what gets analysed; it must denote the reduced term
    b = builtin_models()[name]
    sf = to_structure_function(b.reduced)
    conditions = list(b.conditions) + [c for c in sf.conditions if c not in b.conditions]
    verdict = decide_equivalence(sf.term, b.reduced_term, conditions, Sampled(100_000, 3))
    assert verdict, verdict.describe()


@pytest.mark.parametrize("name", ["ahrs", "hcas", "mcs"])
def test_certificates(name):
    assert certify(builtin_models()[name], trials=200_000)


def test_bad_reduction_is_caught():
    b = builtin_models()["ahrs"]
    wrong = Or(Var("Tr"), Var("A1"))
    sf = b.structure_function()
    assert isinstance(decide_equivalence(sf.term, wrong, b.conditions, Sampled(10_000, 0)), NotEquivalent)


def test_comparison_entry_and_report():
    e = run_comparison("hcas", trials=10_000)
    assert e.time_bound == 10.0 and e.states_after <= e.states_before
    assert e.relative_difference < 1e-6
    report = ComparisonReport([e])
    data = json.loads(report.to_json(timings=False))
    assert set(data["models"][0]) == {
        "model", "time_bound", "states_before", "states_after", "prob_before", "prob_after",
        "equivalence_certificate",
    }
    assert "wall_before" in report.to_text() and "wall_before" not in report.to_text(timings=False)
    with pytest.raises(UnknownBenchmark):
        run_comparison("nope")
