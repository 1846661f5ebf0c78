import math

import pytest
from hypothesis import strategies as st

from dftkit.algebra import And, Before, InclBefore, Or, Simult, Var
from dftkit.galileo import BasicEvent, DftModel, GateNode

NAMES = ("A", "B", "C", "D")
_BINARY = (And, Or, Before, InclBefore, Simult)


def terms(names=NAMES, max_leaves=6):
    leaves = st.sampled_from(names).map(Var)

    def extend(children):
        return st.builds(lambda op, a, b: op(a, b), st.sampled_from(_BINARY), children, children)

    return st.recursive(leaves, extend, max_leaves=max_leaves)


def valuations(names=NAMES):
    # small integer times make ties likely; inf is NEVER
    return st.fixed_dictionaries({n: st.sampled_from([1.0, 2.0, 3.0, math.inf]) for n in names})


@st.composite
def small_models(draw, max_events=4, spares=True, fdeps=True):
    """Random valid trees with up to ``max_events`` basic events."""
    n = draw(st.integers(2, max_events))
    events = [f"E{i}" for i in range(n)]
    nodes = {}
    for e in events:
        rate = draw(st.sampled_from([0.5, 1.0, 2.0]))
        dorm = draw(st.sampled_from([0.0, 0.5, 1.0]))
        nodes[e] = BasicEvent(e, rate, dorm)
    pool = list(events)
    kinds = ["and", "or", "pand", "vote"] + (["wsp", "csp"] if spares else [])
    used_as_spare = set()
    for g in range(draw(st.integers(1, 3))):
        kind = draw(st.sampled_from(kinds))
        name = f"G{g}"
        if kind in ("wsp", "csp"):
            free = [e for e in events if e not in used_as_spare]
            if len(free) < 2:
                kind = "and"
            else:
                kids = draw(st.lists(st.sampled_from(free), min_size=2, max_size=3, unique=True))
                used_as_spare.update(kids[1:])
                nodes[name] = GateNode(name, kind, tuple(kids))
                pool.append(name)
                continue
        kids = draw(st.lists(st.sampled_from(pool), min_size=2, max_size=3, unique=True))
        k = draw(st.integers(1, len(kids))) if kind == "vote" else None
        nodes[name] = GateNode(name, kind, tuple(kids), k)
        pool.append(name)
    top = pool[-1]
    if fdeps and draw(st.booleans()):
        trig = draw(st.sampled_from(events))
        deps = [e for e in events if e != trig and e not in used_as_spare]
        if deps:
            chosen = draw(st.lists(st.sampled_from(deps), min_size=1, max_size=2, unique=True))
            nodes["F"] = GateNode("F", "fdep", (trig, *chosen))
    return DftModel(top, nodes)


@pytest.fixture
def ahrs_text():
    return """
toplevel "AHRS";
"AHRS" or "UA" "UB";
"UA" csp "A1" "A2" "A3";
"UB" csp "B1" "B2" "B3";
"FD" fdep "Tr" "A1" "A2" "A3" "B1" "B2" "B3";
"Tr" lambda=0.01;
"A1" lambda=0.01; "A2" lambda=0.01; "A3" lambda=0.01;
"B1" lambda=0.01; "B2" lambda=0.01; "B3" lambda=0.01;
"""


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report_line():
    """Record one acceptance verdict; the lines are repeated in the terminal summary."""

    def record(criterion: str, ok: bool, detail: str) -> bool:
        line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
