"""Built-in benchmark trees and the before/after reduction comparison.

Each benchmark carries an original tree, a reduced tree built from gates
only (so that it can go through the same state-space builder), the
reduced structure function as an event term, and the side conditions
under which the two are equal.

No failure rates were published for these systems.  Every basic event
fails at 0.01 per time unit; cold spares have dormancy 0 and warm spares
0.5.  Absolute probabilities are therefore ours, not literature values.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field
from functools import lru_cache

from .algebra import SideCondition, Term, free_variables
from .galileo import DftModel, StructureFunction, parse, to_structure_function
from .markov import build_ctmc, transient_failure_probability
from .rewrite.equivalence import (
    EquivalenceVerdict,
    Exact,
    NotEquivalent,
    Sampled,
    decide_equivalence,
)
from .rewrite.normal import DEFAULT_MAX_VARS
from .syntax import parse_hol

RATE = 0.01
WARM = 0.5
CERTIFICATE_TRIALS = 1_000_000
CERTIFICATE_SEED = 0

SEMANTICS_NOTE = (
    "FDEP dependents fail at their trigger's instant; simultaneous effects are "
    "resolved in declaration order, so every chain is a CTMC"
)
RATES_NOTE = f"all rates {RATE}; cold dormancy 0, warm dormancy {WARM}; not literature values"


@dataclass(frozen=True)
class Benchmark:
    name: str
    description: str
    original: DftModel
    reduced: DftModel
    reduced_term: Term
    conditions: tuple[SideCondition, ...]
    time_bound: float

    def structure_function(self) -> StructureFunction:
        return to_structure_function(self.original)


def _events(names: str, dorm: dict[str, float] | None = None) -> str:
    dorm = dorm or {}
    out = []
    for n in names.split():
        d = dorm.get(n)
        out.append(f'"{n}" lambda={RATE}' + (f" dorm={d}" if d is not None else "") + ";")
    return "\n".join(out)


def _q(names: str) -> str:
    return " ".join(f'"{n}"' for n in names.split())


# -- cascaded PAND, two copies --------------------------------------------------

def _cpand_half(i: int) -> tuple[str, str]:
    def s(xs: str) -> str:
        return " ".join(f"{x}{i}" for x in xs)

    original = f"""
"T{i}" pand "X{i}" "Y{i}";
"X{i}" or {_q(s("ANOP"))};
"Y{i}" pand "Z{i}" "U{i}";
"Z{i}" and {_q(s("ABCDEWGH"))};
"U{i}" or {_q(s("IJKL"))};
{_events(s("ABCDEWGHIJKLNOP"))}
"""
    reduced = f"""
"T{i}" and "PA{i}" "PB{i}";
"PA{i}" pand "A{i}" "U{i}";
"PB{i}" pand "Z{i}" "U{i}";
"Z{i}" and {_q(s("BCDEWGH"))};
"U{i}" or {_q(s("IJKL"))};
{_events(s("ABCDEWGHIJKL"))}
"""
    return original, reduced


def _cpand_term(i: int) -> str:
    b = f"B{i}"
    for x in "CDEWGH":
        b = f"(D_AND {b} {x}{i})"
    u = f"(D_OR (D_OR (D_OR I{i} J{i}) K{i}) L{i})"
    return f"(D_AND {u} (D_AND (D_BEFORE A{i} {u}) (D_BEFORE {b} {u})))"


def _cpand() -> tuple[str, str, str]:
    (o1, r1), (o2, r2) = _cpand_half(1), _cpand_half(2)
    head = 'toplevel "Q1";\n"Q1" or "T1" "T2";\n'
    return head + o1 + o2, head + r1 + r2, f"D_OR {_cpand_term(1)} {_cpand_term(2)}"


# -- the other four ------------------------------------------------------------

_AHRS = """
// two units, each a primary with two cold spares, all powered through Tr
toplevel "AHRS";
"AHRS" or "UA" "UB";
"UA" csp "A1" "A2" "A3";
"UB" csp "B1" "B2" "B3";
"PWR" fdep "Tr" "A1" "A2" "A3" "B1" "B2" "B3";
""" + _events("Tr A1 A2 A3 B1 B2 B3")

_AHRS_REDUCED = """
toplevel "AHRS";
"AHRS" or "Tr" "UA" "UB";
"UA" csp "A1" "A2" "A3";
"UB" csp "B1" "B2" "B3";
""" + _events("Tr A1 A2 A3 B1 B2 B3")

_AHRS_TERM = (
    "D_OR Tr (D_OR (D_AND (D_AND A3_a (D_BEFORE A1 A2_a)) (D_BEFORE A2_a A3_a))"
    " (D_AND (D_AND B3_a (D_BEFORE B1 B2_a)) (D_BEFORE B2_a B3_a)))"
)

_MCS = """
// two computers; each has a processor, a disk with its own spare and a memory
// unit; the memories share one spare and both processors need the power supply
toplevel "MCS";
"MCS" or "N" "COMPUTERS";
"COMPUTERS" and "C1" "C2";
"C1" or "DISK1" "P1" "MEM1";
"C2" or "DISK2" "P2" "MEM2";
"DISK1" wsp "D11" "D12";
"DISK2" wsp "D21" "D22";
"MEM1" wsp "M1" "M3";
"MEM2" wsp "M2" "M3";
"POWER" fdep "PS" "P1" "P2";
""" + _events("N PS P1 P2 D11 D21 M1 M2") + "\n" + _events("D12 D22 M3", dict.fromkeys(["D12", "D22", "M3"], WARM))

_MCS_REDUCED = """
toplevel "MCS";
"MCS" or "N" "PS" "COMPUTERS";
"COMPUTERS" and "C1" "C2";
"C1" or "P1" "DISK1" "MEM1";
"C2" or "P2" "DISK2" "MEM2";
"DISK1" wsp "D11" "D12";
"DISK2" wsp "D21" "D22";
"MEM1" wsp "M1" "M3";
"MEM2" wsp "M2" "M3";
""" + _events("N PS P1 P2 D11 D21 M1 M2") + "\n" + _events("D12 D22 M3", dict.fromkeys(["D12", "D22", "M3"], WARM))

_MCS_TERM = (
    "D_OR (D_OR N PS) (D_AND (D_OR (D_OR P1 (WSP D11 D12_a D12_d)) (shared_spare M1 M2 M3_a M3_d))"
    " (D_OR (D_OR P2 (WSP D21 D22_a D22_d)) (shared_spare M2 M1 M3_a M3_d)))"
)

_HECS_EVENTS = _events("A1 A2 M1 M2 M3 M4 M5 MIU1 MIU2 BUS1 BUS2 SW HW OP") + "\n" + _events("A", {"A": 0.0})

_HECS = """
// two processors sharing a cold spare, five memories behind two interface
// units (3 of 5 must fail), two buses and an application subsystem
toplevel "HECS";
"HECS" or "PROC" "MEM" "BUS" "APP";
"PROC" and "PR1" "PR2";
"PR1" csp "A1" "A";
"PR2" csp "A2" "A";
"MEM" 3of5 "M1" "M2" "M3" "M4" "M5";
"F1" fdep "MIU1" "M1" "M2";
"F2" fdep "MIU2" "M4" "M5";
"F3" fdep "MIU12" "M3";
"MIU12" and "MIU1" "MIU2";
"BUS" and "BUS1" "BUS2";
"APP" or "SW" "HW" "OP";
""" + _HECS_EVENTS

# memory failure as a plain sum of products (no dependencies left)
_HECS_MEMORY = [
    "MIU1 MIU2", "MIU1 M3", "MIU1 M4", "MIU1 M5", "MIU2 M1", "MIU2 M2", "MIU2 M3",
    "M1 M2 M3", "M1 M2 M4", "M1 M2 M5", "M1 M3 M4", "M1 M3 M5", "M1 M4 M5",
    "M2 M3 M4", "M2 M3 M5", "M2 M4 M5", "M3 M4 M5",
]


def _hecs_reduced() -> str:
    gates = [f'"R{k}" and {_q(m)};' for k, m in enumerate(_HECS_MEMORY, 1)]
    mem = '"MEM" or ' + " ".join(f'"R{k}"' for k in range(1, len(_HECS_MEMORY) + 1)) + ";"
    return "\n".join([
        'toplevel "HECS";',
        '"HECS" or "PROC" "MEM" "BUS" "APP";',
        '"PROC" and "PR1" "PR2";',
        '"PR1" csp "A1" "A";',
        '"PR2" csp "A2" "A";',
        mem, *gates,
        '"BUS" and "BUS1" "BUS2";',
        '"APP" or "SW" "HW" "OP";',
        _HECS_EVENTS,
    ])


def _left_fold(op: str, items: list[str]) -> str:
    out = items[0]
    for x in items[1:]:
        out = f"({op} {out} {x})"
    return out


def _hecs_term() -> str:
    proc = (
        "(D_OR (D_AND (D_AND (D_AND A_a A2) (D_BEFORE A1 A_a)) (D_BEFORE A1 A2))"
        " (D_AND (D_AND (D_AND A_a A1) (D_BEFORE A2 A_a)) (D_BEFORE A2 A1)))"
    )
    mem = _left_fold("D_OR", [_left_fold("D_AND", m.split()) for m in _HECS_MEMORY])
    return _left_fold("D_OR", [_left_fold("D_OR", [proc, mem]), "(D_AND BUS1 BUS2)", "(D_OR (D_OR SW HW) OP)"])


_HCAS_EVENTS = _events("P CS SS MOTOR MOTORC P1 P2") + "\n" + _events("B BP", {"B": 0.0, "BP": 0.0})

_HCAS = """
// CPU with a cold spare, both behind the crossbar switch and the supervisor;
// two motors; two pumps sharing a cold spare
toplevel "HCAS";
"HCAS" or "CPU" "MOTORS" "PUMPS";
"CPU" wsp "P" "B";
"TRIG" or "CS" "SS";
"CPUDEP" fdep "TRIG" "P" "B";
"MOTORS" and "MOTOR" "MOTORC";
"PUMPS" pand "PU1" "PU2";
"PU1" wsp "P1" "BP";
"PU2" wsp "P2" "BP";
""" + _HCAS_EVENTS

_HCAS_REDUCED = """
toplevel "HCAS";
"HCAS" or "CS" "SS" "MOTORS" "CPU" "PUMPS";
"CPU" wsp "P" "B";
"MOTORS" and "MOTOR" "MOTORC";
"PUMPS" pand "PU1" "PU2";
"PU1" wsp "P1" "BP";
"PU2" wsp "P2" "BP";
""" + _HCAS_EVENTS

_HCAS_TERM = (
    "D_OR (D_OR (D_OR (D_OR (D_OR (D_OR CS SS) (D_AND MOTOR MOTORC)) (D_AND P (D_BEFORE B_d P)))"
    " (D_AND B_a (D_BEFORE P B_a))) (D_AND (D_AND BP_a (D_BEFORE P2 P1)) (D_BEFORE P1 BP_a)))"
    " (D_AND (D_AND P2 (D_BEFORE P1 BP_a)) (D_BEFORE BP_a P2))"
)


def _make(name: str, description: str, original: str, reduced: str, term: str, time_bound: float) -> Benchmark:
    model = parse(original)
    return Benchmark(
        name=name,
        description=description,
        original=model,
        reduced=parse(reduced),
        reduced_term=parse_hol(term),
        conditions=to_structure_function(model).conditions,
        time_bound=time_bound,
    )


@lru_cache(maxsize=None)
def _builtin() -> tuple[Benchmark, ...]:
    cp_o, cp_r, cp_t = _cpand()
    return (
        _make("cpand", "scaled cascaded PAND, two copies", cp_o, cp_r, cp_t, 1000.0),
        _make("ahrs", "heat rejection units with cold spares and a shared power trigger", _AHRS, _AHRS_REDUCED, _AHRS_TERM, 10.0),
        _make("mcs", "multiprocessor computer system", _MCS, _MCS_REDUCED, _MCS_TERM, 10.0),
        _make("hecs", "example computer system", _HECS, _hecs_reduced(), _hecs_term(), 10.0),
        _make("hcas", "cardiac assist system", _HCAS, _HCAS_REDUCED, _HCAS_TERM, 10.0),
    )


def builtin_models() -> dict[str, Benchmark]:
    return {b.name: b for b in _builtin()}


# ---------------------------------------------------------------------------
# comparison


class UnknownBenchmark(KeyError):
    pass


class ReductionMismatch(RuntimeError):
    """The reduced term differs from the original: a transcription bug."""

    def __init__(self, name: str, verdict: NotEquivalent):
        super().__init__(f"{name}: reduced term is not equivalent to the original; {verdict.describe()}")
        self.verdict = verdict


@dataclass
class ComparisonEntry:
    model: str
    time_bound: float
    states_before: int
    states_after: int
    prob_before: float
    prob_after: float
    wall_time_before: float
    wall_time_after: float
    equivalence_certificate: str

    @property
    def relative_difference(self) -> float:
        if self.prob_before == 0.0:
            return 0.0 if self.prob_after == 0.0 else float("inf")
        return abs(self.prob_before - self.prob_after) / self.prob_before


def certify(bench: Benchmark, trials: int = CERTIFICATE_TRIALS, seed: int = CERTIFICATE_SEED) -> EquivalenceVerdict:
    sf = bench.structure_function()
    names = set(free_variables(sf.term)) | set(free_variables(bench.reduced_term))
    for c in bench.conditions:
        names |= set(c.variables())
    mode = Exact() if len(names) <= DEFAULT_MAX_VARS else Sampled(trials, seed)
    return decide_equivalence(sf.term, bench.reduced_term, bench.conditions, mode)


def _analyse(model: DftModel, t: float, tol: float) -> tuple[int, float, float]:
    start = time.perf_counter()
    chain = build_ctmc(model)
    p = transient_failure_probability(chain, t, tol)
    return chain.n_states, p, time.perf_counter() - start


def run_comparison(
    name: str,
    t: float | None = None,
    tol: float = 1e-10,
    trials: int = CERTIFICATE_TRIALS,
    seed: int = CERTIFICATE_SEED,
) -> ComparisonEntry:
    models = builtin_models()
    if name not in models:
        raise UnknownBenchmark(f"unknown benchmark {name!r}; choose from {', '.join(models)}")
    bench = models[name]
    t = bench.time_bound if t is None else t
    verdict = certify(bench, trials, seed)
    if isinstance(verdict, NotEquivalent):
        raise ReductionMismatch(name, verdict)
    n0, p0, w0 = _analyse(bench.original, t, tol)
    n1, p1, w1 = _analyse(bench.reduced, t, tol)
    return ComparisonEntry(name, t, n0, n1, p0, p1, w0, w1, verdict.describe())


@dataclass
class ComparisonReport:
    entries: list[ComparisonEntry]
    notes: tuple[str, ...] = field(default=(SEMANTICS_NOTE, RATES_NOTE))

    def to_dict(self, timings: bool = True) -> dict:
        rows = []
        for e in self.entries:
            row = asdict(e)
            if not timings:
                del row["wall_time_before"], row["wall_time_after"]
            rows.append(row)
        return {"models": rows, "notes": list(self.notes)}

    def to_json(self, timings: bool = True) -> str:
        return json.dumps(self.to_dict(timings), indent=2)

    def to_text(self, timings: bool = True) -> str:
        cols = ["model", "time", "states_before", "states_after", "prob_before", "prob_after"]
        if timings:
            cols += ["wall_before", "wall_after"]
        cols.append("certificate")
        rows = []
        for e in self.entries:
            row = [e.model, f"{e.time_bound:g}", str(e.states_before), str(e.states_after),
                   f"{e.prob_before:.10e}", f"{e.prob_after:.10e}"]
            if timings:
                row += [f"{e.wall_time_before:.3f}", f"{e.wall_time_after:.3f}"]
            row.append(e.equivalence_certificate)
            rows.append(row)
        widths = [max(len(c), *(len(r[i]) for r in rows)) if rows else len(c) for i, c in enumerate(cols)]
        lines = ["  ".join(c.ljust(w) for c, w in zip(cols, widths)).rstrip()]
        lines += ["  ".join(v.ljust(w) for v, w in zip(r, widths)).rstrip() for r in rows]
        lines += [f"note: {n}" for n in self.notes]
        return "\n".join(lines)


def run_all(names=None, t: float | None = None, tol: float = 1e-10, trials: int = CERTIFICATE_TRIALS,
            seed: int = CERTIFICATE_SEED) -> ComparisonReport:
    names = list(builtin_models()) if names is None else list(names)
    return ComparisonReport([run_comparison(n, t, tol, trials, seed) for n in names])
