"""Cut sequences read off a sum-of-products structure function."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

from .algebra import (
    And,
    Before,
    ConstAlways,
    ConstNever,
    InclBefore,
    Or,
    Simult,
    Term,
    Var,
    and_all,
    or_all,
)

_SYMBOL = {"before": "◁", "incl_before": "⊴", "simult": "Δ"}
_KIND = {Before: "before", InclBefore: "incl_before", Simult: "simult"}
_TERM = {"before": Before, "incl_before": InclBefore, "simult": Simult}


class NotCanonical(ValueError):
    pass


@dataclass(frozen=True, order=True)
class CutLiteral:
    """``kind`` is ``event``, ``before``, ``incl_before`` or ``simult``."""

    kind: str
    names: tuple[str, ...]

    def __post_init__(self):
        if self.kind == "simult":
            object.__setattr__(self, "names", tuple(sorted(self.names)))

    def __str__(self) -> str:
        if self.kind == "event":
            return self.names[0]
        a, b = self.names
        return f"{a}{_SYMBOL[self.kind]}{b}"

    def to_term(self) -> Term:
        if self.kind == "event":
            return Var(self.names[0])
        a, b = self.names
        return _TERM[self.kind](Var(a), Var(b))


def event(name: str) -> CutLiteral:
    return CutLiteral("event", (name,))


@dataclass(frozen=True)
class CutSequence:
    literals: frozenset[CutLiteral]

    def __post_init__(self):
        if not self.literals:
            raise ValueError("a cut sequence needs at least one literal")
        for lit in self.literals:
            if lit.kind in ("before", "incl_before", "simult") and lit.names[0] == lit.names[1]:
                raise ValueError(f"reflexive literal {lit}")

    @property
    def events(self) -> tuple[str, ...]:
        return tuple(sorted({n for lit in self.literals for n in lit.names}))

    def ordered(self) -> list[CutLiteral]:
        return sorted(self.literals)

    def to_term(self) -> Term:
        return and_all(lit.to_term() for lit in self.ordered())

    def __str__(self) -> str:
        return "{" + ", ".join(str(l) for l in self.ordered()) + "}"


@dataclass(frozen=True)
class CutSummary:
    sequences: tuple[CutSequence, ...]

    @property
    def static_cut_sets(self) -> tuple[frozenset[str], ...]:
        return tuple(frozenset(s.events) for s in self.sequences)

    def to_term(self) -> Term:
        return or_all(s.to_term() for s in self.sequences)

    def __len__(self) -> int:
        return len(self.sequences)

    def to_json(self) -> dict:
        return {
            "sequences": [[str(l) for l in s.ordered()] for s in self.sequences],
            "static_cut_sets": [sorted(c) for c in self.static_cut_sets],
        }


def _summands(t: Term) -> Iterator[Term]:
    if isinstance(t, Or):
        yield from _summands(t.left)
        yield from _summands(t.right)
    else:
        yield t


def _factors(t: Term) -> Iterator[Term]:
    if isinstance(t, And):
        yield from _factors(t.left)
        yield from _factors(t.right)
    else:
        yield t


def _literal(t: Term) -> CutLiteral | None:
    """None means the factor is NEVER (kills the product)."""
    if isinstance(t, Var):
        return event(t.name)
    kind = _KIND.get(type(t))
    if kind is None or not (isinstance(t.left, Var) and isinstance(t.right, Var)):
        raise NotCanonical(f"factor {t} is not a literal")
    a, b = t.left.name, t.right.name
    if a == b:
        # A◁A = NEVER, A⊴A = A, AΔA = A
        return None if kind == "before" else event(a)
    return CutLiteral(kind, (a, b))


def extract_cut_sequences(canonical: Term) -> CutSummary:
    """One cut sequence per product of a sum-of-products term."""
    out = []
    for summand in _summands(canonical):
        if isinstance(summand, ConstNever):
            continue
        lits = set()
        dead = False
        for f in _factors(summand):
            if isinstance(f, ConstNever):
                dead = True
                continue
            if isinstance(f, ConstAlways):
                continue
            lit = _literal(f)
            if lit is None:
                dead = True
            else:
                lits.add(lit)
        if dead:
            continue
        if not lits:
            raise NotCanonical("a product reduces to ALWAYS; the system is failed from the start")
        out.append(CutSequence(frozenset(lits)))
    return CutSummary(tuple(out))


def minimize(summary: CutSummary) -> CutSummary:
    """Drop every sequence whose literals contain another sequence's literals.

    Of two identical sequences the first is kept.
    """
    seqs = summary.sequences
    keep = []
    for i, s in enumerate(seqs):
        absorbed = False
        for j, other in enumerate(seqs):
            if i == j:
                continue
            if other.literals < s.literals or (other.literals == s.literals and j < i):
                absorbed = True
                break
        if not absorbed:
            keep.append(s)
    return CutSummary(tuple(keep))
