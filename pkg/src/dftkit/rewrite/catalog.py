"""The simplification-rule catalog.

Each row is stored as it is usually printed, in infix notation with the
metavariables ``A``, ``B`` and ``C``, and is oriented left to right.  Rows
are grouped by the operator they are about; the ``provenance`` string names
the group and the row number inside it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..algebra import SideCondition, Term, free_variables
from ..syntax import parse_term


@dataclass(frozen=True)
class RewriteRule:
    lhs: Term
    rhs: Term
    provenance: str
    conditions: tuple[SideCondition, ...] = field(default=())

    @property
    def metavariables(self) -> tuple[str, ...]:
        return free_variables(self.lhs)

    def __str__(self) -> str:
        return f"[{self.provenance}] {self.lhs} = {self.rhs}"


_OR_AND = """
A+B = B+A
A.B = B.A
A+(B+C) = (A+B)+C
A.(B.C) = (A.B).C
A+A = A
A.A = A
A.(B+C) = A.B + A.C
A+NEVER = A
A.ALWAYS = A
A+ALWAYS = ALWAYS
A.NEVER = NEVER
A+(B.C) = (A+B).(A+C)
A+(A.B) = A
A.(A+B) = A
"""

_BEFORE = """
(A<B).(B<A) = NEVER
A<(B<C) = (A<B) + A.B.((C<B) + (C~B))
A<(B<C) = (A<B) + A.B.(C<=B)
(A<B)<C = (A<B).(A<C)
NEVER<A = NEVER
A<NEVER = A
A<A = NEVER
A<(B+C) = (A<B).(A<C)
A<(B.C) = (A<B) + (A<C)
A<(B~C) = A.(B<C) + A.(C<B) + (A<B) + (A<C)
A<(B<=C) = (A<B) + A.B.(C<B)
(A+B)<C = (A<C) + (B<C)
(A.B)<C = (A<C).(B<C)
(A~B)<C = (A~B).(A<C)
(A~B)<C = (A~B).(B<C)
(A~B)<C = (A<C)~(B<C)
(A<=B)<C = (A<=B).(A<C)
A+(A<B) = A
(A<B)+B = A+B
A.(A<B) = A<B
(A<B).(B<C).(A<C) = (A<B).(B<C)
"""

_SIMULT = """
A~B = B~A
A~(B~C) = (A~B)~C
A~(B~C) = (A~B).(B~C)
A~(B~C) = (A~C).(C~B)
A~NEVER = NEVER
A~A = A
A~(B+C) = (A~B).(B~C) + (A~B).(B<C) + (A~C).(C<B)
A~(B+C) = (A~B).(B<=C) + (A~C).(C<=B)
A~(B.C) = (A~B).(B~C) + (A~B).(C<B) + (A~C).(B<C)
A~(B.C) = (A~B).(C<=B) + (A~C).(B<=C)
A~(B<C) = (A~B).(B<C)
A~(B<=C) = (A~B).(B<=C)
A+(A~B) = A
A.(A~B) = A~B
(A~B).(B~C).(A~C) = (A~B).(B~C)
"""

_INCL_BEFORE = """
(A<=B).(B<=A) = A~B
A<=(B<=C) = (A<B) + A.B.(C<B) + (A~B).(B<=C)
(A<=B)<=C = (A<=B).(A<=C)
NEVER<=A = NEVER
A<=NEVER = A
A<=A = A
A<=(B+C) = (A<=B).(A<=C)
A<=(B.C) = (A<=B) + (A<=C)
A<=(B<C) = (A<B) + A.B.(C<=B) + (A~B).(B<C)
A<=(B~C) = A.(B<C) + A.(C<B) + (A<B) + (A<C) + (A~B).(B~C)
(A+B)<=C = (A<=C) + (B<=C)
(A.B)<=C = (A<=C).(B<=C)
(A~B)<=C = (A~B).(A<=C)
(A~B)<=C = (A~B).(B<=C)
(A~B)<=C = (A<=C)~(B<=C)
(A<B)<=C = (A<B).(A<=C)
A+(A<=B) = A
B+(A<=B) = A+B
A.(A<=B) = A<=B
(A<=B)+(B<=A) = A+B
A.(B<=A) + B.(A<=B) = A.B
(A<=B) + A.(B<=B) = A
(A<=B).(B<=C).(A<=C) = (A<=B).(B<=C)
"""

_MIXED = """
(A<=B)+(A<B) = A<=B
(A<=B)+(A~B) = A<=B
(A<B).(A~B) = NEVER
(A<B).(B~C) = (A<C).(B~C)
(A<=B).(A<B) = A<B
(A<B).(B<=A) = NEVER
(A<=B).(A~B) = A~B
(A<B)+(A~B)+(B<A) = A+B
A.(B<A) + (A~B) + B.(A<B) = A.B
(A<B)+(A~B)+A.(B<A) = A
(A<B).(B<C).(A<=C) = (A<B).(B<C)
"""

_GROUPS = [
    ("OR/AND", _OR_AND),
    ("Before", _BEFORE),
    ("Simultaneous", _SIMULT),
    ("Inclusive Before", _INCL_BEFORE),
    ("Combinations", _MIXED),
]


def _rows(group: str, block: str) -> list[RewriteRule]:
    out = []
    for i, line in enumerate(filter(None, map(str.strip, block.splitlines())), start=1):
        lhs, rhs = line.split(" = ", 1)
        out.append(RewriteRule(parse_term(lhs), parse_term(rhs), f"{group} #{i}"))
    return out


def rule_catalog() -> list[RewriteRule]:
    """Every catalog row, in group order."""
    return [rule for group, block in _GROUPS for rule in _rows(group, block)]


def find_rule(provenance: str) -> RewriteRule:
    for rule in rule_catalog():
        if rule.provenance == provenance:
            return rule
    raise KeyError(provenance)
