"""Failure-time algebra for dynamic fault trees.

Every event is identified with its time of failure, an extended non-negative
real.  ``ALWAYS`` is time 0 and ``NEVER`` is +inf.  Static gates become
``max``/``min`` and the temporal operators select one of their inputs or
``NEVER`` depending on how the inputs compare.

Terms are immutable trees.  ``&`` builds an AND, ``|`` builds an OR, and the
helpers :func:`before`, :func:`incl_before` and :func:`simult` build the three
temporal operators::

    >>> a, b = Var("A"), Var("B")
    >>> eval_term(a & before(b, a), {"A": 3.0, "B": 1.0})
    3.0
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, reduce
from itertools import combinations
from typing import Iterable, Mapping, Sequence

import numpy as np

NEVER = math.inf
ALWAYS = 0.0


class AlgebraError(ValueError):
    pass


class MissingVariable(AlgebraError, KeyError):
    def __init__(self, name: str):
        super().__init__(f"valuation has no entry for variable {name!r}")
        self.name = name

    def __str__(self) -> str:
        return self.args[0]


class ArityMismatch(AlgebraError):
    pass


class BadVoteThreshold(AlgebraError):
    pass


def is_never(t: float) -> bool:
    return t == math.inf


# ---------------------------------------------------------------------------
# terms


class Term:
    """Base class of all event terms."""

    __slots__ = ()

    def __and__(self, other: Term) -> Term:
        return And(self, other)

    def __or__(self, other: Term) -> Term:
        return Or(self, other)

    @property
    def children(self) -> tuple[Term, ...]:
        return ()

    def size(self) -> int:
        return 1 + sum(c.size() for c in self.children)


@dataclass(frozen=True, slots=True)
class Var(Term):
    name: str

    def __str__(self) -> str:
        return self.name

    def key(self) -> str:
        return self.name


@dataclass(frozen=True, slots=True)
class ConstAlways(Term):
    def __str__(self) -> str:
        return "ALWAYS"

    def key(self) -> str:
        return "ALWAYS"


@dataclass(frozen=True, slots=True)
class ConstNever(Term):
    def __str__(self) -> str:
        return "NEVER"

    def key(self) -> str:
        return "NEVER"


@dataclass(frozen=True)
class _Binary(Term):
    left: Term
    right: Term

    symbol = "?"
    tag = "?"

    @property
    def children(self) -> tuple[Term, ...]:
        return (self.left, self.right)

    def __str__(self) -> str:
        return f"({self.left} {self.symbol} {self.right})"

    @cached_property
    def _key(self) -> str:
        return f"{self.tag}({self.left.key()},{self.right.key()})"

    def key(self) -> str:
        return self._key

    def __hash__(self) -> int:
        return hash(self.key())


class And(_Binary):
    symbol = "."
    tag = "and"


class Or(_Binary):
    symbol = "+"
    tag = "or"


class Simult(_Binary):
    symbol = "Δ"
    tag = "simult"


class Before(_Binary):
    symbol = "◁"
    tag = "before"


class InclBefore(_Binary):
    symbol = "⊴"
    tag = "inclbefore"


ALWAYS_TERM = ConstAlways()
NEVER_TERM = ConstNever()

OPERATORS: dict[str, type[_Binary]] = {
    cls.tag: cls for cls in (And, Or, Simult, Before, InclBefore)
}


def before(a: Term, b: Term) -> Term:
    return Before(a, b)


def incl_before(a: Term, b: Term) -> Term:
    return InclBefore(a, b)


def simult(a: Term, b: Term) -> Term:
    return Simult(a, b)


def var(*names: str) -> Var | tuple[Var, ...]:
    """``var("A")`` gives one variable, ``var("A", "B")`` a tuple."""
    if len(names) == 1:
        return Var(names[0])
    return tuple(Var(n) for n in names)


def and_all(terms: Iterable[Term]) -> Term:
    """Left-folded AND; the empty conjunction is ALWAYS."""
    terms = list(terms)
    return reduce(And, terms) if terms else ALWAYS_TERM


def or_all(terms: Iterable[Term]) -> Term:
    """Left-folded OR; the empty disjunction is NEVER."""
    terms = list(terms)
    return reduce(Or, terms) if terms else NEVER_TERM


def free_variables(term: Term) -> tuple[str, ...]:
    """Names of the variables in ``term`` in lexicographic order."""
    seen: set[str] = set()
    stack = [term]
    while stack:
        t = stack.pop()
        if isinstance(t, Var):
            seen.add(t.name)
        else:
            stack.extend(t.children)
    return tuple(sorted(seen))


def substitute(term: Term, mapping: Mapping[str, Term]) -> Term:
    """Replace variables by terms (simultaneously)."""
    if isinstance(term, Var):
        return mapping.get(term.name, term)
    if isinstance(term, _Binary):
        left = substitute(term.left, mapping)
        right = substitute(term.right, mapping)
        if left is term.left and right is term.right:
            return term
        return type(term)(left, right)
    return term


# ---------------------------------------------------------------------------
# semantics


def _apply(op: type[_Binary], a: float, b: float) -> float:
    if op is And:
        return max(a, b)
    if op is Or:
        return min(a, b)
    if op is Simult:
        return a if a == b else NEVER
    if op is Before:
        return a if a < b else NEVER
    if op is InclBefore:
        return a if a <= b else NEVER
    raise TypeError(op)


def eval_term(term: Term, valuation: Mapping[str, float]) -> float:
    """Failure time of ``term`` when each variable fails at ``valuation[name]``."""
    if isinstance(term, Var):
        try:
            return float(valuation[term.name])
        except KeyError:
            raise MissingVariable(term.name) from None
    if isinstance(term, ConstAlways):
        return ALWAYS
    if isinstance(term, ConstNever):
        return NEVER
    return _apply(type(term), eval_term(term.left, valuation), eval_term(term.right, valuation))


def eval_array(term: Term, env: Mapping[str, np.ndarray], shape=None) -> np.ndarray:
    """Vectorised :func:`eval_term`; every ``env`` entry is an array of times.

    Shared subterms are evaluated once.
    """
    if shape is None:
        shape = np.shape(next(iter(env.values()))) if env else ()
    cache: dict[Term, np.ndarray] = {}

    def go(t: Term) -> np.ndarray:
        hit = cache.get(t)
        if hit is not None:
            return hit
        if isinstance(t, Var):
            try:
                out = np.asarray(env[t.name], dtype=float)
            except KeyError:
                raise MissingVariable(t.name) from None
        elif isinstance(t, ConstAlways):
            out = np.zeros(shape)
        elif isinstance(t, ConstNever):
            out = np.full(shape, np.inf)
        else:
            a, b = go(t.left), go(t.right)
            op = type(t)
            if op is And:
                out = np.maximum(a, b)
            elif op is Or:
                out = np.minimum(a, b)
            elif op is Simult:
                out = np.where(a == b, a, np.inf)
            elif op is Before:
                out = np.where(a < b, a, np.inf)
            else:
                out = np.where(a <= b, a, np.inf)
        cache[t] = out
        return out

    return go(term)


# direct (if-then-else) definitions of the gates, used to cross-check the
# operator-level expansions


def pand_time(a: float, b: float) -> float:
    return b if a <= b else NEVER


def fdep_time(a: float, trigger: float) -> float:
    return min(a, trigger)


def csp_time(a: float, b: float) -> float:
    return b if a < b else NEVER


def hsp_time(a: float, b: float) -> float:
    return max(a, b)


# ---------------------------------------------------------------------------
# side conditions


class SideCondition:
    """A predicate over valuations that licenses a reduction."""

    def holds(self, valuation: Mapping[str, float]) -> bool:
        raise NotImplementedError

    def mask(self, env: Mapping[str, np.ndarray]) -> np.ndarray:
        raise NotImplementedError

    def variables(self) -> tuple[str, ...]:
        raise NotImplementedError


@dataclass(frozen=True)
class AllDistinct(SideCondition):
    """No two of the listed events fail at the same finite instant.

    Several of them may be NEVER at once; a tie at +inf is not a
    simultaneous failure.
    """

    names: tuple[str, ...]

    def __init__(self, names: Iterable[str]):
        object.__setattr__(self, "names", tuple(names))

    def holds(self, valuation):
        finite = [valuation[n] for n in self.names if not is_never(valuation[n])]
        return len(finite) == len(set(finite))

    def mask(self, env):
        names = [n for n in self.names if n in env]
        if len(names) < 2:
            return np.ones(np.shape(env[names[0]]) if names else (), dtype=bool)
        cols = np.stack([np.asarray(env[n], dtype=float) for n in names], axis=-1)
        cols = np.sort(cols, axis=-1)
        ties = (cols[..., 1:] == cols[..., :-1]) & np.isfinite(cols[..., 1:])
        return ~ties.any(axis=-1)

    def variables(self):
        return self.names

    def __str__(self) -> str:
        return f"ALL_DISTINCT[{'; '.join(self.names)}]"


@dataclass(frozen=True)
class ColdSpare(SideCondition):
    """The dormant-state variable of a cold spare never fails."""

    name: str

    def holds(self, valuation):
        return is_never(valuation[self.name])

    def mask(self, env):
        return np.isinf(np.asarray(env[self.name]))

    def variables(self):
        return (self.name,)

    def __str__(self) -> str:
        return f"COLD_SPARE {self.name}"


def _as_term(x: Term | str) -> Term:
    return Var(x) if isinstance(x, str) else x


@dataclass(frozen=True)
class NeverEvents(SideCondition):
    """At most one of the two events ever occurs: ``max(a, b) = NEVER``."""

    a: Term
    b: Term

    def __init__(self, a: Term | str, b: Term | str):
        object.__setattr__(self, "a", _as_term(a))
        object.__setattr__(self, "b", _as_term(b))

    def holds(self, valuation):
        return is_never(max(eval_term(self.a, valuation), eval_term(self.b, valuation)))

    def mask(self, env):
        return np.isinf(eval_array(And(self.a, self.b), env))

    def variables(self):
        return free_variables(And(self.a, self.b))

    def __str__(self) -> str:
        return f"NEVER_events {self.a} {self.b}"


@dataclass(frozen=True)
class TermEqNever(SideCondition):
    term: Term

    def holds(self, valuation):
        return is_never(eval_term(self.term, valuation))

    def mask(self, env):
        return np.isinf(eval_array(self.term, env))

    def variables(self):
        return free_variables(self.term)

    def __str__(self) -> str:
        return f"({self.term} = NEVER)"


def conditions_hold(conditions: Sequence[SideCondition], valuation: Mapping[str, float]) -> bool:
    return all(c.holds(valuation) for c in conditions)


# ---------------------------------------------------------------------------
# gates


def wsp(primary: Term, spare_active: Term, spare_dormant: Term) -> Term:
    """General warm spare: ``A.(Bd◁A) + Ba.(A◁Ba) + AΔBa + AΔBd``."""
    a, ba, bd = primary, spare_active, spare_dormant
    return Or(
        Or(Or(And(a, Before(bd, a)), And(ba, Before(a, ba))), Simult(a, ba)),
        Simult(a, bd),
    )


def shared_spare(primary: Term, other_primary: Term, spare_active: Term, spare_dormant: Term) -> Term:
    """Output of a spare gate whose spare may be taken by another gate first."""
    a, b, ca, cd = primary, other_primary, spare_active, spare_dormant
    return Or(Or(And(a, Before(cd, a)), And(ca, Before(a, ca))), And(a, Before(b, a)))


def vote(k: int, terms: Sequence[Term]) -> Term:
    """k-out-of-n voting gate as an OR over every k-subset conjunction."""
    n = len(terms)
    if not 1 <= k <= n:
        raise BadVoteThreshold(f"voting threshold {k} outside 1..{n}")
    return or_all(and_all(c) for c in combinations(terms, k))


_ARITY = {"pand": 2, "fdep": 2, "wsp": 3, "csp": 2, "hsp": 2, "shared_spare": 4}


def desugar_gate(kind: str, inputs: Sequence[Term], k: int | None = None) -> Term:
    """Expand a gate into operators.

    ``and``/``or`` take any number of inputs (left-folded).  ``pand`` takes two
    or more inputs that must fail left to right.  ``fdep`` takes
    ``[dependent, trigger]`` and gives the triggered dependent.  ``wsp`` takes
    ``[primary, spare_active, spare_dormant]``; ``shared_spare`` takes
    ``[primary, other_primary, spare_active, spare_dormant]``.  ``vote``
    needs the threshold ``k``.
    """
    kind = kind.lower()
    inputs = list(inputs)
    if kind in ("and", "or"):
        if not inputs:
            raise ArityMismatch(f"{kind} needs at least one input")
        return and_all(inputs) if kind == "and" else or_all(inputs)
    if kind == "vote":
        if k is None:
            raise BadVoteThreshold("vote needs a threshold")
        return vote(k, inputs)
    if kind == "pand" and len(inputs) > 2:
        return reduce(lambda acc, nxt: desugar_gate("pand", [acc, nxt]), inputs)
    if kind not in _ARITY:
        raise AlgebraError(f"unknown gate kind {kind!r}")
    if len(inputs) != _ARITY[kind]:
        raise ArityMismatch(f"{kind} takes {_ARITY[kind]} inputs, got {len(inputs)}")
    if kind == "pand":
        a, b = inputs
        return And(b, InclBefore(a, b))
    if kind == "fdep":
        dependent, trigger = inputs
        return Or(dependent, trigger)
    if kind == "wsp":
        return wsp(*inputs)
    if kind == "csp":
        a, b = inputs
        return And(b, Before(a, b))
    if kind == "hsp":
        return And(*inputs)
    return shared_spare(*inputs)
