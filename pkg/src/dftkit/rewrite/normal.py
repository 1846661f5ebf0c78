"""Normalisation of event terms to a canonical sum of products.

A normal form is an OR of products; each product is an AND of *literals*:
a variable ``a``, or ``a◁b``, ``a⊴b``, ``aΔb`` between two variables.
Internally a sum is a frozenset of products and a product a frozenset of
literal tuples::

    ("v", a)    ("lt", a, b)    ("le", a, b)    ("eq", a, b)  # a < b

The empty product is ALWAYS and the empty sum is NEVER.

Temporal operators are pushed down to literals with the distribution rows
of the catalog (their provenance is noted next to each case), then products
and sums are simplified with the annihilator, idempotence, absorption and
transitivity rows.  Commutative children are ordered by a stable string key.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from ..algebra import (
    AllDistinct,
    And,
    Before,
    ColdSpare,
    ConstAlways,
    ConstNever,
    InclBefore,
    NeverEvents,
    NEVER_TERM,
    Or,
    SideCondition,
    Simult,
    Term,
    TermEqNever,
    Var,
    and_all,
    free_variables,
    or_all,
    substitute,
)
from .equivalence import DEFAULT_MAX_VARS, Exact, Sampled, decide_equivalence

Literal = tuple
Product = frozenset
Sum = frozenset

NEVER_SUM: Sum = frozenset()
ALWAYS_SUM: Sum = frozenset([frozenset()])

SELF_CHECK_SEED = 20171201
SELF_CHECK_TRIALS = 4096
DEFAULT_BUDGET = 64


class NormalizeError(ValueError):
    pass


class BudgetExhausted(NormalizeError):
    def __init__(self, partial: Term, budget: int):
        super().__init__(f"no fixpoint within {budget} passes")
        self.partial = partial


class SelfCheckFailed(NormalizeError):
    def __init__(self, verdict):
        super().__init__(f"normal form differs from its input: {verdict.describe()}")
        self.verdict = verdict


class NotRepresentable(NormalizeError):
    pass


class _TooBig(Exception):
    pass


def _head(lit: Literal) -> tuple[str, ...]:
    """Variables that must be finite for the literal to be finite."""
    if lit[0] == "eq":
        return (lit[1], lit[2])
    return (lit[1],)


def _lit_key(lit: Literal) -> str:
    return ":".join(lit)


def _prod_key(p: Product) -> tuple:
    return (len(p), tuple(sorted(_lit_key(x) for x in p)))


@dataclass
class _Context:
    distinct_groups: list[frozenset[str]] = field(default_factory=list)
    never_pairs: list[tuple[str, str]] = field(default_factory=list)
    forbidden: list[Product] = field(default_factory=list)
    # (x, y): x◁y = NEVER is a side condition, so x finite forces y ⊴ x
    after: set[tuple[str, str]] = field(default_factory=set)
    cap: int | None = None

    def distinct(self, a: str, b: str) -> bool:
        return any(a in g and b in g for g in self.distinct_groups)

    # -- literal constructors ------------------------------------------------

    def var(self, a: str) -> Sum:
        return frozenset([frozenset([("v", a)])])

    def lt(self, a: str, b: str) -> Sum:
        if a == b or (a, b) in self.after:
            return NEVER_SUM  # A◁A = NEVER
        if (b, a) in self.after and self.distinct(a, b):
            return self.var(a)
        return frozenset([frozenset([("lt", a, b)])])

    def le(self, a: str, b: str) -> Sum:
        if a == b or (b, a) in self.after:
            return self.var(a)  # A⊴A = A
        if self.distinct(a, b):
            return self.lt(a, b)
        if (a, b) in self.after:
            return self.eq(a, b)
        return frozenset([frozenset([("le", a, b)])])

    def eq(self, a: str, b: str) -> Sum:
        if a == b:
            return self.var(a)  # AΔA = A
        if self.distinct(a, b):
            return NEVER_SUM
        a, b = sorted((a, b))
        return frozenset([frozenset([("eq", a, b)])])

    def lit(self, lit: Literal) -> Sum:
        kind = lit[0]
        if kind == "v":
            return self.var(lit[1])
        return getattr(self, kind)(lit[1], lit[2])

    # -- boolean structure ---------------------------------------------------

    def s_or(self, *sums: Sum) -> Sum:
        out: set = set()
        for s in sums:
            out |= s
        return self.simplify(frozenset(out))

    def s_and(self, *sums: Sum) -> Sum:
        acc = ALWAYS_SUM
        for s in sums:
            if self.cap is not None and len(acc) * len(s) > self.cap:
                raise _TooBig
            acc = self.simplify(frozenset(p | q for p in acc for q in s))
            if not acc:
                break
        return acc

    # -- Before ---------------------------------------------------------------

    def s_lt(self, x: Sum, y: Sum) -> Sum:
        # (A+B)◁C = (A◁C)+(B◁C)
        return self.s_or(*(self.p_lt(p, y) for p in x))

    def p_lt(self, p: Product, y: Sum) -> Sum:
        if not p:
            if not y:
                return ALWAYS_SUM  # ALWAYS◁NEVER = ALWAYS
            raise NotRepresentable("ALWAYS on the left of ◁ against a failable event")
        # (A.B)◁C = (A◁C).(B◁C)
        return self.s_and(*(self.l_lt(lit, y) for lit in sorted(p)))

    def l_lt(self, lit: Literal, y: Sum) -> Sum:
        if lit[0] != "v":
            # (A◁B)◁C, (A⊴B)◁C, (AΔB)◁C  =  literal . (A◁C)
            return self.s_and(self.lit(lit), self.l_lt(("v", lit[1]), y))
        a = lit[1]
        # A◁NEVER = A;  A◁(B+C) = (A◁B).(A◁C);  A.(A◁B) = A◁B
        return self.s_and(self.var(a), *(self.v_lt_prod(a, q) for q in sorted(y, key=_prod_key)))

    def v_lt_prod(self, a: str, q: Product) -> Sum:
        # A◁(B.C) = (A◁B)+(A◁C); empty product is ALWAYS and A◁ALWAYS = NEVER
        return self.s_or(*(self.v_lt_lit(a, m) for m in q))

    def v_lt_lit(self, a: str, m: Literal) -> Sum:
        kind = m[0]
        if kind == "v":
            return self.lt(a, m[1])
        b, c = m[1], m[2]
        if kind == "lt":
            # A◁(B◁C) = (A◁B) + A.B.(C⊴B)
            return self.s_or(self.lt(a, b), self.s_and(self.var(a), self.var(b), self.le(c, b)))
        if kind == "le":
            # A◁(B⊴C) = (A◁B) + A.B.(C◁B)
            return self.s_or(self.lt(a, b), self.s_and(self.var(a), self.var(b), self.lt(c, b)))
        # A◁(BΔC) = A.(B◁C) + A.(C◁B) + (A◁B) + (A◁C)
        return self.s_or(
            self.s_and(self.var(a), self.lt(b, c)),
            self.s_and(self.var(a), self.lt(c, b)),
            self.lt(a, b),
            self.lt(a, c),
        )

    # -- Inclusive Before -----------------------------------------------------

    def s_le(self, x: Sum, y: Sum) -> Sum:
        # (A+B)⊴C = (A⊴C)+(B⊴C)
        return self.s_or(*(self.p_le(p, y) for p in x))

    def p_le(self, p: Product, y: Sum) -> Sum:
        if not p:
            return ALWAYS_SUM  # 0 ⊴ anything
        # (A.B)⊴C = (A⊴C).(B⊴C)
        return self.s_and(*(self.l_le(lit, y) for lit in sorted(p)))

    def l_le(self, lit: Literal, y: Sum) -> Sum:
        if lit[0] != "v":
            # (A◁B)⊴C, (A⊴B)⊴C, (AΔB)⊴C  =  literal . (A⊴C)
            return self.s_and(self.lit(lit), self.l_le(("v", lit[1]), y))
        a = lit[1]
        # A⊴NEVER = A;  A⊴(B+C) = (A⊴B).(A⊴C);  A.(A⊴B) = A⊴B
        return self.s_and(self.var(a), *(self.v_le_prod(a, q) for q in sorted(y, key=_prod_key)))

    def v_le_prod(self, a: str, q: Product) -> Sum:
        # A⊴(B.C) = (A⊴B)+(A⊴C)
        return self.s_or(*(self.v_le_lit(a, m) for m in q))

    def v_le_lit(self, a: str, m: Literal) -> Sum:
        kind = m[0]
        if kind == "v":
            return self.le(a, m[1])
        b, c = m[1], m[2]
        if kind == "lt":
            # A⊴(B◁C) = (A◁B) + A.B.(C⊴B) + (AΔB).(B◁C)
            return self.s_or(
                self.lt(a, b),
                self.s_and(self.var(a), self.var(b), self.le(c, b)),
                self.s_and(self.eq(a, b), self.lt(b, c)),
            )
        if kind == "le":
            # A⊴(B⊴C) = (A◁B) + A.B.(C◁B) + (AΔB).(B⊴C)
            return self.s_or(
                self.lt(a, b),
                self.s_and(self.var(a), self.var(b), self.lt(c, b)),
                self.s_and(self.eq(a, b), self.le(b, c)),
            )
        # A⊴(BΔC) = A.(B◁C) + A.(C◁B) + (A◁B) + (A◁C) + (AΔB).(BΔC)
        return self.s_or(
            self.s_and(self.var(a), self.lt(b, c)),
            self.s_and(self.var(a), self.lt(c, b)),
            self.lt(a, b),
            self.lt(a, c),
            self.s_and(self.eq(a, b), self.eq(b, c)),
        )

    # -- Simultaneous ---------------------------------------------------------

    def s_eq(self, x: Sum, y: Sum) -> Sum:
        if not x or not y:
            return NEVER_SUM  # AΔNEVER = NEVER
        if len(y) < len(x):
            x, y = y, x  # AΔB = BΔA
        if len(y) >= 2:
            # AΔ(B+C) = (AΔB).(B⊴C) + (AΔC).(C⊴B)
            first, *rest = sorted(y, key=_prod_key)
            b, c = frozenset([first]), frozenset(rest)
            return self.s_or(
                self.s_and(self.s_eq(x, b), self.s_le(b, c)),
                self.s_and(self.s_eq(x, c), self.s_le(c, b)),
            )
        (p,) = x
        (q,) = y
        if len(q) < len(p):
            p, q = q, p
        if not p:
            # ALWAYS Δ ALWAYS = ALWAYS; basic events never fail at 0
            return ALWAYS_SUM if not q else NEVER_SUM
        if len(q) >= 2:
            # AΔ(B.C) = (AΔB).(C⊴B) + (AΔC).(B⊴C)
            first, *rest = sorted(q, key=_lit_key)
            b, c = frozenset([frozenset([first])]), frozenset([frozenset(rest)])
            px = frozenset([p])
            return self.s_or(
                self.s_and(self.s_eq(px, b), self.s_le(c, b)),
                self.s_and(self.s_eq(px, c), self.s_le(b, c)),
            )
        (l,) = p
        (m,) = q
        return self.l_eq(l, m)

    def l_eq(self, l: Literal, m: Literal) -> Sum:
        if l[0] == "v" and m[0] == "v":
            return self.eq(l[1], m[1])
        if m[0] == "v":
            l, m = m, l
        # AΔ(B◁C) = (AΔB).(B◁C), AΔ(B⊴C) = (AΔB).(B⊴C), AΔ(BΔC) = (AΔB).(BΔC)
        return self.s_and(self.l_eq(l, ("v", m[1])), self.lit(m))

    # -- simplification -------------------------------------------------------

    def simplify_product(self, p: Product) -> Product | None:
        lits = set(p)
        while True:
            before = frozenset(lits)
            lits = self._merge_classes(lits)
            if lits is None:
                return None
            if self.after:
                lits = self._apply_after(lits)
                if lits is None:
                    return None
            heads = {v for lit in lits for v in _head(lit)}
            for a, b in self.never_pairs:
                if a in heads and b in heads:
                    return None
            for f in self.forbidden:
                if f <= lits:
                    return None
            implied = self._implied(lits)
            if _contradictory(lits, implied):
                return None
            for lit in list(lits):
                if lit not in lits or lit[0] != "le":
                    continue
                a, b = lit[1], lit[2]
                key = tuple(sorted((a, b)))
                if ("le", b, a) in lits:
                    # (A⊴B).(B⊴A) = AΔB
                    lits -= {lit, ("le", b, a)}
                    if self.distinct(a, b):
                        return None
                    lits.add(("eq",) + key)
                elif ("lt", a, b) in lits or ("eq",) + key in lits:
                    # (A⊴B).(A◁B) = A◁B;  (A⊴B).(AΔB) = AΔB
                    lits.discard(lit)
            _transitive_reduce(lits, self._implied(lits))
            order_heads = {v for lit in lits if lit[0] != "v" for v in _head(lit)}
            # A.(A◁B) = A◁B and friends
            lits = {lit for lit in lits if not (lit[0] == "v" and lit[1] in order_heads)}
            if self.after:
                # y is finite whenever x is and x◁y = NEVER
                for lit in sorted(l for l in lits if l[0] == "v"):
                    others = {v for l in lits - {lit} for v in _head(l)}
                    if lit[1] in self._finite(others):
                        lits.discard(lit)
            if lits == before:
                return frozenset(lits)

    def _never_partners(self, b: str) -> list[str]:
        out = []
        for x, y in self.never_pairs:
            if x == b:
                out.append(y)
            elif y == b:
                out.append(x)
        return sorted(out)

    def _apply_after(self, lits: set) -> set | None:
        out = set()
        for lit in lits:
            if lit[0] in ("lt", "le"):
                s = self.lit(lit)
                if not s:
                    return None
                ((lit,),) = s
            out.add(lit)
        return out

    def _implied(self, lits) -> list[tuple[str, str]]:
        """Strict edges ``y◁x`` implied by the conditions for finite ``x``."""
        if not self.after:
            return []
        finite = self._finite({v for lit in lits for v in _head(lit)})
        return [(y, x) for x, y in sorted(self.after) if x in finite and self.distinct(x, y)]

    def _finite(self, names: set[str]) -> set[str]:
        """Close a set of finite variables under the ``after`` implications."""
        out = set(names)
        grew = True
        while grew:
            grew = False
            for x, y in self.after:
                if x in out and y not in out:
                    out.add(y)
                    grew = True
        return out

    def _merge_classes(self, lits: set) -> set | None:
        """Rewrite every Δ-class onto its least member: (AΔB).(B◁C) = (AΔB).(A◁C)."""
        parent: dict[str, str] = {}

        def find(x: str) -> str:
            while parent.get(x, x) != x:
                x = parent[x]
            return x

        for lit in lits:
            if lit[0] == "eq":
                ra, rb = sorted((find(lit[1]), find(lit[2])))
                parent[rb] = ra
        if not parent:
            return lits
        members: dict[str, list[str]] = {}
        for x in list(parent):
            members.setdefault(find(x), []).append(x)
        out = set()
        for rep, xs in members.items():
            for x in xs:
                if x == rep:
                    continue
                if self.distinct(rep, x):
                    return None
                out.add(("eq", rep, x))
        for lit in lits:
            kind = lit[0]
            if kind == "eq":
                continue
            if kind == "v":
                out.add(("v", find(lit[1])))
                continue
            a, b = find(lit[1]), find(lit[2])
            if a == b:
                if kind == "lt":
                    return None
                out.add(("v", a))
            else:
                out.add((kind, a, b))
        return out

    def simplify(self, s: Iterable[Product], passes: int | None = None) -> Sum:
        prods = set()
        for p in s:
            q = self.simplify_product(p)
            if q is not None:
                prods.add(q)
        n = 0
        while True:
            n += 1
            changed = self._absorb(prods)
            changed |= self._merge(prods)
            if not changed:
                return frozenset(prods)
            if passes is not None and n >= passes:
                raise _BudgetHit(frozenset(prods))

    def _absorb(self, prods: set) -> bool:
        if len(prods) < 2:
            return False
        ordered = sorted(prods, key=_prod_key)
        dropped = set()
        for i, p in enumerate(ordered):
            for j, q in enumerate(ordered):
                if i == j or q in dropped:
                    continue
                if _covers(q, p) and (j < i or not _covers(p, q)):
                    dropped.add(p)
                    break
        prods -= dropped
        return bool(dropped)

    def _merge(self, prods: set) -> bool:
        """Case-split merges over one order literal ``x`` of a product ``R.x``.

        * ``R.(a◁b) + R.a.(b⊴a) = R.a`` (likewise ``a⊴b`` against ``b◁a`` or ``b⊴a``)
        * ``R.(a◁b) + R.(aΔb) = R.(a⊴b)``
        * ``R.(a◁b) + R.(b⊴a) = R.a + R.b`` (likewise ``a⊴b`` against ``b◁a``)
        * ``R.(a◁b) = R.a`` when the sum already absorbs ``R.b``
        * ``R.(a◁b) + R.(a◁c) = R.a`` under ``NEVER_events b c``
        """
        if len(prods) < 2:
            return False
        simp = self.simplify_product
        for p in sorted(prods, key=_prod_key):
            for lit in sorted(p):
                if lit[0] not in ("lt", "le"):
                    continue
                kind, a, b = lit
                rest = p - {lit}
                base = simp(rest | {("v", a)})
                if base is None:
                    continue
                comps = [self.le(b, a)] if kind == "lt" else [self.lt(b, a), self.le(b, a)]
                for comp in comps:
                    for c in comp:
                        partner = simp(base | c)
                        if partner is not None and partner != p and partner in prods:
                            prods -= {p, partner}
                            prods.add(base)
                            return True
                        partner = simp(rest | c)
                        if partner is not None and partner != p and partner in prods:
                            prods -= {p, partner}
                            prods.add(base)
                            other = simp(rest | {("v", b)})
                            if other is not None:
                                prods.add(other)
                            return True
                if kind == "lt":
                    for c in self.eq(a, b):
                        partner = simp(rest | c)
                        if partner is not None and partner in prods:
                            merged = [simp(rest | q) for q in self.le(a, b)]
                            prods -= {p, partner}
                            prods.update(q for q in merged if q is not None)
                            return True
                for c in self._never_partners(b):
                    for k2 in ("lt", "le"):
                        # R.(a◁b) + R.(a◁c) = R.a when b and c never both fail
                        partner = simp(rest | {(k2, a, c)})
                        if partner is not None and partner in prods:
                            prods -= {p, partner}
                            prods.add(base)
                            return True
                probe = simp(rest | {("v", b)})
                if probe is not None and any(q != p and _covers(q, probe) for q in prods):
                    prods.discard(p)
                    prods.add(base)
                    return True
        return False


class _BudgetHit(Exception):
    def __init__(self, partial: Sum):
        self.partial = partial


def _covers(q: Product, p: Product) -> bool:
    """True when q's value is <= p's whenever p is finite (so q + p = q)."""
    for lit in q:
        if lit in p:
            continue
        if lit[0] == "v":
            a = lit[1]
            if any(x[0] != "v" and a in _head(x) for x in p):
                continue
            return False
        if lit[0] == "le":
            a, b = lit[1], lit[2]
            if ("lt", a, b) in p or ("eq",) + tuple(sorted((a, b))) in p:
                continue
            return False
        return False
    return True


def _edges(lits, implied=()) -> dict[str, list[tuple[str, bool, Literal]]]:
    g: dict[str, list] = {}
    for y, x in implied:
        g.setdefault(y, []).append((x, True, ("implied", y, x)))
    for lit in lits:
        kind = lit[0]
        if kind == "lt":
            g.setdefault(lit[1], []).append((lit[2], True, lit))
        elif kind == "le":
            g.setdefault(lit[1], []).append((lit[2], False, lit))
        elif kind == "eq":
            g.setdefault(lit[1], []).append((lit[2], False, lit))
            g.setdefault(lit[2], []).append((lit[1], False, lit))
    return g


def _reach(g, src: str, skip: Literal | None = None) -> dict[str, bool]:
    """Nodes reachable from src; value True if some path is strict."""
    best: dict[str, bool] = {}
    stack = [(src, False)]
    while stack:
        node, strict = stack.pop()
        for nxt, s, lit in g.get(node, ()):
            if lit == skip:
                continue
            st = strict or s
            if nxt in best and (best[nxt] or not st):
                continue
            best[nxt] = st
            stack.append((nxt, st))
    return best


def _contradictory(lits, implied=()) -> bool:
    # a strict cycle, e.g. (A◁B).(B◁A) or (A◁B).(B⊴A), can never be finite
    g = _edges(lits, implied)
    strict = [(l[1], l[2]) for l in lits if l[0] == "lt"] + list(implied)
    return any(a in _reach(g, b) for a, b in strict)


def _transitive_reduce(lits: set, implied=()) -> None:
    # (A◁B).(B◁C).(A◁C) = (A◁B).(B◁C) and the ⊴ / mixed variants
    for lit in sorted(lits):
        if lit[0] not in ("lt", "le"):
            continue
        g = _edges(lits, implied)
        r = _reach(g, lit[1], skip=lit)
        if lit[2] in r and (r[lit[2]] or lit[0] == "le"):
            lits.discard(lit)


# ---------------------------------------------------------------------------
# terms <-> sums


def _lit_term(lit: Literal) -> Term:
    kind = lit[0]
    if kind == "v":
        return Var(lit[1])
    a, b = Var(lit[1]), Var(lit[2])
    return {"lt": Before, "le": InclBefore, "eq": Simult}[kind](a, b)


def sum_to_term(s: Sum) -> Term:
    prods = sorted(s, key=_prod_key)
    return or_all(and_all(_lit_term(l) for l in sorted(p, key=_lit_order)) for p in prods)


def _lit_order(lit: Literal):
    return ({"v": 0, "lt": 1, "le": 2, "eq": 3}[lit[0]], lit[1:])


def _temporal_parts(t: Term) -> list[Callable[["_Context"], Sum]] | None:
    """Split the right operand of an AND into lazily evaluated summands."""
    if isinstance(t, (Before, InclBefore)):
        op = "s_lt" if isinstance(t, Before) else "s_le"

        def parts(ctx: _Context):
            x = ctx.sop(t.left)
            y = ctx.sop(t.right)
            return [
                (lambda c, p=p: getattr(c, op)(frozenset([p]), y))
                for p in sorted(x, key=_prod_key)
            ]

        return parts
    return None


def _sop(self: _Context, t: Term) -> Sum:
    memo = self.__dict__.setdefault("_memo", {})
    key = (t, self.cap)
    if key in memo:
        return memo[key]
    if isinstance(t, Var):
        out = self.var(t.name)
    elif isinstance(t, ConstNever):
        out = NEVER_SUM
    elif isinstance(t, ConstAlways):
        out = ALWAYS_SUM
    elif isinstance(t, Or):
        out = self.s_or(self.sop(t.left), self.sop(t.right))
    elif isinstance(t, And):
        out = self._and(t)
    elif isinstance(t, Before):
        out = self.s_lt(self.sop(t.left), self.sop(t.right))
    elif isinstance(t, InclBefore):
        out = self.s_le(self.sop(t.left), self.sop(t.right))
    elif isinstance(t, Simult):
        out = self.s_eq(self.sop(t.left), self.sop(t.right))
    else:
        raise TypeError(t)
    memo[key] = out
    return out


def _sum_covers(acc: Sum, target: Sum) -> bool:
    return all(any(_covers(q, p) for q in acc) for p in target)


def _and(self: _Context, t: And) -> Sum:
    left, right = t.left, t.right
    parts_fn = _temporal_parts(right)
    if parts_fn is None:
        left, right = right, left
        parts_fn = _temporal_parts(right)
    if parts_fn is None:
        return self.s_and(self.sop(t.left), self.sop(t.right))
    base = self.sop(left)
    if not base:
        return NEVER_SUM
    # A.(X + Y) = A.X + A.Y, evaluated cheapest part first: once the
    # accumulated sum absorbs A, the remaining parts cannot contribute
    acc: Sum = NEVER_SUM
    deferred = []
    saved = self.cap
    for part in parts_fn(self):
        if _sum_covers(acc, base):
            return acc
        self.cap = 4000
        try:
            piece = part(self)
        except _TooBig:
            deferred.append(part)
            continue
        finally:
            self.cap = saved
        acc = self.s_or(acc, self.s_and(base, piece))
    for part in deferred:
        if _sum_covers(acc, base):
            return acc
        acc = self.s_or(acc, self.s_and(base, part(self)))
    return acc


_Context.sop = _sop
_Context._and = _and


def _context(conditions: Sequence[SideCondition]) -> tuple[_Context, dict[str, Term]]:
    ctx = _Context()
    cold = {c.name: NEVER_TERM for c in conditions if isinstance(c, ColdSpare)}
    for c in conditions:
        if isinstance(c, AllDistinct):
            ctx.distinct_groups.append(frozenset(c.names))
        elif isinstance(c, NeverEvents) and isinstance(c.a, Var) and isinstance(c.b, Var):
            ctx.never_pairs.append((c.a.name, c.b.name))
    plain = _Context()
    for c in conditions:
        if isinstance(c, TermEqNever):
            t = substitute(c.term, cold)
            ctx.forbidden.extend(plain.sop(t))
            if isinstance(t, Before) and isinstance(t.left, Var) and isinstance(t.right, Var):
                ctx.after.add((t.left.name, t.right.name))
    return ctx, cold


def to_sum(term: Term, conditions: Sequence[SideCondition] = ()) -> Sum:
    """Sum-of-products set for ``term`` (conditions applied)."""
    ctx, cold = _context(conditions)
    return ctx.sop(substitute(term, cold))


def normalize(
    term: Term,
    budget: int = DEFAULT_BUDGET,
    conditions: Sequence[SideCondition] = (),
    self_check: bool = True,
) -> Term:
    """Canonical sum-of-products form of ``term``.

    With ``conditions`` the result is only required to agree with ``term``
    on valuations satisfying them: ALL_DISTINCT removes ties between its
    members, COLD_SPARE variables become NEVER, NEVER_events forbids
    products needing both events and ``t = NEVER`` forbids products that
    contain a product of ``t``.
    """
    if budget < 1:
        raise ValueError("budget must be at least 1")
    ctx, cold = _context(conditions)
    s = ctx.sop(substitute(term, cold))
    try:
        s = ctx.simplify(s, passes=budget)
    except _BudgetHit as hit:
        raise BudgetExhausted(sum_to_term(hit.partial), budget) from None
    out = sum_to_term(s)
    if self_check:
        n = len(set(free_variables(term)) | {v for c in conditions for v in c.variables()})
        mode = Exact() if n <= DEFAULT_MAX_VARS else Sampled(SELF_CHECK_TRIALS, SELF_CHECK_SEED, batch=4096)
        verdict = decide_equivalence(term, out, conditions, mode)
        if not verdict:
            raise SelfCheckFailed(verdict)
    return out


@dataclass(frozen=True)
class Reduction:
    reduced: Term
    certificate: object


def apply_reduction(
    term: Term,
    conditions: Sequence[SideCondition] = (),
    max_vars: int = DEFAULT_MAX_VARS,
    trials: int = 1_000_000,
    seed: int = 0,
    budget: int = DEFAULT_BUDGET,
) -> Reduction:
    """Normalise under ``conditions`` and certify the result."""
    reduced = normalize(term, budget=budget, conditions=conditions, self_check=False)
    n = len(set(free_variables(term)) | {v for c in conditions for v in c.variables()})
    mode = Exact(max_vars) if n <= max_vars else Sampled(trials, seed)
    certificate = decide_equivalence(term, reduced, conditions, mode)
    if not certificate:
        raise SelfCheckFailed(certificate)
    return Reduction(reduced, certificate)
