"""Text forms of event terms.

Two readers are provided:

* :func:`parse_term` reads the infix notation used in reliability texts:
  ``+`` is OR, ``.`` is AND, ``<`` is Before, ``<=`` is Inclusive Before and
  ``~`` is Simultaneous (the Unicode symbols ``◁ ⊴ Δ`` are accepted too).
  Temporal operators bind tighter than ``.``, which binds tighter than ``+``;
  chains of the same precedence associate to the left.
* :func:`parse_hol` reads prefix applications such as
  ``D_OR (PAND A B) (FDEP C T)`` including gate names, so that structure
  functions written as theorem statements can be transcribed verbatim.
"""

from __future__ import annotations

import re

from .algebra import (
    ALWAYS_TERM,
    NEVER_TERM,
    And,
    Before,
    ConstAlways,
    ConstNever,
    InclBefore,
    Or,
    Simult,
    Term,
    Var,
    desugar_gate,
)


class TermSyntaxError(ValueError):
    pass


_INFIX_TOKEN = re.compile(r"\s*(<=|⊴|<|◁|~|Δ|\+|\.|\(|\)|[A-Za-z_][A-Za-z0-9_]*)")
_TEMPORAL = {"<": Before, "◁": Before, "<=": InclBefore, "⊴": InclBefore, "~": Simult, "Δ": Simult}


def _tokenize(text: str, pattern: re.Pattern) -> list[tuple[str, int]]:
    tokens = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = pattern.match(text, pos)
        if not m:
            raise TermSyntaxError(f"unexpected character {text[pos]!r} at offset {pos}")
        tokens.append((m.group(1), m.start(1)))
        pos = m.end()
    return tokens


class _Infix:
    def __init__(self, text: str):
        self.toks = _tokenize(text, _INFIX_TOKEN)
        self.i = 0

    def peek(self):
        return self.toks[self.i][0] if self.i < len(self.toks) else None

    def take(self, expected=None):
        if self.i >= len(self.toks):
            raise TermSyntaxError(f"unexpected end of input, expected {expected or 'a term'}")
        tok, off = self.toks[self.i]
        if expected is not None and tok != expected:
            raise TermSyntaxError(f"expected {expected!r} at offset {off}, got {tok!r}")
        self.i += 1
        return tok

    def sum(self) -> Term:
        t = self.prod()
        while self.peek() == "+":
            self.take()
            t = Or(t, self.prod())
        return t

    def prod(self) -> Term:
        t = self.temporal()
        while self.peek() == ".":
            self.take()
            t = And(t, self.temporal())
        return t

    def temporal(self) -> Term:
        t = self.atom()
        while self.peek() in _TEMPORAL:
            op = _TEMPORAL[self.take()]
            t = op(t, self.atom())
        return t

    def atom(self) -> Term:
        tok = self.take()
        if tok == "(":
            t = self.sum()
            self.take(")")
            return t
        if tok == "NEVER":
            return NEVER_TERM
        if tok == "ALWAYS":
            return ALWAYS_TERM
        if re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", tok):
            return Var(tok)
        raise TermSyntaxError(f"unexpected token {tok!r}")


def parse_term(text: str) -> Term:
    """Parse infix notation, e.g. ``"A.(B<=A) + (A~B)"``."""
    p = _Infix(text)
    t = p.sum()
    if p.peek() is not None:
        raise TermSyntaxError(f"trailing input at token {p.peek()!r}")
    return t


_HOL_TOKEN = re.compile(r"\s*(\(|\)|[A-Za-z_][A-Za-z0-9_]*)")
_HOL_OPS = {
    "D_OR": (Or, 2),
    "D_AND": (And, 2),
    "D_BEFORE": (Before, 2),
    "D_INCLUSIVE_BEFORE": (InclBefore, 2),
    "D_SIMULT": (Simult, 2),
}
_HOL_GATES = {"PAND": 2, "FDEP": 2, "WSP": 3, "CSP": 2, "HSP": 2, "shared_spare": 4}
_VOTE = re.compile(r"D(\d+)of(\d+)$")


def _hol_arity(name: str) -> int | None:
    if name in _HOL_OPS:
        return _HOL_OPS[name][1]
    if name in _HOL_GATES:
        return _HOL_GATES[name]
    m = _VOTE.match(name)
    return int(m.group(2)) if m else None


class _Hol:
    def __init__(self, text: str):
        self.toks = _tokenize(text, _HOL_TOKEN)
        self.i = 0

    def peek(self):
        return self.toks[self.i][0] if self.i < len(self.toks) else None

    def take(self):
        if self.i >= len(self.toks):
            raise TermSyntaxError("unexpected end of input")
        tok = self.toks[self.i][0]
        self.i += 1
        return tok

    def expr(self) -> Term:
        head = self.take()
        if head == "(":
            t = self.expr()
            if self.take() != ")":
                raise TermSyntaxError("expected ')'")
            return t
        if head == ")":
            raise TermSyntaxError("unbalanced ')'")
        arity = _hol_arity(head)
        if arity is None:
            if head == "NEVER":
                return ConstNever()
            if head == "ALWAYS":
                return ConstAlways()
            return Var(head)
        args = [self.expr() for _ in range(arity)]
        if head in _HOL_OPS:
            return _HOL_OPS[head][0](*args)
        m = _VOTE.match(head)
        if m:
            return desugar_gate("vote", args, k=int(m.group(1)))
        if head == "FDEP":
            # FDEP X Y is min X Y and hence symmetric
            return desugar_gate("fdep", args)
        return desugar_gate(head.lower(), args)


def parse_hol(text: str) -> Term:
    """Parse prefix notation, e.g. ``"D_OR (PAND A B) (WSP P S_a S_d)"``."""
    p = _Hol(text)
    t = p.expr()
    if p.peek() is not None:
        raise TermSyntaxError(f"trailing input at token {p.peek()!r}")
    return t


_ASCII = {And: ".", Or: "+", Before: "<", InclBefore: "<=", Simult: "~"}
_PREC = {Or: 0, And: 1, Before: 2, InclBefore: 2, Simult: 2}


def format_term(term: Term) -> str:
    """Inverse of :func:`parse_term` (round-trips structurally)."""

    def go(t: Term, ctx: int, right: bool) -> str:
        if isinstance(t, Var):
            return t.name
        if isinstance(t, ConstNever):
            return "NEVER"
        if isinstance(t, ConstAlways):
            return "ALWAYS"
        op = type(t)
        prec = _PREC[op]
        s = f"{go(t.left, prec, False)} {_ASCII[op]} {go(t.right, prec, True)}"
        if prec < ctx or (prec == ctx and right):
            s = f"({s})"
        return s

    return go(term, -1, False)
