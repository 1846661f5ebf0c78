"""A small Galileo dialect for dynamic fault trees.

Grammar (UTF-8, LF or CRLF, ``//`` comments)::

    model     := statement*
    statement := 'toplevel' NAME ';'
               | NAME gatekind NAME+ ';'
               | NAME attr* ';'
    gatekind  := 'and' | 'or' | 'pand' | 'fdep' | 'wsp' | 'csp' | 'hsp' | <k>'of'<n>
    attr      := 'lambda' '=' FLOAT | 'dorm' '=' FLOAT
    NAME      := '"' chars '"'

``fdep`` lists its trigger first; spare gates list the primary first and
then their spares in the order they are claimed.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable, Iterator, Mapping

from .algebra import (
    AllDistinct,
    And,
    Before,
    ColdSpare,
    NeverEvents,
    Or,
    SideCondition,
    Term,
    TermEqNever,
    Var,
    and_all,
    desugar_gate,
    or_all,
    shared_spare,
    wsp,
)

GATE_KINDS = ("and", "or", "pand", "fdep", "wsp", "csp", "hsp")
SPARE_KINDS = ("wsp", "csp", "hsp")
_VOTE = re.compile(r"(\d+)of(\d+)$")


class GalileoError(ValueError):
    pass


class GalileoSyntaxError(GalileoError):
    def __init__(self, line: int, col: int, expected: str, got: str = ""):
        msg = f"line {line}, column {col}: expected {expected}"
        if got:
            msg += f", got {got!r}"
        super().__init__(msg)
        self.line, self.col, self.expected = line, col, expected


class DuplicateDefinition(GalileoError):
    def __init__(self, name: str, line: int):
        super().__init__(f"{name!r} defined twice (second definition on line {line})")
        self.name = name


class UnknownReference(GalileoError):
    def __init__(self, name: str, referrer: str):
        super().__init__(f"{referrer!r} refers to undefined {name!r}")
        self.name, self.referrer = name, referrer


class UnsupportedSharing(GalileoError):
    pass


class InvalidModel(GalileoError):
    def __init__(self, violations):
        super().__init__("; ".join(str(v) for v in violations))
        self.violations = list(violations)


@dataclass(frozen=True)
class BasicEvent:
    name: str
    rate: float
    dorm: float = 0.0


@dataclass(frozen=True)
class GateNode:
    name: str
    kind: str
    children: tuple[str, ...]
    k: int | None = None

    @property
    def label(self) -> str:
        if self.kind == "vote":
            return f"{self.k}of{len(self.children)}"
        return self.kind


Node = BasicEvent | GateNode


@dataclass
class DftModel:
    toplevel: str
    nodes: dict[str, Node] = field(default_factory=dict)

    @property
    def events(self) -> list[BasicEvent]:
        return [n for n in self.nodes.values() if isinstance(n, BasicEvent)]

    @property
    def gates(self) -> list[GateNode]:
        return [n for n in self.nodes.values() if isinstance(n, GateNode)]

    def gate(self, name: str) -> GateNode:
        node = self.nodes[name]
        if not isinstance(node, GateNode):
            raise KeyError(name)
        return node

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, DftModel)
            and self.toplevel == other.toplevel
            and list(self.nodes.items()) == list(other.nodes.items())
        )


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(
    r'(?P<ws>[ \t\r\n]+)|(?P<comment>//[^\n]*)|(?P<name>"[^"\n]*")|(?P<semi>;)|(?P<eq>=)'
    r"|(?P<word>[A-Za-z0-9_.+\-]+)"
)


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokens(text: str) -> Iterator[_Tok]:
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise GalileoSyntaxError(line, pos - line_start + 1, "a token", text[pos])
        kind = m.lastgroup
        if kind not in ("ws", "comment"):
            yield _Tok(kind, m.group(), line, pos - line_start + 1)
        chunk = m.group()
        nl = chunk.count("\n")
        if nl:
            line += nl
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()


def _float(tok: _Tok) -> float:
    try:
        return float(tok.text)
    except ValueError:
        raise GalileoSyntaxError(tok.line, tok.col, "a number", tok.text) from None


def parse(text: str) -> DftModel:
    """Read a model; undefined references and duplicates are errors."""
    toks = list(_tokens(text))
    i = 0
    toplevel: str | None = None
    nodes: dict[str, Node] = {}
    end_line = text.count("\n") + 1

    def peek() -> _Tok | None:
        return toks[i] if i < len(toks) else None

    def take(kind: str, expected: str) -> _Tok:
        nonlocal i
        tok = peek()
        if tok is None:
            raise GalileoSyntaxError(end_line, 1, expected, "end of input")
        if tok.kind != kind:
            raise GalileoSyntaxError(tok.line, tok.col, expected, tok.text)
        i += 1
        return tok

    while peek() is not None:
        tok = peek()
        if tok.kind == "word" and tok.text == "toplevel":
            i += 1
            name = take("name", "a quoted name")
            take("semi", "';'")
            if toplevel is not None:
                raise DuplicateDefinition("toplevel", tok.line)
            toplevel = name.text[1:-1]
            continue
        head = take("name", "'toplevel' or a quoted name")
        name = head.text[1:-1]
        if name in nodes:
            raise DuplicateDefinition(name, head.line)
        nxt = peek()
        if nxt is not None and nxt.kind == "word" and (nxt.text in GATE_KINDS or _VOTE.match(nxt.text)):
            i += 1
            children = []
            while peek() is not None and peek().kind == "name":
                children.append(take("name", "a child name").text[1:-1])
            take("semi", "a quoted child name or ';'")
            vote = _VOTE.match(nxt.text)
            if vote:
                nodes[name] = GateNode(name, "vote", tuple(children), int(vote.group(1)))
                if int(vote.group(2)) != len(children):
                    raise GalileoSyntaxError(
                        nxt.line, nxt.col, f"{vote.group(2)} children for {nxt.text}", str(len(children))
                    )
            else:
                nodes[name] = GateNode(name, nxt.text, tuple(children))
            continue
        attrs: dict[str, float] = {}
        while peek() is not None and peek().kind == "word":
            key = take("word", "an attribute")
            if key.text not in ("lambda", "dorm"):
                raise GalileoSyntaxError(key.line, key.col, "a gate kind, 'lambda' or 'dorm'", key.text)
            if key.text in attrs:
                raise GalileoSyntaxError(key.line, key.col, "each attribute once", key.text)
            take("eq", "'='")
            attrs[key.text] = _float(take("word", "a number"))
        semi = take("semi", "an attribute or ';'")
        if "lambda" not in attrs:
            raise GalileoSyntaxError(semi.line, semi.col, "'lambda=' for a basic event", ";")
        nodes[name] = BasicEvent(name, attrs["lambda"], attrs.get("dorm", 0.0))

    if toplevel is None:
        raise GalileoSyntaxError(end_line, 1, "a 'toplevel' directive", "end of input")
    if toplevel not in nodes:
        raise UnknownReference(toplevel, "toplevel")
    for node in nodes.values():
        if isinstance(node, GateNode):
            for c in node.children:
                if c not in nodes:
                    raise UnknownReference(c, node.name)
    return DftModel(toplevel, nodes)


def load(path) -> DftModel:
    with open(path, encoding="utf-8") as f:
        return parse(f.read())


def serialize(model: DftModel) -> str:
    lines = [f'toplevel "{model.toplevel}";']
    for node in model.nodes.values():
        if isinstance(node, GateNode):
            kids = " ".join(f'"{c}"' for c in node.children)
            lines.append(f'"{node.name}" {node.label} {kids};')
        else:
            lines.append(f'"{node.name}" lambda={node.rate!r} dorm={node.dorm!r};')
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Violation:
    name: str
    detail: str

    def __str__(self) -> str:
        return f"{type(self).__name__}({self.name}): {self.detail}"


class NonPositiveRate(Violation):
    pass


class DormancyOutOfRange(Violation):
    pass


@dataclass(frozen=True)
class CycleDetected(Violation):
    path: tuple[str, ...] = ()


class BadArity(Violation):
    pass


class MisplacedFdep(Violation):
    pass


class SpareNotBasic(Violation):
    pass


class UndefinedNode(Violation):
    pass


def _find_cycle(model: DftModel) -> list[str] | None:
    state: dict[str, int] = {}
    stack: list[str] = []

    def visit(n: str) -> list[str] | None:
        state[n] = 1
        stack.append(n)
        node = model.nodes.get(n)
        for c in node.children if isinstance(node, GateNode) else ():
            if c not in model.nodes:
                continue
            if state.get(c) == 1:
                return stack[stack.index(c):] + [c]
            if c not in state:
                found = visit(c)
                if found:
                    return found
        stack.pop()
        state[n] = 2
        return None

    for n in model.nodes:
        if n not in state:
            found = visit(n)
            if found:
                return found
    return None


def validate(model: DftModel) -> list[Violation]:
    """All invariant violations; an empty list means the model is usable."""
    out: list[Violation] = []
    if model.toplevel not in model.nodes:
        out.append(UndefinedNode(model.toplevel, "toplevel is not defined"))
    for node in model.nodes.values():
        if isinstance(node, BasicEvent):
            if not node.rate > 0:
                out.append(NonPositiveRate(node.name, f"lambda={node.rate}"))
            if not 0.0 <= node.dorm <= 1.0:
                out.append(DormancyOutOfRange(node.name, f"dorm={node.dorm}"))
            continue
        for c in node.children:
            if c not in model.nodes:
                out.append(UndefinedNode(c, f"referenced by {node.name}"))
        n = len(node.children)
        need = {"pand": 2, "fdep": 2, "wsp": 2, "csp": 2, "hsp": 2, "and": 1, "or": 1, "vote": 1}[node.kind]
        if n < need:
            out.append(BadArity(node.name, f"{node.kind} needs at least {need} children, has {n}"))
        if node.kind == "vote" and not (node.k is not None and 1 <= node.k <= n):
            out.append(BadArity(node.name, f"threshold {node.k} outside 1..{n}"))
        if node.kind in SPARE_KINDS:
            for s in node.children[1:]:
                if s in model.nodes and not isinstance(model.nodes[s], BasicEvent):
                    out.append(SpareNotBasic(node.name, f"spare {s} is a gate"))
        for c in node.children:
            child = model.nodes.get(c)
            if isinstance(child, GateNode) and child.kind == "fdep":
                out.append(MisplacedFdep(c, f"used as an input of {node.name}"))
    top = model.nodes.get(model.toplevel)
    if isinstance(top, GateNode) and top.kind == "fdep":
        out.append(MisplacedFdep(top.name, "an fdep cannot be the top event"))
    cycle = _find_cycle(model)
    if cycle:
        out.append(CycleDetected(cycle[0], " -> ".join(cycle), tuple(cycle)))
    return out


def check(model: DftModel) -> DftModel:
    violations = validate(model)
    if violations:
        raise InvalidModel(violations)
    return model


# ---------------------------------------------------------------------------
# spare bookkeeping shared with the state-space builder


def spare_claimants(model: DftModel) -> dict[str, list[str]]:
    """Spare event -> spare gates listing it as a spare, in declaration order."""
    out: dict[str, list[str]] = {}
    for g in model.gates:
        if g.kind in SPARE_KINDS:
            for s in g.children[1:]:
                out.setdefault(s, []).append(g.name)
    return out


def dormancy(model: DftModel, spare: str) -> float:
    """Effective dormancy factor of a spare: csp forces 0, hsp forces 1."""
    kinds = {model.gate(g).kind for g in spare_claimants(model).get(spare, [])}
    if "csp" in kinds:
        return 0.0
    if "hsp" in kinds:
        return 1.0
    return model.nodes[spare].dorm


def fdep_triggers(model: DftModel) -> dict[str, list[str]]:
    """Dependent node -> triggers, in declaration order."""
    out: dict[str, list[str]] = {}
    for g in model.gates:
        if g.kind == "fdep":
            trigger, *deps = g.children
            for d in deps:
                out.setdefault(d, []).append(trigger)
    return out


# ---------------------------------------------------------------------------
# structure function


@dataclass(frozen=True)
class StructureFunction:
    term: Term
    conditions: tuple[SideCondition, ...]


def active(name: str) -> str:
    return f"{name}_a"


def dormant(name: str) -> str:
    return f"{name}_d"


def to_structure_function(model: DftModel) -> StructureFunction:
    """Failure time of the top event as an event term plus side conditions.

    Every warm or cold spare ``X`` is split into ``X_a`` (fails while in use)
    and ``X_d`` (fails while dormant), never both.  Hot spares keep a single
    variable.  FDEP dependents are replaced by ``X + trigger``.
    """
    check(model)
    claimants = spare_claimants(model)
    for s, gates in claimants.items():
        kinds = {model.gate(g).kind for g in gates}
        if len(gates) > 2:
            raise UnsupportedSharing(f"spare {s} is shared by {len(gates)} gates; at most 2 are supported")
        if len(gates) == 2 and any(len(model.gate(g).children) != 2 for g in gates):
            raise UnsupportedSharing(f"spare {s} is shared by gates with several spares")
        if "hsp" in kinds and len(kinds) > 1:
            raise UnsupportedSharing(f"spare {s} is claimed as hot and as warm/cold")
    split = {s for s, gates in claimants.items() if all(model.gate(g).kind != "hsp" for g in gates)}
    triggers = fdep_triggers(model)
    memo: dict[str, Term] = {}
    conditions: list[SideCondition] = []
    variables: list[str] = []

    def with_fdep(name: str, t: Term) -> Term:
        for trig in triggers.get(name, ()):
            t = desugar_gate("fdep", [t, term(trig)])
        return t

    def leaf(name: str, alias: Callable[[str], str] | None = None) -> Term:
        var = name if alias is None else alias(name)
        return with_fdep(name, Var(var))

    def term(name: str) -> Term:
        if name in memo:
            return memo[name]
        node = model.nodes[name]
        if isinstance(node, BasicEvent):
            t = leaf(name)
        elif node.kind in SPARE_KINDS:
            t = with_fdep(name, spare_gate(node))
        else:
            kids = [term(c) for c in node.children]
            t = with_fdep(name, desugar_gate(node.kind, kids, k=node.k))
        memo[name] = t
        return t

    def chain(primary: Term, spares: list[str]) -> Term:
        if not spares:
            return primary
        s, rest = spares[0], spares[1:]
        return wsp(primary, chain(leaf(s, active), rest), chain(leaf(s, dormant), rest))

    def spare_gate(node: GateNode) -> Term:
        primary, spares = node.children[0], list(node.children[1:])
        p = term(primary)
        if node.kind == "hsp":
            return and_all([p] + [term(s) for s in spares])
        if len(spares) == 1 and len(claimants[spares[0]]) == 2:
            s = spares[0]
            other = next(g for g in claimants[s] if g != node.name)
            q = term(model.gate(other).children[0])
            return shared_spare(p, q, leaf(s, active), leaf(s, dormant))
        return chain(p, spares)

    top = term(model.toplevel)

    for e in model.events:
        if e.name in split:
            variables += [active(e.name), dormant(e.name)]
        else:
            variables.append(e.name)
    for s in claimants:
        if s in split:
            conditions.append(NeverEvents(active(s), dormant(s)))
            if dormancy(model, s) == 0.0:
                conditions.append(ColdSpare(dormant(s)))
    # a spare cannot fail in use before the primary it replaces has failed.
    # When every trigger of the primary also fails the spare, the spare's own
    # failure time only matters after the raw primary failure, so the raw
    # variable may be used instead of the primary's full term.
    def activator(spare: str, primary: str, alias: Callable[[str], str] | None = None) -> Term:
        raw_ok = isinstance(model.nodes[primary], BasicEvent) and set(triggers.get(primary, ())) <= set(
            triggers.get(spare, ())
        )
        if raw_ok:
            return Var(primary if alias is None else alias(primary))
        return term(primary) if alias is None else leaf(primary, alias)

    for g in model.gates:
        if g.kind not in SPARE_KINDS or g.kind == "hsp":
            continue
        primary = g.children[0]
        spares = list(g.children[1:])
        for j, s in enumerate(spares):
            a = Var(active(s))
            if len(claimants[s]) == 2:
                if g.name == claimants[s][0]:
                    other = model.gate(next(x for x in claimants[s] if x != g.name)).children[0]
                    conditions.append(TermEqNever(Before(a, Or(activator(s, primary), activator(s, other)))))
                continue
            conditions.append(TermEqNever(Before(a, activator(s, primary))))
            for prev in spares[:j]:
                failed = activator(s, prev, active)
                if dormancy(model, prev) > 0.0:
                    failed = Or(failed, activator(s, prev, dormant))
                conditions.append(TermEqNever(Before(a, failed)))
    conditions.insert(0, AllDistinct(variables))
    return StructureFunction(top, tuple(conditions))


def model_from_gates(toplevel: str, gates: Mapping[str, tuple], events: Mapping[str, tuple[float, float]]) -> DftModel:
    """Build a model in code: ``gates[name] = (kind, children)`` or ``("vote", children, k)``."""
    nodes: dict[str, Node] = {}
    for name, spec in gates.items():
        kind, children, *k = spec
        nodes[name] = GateNode(name, kind, tuple(children), k[0] if k else None)
    for name, (rate, dorm) in events.items():
        nodes[name] = BasicEvent(name, rate, dorm)
    return DftModel(toplevel, nodes)


class NoGateForm(GalileoError):
    pass


def model_from_cut_sequences(summary, template: DftModel, toplevel: str = "TOP") -> DftModel:
    """Gate-level tree whose top fails exactly when one of the sequences occurs.

    ``X◁Y`` and ``X⊴Y`` become ``pand X Y`` and need ``Y`` to be an event of
    the same sequence; the two differ only on ties, which cannot happen in a
    tree without FDEP.  Simultaneity literals and spare aliases have no gate
    form.  Rates come from ``template``.
    """
    events = {e.name: e for e in template.events}
    nodes: dict[str, Node] = {}
    products = []
    for k, seq in enumerate(summary.sequences, 1):
        vars_ = {lit.names[0] for lit in seq.literals if lit.kind == "event"}
        inputs: list[str] = []
        for lit in seq.ordered():
            for n in lit.names:
                if n not in events:
                    raise NoGateForm(f"{n} is not a basic event of the model")
            if lit.kind == "event":
                continue
            if lit.kind == "simult":
                raise NoGateForm(f"simultaneity literal {lit} has no gate form")
            a, b = lit.names
            if b not in vars_:
                raise NoGateForm(f"literal {lit} needs {b} to fail in the same sequence")
            name = f"S{k}_{a}_{b}"
            nodes[name] = GateNode(name, "pand", (a, b))
            inputs.append(name)
        covered = {n for i in inputs for n in nodes[i].children}
        inputs = sorted(vars_ - covered) + inputs
        if len(inputs) == 1:
            products.append(inputs[0])
        else:
            nodes[f"S{k}"] = GateNode(f"S{k}", "and", tuple(inputs))
            products.append(f"S{k}")
    if not products:
        raise NoGateForm("the top event can never fail")
    if toplevel in events or toplevel in nodes:
        raise NoGateForm(f"name {toplevel} is already used")
    nodes[toplevel] = GateNode(toplevel, "or", tuple(dict.fromkeys(products)))
    used = {c for g in nodes.values() for c in g.children}
    for name in sorted(used & events.keys()):
        e = events[name]
        nodes[name] = BasicEvent(name, e.rate, e.dorm)
    model = DftModel(toplevel, nodes)
    return check(model)
