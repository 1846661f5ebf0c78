"""Explicit-state continuous-time Markov chains for dynamic fault trees.

Dynamic semantics shared with the simulator:

* A basic event fails at rate λ when active and α·λ while a dormant spare.
  Events that are not spares of any spare gate are always active; a spare
  is active exactly while some spare gate uses it.
* PAND is inclusive: it fails when all inputs have failed in left-to-right
  order, ties allowed.  An input failing while an earlier one is still
  working makes the gate failsafe for good.
* A spare gate uses its primary first.  When the input in use fails it
  claims the next spare, in declaration order, that has neither failed nor
  been claimed by another gate; with none left the gate fails.  Gates that
  compete for a spare at the same instant claim in declaration order.
* When an FDEP trigger fails, its dependents fail at the same instant.  All
  consequences of one exponential firing are settled before the next one.

States are explored breadth first.  Parts of the state that can no longer
influence the top event (inputs of failed gates, triggers whose dependents
are all down, ...) are dropped from the state key, and their failures are
not explored.  OR/AND gates whose inputs share nothing are built separately
and combined with a Kronecker sum.
"""

from __future__ import annotations

import os
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve
from scipy.stats import poisson

from .galileo import BasicEvent, DftModel, GateNode, SPARE_KINDS, check, dormancy, spare_claimants

DEFAULT_STATE_BUDGET = 10_000_000

OPERATIONAL, FAILED, FAILSAFE = 0, 1, 2


class MarkovError(ValueError):
    pass


class StateBudgetExceeded(MarkovError):
    def __init__(self, budget: int, explored: int):
        super().__init__(f"state budget of {budget} exceeded after {explored} states")
        self.budget, self.explored = budget, explored


class SingularSystem(MarkovError):
    pass


def state_budget() -> int:
    raw = os.environ.get("DFT_STATE_BUDGET")
    if raw is None:
        return DEFAULT_STATE_BUDGET
    try:
        value = int(float(raw))
    except ValueError:
        raise MarkovError(f"DFT_STATE_BUDGET={raw!r} is not a number") from None
    if value < 1:
        raise MarkovError("DFT_STATE_BUDGET must be positive")
    return value


@dataclass
class Ctmc:
    """Off-diagonal rates in ``rates`` (CSR); absorbing rows are empty."""

    rates: sp.csr_matrix
    initial: int
    absorbing: frozenset[int]
    labeller: Callable[[int], str] = field(repr=False, default=lambda i: str(i))
    # failed basic events per state; only kept for unpruned chains
    failed_sets: list[frozenset[str] | None] | None = field(repr=False, default=None)

    @property
    def n_states(self) -> int:
        return self.rates.shape[0]

    @property
    def n_transitions(self) -> int:
        return self.rates.nnz

    def exit_rates(self) -> np.ndarray:
        return np.asarray(self.rates.sum(axis=1)).ravel()

    def label(self, i: int) -> str:
        return self.labeller(i)

    def write(self, transitions_path, labels_path=None) -> None:
        """Plain-text export: ``from to rate`` lines and one label per state."""
        coo = self.rates.tocoo()
        order = np.lexsort((coo.col, coo.row))
        with open(transitions_path, "w", encoding="utf-8") as f:
            f.write(f"# states {self.n_states} initial {self.initial} absorbing {' '.join(map(str, sorted(self.absorbing)))}\n")
            for k in order:
                f.write(f"{coo.row[k]} {coo.col[k]} {float(coo.data[k])!r}\n")
        if labels_path is not None:
            with open(labels_path, "w", encoding="utf-8") as f:
                for i in range(self.n_states):
                    f.write(f"{i} {self.label(i)}\n")


# ---------------------------------------------------------------------------
# compiled model


class _Compiled:
    """Index-based view of a model for fast scalar stepping."""

    def __init__(self, model: DftModel):
        self.model = model
        names = list(model.nodes)
        self.index = {n: i for i, n in enumerate(names)}
        self.names = names
        self.events = [i for i, n in enumerate(names) if isinstance(model.nodes[n], BasicEvent)]
        self.is_event = [isinstance(model.nodes[n], BasicEvent) for n in names]
        self.top = self.index[model.toplevel]
        gates = [model.nodes[n] for n in names if isinstance(model.nodes[n], GateNode)]
        self.fdeps = [
            (self.index[g.children[0]], tuple(self.index[c] for c in g.children[1:]))
            for g in gates
            if g.kind == "fdep"
        ]
        self.fdep_nodes = {self.index[g.name] for g in gates if g.kind == "fdep"}
        self.gate = {
            self.index[g.name]: (g.kind, tuple(self.index[c] for c in g.children), g.k)
            for g in gates
            if g.kind != "fdep"
        }
        self.order = self._topological()
        claim = spare_claimants(model)
        self.spare_gates = [self.index[g.name] for g in gates if g.kind in SPARE_KINDS]
        self.spare_slot = {g: k for k, g in enumerate(self.spare_gates)}
        self.spares = sorted(self.index[s] for s in claim)
        self.spare_pos = {s: k for k, s in enumerate(self.spares)}
        self.claimants = {self.index[s]: tuple(self.index[g] for g in gs) for s, gs in claim.items()}
        self.rate = {}
        self.dormant_rate = {}
        for e in self.events:
            ev = model.nodes[names[e]]
            self.rate[e] = ev.rate
            self.dormant_rate[e] = dormancy(model, ev.name) * ev.rate if e in self.claimants else ev.rate

    def _topological(self) -> list[int]:
        out, seen = [], set()

        def visit(g):
            if g in seen:
                return
            seen.add(g)
            for c in self.gate[g][1]:
                if c in self.gate:
                    visit(c)
            out.append(g)

        for g in self.gate:
            visit(g)
        return out

    # -- state: (status tuple over nodes, using tuple per spare gate, owner tuple per spare)

    def initial(self):
        status = [OPERATIONAL] * len(self.names)
        using = [0] * len(self.spare_gates)
        owner = [-1] * len(self.spares)
        for g in self.spare_gates:
            # primaries are in use from the start; a spare listed as a primary is claimed
            p = self.gate[g][1][0]
            if p in self.spare_pos:
                owner[self.spare_pos[p]] = g
        self._settle(status, using, owner, status[:])
        return tuple(status), tuple(using), tuple(owner)

    def _settle(self, status, using, owner, before) -> None:
        changed = True
        while changed:
            changed = False
            for trig, deps in self.fdeps:
                if status[trig] == FAILED:
                    for d in deps:
                        if status[d] != FAILED:
                            status[d] = FAILED
                            changed = True
            for g in self.order:
                if status[g] != OPERATIONAL:
                    continue
                kind, kids, k = self.gate[g]
                if kind in SPARE_KINDS:
                    failed = self._spare_step(g, kids, status, using, owner)
                else:
                    n = sum(status[c] == FAILED for c in kids)
                    if kind == "and" or kind == "pand":
                        failed = n == len(kids)
                    elif kind == "or":
                        failed = n > 0
                    else:
                        failed = n >= k
                if failed:
                    status[g] = FAILED
                    changed = True
        for g in self.order:
            if self.gate[g][0] == "pand" and status[g] == OPERATIONAL:
                flags = [status[c] == FAILED for c in self.gate[g][1]]
                first_up = flags.index(False)
                if any(flags[first_up:]):
                    status[g] = FAILSAFE

    def _spare_step(self, g, kids, status, using, owner) -> bool:
        slot = self.spare_slot[g]
        if status[kids[using[slot]]] != FAILED:
            return False
        for i in range(using[slot] + 1, len(kids)):
            s = kids[i]
            pos = self.spare_pos[s]
            if status[s] != FAILED and owner[pos] == -1:
                owner[pos] = g
                using[slot] = i
                return False
        return True

    def fire(self, state, event: int):
        status, using, owner = (list(x) for x in state)
        before = status[:]
        status[event] = FAILED
        self._settle(status, using, owner, before)
        return tuple(status), tuple(using), tuple(owner)

    def event_rate(self, state, e: int) -> float:
        status, _, owner = state
        if status[e] == FAILED:
            return 0.0
        pos = self.spare_pos.get(e)
        if pos is None or owner[pos] != -1:
            return self.rate[e]
        return self.dormant_rate[e]

    # -- relevance

    def observed(self, state) -> tuple[set[int], set[int]]:
        """(elements whose status matters, operational gates that are still live)."""
        status, _, owner = state
        seen: set[int] = set()
        live: set[int] = set()
        woken: set[int] = set()
        stack = [self.top]
        seen.add(self.top)
        while True:
            while stack:
                x = stack.pop()
                if x in self.spare_pos and x not in woken and status[x] == OPERATIONAL and owner[self.spare_pos[x]] == -1:
                    # a dormant spare's rate changes when any claimant takes it
                    woken.add(x)
                    for g in self.claimants[x]:
                        seen.add(g)
                        stack.append(g)
                if x in live or x not in self.gate or status[x] != OPERATIONAL:
                    continue
                live.add(x)
                kids = self.gate[x][1]
                for c in kids:
                    seen.add(c)
                    stack.append(c)
                if self.gate[x][0] in SPARE_KINDS:
                    for s in kids[1:]:
                        for other in self.claimants.get(s, ()):
                            if other not in live:
                                seen.add(other)
                                stack.append(other)
            grew = False
            for trig, deps in self.fdeps:
                if trig in seen:
                    continue
                if any(d in seen and status[d] == OPERATIONAL for d in deps):
                    seen.add(trig)
                    stack.append(trig)
                    grew = True
            if not grew:
                return seen, live

    def key(self, state, prune: bool):
        if not prune:
            return state
        status, using, owner = state
        seen, live = self.observed(state)
        return (
            tuple(status[i] if i in seen else -1 for i in range(len(status))),
            tuple(using[k] if g in live else -1 for k, g in enumerate(self.spare_gates)),
            tuple(owner[k] if s in seen else -2 for k, s in enumerate(self.spares)),
        )

    def enabled(self, state, prune: bool) -> list[int]:
        status = state[0]
        if prune:
            seen, _ = self.observed(state)
            cands = [e for e in self.events if e in seen]
        else:
            cands = self.events
        return [e for e in cands if status[e] == OPERATIONAL]

    def describe(self, state) -> str:
        status, using, owner = state
        failed = [self.names[e] for e in self.events if status[e] == FAILED]
        active = [
            f"{self.names[g]}:{self.names[self.gate[g][1][using[k]]]}"
            for k, g in enumerate(self.spare_gates)
            if using[k] > 0
        ]
        out = "failed{" + ",".join(failed) + "}"
        if active:
            out += " using{" + ",".join(active) + "}"
        return out


def _explore(model: DftModel, prune: bool, budget: int) -> Ctmc:
    c = _Compiled(model)
    init = c.initial()
    reps = []
    keys: dict = {}
    rows, cols, vals = [], [], []
    failed_index = None

    def index_of(state) -> int:
        nonlocal failed_index
        if state[0][c.top] == FAILED:
            if failed_index is None:
                failed_index = len(reps)
                if failed_index >= budget:
                    raise StateBudgetExceeded(budget, failed_index)
                reps.append(None)
            return failed_index
        k = c.key(state, prune)
        i = keys.get(k)
        if i is None:
            i = len(reps)
            if i >= budget:
                raise StateBudgetExceeded(budget, i)
            keys[k] = i
            reps.append(state)
            queue.append(i)
        return i

    queue: deque[int] = deque()
    start = index_of(init)
    while queue:
        i = queue.popleft()
        state = reps[i]
        for e in c.enabled(state, prune):
            r = c.event_rate(state, e)
            if r <= 0.0:
                continue
            j = index_of(c.fire(state, e))
            if j == i:
                continue
            rows.append(i)
            cols.append(j)
            vals.append(r)
    n = len(reps)
    rates = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    rates.sum_duplicates()
    absorbing = frozenset() if failed_index is None else frozenset([failed_index])

    def label(i: int) -> str:
        return "FAILED" if reps[i] is None else c.describe(reps[i])

    failed_sets = None
    if not prune:
        failed_sets = [
            None if s is None else frozenset(c.names[e] for e in c.events if s[0][e] == FAILED) for s in reps
        ]
    return Ctmc(rates, start, absorbing, label, failed_sets)


# ---------------------------------------------------------------------------
# independent modules


def _closure(model: DftModel, root: str) -> set[str]:
    """Nodes whose behaviour can influence or be influenced by ``root``'s subtree."""
    # every spare gate that lists an event, as primary or as spare, competes for it
    users: dict[str, list[str]] = {}
    for g in model.gates:
        if g.kind in SPARE_KINDS:
            for c in g.children:
                users.setdefault(c, []).append(g.name)
    claim = {s: users[s] for s in spare_claimants(model)}
    fdeps = [g for g in model.gates if g.kind == "fdep"]
    out: set[str] = set()
    stack = [root]
    while stack:
        n = stack.pop()
        if n in out:
            continue
        out.add(n)
        node = model.nodes[n]
        if isinstance(node, GateNode):
            stack.extend(node.children)
        for g in claim.get(n, ()):
            stack.append(g)
        for f in fdeps:
            if n in f.children:
                out.add(f.name)
                stack.extend(f.children)
    return out


def _submodel(model: DftModel, root: str, members: set[str]) -> DftModel:
    nodes = {n: node for n, node in model.nodes.items() if n in members}
    return DftModel(root, nodes)


def _fdep_targets(model: DftModel) -> set[str]:
    return {c for g in model.gates if g.kind == "fdep" for c in g.children}


def _independent_children(model: DftModel, name: str) -> list[tuple[str, set[str]]] | None:
    node = model.nodes[name]
    if not isinstance(node, GateNode) or node.kind not in ("and", "or") or len(node.children) < 2:
        return None
    if name in _fdep_targets(model) or name in spare_claimants(model):
        return None
    parts = []
    used: set[str] = set()
    for c in dict.fromkeys(node.children):
        members = _closure(model, c)
        if members & used:
            return None
        used |= members
        parts.append((c, members))
    return parts


def _kron_sum(mats: Sequence[sp.spmatrix]) -> sp.csr_matrix:
    out = None
    for m in mats:
        m = sp.csr_matrix(m)
        if out is None:
            out = m
        else:
            out = sp.kron(out, sp.identity(m.shape[0], format="csr")) + sp.kron(
                sp.identity(out.shape[0], format="csr"), m
            )
    out = sp.csr_matrix(out)
    out.eliminate_zeros()
    return out


def _compose(kind: str, parts: list[Ctmc], budget: int) -> Ctmc:
    dims = []
    for p in parts:
        if len(p.absorbing) > 1:
            raise MarkovError("modules must have a single absorbing state")
    if kind == "or":
        trans, exits = [], []
        for p in parts:
            keep = np.array([i for i in range(p.n_states) if i not in p.absorbing], dtype=int)
            dims.append(keep)
            trans.append(p.rates[keep][:, keep])
            if p.absorbing:
                (f,) = p.absorbing
                exits.append(np.asarray(p.rates[keep][:, [f]].todense()).ravel())
            else:
                exits.append(np.zeros(len(keep)))
        n = int(np.prod([len(d) for d in dims]))
        if n + 1 > budget:
            raise StateBudgetExceeded(budget, n + 1)
        t = _kron_sum(trans)
        a = np.zeros(n)
        for k, e in enumerate(exits):
            left = int(np.prod([len(d) for d in dims[:k]]))
            right = int(np.prod([len(d) for d in dims[k + 1:]]))
            a += np.kron(np.kron(np.ones(left), e), np.ones(right))
        rates = sp.bmat([[t, sp.csr_matrix(a.reshape(-1, 1))], [sp.csr_matrix((1, n)), None]], format="csr")
        rates.eliminate_zeros()
        init = 0
        for d, p in zip(dims, parts):
            init = init * len(d) + int(np.flatnonzero(d == p.initial)[0])
        sizes = [len(d) for d in dims]

        def label(i: int) -> str:
            if i == n:
                return "FAILED"
            idx = np.unravel_index(i, sizes)
            return " | ".join(p.label(int(d[j])) for p, d, j in zip(parts, dims, idx))

        return Ctmc(rates, init, frozenset([n]), label)
    sizes = [p.n_states for p in parts]
    n = int(np.prod(sizes))
    if n > budget:
        raise StateBudgetExceeded(budget, n)
    if any(not p.absorbing for p in parts):
        # some input can never fail, so neither can the AND
        full = _kron_sum([p.rates for p in parts])
        absorbing: frozenset[int] = frozenset()
    else:
        full = _kron_sum([p.rates for p in parts])
        f = 0
        for p, s in zip(parts, sizes):
            f = f * s + next(iter(p.absorbing))
        absorbing = frozenset([f])
    init = 0
    for p, s in zip(parts, sizes):
        init = init * s + p.initial

    def label_and(i: int) -> str:
        if i in absorbing:
            return "FAILED"
        idx = np.unravel_index(i, sizes)
        return " | ".join(p.label(int(j)) for p, j in zip(parts, idx))

    return Ctmc(full, init, absorbing, label_and)


def build_ctmc(model: DftModel, prune: bool = True, compose: bool = True, budget: int | None = None) -> Ctmc:
    """Failure CTMC of a validated model.

    ``prune=False`` keeps every component in the state (and disables
    composition); it is meant for cross-checks on small models.
    """
    check(model)
    budget = state_budget() if budget is None else budget
    if not prune:
        return _explore(model, False, budget)
    return _build(model, model.toplevel, budget, compose)


def _build(model: DftModel, root: str, budget: int, compose: bool) -> Ctmc:
    parts = _independent_children(model, root) if compose else None
    if parts is None:
        members = _closure(model, root)
        return _explore(_submodel(model, root, members), True, budget)
    kind = model.gate(root).kind
    built = [_build(_submodel(model, c, m), c, budget, compose) for c, m in parts]
    return _compose(kind, built, budget)


# ---------------------------------------------------------------------------
# numerics


# below this the Poisson tail is lost to rounding anyway, and isf returns nan
MIN_TOL = 1e-16


def _poisson_weights(lam_t: float, tol: float) -> np.ndarray:
    right = int(poisson.isf(max(tol, MIN_TOL), lam_t)) + 1
    return poisson.pmf(np.arange(right + 1), lam_t)


def transient_failure_probability(ctmc: Ctmc, t: float, tol: float = 1e-10) -> float:
    """P(top event failed by time t) by uniformization.

    The Poisson series is cut where its tail mass drops below ``tol``, so
    the result is within ``tol`` of the exact value (up to rounding).
    Tolerances below ``MIN_TOL`` are treated as ``MIN_TOL``.
    """
    if t < 0:
        raise ValueError("time must be nonnegative")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if t == 0 or not ctmc.absorbing:
        return 0.0
    exits = ctmc.exit_rates()
    lam = float(exits.max())
    if lam == 0.0:
        return 0.0
    # row-stochastic kernel P = I + Q/Λ; iterate the row vector p ← p P
    kernel_t = (ctmc.rates / lam).T.tocsr()
    stay = 1.0 - exits / lam
    weights = _poisson_weights(lam * t, tol)
    absorbing = np.array(sorted(ctmc.absorbing))
    p = np.zeros(ctmc.n_states)
    p[ctmc.initial] = 1.0
    total = 0.0
    for w in weights:
        total += w * p[absorbing].sum()
        p = kernel_t @ p + stay * p
    return float(min(1.0, max(0.0, total)))


def _reaches(ctmc: Ctmc) -> np.ndarray:
    """Boolean mask of states from which some absorbing state is reachable."""
    back = ctmc.rates.T.tocsr()
    seen = np.zeros(ctmc.n_states, dtype=bool)
    stack = list(ctmc.absorbing)
    for s in stack:
        seen[s] = True
    while stack:
        j = stack.pop()
        for i in back.indices[back.indptr[j]:back.indptr[j + 1]]:
            if not seen[i]:
                seen[i] = True
                stack.append(i)
    return seen


def _reachable(ctmc: Ctmc) -> np.ndarray:
    fwd = ctmc.rates
    seen = np.zeros(ctmc.n_states, dtype=bool)
    seen[ctmc.initial] = True
    stack = [ctmc.initial]
    while stack:
        i = stack.pop()
        for j in fwd.indices[fwd.indptr[i]:fwd.indptr[i + 1]]:
            if not seen[j]:
                seen[j] = True
                stack.append(j)
    return seen


def mean_time_to_failure(ctmc: Ctmc) -> float:
    """Expected absorption time from the initial state; ``inf`` if absorption is not certain."""
    if ctmc.initial in ctmc.absorbing:
        return 0.0
    reach = _reachable(ctmc)
    good = _reaches(ctmc)
    if not ctmc.absorbing or (reach & ~good).any():
        return float("inf")
    transient = np.array([i for i in np.flatnonzero(reach) if i not in ctmc.absorbing])
    sub = ctmc.rates[transient][:, transient]
    exits = ctmc.exit_rates()[transient]
    a = sp.diags(exits) - sub
    try:
        m = spsolve(a.tocsc(), np.ones(len(transient)))
    except RuntimeError as exc:
        raise SingularSystem(str(exc)) from None
    m = np.atleast_1d(m)
    if not np.all(np.isfinite(m)):
        raise SingularSystem("absorption-time system is singular")
    return float(m[int(np.flatnonzero(transient == ctmc.initial)[0])])
