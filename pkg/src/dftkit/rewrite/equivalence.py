"""Deciding whether two event terms denote the same failure time.

Every operator of the algebra returns one of its inputs, 0 or +inf, and
which one it returns depends only on order and equality comparisons between
inputs.  The value of a term is therefore determined by the *comparison
pattern* of its variables: which of them are NEVER and how the rest are
ordered, ties included.  Enumerating the patterns (ordered set partitions
of the finite variables for every NEVER subset) turns equivalence over the
extended reals into a finite check.

Finite variables are represented by the times ``1..k``, keeping ALWAYS (0)
strictly below every basic event; failures at exactly t = 0 have measure
zero for the distributions considered and are not part of the domain.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Mapping, Sequence

import numpy as np

from ..algebra import (
    Before,
    ColdSpare,
    NeverEvents,
    SideCondition,
    Term,
    TermEqNever,
    Var,
    eval_array,
    eval_term,
    free_variables,
)

DEFAULT_MAX_VARS = 7


class EquivalenceError(ValueError):
    pass


class TooManyVariables(EquivalenceError):
    pass


class UnsatisfiableConditions(EquivalenceError):
    pass


@dataclass(frozen=True)
class Exact:
    max_vars: int = DEFAULT_MAX_VARS


@dataclass(frozen=True)
class Sampled:
    trials: int = 1_000_000
    seed: int = 0
    batch: int = 50_000


@dataclass(frozen=True)
class Equivalent:
    patterns: int

    def __bool__(self) -> bool:
        return True

    def describe(self) -> str:
        return f"Equivalent ({self.patterns} comparison patterns)"


@dataclass(frozen=True)
class SampledEquivalent:
    trials: int
    seed: int

    def __bool__(self) -> bool:
        return True

    def describe(self) -> str:
        return f"SampledEquivalent ({self.trials} valuations, seed {self.seed})"


@dataclass(frozen=True)
class NotEquivalent:
    witness: Mapping[str, float]
    left: float
    right: float

    def __bool__(self) -> bool:
        return False

    def describe(self) -> str:
        w = ", ".join(f"{k}={_fmt(v)}" for k, v in self.witness.items())
        return f"NotEquivalent: {{{w}}} gives {_fmt(self.left)} vs {_fmt(self.right)}"


EquivalenceVerdict = Equivalent | SampledEquivalent | NotEquivalent


def _fmt(x: float) -> str:
    return "NEVER" if x == np.inf else f"{x:g}"


# ---------------------------------------------------------------------------
# comparison patterns


def _weak_orders(n: int) -> list[tuple[int, ...]]:
    """All weak orderings of n items as rank tuples with ranks 1..k."""
    out: list[tuple[int, ...]] = [()]
    for _ in range(n):
        nxt = []
        for ranks in out:
            k = max(ranks, default=0)
            # join an existing block
            for r in range(1, k + 1):
                nxt.append(ranks + (r,))
            # open a new block at any position, shifting the ones above it
            for r in range(1, k + 2):
                shifted = tuple(x + 1 if x >= r else x for x in ranks)
                nxt.append(shifted + (r,))
        out = nxt
    return sorted(out)


@lru_cache(maxsize=None)
def comparison_patterns(n: int) -> np.ndarray:
    """Representative valuations for every comparison pattern of n variables.

    Row order: NEVER subsets by increasing size (then lexicographically),
    weak orders lexicographically inside each subset.
    """
    rows = []
    for size in range(n + 1):
        for never in combinations(range(n), size):
            rest = [i for i in range(n) if i not in never]
            for ranks in _weak_orders(len(rest)):
                row = [np.inf] * n
                for i, r in zip(rest, ranks):
                    row[i] = float(r)
                rows.append(row)
    arr = np.array(rows, dtype=float).reshape(len(rows), n)
    arr.setflags(write=False)
    return arr


def pattern_count(n: int) -> int:
    return comparison_patterns(n).shape[0]


# ---------------------------------------------------------------------------


def _universe(t1: Term, t2: Term, conditions: Sequence[SideCondition]) -> tuple[str, ...]:
    names = set(free_variables(t1)) | set(free_variables(t2))
    for c in conditions:
        names.update(c.variables())
    return tuple(sorted(names))


def _mask(conditions, env, n):
    ok = np.ones(n, dtype=bool)
    for c in conditions:
        ok &= c.mask(env)
    return ok


def _first_difference(names, env, v1, v2, ok):
    diff = ok & (v1 != v2)
    if not diff.any():
        return None
    i = int(np.argmax(diff))
    witness = {name: float(env[name][i]) for name in names}
    return NotEquivalent(witness, float(v1[i]), float(v2[i]))


def decide_equivalence(
    t1: Term,
    t2: Term,
    conditions: Sequence[SideCondition] = (),
    mode: Exact | Sampled | None = None,
) -> EquivalenceVerdict:
    """Decide ``t1 = t2`` on every valuation satisfying ``conditions``."""
    mode = mode or Exact()
    names = _universe(t1, t2, conditions)
    if isinstance(mode, Exact):
        return _decide_exact(t1, t2, conditions, names, mode.max_vars)
    if mode.trials < 1:
        raise ValueError("sampled equivalence needs at least one trial")
    return _decide_sampled(t1, t2, conditions, names, mode)


def _decide_exact(t1, t2, conditions, names, max_vars):
    n = len(names)
    if n > max_vars:
        raise TooManyVariables(f"{n} variables exceed the exact-mode bound of {max_vars}")
    table = comparison_patterns(n)
    env = {name: table[:, j] for j, name in enumerate(names)}
    rows = table.shape[0]
    ok = _mask(conditions, env, rows)
    if not ok.any():
        raise UnsatisfiableConditions("no comparison pattern satisfies the side conditions")
    v1 = eval_array(t1, env, shape=(rows,))
    v2 = eval_array(t2, env, shape=(rows,))
    verdict = _first_difference(names, env, v1, v2, ok)
    if verdict is not None:
        return verdict
    return Equivalent(int(ok.sum()))


def _sample_env(rng, names, pinned, size):
    env = {}
    for name in names:
        if name in pinned:
            env[name] = np.full(size, np.inf)
            continue
        t = rng.random(size)
        never = rng.random(size) < 0.25
        t[never] = np.inf
        env[name] = t
    return env


def _repair(rng, env, conditions, size):
    """Nudge a batch towards the simpler side conditions.

    Only the proposal changes; rejection still decides acceptance, so this
    raises the acceptance rate without excluding any satisfying valuation
    from the support.
    """
    for c in conditions:
        if isinstance(c, NeverEvents) and isinstance(c.a, Var) and isinstance(c.b, Var):
            a, b = env[c.a.name], env[c.b.name]
            both = np.isfinite(a) & np.isfinite(b)
            drop_a = both & (rng.random(size) < 0.5)
            a[drop_a] = np.inf
            b[both & ~drop_a] = np.inf
        elif (
            isinstance(c, TermEqNever)
            and isinstance(c.term, Before)
            and isinstance(c.term.left, Var)
            and c.term.left.name not in free_variables(c.term.right)
        ):
            x = env[c.term.left.name]
            r = eval_array(c.term.right, env, shape=(size,))
            bad = x < r
            lifted = np.where(np.isinf(r), np.inf, r + (1.0 - np.minimum(r, 1.0)) * rng.random(size))
            x[bad] = lifted[bad]


def _decide_sampled(t1, t2, conditions, names, mode: Sampled):
    rng = np.random.default_rng(mode.seed)
    # cold-spare dormant variables are fixed at NEVER rather than rejected
    pinned = {c.name for c in conditions if isinstance(c, ColdSpare)}
    accepted = 0
    drawn = 0
    while accepted < mode.trials:
        size = mode.batch
        env = _sample_env(rng, names, pinned, size)
        _repair(rng, env, conditions, size)
        ok = _mask(conditions, env, size)
        drawn += size
        if accepted == 0 and drawn >= 200 * mode.batch and not ok.any():
            raise UnsatisfiableConditions("rejection sampling found no satisfying valuation")
        # keep exactly `trials` accepted valuations for determinism
        need = mode.trials - accepted
        idx = np.flatnonzero(ok)[:need]
        if idx.size:
            sub = {k: v[idx] for k, v in env.items()}
            v1 = eval_array(t1, sub, shape=(idx.size,))
            v2 = eval_array(t2, sub, shape=(idx.size,))
            verdict = _first_difference(names, sub, v1, v2, np.ones(idx.size, dtype=bool))
            if verdict is not None:
                return verdict
            accepted += idx.size
    return SampledEquivalent(mode.trials, mode.seed)


def check_valuation(t1: Term, t2: Term, valuation: Mapping[str, float]) -> bool:
    """Scalar cross-check used to confirm witnesses."""
    return eval_term(t1, valuation) == eval_term(t2, valuation)
