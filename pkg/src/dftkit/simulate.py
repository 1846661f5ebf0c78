"""Monte Carlo estimate of the top-event failure probability.

Trajectories are simulated event by event, vectorised over a chunk of
trials.  At every step each operational basic event competes with its
current rate (λ when active, α·λ when a dormant spare); because the
exponential is memoryless, redrawing all clocks after each firing is exact.
The instantaneous consequences of a firing (FDEP propagation, spare claims,
gate failures) follow the rules documented in :mod:`dftkit.markov`, but the
code here is written independently so that the two can referee each other.

Trees without spare gates also have a static path: draw every event time
once and evaluate the structure function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .algebra import eval_array
from .galileo import BasicEvent, DftModel, GateNode, SPARE_KINDS, check, dormancy, to_structure_function

CHUNK = 1 << 16


class ZeroTrials(ValueError):
    pass


@dataclass(frozen=True)
class McEstimate:
    p_hat: float
    trials: int
    stderr: float
    seed: int

    @classmethod
    def from_count(cls, failures: int, trials: int, seed: int) -> "McEstimate":
        p = failures / trials
        return cls(p, trials, math.sqrt(p * (1.0 - p) / trials), seed)

    def interval(self, k: float = 3.0) -> tuple[float, float]:
        return self.p_hat - k * self.stderr, self.p_hat + k * self.stderr

    def covers(self, p: float, k: float = 3.0) -> bool:
        lo, hi = self.interval(k)
        return lo <= p <= hi


@dataclass
class Trajectories:
    """Per-trial failure times; ``inf`` where an event had not failed when the run stopped."""

    events: tuple[str, ...]
    fail_times: np.ndarray
    top_time: np.ndarray


class _Program:
    def __init__(self, model: DftModel):
        names = list(model.nodes)
        ix = {n: i for i, n in enumerate(names)}
        self.n = len(names)
        self.top = ix[model.toplevel]
        self.event_ix = np.array([ix[e.name] for e in model.events], dtype=int)
        self.event_names = tuple(e.name for e in model.events)
        self.rate = np.array([e.rate for e in model.events])
        spare_of: dict[int, list[int]] = {}
        gates = [g for g in model.gates]
        self.fdeps = [(ix[g.children[0]], [ix[c] for c in g.children[1:]]) for g in gates if g.kind == "fdep"]
        self.spare_gates = [g for g in gates if g.kind in SPARE_KINDS]
        self.slot = {g.name: k for k, g in enumerate(self.spare_gates)}
        for g in self.spare_gates:
            for c in g.children[1:]:
                spare_of.setdefault(ix[c], []).append(ix[g.name])
        self.spares = sorted(spare_of)
        self.spare_col = {s: k for k, s in enumerate(self.spares)}
        # dormant rate per event column; equal to the active rate for non-spares
        self.dormant = self.rate.copy()
        self.spare_event_col = []
        for k, e in enumerate(model.events):
            if ix[e.name] in spare_of:
                self.dormant[k] = dormancy(model, e.name) * e.rate
                self.spare_event_col.append((k, self.spare_col[ix[e.name]]))
        self.ops = []
        done: set[str] = set()

        def visit(name: str):
            if name in done or not isinstance(model.nodes[name], GateNode):
                return
            done.add(name)
            g = model.nodes[name]
            for c in g.children:
                visit(c)
            if g.kind != "fdep":
                self.ops.append((ix[name], g.kind, [ix[c] for c in g.children], g.k, self.slot.get(name)))

        for g in gates:
            visit(g.name)
        self.initial_owner = [-1] * len(self.spares)
        for g in self.spare_gates:
            p = ix[g.children[0]]
            if p in self.spare_col:
                self.initial_owner[self.spare_col[p]] = ix[g.name]

    def settle(self, failed, failsafe, using, owner) -> None:
        """Apply all instantaneous consequences in place (arrays over the running trials)."""
        rows = np.arange(failed.shape[0])
        while True:
            changed = False
            for trig, deps in self.fdeps:
                hit = failed[:, trig]
                for d in deps:
                    new = hit & ~failed[:, d]
                    if new.any():
                        failed[new, d] = True
                        changed = True
            for g, kind, kids, k, slot in self.ops:
                up = ~failed[:, g] & ~failsafe[:, g]
                if not up.any():
                    continue
                if slot is not None:
                    now = self._spare(g, kids, slot, up, rows, failed, using, owner)
                else:
                    kf = failed[:, kids]
                    if kind in ("and", "pand"):
                        now = kf.all(axis=1)
                    elif kind == "or":
                        now = kf.any(axis=1)
                    else:
                        now = kf.sum(axis=1) >= k
                    now &= up
                if now.any():
                    failed[now, g] = True
                    changed = True
            if not changed:
                break
        for g, kind, kids, _, _ in self.ops:
            if kind != "pand":
                continue
            kf = failed[:, kids]
            # failed input with an earlier input still working
            earlier_up = np.cumsum(~kf, axis=1) > 0
            out_of_order = (kf & np.roll(earlier_up, 1, axis=1) & (np.arange(len(kids)) > 0)).any(axis=1)
            failsafe[:, g] |= out_of_order & ~failed[:, g]

    def _spare(self, g, kids, slot, up, rows, failed, using, owner):
        kids_arr = np.array(kids)
        cur = kids_arr[using[:, slot]]
        need = up & failed[rows, cur]
        if not need.any():
            return np.zeros_like(up)
        for i in range(1, len(kids)):
            s = kids[i]
            col = self.spare_col[s]
            take = need & (using[:, slot] < i) & ~failed[:, s] & (owner[:, col] == -1)
            owner[take, col] = g
            using[take, slot] = i
            need &= ~take
        return need

    def run(self, rng: np.random.Generator, size: int, horizon: float) -> tuple[np.ndarray, np.ndarray]:
        failed = np.zeros((size, self.n), dtype=bool)
        failsafe = np.zeros((size, self.n), dtype=bool)
        using = np.zeros((size, len(self.spare_gates)), dtype=int)
        owner = np.tile(np.array(self.initial_owner, dtype=int), (size, 1)).reshape(size, len(self.spares))
        self.settle(failed, failsafe, using, owner)
        clock = np.zeros(size)
        fail_times = np.full((size, len(self.event_ix)), np.inf)
        top_time = np.full(size, np.inf)
        running = np.flatnonzero(~failed[:, self.top])
        top_time[failed[:, self.top]] = 0.0
        while running.size:
            f = failed[running]
            ev_failed = f[:, self.event_ix]
            rates = np.where(ev_failed, 0.0, self.rate)
            for k, col in self.spare_event_col:
                dormant = owner[running, col] == -1
                rates[dormant, k] = np.where(ev_failed[dormant, k], 0.0, self.dormant[k])
            total = rates.sum(axis=1)
            live = total > 0
            step = np.full(running.size, np.inf)
            step[live] = rng.exponential(1.0 / total[live])
            u = rng.random(running.size) * total
            when = clock[running] + step
            go = live & (when <= horizon)
            running, rates, u, when, f = running[go], rates[go], u[go], when[go], f[go]
            if not running.size:
                break
            choice = (np.cumsum(rates, axis=1) <= u[:, None]).sum(axis=1)
            choice = np.minimum(choice, rates.shape[1] - 1)
            f[np.arange(running.size), self.event_ix[choice]] = True
            fs, us, ow = failsafe[running], using[running], owner[running]
            self.settle(f, fs, us, ow)
            failed[running], failsafe[running], using[running], owner[running] = f, fs, us, ow
            clock[running] = when
            newly = f[:, self.event_ix] & np.isinf(fail_times[running])
            ft = fail_times[running]
            ft[newly] = np.broadcast_to(when[:, None], ft.shape)[newly]
            fail_times[running] = ft
            down = f[:, self.top]
            top_time[running[down]] = when[down]
            running = running[~down]
        return fail_times, top_time


def _chunks(trials: int, seed: int):
    n = -(-trials // CHUNK)
    for k, child in enumerate(np.random.SeedSequence(seed).spawn(n)):
        yield np.random.default_rng(child), min(CHUNK, trials - k * CHUNK)


def has_spares(model: DftModel) -> bool:
    return any(g.kind in SPARE_KINDS for g in model.gates)


def simulate_trajectories(model: DftModel, trials: int, seed: int, horizon: float = math.inf) -> Trajectories:
    """Run full trajectories and keep every event's failure time."""
    check(model)
    if trials < 1:
        raise ZeroTrials("at least one trial is needed")
    prog = _Program(model)
    times, tops = [], []
    for rng, size in _chunks(trials, seed):
        ft, tt = prog.run(rng, size, horizon)
        times.append(ft)
        tops.append(tt)
    return Trajectories(prog.event_names, np.vstack(times), np.concatenate(tops))


def _static_failures(model: DftModel, t: float, trials: int, seed: int) -> int:
    sf = to_structure_function(model)
    rates = {e.name: e.rate for e in model.events}
    failures = 0
    for rng, size in _chunks(trials, seed):
        env = {n: rng.exponential(1.0 / rates[n], size) for n in rates}
        failures += int(np.count_nonzero(eval_array(sf.term, env, shape=(size,)) <= t))
    return failures


def simulate(model: DftModel, t: float, trials: int, seed: int = 0, method: str = "auto") -> McEstimate:
    """Fraction of trials whose top event has failed by time ``t``.

    ``method`` is ``trajectory``, ``static`` (spare-free trees only) or
    ``auto``, which picks static whenever it applies.
    """
    check(model)
    if trials < 1:
        raise ZeroTrials("at least one trial is needed")
    if t < 0:
        raise ValueError("time must be nonnegative")
    if method not in ("auto", "trajectory", "static"):
        raise ValueError(f"unknown method {method!r}")
    if method == "static" and has_spares(model):
        raise ValueError("the static method does not handle spare gates")
    if t == 0:
        return McEstimate.from_count(0, trials, seed)
    if method == "static" or (method == "auto" and not has_spares(model)):
        return McEstimate.from_count(_static_failures(model, t, trials, seed), trials, seed)
    prog = _Program(model)
    failures = 0
    for rng, size in _chunks(trials, seed):
        _, top = prog.run(rng, size, t)
        failures += int(np.count_nonzero(top <= t))
    return McEstimate.from_count(failures, trials, seed)
