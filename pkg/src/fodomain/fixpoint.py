"""Finite-instance transition systems and the abstract least fixpoint.

Transitions are guarded actions with relation updates.  All reasoning is
over structures whose universe sizes stay within per-sort bounds, so the
search for counterexamples to induction (CTIs) is explicit enumeration.
"""

from __future__ import annotations

import itertools
import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .expr import Expr
from .fol import Signature, State, Structure, Var, enumerate_structures_upto, count_structures, size_vectors
from .lang import Formula, LanguageSpec
from .lset import LSet, make_lset
from .weaken import weaken_set

Bounds = Mapping[str, int]


class StateExplosion(RuntimeError):
    pass


class CapExceeded(RuntimeError):
    """The fixpoint loop hit an iteration or time cap; ``result`` holds the partial run."""

    def __init__(self, message: str, result: LfpResult):
        super().__init__(message)
        self.result = result


@dataclass(frozen=True)
class Action:
    name: str
    params: tuple[Var, ...]
    guard: Expr
    updates: tuple[tuple[str, tuple[tuple[Var, ...], Expr]], ...] = ()


@dataclass(frozen=True)
class ProtocolModel:
    signature: Signature
    init: Expr
    actions: tuple[Action, ...] = ()
    safety: Expr | None = None

    def __post_init__(self):
        for a in self.actions:
            for rel, (vs, _) in a.updates:
                if tuple(v.sort for v in vs) != self.signature.arity(rel):
                    raise ValueError(f"action {a.name}: update of {rel} has wrong sorts")


def check_bounds(sig: Signature, bounds: Bounds) -> dict[str, int]:
    missing = [s for s in sig.sorts if s not in bounds]
    if missing:
        raise ValueError(f"no bound given for sorts {missing}")
    bad = [s for s in sig.sorts if bounds[s] < 1]
    if bad:
        raise ValueError(f"bounds must be at least 1 (sorts {bad})")
    return {s: bounds[s] for s in sig.sorts}


def _structure(s: State | Structure) -> Structure:
    return s.structure if isinstance(s, State) else s


def successor_structures(model: ProtocolModel, st: Structure) -> list[Structure]:
    out: list[Structure] = []
    seen = set()
    for action in model.actions:
        guard = action.guard.compiled()
        names = [p.name for p in action.params]
        ranges = [range(st.universe[p.sort]) for p in action.params]
        updates = [(rel, [v.name for v in vs], [range(st.universe[v.sort]) for v in vs], e.compiled())
                   for rel, (vs, e) in action.updates]
        for vals in itertools.product(*ranges):
            env = dict(zip(names, vals))
            if not guard(st, env):
                continue
            changed = {}
            for rel, vnames, vranges, fn in updates:
                tuples = []
                for t in itertools.product(*vranges):
                    local = dict(env)
                    local.update(zip(vnames, t))
                    if fn(st, local):
                        tuples.append(t)
                changed[rel] = frozenset(tuples)
            post = st.with_relations(changed) if changed else st
            if post not in seen:
                seen.add(post)
                out.append(post)
    return out


def successors(model: ProtocolModel, s: State | Structure) -> list[State]:
    """Post-states of every enabled action instance, deduplicated."""
    return [State(t) for t in successor_structures(model, _structure(s))]


def initial_states(model: ProtocolModel, bounds: Bounds) -> list[State]:
    bounds = check_bounds(model.signature, bounds)
    init = model.init.compiled()
    return [State(st) for st in enumerate_structures_upto(model.signature, bounds) if init(st, {})]


def reachable(model: ProtocolModel, bounds: Bounds, max_states: int | None = None) -> list[State]:
    """Breadth-first closure of the initial states, in discovery order."""
    seen: dict[Structure, None] = {}
    queue = deque()
    for s in initial_states(model, bounds):
        if s.structure not in seen:
            seen[s.structure] = None
            queue.append(s.structure)
    while queue:
        if max_states is not None and len(seen) > max_states:
            raise StateExplosion(f"more than {max_states} reachable states")
        st = queue.popleft()
        for t in successor_structures(model, st):
            if t not in seen:
                seen[t] = None
                queue.append(t)
    if max_states is not None and len(seen) > max_states:
        raise StateExplosion(f"more than {max_states} reachable states")
    return [State(st) for st in seen]


class FormulaSet:
    """Naive stand-in for an LSet when only a list of formulas is at hand."""

    def __init__(self, formulas: Iterable[Formula]):
        self._members = set(formulas)

    def __contains__(self, phi):
        return phi in self._members

    def __len__(self):
        return len(self._members)

    def unsat(self, s: State) -> set[Formula]:
        return {phi for phi in self._members if not phi.holds(s)}


class CtiFinder:
    """Incremental CTI search over all structures within the bounds.

    The cached facts are only valid while the searched formula set gets
    weaker between calls, which is what the fixpoint loop does: a structure
    that satisfies the set keeps satisfying it, and a structure all of
    whose successors satisfy it stays settled.
    """

    def __init__(self, model: ProtocolModel, bounds: Bounds, simulate: bool = True,
                 max_states: int | None = None, threads: int = 1):
        self.model = model
        self.bounds = check_bounds(model.signature, bounds)
        total = sum(count_structures(model.signature, b)
                    for b in size_vectors(model.signature, self.bounds))
        if max_states is not None and total > max_states:
            raise StateExplosion(f"{total} structures within bounds exceed the cap of {max_states}")
        self.structures = list(enumerate_structures_upto(model.signature, self.bounds))
        self._states = [State(st) for st in self.structures]
        self._index = {st: i for i, st in enumerate(self.structures)}
        init = model.init.compiled()
        self.initial = [i for i, st in enumerate(self.structures) if init(st, {})]
        self.simulate = simulate
        self.threads = max(1, threads)
        n = len(self.structures)
        self._succ: dict[int, list[int]] = {}
        self._sat = bytearray(n)
        self._closed = bytearray(n)
        self._witness: dict[int, Formula] = {}
        self._frontier: deque[int] = deque()
        self._queued: set[int] = set()
        self._last: int | None = None
        self._owner = None
        self.ctis: list[int] = []

    def successors_of(self, i: int) -> list[int]:
        out = self._succ.get(i)
        if out is None:
            out = [self._index[t] for t in successor_structures(self.model, self.structures[i])]
            self._succ[i] = out
        return out

    def _violates(self, i: int, R) -> bool:
        if self._sat[i]:
            return False
        w = self._witness.get(i)
        if w is not None and w in R:
            return True
        bad = R.unsat(self._states[i])
        if not bad:
            self._sat[i] = 1
            self._witness.pop(i, None)
            return False
        self._witness[i] = min(bad, key=lambda f: f.key)
        return True

    def _first_bad_successor(self, i: int, R) -> int | None:
        for j in self.successors_of(i):
            if self._violates(j, R):
                return j
        return None

    def _scan(self, lo: int, hi: int, R) -> int | None:
        closed = self._closed
        for i in range(lo, hi):
            if closed[i] or self._violates(i, R):
                continue
            j = self._first_bad_successor(i, R)
            if j is not None:
                return j
            closed[i] = 1
        return None

    def _reset(self, R) -> None:
        n = len(self.structures)
        self._sat = bytearray(n)
        self._closed = bytearray(n)
        self._witness.clear()
        self._frontier.clear()
        self._queued.clear()
        self._last = None
        self._owner = R

    def find(self, R) -> State | None:
        if R is not self._owner:
            self._reset(R)
        if self._last is not None:
            j, self._last = self._last, None
            if self.simulate and not self._violates(j, R) and j not in self._queued:
                self._frontier.append(j)
                self._queued.add(j)
        found = self._search(R)
        if found is not None:
            self._last = found
            self.ctis.append(found)
            return self._states[found]
        return None

    def _search(self, R) -> int | None:
        frontier = self._frontier
        while frontier:
            i = frontier[0]
            j = self._first_bad_successor(i, R)
            if j is not None:
                return j
            frontier.popleft()
            self._closed[i] = 1
            for j in self.successors_of(i):
                if not self._closed[j] and j not in self._queued:
                    self._queued.add(j)
                    frontier.append(j)
        for i in self.initial:
            if self._violates(i, R):
                return i
        n = len(self.structures)
        if self.threads == 1 or n < 2 * self.threads:
            return self._scan(0, n, R)
        step = -(-n // self.threads)
        chunks = [(lo, min(n, lo + step)) for lo in range(0, n, step)]
        with ThreadPoolExecutor(self.threads) as pool:
            results = list(pool.map(lambda c: self._scan(c[0], c[1], R), chunks))
        return next((r for r in results if r is not None), None)


def find_cti(model: ProtocolModel, bounds: Bounds, R, cache: CtiFinder | None = None) -> State | None:
    """A bounded CTI for ``R``, or None when ``R`` is inductive within the bounds."""
    finder = cache if cache is not None else CtiFinder(model, bounds)
    return finder.find(R)


@dataclass
class LfpStats:
    iterations: int = 0
    peak_size: int = 1
    weaken_seconds: float = 0.0
    cti_seconds: float = 0.0
    total_seconds: float = 0.0
    structures: int = 0

    @property
    def weaken_percent(self) -> float:
        busy = self.weaken_seconds + self.cti_seconds
        return 100.0 * self.weaken_seconds / busy if busy > 0 else 0.0


@dataclass
class LfpResult:
    formulas: list[Formula]
    stats: LfpStats
    lset: LSet = field(repr=False, default=None)


def lfp_symbolic_abstraction(model: ProtocolModel, bounds: Bounds, spec: LanguageSpec,
                             max_iters: int | None = None, time_limit: float | None = None,
                             max_states: int | None = None, threads: int = 1,
                             simulate: bool = True, on_iteration=None) -> LfpResult:
    """Strongest conjunction of language formulas inductive within the bounds.

    Starts from the bottom formula and weakens by each CTI found until none
    remains.  Raises ``CapExceeded`` when a cap is hit.
    """
    start = time.perf_counter()
    R = make_lset(spec)
    R.insert(spec.bottom)
    finder = CtiFinder(model, bounds, simulate=simulate, max_states=max_states, threads=threads)
    stats = LfpStats(structures=len(finder.structures))
    while True:
        t0 = time.perf_counter()
        cti = finder.find(R)
        t1 = time.perf_counter()
        stats.cti_seconds += t1 - t0
        if cti is None:
            break
        if max_iters is not None and stats.iterations >= max_iters:
            stats.total_seconds = time.perf_counter() - start
            raise CapExceeded(f"iteration cap of {max_iters} reached",
                              LfpResult(R.formulas(), stats, R))
        if time_limit is not None and t1 - start > time_limit:
            stats.total_seconds = time.perf_counter() - start
            raise CapExceeded(f"time limit of {time_limit}s reached",
                              LfpResult(R.formulas(), stats, R))
        weaken_set(R, cti, threads=threads)
        stats.weaken_seconds += time.perf_counter() - t1
        stats.iterations += 1
        stats.peak_size = max(stats.peak_size, len(R))
        if on_iteration is not None:
            on_iteration(stats.iterations, cti, R)
    stats.total_seconds = time.perf_counter() - start
    return LfpResult(R.formulas(), stats, R)


@dataclass
class InductiveResult:
    inductive: bool
    counterexample: State | None = None

    def __bool__(self):
        return self.inductive


def _as_set(R):
    return R if isinstance(R, (LSet, FormulaSet)) else FormulaSet(R)


def check_inductive(model: ProtocolModel, bounds: Bounds, R,
                    max_states: int | None = None) -> InductiveResult:
    cti = CtiFinder(model, bounds, max_states=max_states).find(_as_set(R))
    return InductiveResult(cti is None, cti)


def check_safety(model: ProtocolModel, bounds: Bounds, R) -> bool:
    """Does every bounded structure satisfying all of ``R`` satisfy the safety formula?"""
    if model.safety is None:
        raise ValueError("the model has no safety formula")
    R = _as_set(R)
    safe = model.safety.compiled()
    bounds = check_bounds(model.signature, bounds)
    for st in enumerate_structures_upto(model.signature, bounds):
        if not R.unsat(State(st)) and not safe(st, {}):
            return False
    return True
