"""Brute-force reference implementations, transcribed from the definitions.

Everything here works by enumerating the whole language and all bounded
states.  Nothing depends on the weakening engine, the LSet indexes or the
CTI search; only satisfaction, subsumption and canonicalization of the
language module are used.

``LanguageOracle`` precomputes truth tables and the subsumption relation as
bitmasks so that many queries against one language stay affordable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from .fol import Signature, State, Structure, enumerate_structures_upto
from .lang import Formula, LanguageSpec, enumerate_language, free_variables, spec_signature


class BudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class OracleBudget:
    max_formulas: int = 5000
    max_structures: int = 50_000
    max_states: int = 200_000

    def __post_init__(self):
        if min(self.max_formulas, self.max_structures, self.max_states) < 1:
            raise ValueError("budgets must be positive")


DEFAULT_BUDGET = OracleBudget()


def _language(spec, budget):
    size = spec.size()
    if size > budget.max_formulas:
        raise BudgetExceeded(f"language has {size} formulas, budget is {budget.max_formulas}")
    return enumerate_language(spec)


def _structures(sig, bounds, budget):
    out = []
    for st in enumerate_structures_upto(sig, bounds):
        out.append(st)
        if len(out) > budget.max_structures:
            raise BudgetExceeded(f"more than {budget.max_structures} structures")
    return out


def default_bounds(sig: Signature, size: int = 2) -> dict[str, int]:
    return {s: size for s in sig.sorts}


def bounded_states(spec: LanguageSpec, bounds: Mapping[str, int] | None = None,
                   sig: Signature | None = None,
                   budget: OracleBudget = DEFAULT_BUDGET) -> list[State]:
    """Every bounded structure paired with every assignment of the free variables."""
    sig = sig or spec_signature(spec)
    bounds = bounds or default_bounds(sig)
    free = free_variables(spec)
    out = []
    for st in _structures(sig, bounds, budget):
        for nu in st.assignments(free):
            out.append(State(st, nu))
            if len(out) > budget.max_states:
                raise BudgetExceeded(f"more than {budget.max_states} states")
    return out


def naive_min(spec: LanguageSpec, formulas: Iterable[Formula]) -> set[Formula]:
    """Members not strictly subsumed by another member."""
    fs = set(formulas)
    return {f for f in fs if not any(g != f and spec.subsumes(g, f) for g in fs)}


def naive_weaken(spec: LanguageSpec, phi: Formula, s: State,
                 budget: OracleBudget = DEFAULT_BUDGET) -> set[Formula]:
    """Minimal canonical forms of language formulas subsumed by ``phi`` and true in ``s``."""
    cands = {spec.canon(psi) for psi in _language(spec, budget)
             if spec.subsumes(phi, psi) and psi.holds(s)}
    return naive_min(spec, cands)


def upward_closure(spec: LanguageSpec, F: Iterable[Formula],
                   budget: OracleBudget = DEFAULT_BUDGET) -> list[Formula]:
    F = list(F)
    return [phi for phi in _language(spec, budget) if any(spec.subsumes(f, phi) for f in F)]


def semantic_entails(spec: LanguageSpec, phi: Formula, psi: Formula,
                     bounds: Mapping[str, int] | None = None, sig: Signature | None = None,
                     budget: OracleBudget = DEFAULT_BUDGET) -> bool:
    return all(psi.holds(s) for s in bounded_states(spec, bounds, sig, budget) if phi.holds(s))


def naive_unsat(formulas: Iterable[Formula], s: State) -> set[Formula]:
    return {f for f in formulas if not f.holds(s)}


def naive_subsuming(spec: LanguageSpec, formulas: Iterable[Formula], phi: Formula) -> set[Formula]:
    return {f for f in formulas if spec.subsumes(f, phi)}


def naive_filters(spec: LanguageSpec, formulas: Iterable[Formula], state: State | None = None,
                  phi: Formula | None = None) -> set[Formula]:
    """``unsat`` when given a state, ``subsuming`` when given a formula."""
    if (state is None) == (phi is None):
        raise ValueError("pass exactly one of state or phi")
    if state is not None:
        return naive_unsat(formulas, state)
    return naive_subsuming(spec, formulas, phi)


def kleene_lfp(model, bounds: Mapping[str, int], spec: LanguageSpec,
               budget: OracleBudget = DEFAULT_BUDGET) -> set[Formula]:
    """Iterate the abstract transformer from the set of all canonical formulas.

    Each round keeps the formulas that hold in every initial state and in
    every successor of every bounded structure satisfying all current
    formulas.
    """
    from .fixpoint import successor_structures

    if spec.size() > budget.max_formulas:
        raise BudgetExceeded(f"language has {spec.size()} formulas")
    F = list(enumerate_language(spec, canonical_only=True))
    structures = _structures(model.signature, bounds, budget)
    init = model.init.compiled()
    initial = [st for st in structures if init(st, {})]
    succ: dict[Structure, list[Structure]] = {}
    while True:
        good = [st for st in structures if all(f.holds(State(st)) for f in F)]
        posts: dict[Structure, None] = dict.fromkeys(initial)
        for st in good:
            if st not in succ:
                succ[st] = successor_structures(model, st)
            posts.update(dict.fromkeys(succ[st]))
        states = [State(st) for st in posts]
        kept = [f for f in F if all(f.holds(s) for s in states)]
        if len(kept) == len(F):
            return set(F)
        F = kept


class LanguageOracle:
    """Bitmask tables for one enumerable language over bounded states.

    ``truth[i]`` has bit ``k`` set when state ``k`` satisfies formula ``i``;
    ``up[i]`` has bit ``j`` set when formula ``i`` subsumes formula ``j``.
    """

    def __init__(self, spec: LanguageSpec, bounds: Mapping[str, int] | None = None,
                 sig: Signature | None = None, budget: OracleBudget = DEFAULT_BUDGET,
                 subsumption: bool = True):
        self.spec = spec
        self.formulas = _language(spec, budget)
        self.index = {f: i for i, f in enumerate(self.formulas)}
        if len(self.index) != len(self.formulas):
            raise AssertionError("language enumeration produced duplicates")
        self.states = bounded_states(spec, bounds, sig, budget)
        n, m = len(self.formulas), len(self.states)
        self.truth = []
        sat_by_state = [0] * m
        for i, f in enumerate(self.formulas):
            mask = 0
            for k, s in enumerate(self.states):
                if f.holds(s):
                    mask |= 1 << k
                    sat_by_state[k] |= 1 << i
            self.truth.append(mask)
        self.sat = sat_by_state
        self.canon = [self.index[spec.canon(f)] for f in self.formulas]
        self.canonical = sorted(set(self.canon))
        self.canonical_mask = _mask(self.canonical)
        self.up: list[int] | None = None
        if subsumption:
            sub = spec.subsumes
            fs = self.formulas
            self.up = [_mask(j for j in range(n) if sub(fs[i], fs[j])) for i in range(n)]

    def mask_of(self, formulas: Iterable[Formula]) -> int:
        return _mask(self.index[f] for f in formulas)

    def members(self, mask: int) -> list[Formula]:
        return [self.formulas[i] for i in _bits(mask)]

    def upward(self, mask: int) -> int:
        out = 0
        for i in _bits(mask):
            out |= self.up[i]
        return out

    def canonicalize_mask(self, mask: int) -> int:
        return _mask(self.canon[i] for i in _bits(mask))

    def minimal_mask(self, mask: int) -> int:
        """Members of a set of canonical formulas not strictly subsumed by another member."""
        strictly_above = 0
        for i in _bits(mask):
            strictly_above |= self.up[i] & ~(1 << i)
        return mask & ~strictly_above

    def represent_mask(self, mask: int) -> int:
        return self.minimal_mask(self.canonicalize_mask(mask))

    def weaken(self, i: int, k: int) -> int:
        """Mask of the weakening of formula ``i`` by state ``k``, by definition."""
        return self.represent_mask(self.up[i] & self.sat[k])

    def conjunction_truth(self, mask: int) -> int:
        out = (1 << len(self.states)) - 1
        for i in _bits(mask):
            out &= self.truth[i]
        return out


def _mask(indices: Iterable[int]) -> int:
    out = 0
    for i in indices:
        out |= 1 << i
    return out


def _bits(mask: int) -> Iterable[int]:
    i = 0
    while mask:
        if mask & 1:
            yield i
        low = (mask & -mask).bit_length()
        if low > 1:
            mask >>= low - 1
            i += low - 1
        else:
            mask >>= 1
            i += 1
