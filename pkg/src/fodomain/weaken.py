"""Weakening formulas and antichains so that they admit a given state."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

from .fol import State
from .lang import (
    EF, EXISTS, FORALL, And, And2, AndSeq, AndW, Atom, Atoms, Exists, Forall, Formula,
    LanguageSpec, Or, Or2, OrK, OrSeq, Quant, ShapeError, minimal,
)


class NotCanonicalError(ShapeError):
    pass


@dataclass
class WeakenStats:
    """Counters filled in by ``weaken_formula`` when passed in."""

    calls: int = 0
    peak_chain: int = 0


def _require_canonical(spec: LanguageSpec, phi: Formula) -> None:
    if not spec.contains(phi):
        raise ShapeError(f"{phi!r} does not belong to the language")
    if spec.canon(phi) != phi:
        raise NotCanonicalError(f"{phi} is not canonical")


def min_antichain(spec: LanguageSpec, formulas: Iterable[Formula]) -> list[Formula]:
    """Subsumption-minimal members of canonical ``formulas``, sorted."""
    return minimal(spec, formulas)


def represent(spec: LanguageSpec, formulas: Iterable[Formula]) -> list[Formula]:
    """Canonical antichain with the same upward closure as ``formulas``."""
    return minimal(spec, {spec.canon(f) for f in formulas})


def weaken_formula(spec: LanguageSpec, phi: Formula, s: State,
                   stats: WeakenStats | None = None) -> list[Formula]:
    """Minimal canonical formulas subsumed by ``phi`` and satisfied by ``s``."""
    _require_canonical(spec, phi)
    return _weaken(spec, phi, s, stats)


def _weaken(spec, phi, s, stats):
    if stats is not None:
        stats.calls += 1
    if phi.holds(s):
        return [phi]
    return _RULES[type(spec)](spec, phi, s, stats)


def _weaken_atoms(spec: Atoms, phi: Atom, s, stats):
    if phi.lit is not None:
        return []
    return [Atom(lit) for lit in spec.base if lit.holds(s)]


def _weaken_or2(spec: Or2, phi: Or, s, stats):
    out = [Or(w, phi.right) for w in _weaken(spec.left, phi.left, s, stats)]
    out += [Or(phi.left, w) for w in _weaken(spec.right, phi.right, s, stats)]
    return out


def _weaken_and2(spec: And2, phi: And, s, stats):
    lefts = _weaken(spec.left, phi.left, s, stats)
    if not lefts:
        return []
    rights = _weaken(spec.right, phi.right, s, stats)
    return [And(a, b) for a in lefts for b in rights]


def _weaken_ork(spec: OrK, phi: OrSeq, s, stats):
    items = phi.items
    inner = spec.inner
    out = set()
    for i, x in enumerate(items):
        if i and x == items[i - 1]:
            continue
        rest = items[:i] + items[i + 1:]
        for w in _weaken(inner, x, s, stats):
            out.add(OrSeq(sorted(rest + (w,), key=_key)))
    if len(items) < spec.k:
        for w in _weaken(inner, inner.bottom, s, stats):
            out.add(OrSeq(sorted(items + (w,), key=_key)))
    return minimal(spec, out)


def _weaken_andw(spec: AndW, phi: AndSeq, s, stats):
    pool = set()
    for x in phi.items:
        pool.update(_weaken(spec.inner, x, s, stats))
    conjuncts = minimal(spec.inner, pool)
    return [AndSeq(conjuncts)] if conjuncts else []


def _exists_rule(spec, body, s, stats):
    bodies = set()
    for t in s.extensions(spec.vars):
        bodies.update(_weaken(spec.inner, body, t, stats))
    return {Quant(EXISTS, spec.vars, spec.canon_body(b)) for b in bodies}


def _forall_rule(spec, body, s, stats):
    inner = spec.inner
    chain = [body]
    if stats is not None:
        stats.peak_chain = max(stats.peak_chain, 1)
    for t in s.extensions(spec.vars):
        if all(b.holds(t) for b in chain):
            continue
        step = set()
        for b in chain:
            step.update(_weaken(inner, b, t, stats))
        chain = minimal(inner, step)
        if stats is not None:
            stats.peak_chain = max(stats.peak_chain, len(chain))
        if not chain:
            break
    return {Quant(FORALL, spec.vars, spec.canon_body(b)) for b in chain}


def _weaken_exists(spec: Exists, phi: Quant, s, stats):
    return minimal(spec, _exists_rule(spec, phi.body, s, stats))


def _weaken_forall(spec: Forall, phi: Quant, s, stats):
    return minimal(spec, _forall_rule(spec, phi.body, s, stats))


def _weaken_ef(spec: EF, phi: Quant, s, stats):
    out = _exists_rule(spec, phi.body, s, stats)
    if phi.quantifier == FORALL:
        out |= _forall_rule(spec, phi.body, s, stats)
    return minimal(spec, out)


_RULES = {
    Atoms: _weaken_atoms,
    Or2: _weaken_or2,
    And2: _weaken_and2,
    OrK: _weaken_ork,
    AndW: _weaken_andw,
    Exists: _weaken_exists,
    Forall: _weaken_forall,
    EF: _weaken_ef,
}


def _key(phi):
    return phi.key


def weaken_set(R, s: State, threads: int = 1,
               stats: WeakenStats | None = None) -> tuple[list[Formula], list[Formula]]:
    """Weaken the antichain stored in LSet ``R`` in place so that ``s`` satisfies it.

    Returns the removed and the inserted formulas.
    """
    spec = R.spec
    removed = sorted(R.unsat(s), key=_key)
    for phi in removed:
        R.remove(phi)
    if threads > 1 and len(removed) > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(lambda phi: _weaken(spec, phi, s, None), removed))
    else:
        parts = [_weaken(spec, phi, s, stats) for phi in removed]
    candidates = set()
    for part in parts:
        candidates.update(part)
    inserted = []
    for phi in sorted(candidates, key=_key):
        if not R.is_subsumed(phi):
            R.insert(phi, check=False)
            inserted.append(phi)
    return removed, inserted


def abstract_states(spec: LanguageSpec, states: Sequence[State]) -> list[Formula]:
    """Canonical antichain representing the formulas true in every state."""
    from .lset import make_lset

    R = make_lset(spec)
    R.insert(spec.bottom)
    for s in states:
        weaken_set(R, s)
    return R.formulas()
