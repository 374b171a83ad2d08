import itertools
import random

import pytest

from languages import SPECS, X, Y, both, pairs_or2
from fodomain.fol import State, Structure
from fodomain.lang import AndSeq, AndW, Atom, Atoms, FORALL, OrK, OrSeq, Quant, enumerate_language
from fodomain.lset import make_lset
from fodomain.weaken import (NotCanonicalError, WeakenStats, abstract_states, min_antichain,
                             represent, weaken_formula, weaken_set)

PX, NPX, PY, NPY = (Atom(a) for a in both("p", X) + both("p", Y))


def fa(*items):
    return Quant(FORALL, (X, Y), OrSeq(items))


ALL_P = State(Structure({"node": 2}, {}, {"p": [(0,), (1,)]}))


def test_weaken_bottom_on_all_p_state():
    spec = pairs_or2()
    stats = WeakenStats()
    assert weaken_formula(spec, spec.bottom, ALL_P, stats) == [fa(PX)]
    assert stats.peak_chain == 2


def test_satisfied_formula_is_its_own_weakening():
    spec = pairs_or2()
    assert weaken_formula(spec, fa(PX), ALL_P) == [fa(PX)]


def test_atoms_rules():
    atoms = Atoms(tuple(both("p", X) + both("p", Y)))
    s = State(Structure({"node": 2}, {}, {"p": [(0,)]}), {X: 0, Y: 1})
    assert weaken_formula(atoms, PY, s) == []
    assert set(weaken_formula(atoms, atoms.bottom, s)) == {PX, NPY}


def test_ork_with_k_zero_cannot_grow():
    spec = OrK(0, Atoms(tuple(both("p", X))))
    s = State(Structure({"node": 1}, {}, {"p": []}), {X: 0})
    assert weaken_formula(spec, spec.bottom, s) == []


def test_rejects_non_canonical_input():
    with pytest.raises(NotCanonicalError):
        weaken_formula(pairs_or2(), fa(PY), ALL_P)


def test_min_antichain_examples():
    spec = pairs_or2()
    assert min_antichain(spec, [spec.bottom, fa(PX)]) == [spec.bottom]
    assert set(min_antichain(spec, [fa(PX), fa(NPX)])) == {fa(PX), fa(NPX)}
    assert min_antichain(spec.inner, [OrSeq((PX,)), OrSeq((PX, PY))]) == [OrSeq((PX,))]
    assert min_antichain(spec, [fa(PX), fa(PX)]) == [fa(PX)]


def test_represent_examples():
    spec = pairs_or2()
    assert represent(spec, enumerate_language(spec)) == [spec.bottom]
    assert represent(spec, [fa(PX), fa(PY)]) == [fa(PX)]
    closure = [phi for phi in enumerate_language(spec) if spec.subsumes(fa(PX), phi)]
    assert len(closure) == 14
    assert represent(spec, closure) == [fa(PX)]


def test_weaken_set_keeps_satisfied_members():
    spec = pairs_or2()
    R = make_lset(spec, [fa(PX)])
    removed, inserted = weaken_set(R, ALL_P)
    assert removed == [] and inserted == []
    assert R.formulas() == [fa(PX)]


def test_abstract_states_examples():
    spec = pairs_or2()
    assert abstract_states(spec, []) == [spec.bottom]
    assert abstract_states(spec, [ALL_P]) == [fa(PX)]


@pytest.mark.parametrize("name", ["pairs_or2", "forall_exists", "ef_binary", "two_sorts"])
def test_abstract_states_order_independent(oracles, name):
    o = oracles(name)
    rng = random.Random(name)
    # quantified specs are closed, so any state list will do
    for _ in range(10):
        states = rng.sample(o.states, min(4, len(o.states)))
        first = set(abstract_states(o.spec, states))
        for perm in itertools.islice(itertools.permutations(states), 1, 6):
            assert set(abstract_states(o.spec, list(perm))) == first
        truth = o.conjunction_truth(o.mask_of(first))
        expected = o.represent_mask(_alpha(o, [o.states.index(s) for s in states]))
        assert o.mask_of(first) == expected
        assert all(truth >> o.states.index(s) & 1 for s in states)


def _alpha(o, ks):
    mask = (1 << len(o.formulas)) - 1
    for k in ks:
        mask &= o.sat[k]
    return mask


def test_andw_weakening_is_singleton(oracles):
    o = oracles("exists_cubes")
    andw = o.spec.inner
    body_states = [State(s.structure, {X: e}) for s in o.states
                   for e in range(s.structure.universe["node"])]
    for phi in andw.canonical_formulas():
        for s in body_states:
            if not phi.holds(s):
                assert len(weaken_formula(andw, phi, s)) <= 1


@pytest.mark.parametrize("name", sorted(SPECS))
def test_weaken_proof_obligations(oracles, name):
    """Member-wise: subsumed by phi, satisfied by s, canonical, antichain, complete."""
    o = oracles(name)
    spec = o.spec
    rng = random.Random(name)
    pairs = [(i, k) for i in o.canonical for k in range(len(o.states))]
    for i, k in rng.sample(pairs, min(400, len(pairs))):
        phi, s = o.formulas[i], o.states[k]
        out = weaken_formula(spec, phi, s)
        for w in out:
            assert spec.subsumes(phi, w) and w.holds(s) and spec.canon(w) == w
        for a, b in itertools.permutations(out, 2):
            assert not spec.subsumes(a, b)
        cover = o.upward(o.mask_of(out))
        assert o.up[i] & o.sat[k] & ~cover == 0


def test_threads_give_same_result(oracles):
    o = oracles("ef_binary")
    rng = random.Random(3)
    for _ in range(30):
        members = o.minimal_mask(sum(1 << i for i in rng.sample(o.canonical, 5)))
        s = rng.choice(o.states)
        a = make_lset(o.spec, o.members(members))
        b = make_lset(o.spec, o.members(members))
        weaken_set(a, s)
        weaken_set(b, s, threads=4)
        assert a.formulas() == b.formulas()


def test_andseq_shapes_accepted_by_andw():
    spec = AndW(Atoms(tuple(both("p", X))))
    s = State(Structure({"node": 1}, {}, {"p": [(0,)]}), {X: 0})
    assert weaken_formula(spec, spec.bottom, s) == [AndSeq((PX,))]
