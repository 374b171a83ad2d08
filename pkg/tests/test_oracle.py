import random

import pytest

from languages import SIG_P, X, Y, both, pairs_or2
from fodomain.expr import FalseE, TrueE
from fodomain.fixpoint import ProtocolModel
from fodomain.fol import State, Structure, enumerate_structures_upto
from fodomain.lang import FORALL, Atom, OrSeq, Quant, enumerate_language
from fodomain.oracle import (BudgetExceeded, OracleBudget, bounded_states,
                             default_bounds, kleene_lfp, naive_filters, naive_min, naive_weaken,
                             semantic_entails, upward_closure)

PX, NPX, PY = Atom(both("p", X)[0]), Atom(both("p", X)[1]), Atom(both("p", Y)[0])
ALL_P = State(Structure({"node": 2}, {}, {"p": [(0,), (1,)]}))


def fa(*items):
    return Quant(FORALL, (X, Y), OrSeq(items))


def test_bounded_states_counts():
    assert default_bounds(SIG_P) == {"node": 2}
    assert len(bounded_states(pairs_or2())) == 2 + 4


def test_naive_weaken_examples():
    spec = pairs_or2()
    assert naive_weaken(spec, spec.bottom, ALL_P) == {fa(PX)}
    assert naive_weaken(spec, fa(PX), ALL_P) == {fa(PX)}
    none = State(Structure({"node": 2}, {}, {"p": []}))
    assert naive_weaken(spec, fa(PX), none) == {fa(PX, NPX), fa(NPX, PY)}


def test_naive_min():
    spec = pairs_or2()
    assert naive_min(spec, []) == set()
    assert naive_min(spec, [spec.bottom, fa(PX)]) == {spec.bottom}


def test_upward_closure_examples():
    spec = pairs_or2()
    assert upward_closure(spec, []) == []
    assert len(upward_closure(spec, [spec.bottom])) == 21
    assert len(upward_closure(spec, [fa(PX)])) == 14


def test_semantic_entails_examples():
    spec = pairs_or2()
    assert semantic_entails(spec, fa(PX), fa(PX))
    assert all(semantic_entails(spec, spec.bottom, phi) for phi in enumerate_language(spec))
    assert not semantic_entails(spec, fa(PX, NPX), spec.bottom)
    assert semantic_entails(spec, fa(PX), fa(PX, PY))


def test_semantic_entails_agrees_with_truth_tables(oracles):
    o = oracles("exists_cubes")
    rng = random.Random(0)
    for _ in range(100):
        i, j = rng.randrange(len(o.formulas)), rng.randrange(len(o.formulas))
        expected = o.truth[i] & ~o.truth[j] == 0
        assert semantic_entails(o.spec, o.formulas[i], o.formulas[j]) == expected


def test_naive_filters_examples():
    spec = pairs_or2()
    assert naive_filters(spec, [], state=ALL_P) == set()
    assert naive_filters(spec, [spec.bottom], state=ALL_P) == {spec.bottom}
    assert naive_filters(spec, [spec.bottom], phi=fa(PX)) == {spec.bottom}
    assert naive_filters(spec, [fa(PX), fa(NPX)], phi=fa(PX, PY)) == {fa(PX)}
    with pytest.raises(ValueError):
        naive_filters(spec, [], state=ALL_P, phi=fa(PX))
    with pytest.raises(ValueError):
        naive_filters(spec, [])


def test_kleene_without_initial_states_keeps_everything():
    spec = pairs_or2()
    got = kleene_lfp(ProtocolModel(SIG_P, FalseE()), {"node": 2}, spec)
    assert got == set(enumerate_language(spec, canonical_only=True))


def test_kleene_with_trivial_init_keeps_valid_formulas():
    spec = pairs_or2()
    got = kleene_lfp(ProtocolModel(SIG_P, TrueE()), {"node": 2}, spec)
    every = [State(st) for st in enumerate_structures_upto(SIG_P, {"node": 2})]
    expected = {phi for phi in enumerate_language(spec, canonical_only=True)
                if all(phi.holds(s) for s in every)}
    assert got == expected and fa(PX, NPX) in got


def test_budgets():
    spec = pairs_or2()
    with pytest.raises(BudgetExceeded):
        upward_closure(spec, [spec.bottom], OracleBudget(max_formulas=20))
    with pytest.raises(BudgetExceeded):
        bounded_states(spec, budget=OracleBudget(max_structures=3))
    with pytest.raises(BudgetExceeded):
        bounded_states(spec, budget=OracleBudget(max_states=3))
    with pytest.raises(BudgetExceeded):
        kleene_lfp(ProtocolModel(SIG_P, TrueE()), {"node": 2}, spec, OracleBudget(max_formulas=5))
    with pytest.raises(ValueError):
        OracleBudget(max_formulas=0)


def test_language_oracle_tables(oracles):
    o = oracles("pairs_or2")
    assert len(o.formulas) == 21 and len(o.canonical) == 9 and len(o.states) == 6
    b = o.formulas.index(o.spec.bottom)
    assert o.up[b] == (1 << 21) - 1 and o.truth[b] == 0
    assert o.members(o.mask_of([fa(PX)])) == [fa(PX)]


def test_language_oracle_weaken_matches_naive(oracles):
    rng = random.Random(1)
    for name in ("pairs_or2", "forall_exists", "two_sorts"):
        o = oracles(name)
        for _ in range(40):
            i, k = rng.choice(o.canonical), rng.randrange(len(o.states))
            got = set(o.members(o.weaken(i, k)))
            assert got == naive_weaken(o.spec, o.formulas[i], o.states[k])
