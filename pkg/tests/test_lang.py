import pytest

from languages import SIG_P, SIG_R, SPECS, X, Y, both, pairs_or2, lit
from fodomain.fol import EQ, Signature, State, Structure, UnboundVariableError, Var
from fodomain.lang import (EF, EXISTS, FORALL, And, AndSeq, AndW, Atom, Atoms, Exists, Forall,
                           LanguageTooLarge, Or, Or2, OrK, OrSeq, Ordering, Quant, ShapeError, bottom,
                           build_kpdnf, canonicalize, compare, enumerate_language, is_canonical,
                           minimal, render, satisfies, subsumes)

PX, NPX, PY, NPY = (Atom(a) for a in both("p", X) + both("p", Y))


def fa(*items):
    return Quant(FORALL, (X, Y), OrSeq(items))


def all_p_state():
    return State(Structure({"node": 2}, {}, {"p": [(0,), (1,)]}))


def test_bottom():
    atoms = Atoms(tuple(both("p", X)))
    assert bottom(atoms) == Atom(None)
    assert bottom(OrK(2, atoms)) == OrSeq(())
    assert bottom(pairs_or2()) == fa()
    assert bottom(AndW(atoms)) == AndSeq((Atom(None),))
    assert bottom(Or2(atoms, atoms)).left == Atom(None)
    assert bottom(EF((X,), atoms)).quantifier == FORALL
    assert render(bottom(pairs_or2())) == "forall x:node, y:node. false"


def test_satisfies():
    spec = pairs_or2()
    assert satisfies(all_p_state(), spec, fa(PX))
    assert not satisfies(all_p_state(), spec, fa())
    one = State(Structure({"node": 1}, {}, {"p": []}))
    assert not satisfies(one, Exists((X,), OrK(1, Atoms(tuple(both("p", X))))),
                         Quant(EXISTS, (X,), OrSeq((PX,))))
    with pytest.raises(UnboundVariableError):
        satisfies(one, OrK(1, Atoms(tuple(both("p", X)))), OrSeq((PX,)))


def test_subsumes_examples():
    spec = pairs_or2()
    assert subsumes(spec, fa(PX), fa(PY))
    assert not subsumes(spec.inner.inner, PX, PY)
    assert not subsumes(spec.inner, OrSeq((PX,)), OrSeq((PY,)))
    assert subsumes(spec.inner, OrSeq((PX, PY)), OrSeq((PY, PX)))
    for phi in enumerate_language(spec):
        assert subsumes(spec, spec.bottom, phi)


def test_disjunct_mapping_is_injective():
    inner = AndW(Atoms(tuple(both("p", X))))
    spec = OrK(2, inner)
    psi = AndSeq((PX,))
    assert subsumes(inner, inner.bottom, psi)
    assert not subsumes(spec, OrSeq((inner.bottom, psi)), OrSeq((psi,)))
    assert subsumes(spec, OrSeq((psi,)), OrSeq((inner.bottom, psi)))


def test_subsumes_rejects_foreign_formulas():
    with pytest.raises(ShapeError):
        subsumes(pairs_or2(), fa(PX), OrSeq((PX,)))


def test_ef_subsumption_direction():
    spec = EF((X,), OrK(1, Atoms(tuple(both("p", X)))))
    a = Quant(FORALL, (X,), OrSeq((PX,)))
    e = Quant(EXISTS, (X,), OrSeq((PX,)))
    assert subsumes(spec, a, e)
    assert not subsumes(spec, e, a)
    assert compare(spec, a, e) is Ordering.LESS


def test_compare_examples():
    spec = pairs_or2()
    atoms, ork = spec.inner.inner, spec.inner
    assert compare(atoms, PX, NPX) is Ordering.LESS
    assert compare(atoms, NPX, PY) is Ordering.LESS
    assert compare(ork, OrSeq((PX,)), OrSeq((PY,))) is Ordering.LESS
    assert compare(ork, OrSeq((PY,)), OrSeq((PX, PY))) is Ordering.LESS
    assert compare(atoms, Atom(None), PX) is Ordering.LESS


def test_andw_prefix_sorts_before_extension():
    spec = AndW(Atoms(tuple(both("p", X))))
    short, long = AndSeq((PX,)), AndSeq((PX, NPX))
    assert compare(spec, long, short) is Ordering.LESS


def test_canonicalize_examples():
    spec = pairs_or2()
    assert canonicalize(spec, fa(PY)) == fa(PX)
    assert canonicalize(spec.inner, OrSeq((PY, PX))) == OrSeq((PX, PY))
    andw = AndW(Atoms(tuple(both("p", X))))
    assert canonicalize(andw, AndSeq((PX, Atom(None)))) == AndSeq((Atom(None),))
    assert is_canonical(spec, fa(PX)) and not is_canonical(spec, fa(PY))


@pytest.mark.parametrize("name", sorted(SPECS))
def test_equivalence_witnesses(name):
    spec = SPECS[name][0]()
    for node in spec.walk():
        if isinstance(node, OrK):
            for phi in enumerate_language(node, limit=5000):
                rev = OrSeq(tuple(reversed(phi.items)))
                assert subsumes(node, phi, rev) and subsumes(node, rev, phi)
        if isinstance(node, (Exists, Forall, EF)):
            for phi in enumerate_language(node, limit=5000)[:200]:
                for body in node.permuted(phi.body):
                    other = phi.with_body(body)
                    assert subsumes(node, phi, other) and subsumes(node, other, phi)


def test_enumerate_examples():
    spec = pairs_or2()
    assert len(enumerate_language(spec)) == 21
    assert len(enumerate_language(spec.inner.inner)) == 5
    assert enumerate_language(OrK(0, spec.inner.inner)) == [OrSeq(())]
    assert len(enumerate_language(spec, canonical_only=True)) == 9
    with pytest.raises(LanguageTooLarge):
        enumerate_language(spec, limit=20)


@pytest.mark.parametrize("name", sorted(SPECS))
def test_size_matches_enumeration(name):
    spec = SPECS[name][0]()
    formulas = enumerate_language(spec)
    assert len(formulas) == spec.size() == len(set(formulas))
    assert all(spec.contains(f) for f in formulas)
    canon = enumerate_language(spec, canonical_only=True)
    assert set(canon) == {spec.canon(f) for f in formulas}


def test_minimal():
    spec = pairs_or2().inner
    assert minimal(spec, [OrSeq((PX,)), OrSeq((PX, PY))]) == [OrSeq((PX,))]


def test_kpdnf_lockserv_shape():
    spec = build_kpdnf(SIG_P, [("forall", X), ("forall", Y)], k=1, n=3)
    assert isinstance(spec, Forall) and spec.vars == (X, Y)
    assert isinstance(spec.inner, OrK) and spec.inner.k == 3
    assert set(spec.inner.inner.base) == set(both("p", X) + both("p", Y) + both(EQ, X, Y))


def test_kpdnf_all_universal_drops_cubes():
    k1 = build_kpdnf(SIG_P, [("forall", X), ("forall", Y)], k=1, n=2)
    k2 = build_kpdnf(SIG_P, [("forall", X), ("forall", Y)], k=2, n=2)
    assert k1 == k2


def test_kpdnf_mixed_prefix_shape():
    vs = [Var(f"a{i}", "node") for i in range(4)] + [Var("b0", "node"), Var("b1", "node")]
    prefix = [("forall", v) for v in vs[:4]] + [("ef", v) for v in vs[4:]]
    spec = build_kpdnf(SIG_P, prefix, k=2, n=3)
    assert isinstance(spec, Forall) and len(spec.vars) == 4
    assert isinstance(spec.inner, EF) and len(spec.inner.vars) == 2
    body = spec.inner.inner
    assert isinstance(body, Or2) and body.left.k == 3 and body.right.k == 1
    assert isinstance(body.right.inner, AndW)
    leading = set(vs[:4])
    assert all(lit.variables() - leading for lit in body.right.inner.inner.base)


def test_kpdnf_cube_literals_need_a_non_leading_variable():
    spec = build_kpdnf(SIG_R, [("forall", X), ("exists", Y)], k=2, n=1)
    cube_base = spec.inner.inner.right.inner.inner.base
    assert lit("p", X) not in cube_base and lit("r", X, X) not in cube_base
    assert lit("p", Y) in cube_base and lit("r", X, Y) in cube_base


def test_kpdnf_errors():
    with pytest.raises(ValueError):
        build_kpdnf(SIG_P, [("forall", X)], k=0, n=1)
    with pytest.raises(ValueError):
        build_kpdnf(SIG_P, [("forall", X), ("exists", X)], k=1, n=1)


def test_quantifier_block_checks():
    with pytest.raises(ValueError):
        Forall((X, Y), OrK(1, Atoms((lit("p", X),))))
    with pytest.raises(ValueError):
        Forall((X,), Exists((X,), Atoms(())))


def test_andseq_never_empty():
    with pytest.raises(ValueError):
        AndSeq(())


def test_render_forms():
    neq = Atom(lit(EQ, Y, X, positive=False))
    assert render(Or(neq, PX)) == "(x != y | p(x))"
    assert render(And(Atom(None), PX)) == "(false & p(x))"
    assert render(Atom(lit(EQ, X, Y))) == "x = y"
    assert render(AndSeq((PX, NPX))) == "and[p(x); !p(x)]"
    nullary = Signature.build([], relations={"flag": []})
    assert nullary.arity("flag") == ()
