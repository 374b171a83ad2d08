"""Acceptance criteria 1-12.  Each test is tagged with its criterion number;
the terminal summary prints one pass/fail line per criterion."""

import itertools
import json
import random
import subprocess
import sys
import time

import pytest

from languages import SPECS, SIG_P, pairs_or2
from fodomain.expr import AndE, EqE, NotE, OrE, QuantE, RelE
from fodomain.fixpoint import check_inductive, check_safety, lfp_symbolic_abstraction
from fodomain.fol import Signature, Structure, Var, enumerate_structures_upto
from fodomain.lang import (EF, And2, AndW, Atoms, Exists, Forall, Or2, OrK, Ordering, compare,
                           enumerate_language, render)
from fodomain.lset import make_lset
from fodomain.oracle import _bits, kleene_lfp, naive_filters, upward_closure
from fodomain.parsing import parse_language, parse_model, parse_states
from fodomain.weaken import WeakenStats, represent, weaken_formula, weaken_set

ALL = sorted(SPECS)
criterion = pytest.mark.criterion


def _all_p_state(fixtures_dir, spec):
    text = (fixtures_dir / "all_p_state.json").read_text()
    return parse_states(text, SIG_P)[0]


ALL_P_CLOSURE = {
    "forall x:node, y:node. or[p(x)]",
    "forall x:node, y:node. or[p(y)]",
    "forall x:node, y:node. or[p(x); p(x)]",
    "forall x:node, y:node. or[p(x); p(y)]",
    "forall x:node, y:node. or[p(x); !p(x)]",
    "forall x:node, y:node. or[p(x); !p(y)]",
    "forall x:node, y:node. or[!p(x); p(x)]",
    "forall x:node, y:node. or[!p(x); p(y)]",
    "forall x:node, y:node. or[p(y); p(x)]",
    "forall x:node, y:node. or[p(y); p(y)]",
    "forall x:node, y:node. or[p(y); !p(x)]",
    "forall x:node, y:node. or[p(y); !p(y)]",
    "forall x:node, y:node. or[!p(y); p(x)]",
    "forall x:node, y:node. or[!p(y); p(y)]",
}


# ------------------------------------------------------------------ 1


@criterion(1)
def test_running_example_counts():
    start = time.perf_counter()
    spec = pairs_or2()
    assert len(enumerate_language(spec)) == 21
    assert len(upward_closure(spec, [spec.bottom])) == 21
    target = [phi for phi in enumerate_language(spec)
              if render(phi) == "forall x:node, y:node. or[p(x)]"]
    assert len(target) == 1
    closure = upward_closure(spec, target)
    assert len(closure) == 14
    assert {render(phi) for phi in closure} == ALL_P_CLOSURE
    assert time.perf_counter() - start < 1.0


# ------------------------------------------------------------------ 2


@criterion(2)
def test_worked_weaken(fixtures_dir):
    start = time.perf_counter()
    spec = pairs_or2()
    s = _all_p_state(fixtures_dir, spec)
    R = make_lset(spec, [spec.bottom])
    stats = WeakenStats()
    removed, inserted = weaken_set(R, s, stats=stats)
    assert [render(f) for f in removed] == ["forall x:node, y:node. false"]
    assert [render(f) for f in R.formulas()] == ["forall x:node, y:node. or[p(x)]"]
    assert 1 <= stats.peak_chain <= 2
    assert time.perf_counter() - start < 1.0


# ------------------------------------------------------------------ 3


@criterion(3)
def test_generated_specs_exercise_every_constructor():
    kinds = set()
    for name in ALL:
        factory, _ = SPECS[name]
        kinds.update(type(node) for node in factory().walk())
        assert factory().size() <= 2000
    assert kinds >= {Atoms, Or2, And2, OrK, AndW, Exists, Forall, EF}
    assert len(ALL) >= 4


@criterion(3)
@pytest.mark.parametrize("name", ALL)
def test_subsumption_soundness(oracles, name):
    o = oracles(name)
    n = len(o.formulas)
    for i in range(n):
        assert o.up[i] >> i & 1, f"not reflexive: {render(o.formulas[i])}"
        for j in _bits(o.up[i]):
            assert o.truth[i] & ~o.truth[j] == 0, (
                f"{render(o.formulas[i])} subsumes {render(o.formulas[j])} without entailing it")


@criterion(3)
@pytest.mark.parametrize("name", [n for n in ALL if SPECS[n][0]().size() <= 60])
def test_subsumption_transitive_on_triples(oracles, name):
    o = oracles(name)
    n = len(o.formulas)
    for a, b, c in itertools.product(range(n), repeat=3):
        if o.up[a] >> b & 1 and o.up[b] >> c & 1:
            assert o.up[a] >> c & 1


# ------------------------------------------------------------------ 4


@criterion(4)
@pytest.mark.parametrize("name", ALL)
def test_canonicalization(oracles, name):
    o = oracles(name)
    spec = o.spec
    n = len(o.formulas)
    for i in range(n):
        c = o.canon[i]
        assert o.up[i] >> c & 1 and o.up[c] >> i & 1, "not representative"
        assert o.canon[c] == c, "not idempotent"
    for i in range(n):
        for j in range(n):
            equivalent = bool(o.up[i] >> j & 1 and o.up[j] >> i & 1)
            assert (o.canon[i] == o.canon[j]) == equivalent, "not decisive"
            if o.up[i] >> j & 1:
                ci, cj = o.formulas[o.canon[i]], o.formulas[o.canon[j]]
                assert compare(spec, ci, cj) is not Ordering.GREATER
    canon = [o.formulas[i] for i in o.canonical]
    for a in canon:
        for b in canon:
            ab, ba = compare(spec, a, b), compare(spec, b, a)
            if a == b:
                assert ab is Ordering.EQUAL
            else:
                assert ab is not Ordering.EQUAL
                assert {ab, ba} == {Ordering.LESS, Ordering.GREATER}


# ------------------------------------------------------------------ 5


@criterion(5)
@pytest.mark.parametrize("name", ALL)
def test_weaken_matches_definition(oracles, name):
    o = oracles(name)
    pairs = [(i, k) for i in o.canonical for k in range(len(o.states))]
    if len(pairs) > 10_000:
        pairs = random.Random(name).sample(pairs, 10_000)
    for i, k in pairs:
        got = set(weaken_formula(o.spec, o.formulas[i], o.states[k]))
        assert got == set(o.members(o.weaken(i, k))), (render(o.formulas[i]), o.states[k])


# ------------------------------------------------------------------ 6


def _random_antichain(o, rng, max_size=4):
    picked = rng.sample(o.canonical, rng.randint(1, min(max_size, len(o.canonical))))
    return o.minimal_mask(sum(1 << i for i in set(picked)))


@criterion(6)
def test_join_matches_definition(oracles):
    rng = random.Random(6)
    trials = 0
    for name in ALL:
        o = oracles(name)
        for _ in range(90):
            mask = _random_antichain(o, rng)
            k = rng.randrange(len(o.states))
            R = make_lset(o.spec, o.members(mask))
            weaken_set(R, o.states[k])
            expected = o.represent_mask(o.upward(mask) & o.sat[k])
            assert set(R.formulas()) == set(o.members(expected))
            R.check_invariants()
            trials += 1
    assert trials >= 500


# ------------------------------------------------------------------ 7


@criterion(7)
def test_lset_filters_match_naive(oracles):
    rng = random.Random(7)
    trials = 0
    for name in ALL:
        o = oracles(name)
        spec = o.spec
        for _ in range(80):
            members = rng.sample(o.canonical, rng.randint(0, min(12, len(o.canonical))))
            R = make_lset(spec, [o.formulas[i] for i in members])
            s = o.states[rng.randrange(len(o.states))]
            formulas = [o.formulas[i] for i in members]
            assert R.unsat(s) == naive_filters(spec, formulas, state=s)
            phi = o.formulas[rng.choice(o.canonical)]
            expected = naive_filters(spec, formulas, phi=phi)
            assert R.subsuming(phi) == expected
            assert R.is_subsumed(phi) == bool(expected)
            trials += 2
    assert trials >= 1000


@criterion(7)
@pytest.mark.parametrize("name", ALL)
def test_lset_insert_remove_interleavings(oracles, name):
    o = oracles(name)
    rng = random.Random(name)
    R = make_lset(o.spec)
    model = set()
    for _ in range(150):
        phi = o.formulas[rng.choice(o.canonical)]
        if phi in model and rng.random() < 0.5:
            assert R.remove(phi)
            model.discard(phi)
        else:
            R.insert(phi)
            model.add(phi)
        R.check_invariants()
        assert set(R) == model
    for phi in list(model):
        R.remove(phi)
    R.check_invariants()
    assert len(R) == 0


# ------------------------------------------------------------------ 8


@criterion(8)
def test_representation_theorem(oracles):
    rng = random.Random(8)
    trials = 0
    for name in ALL:
        o = oracles(name)
        for _ in range(30):
            picked = rng.sample(range(len(o.formulas)), rng.randint(1, min(8, len(o.formulas))))
            F = [o.formulas[i] for i in picked]
            rep = represent(o.spec, F)
            rep_mask = o.mask_of(rep)
            F_mask = o.mask_of(F)
            assert o.conjunction_truth(rep_mask) == o.conjunction_truth(F_mask)
            assert o.upward(rep_mask) == o.upward(F_mask)
            trials += 1
    assert trials >= 200


# ------------------------------------------------------------------ 9


def _fixture_run(fixtures_dir, model_name, lang_name, bounds):
    model = parse_model((fixtures_dir / model_name).read_text())
    spec, _ = parse_language((fixtures_dir / lang_name).read_text(), model.signature)
    return model, spec, lfp_symbolic_abstraction(model, bounds, spec)


def _upward_canonical(spec, R):
    return {c for c in enumerate_language(spec, canonical_only=True)
            if any(spec.subsumes(r, c) for r in R)}


@criterion(9)
@pytest.mark.parametrize("model_name", ["mutex.model", "lockserv.model"])
def test_bounded_fixpoint(fixtures_dir, model_name):
    start = time.perf_counter()
    bounds = {"node": 2}
    model, spec, result = _fixture_run(fixtures_dir, model_name, "forall2_k1_n3.lang", bounds)
    assert check_inductive(model, bounds, result.formulas).inductive
    assert check_safety(model, bounds, result.formulas)
    assert time.perf_counter() - start < 60


@criterion(9)
@pytest.mark.parametrize("model_name,lang_name", [("mutex.model", "forall2_k1_n3.lang"),
                                                  ("lockserv.model", "forall2_k1_n2.lang")])
def test_fixpoint_matches_kleene(fixtures_dir, model_name, lang_name):
    bounds = {"node": 2}
    model, spec, result = _fixture_run(fixtures_dir, model_name, lang_name, bounds)
    assert spec.size() <= 5000
    assert _upward_canonical(spec, result.formulas) == kleene_lfp(model, bounds, spec)


@criterion(9)
@pytest.mark.slow
@pytest.mark.parametrize("model_name", ["mutex.model", "lockserv.model"])
def test_bounded_fixpoint_node3(fixtures_dir, model_name):
    bounds = {"node": 3}
    model, spec, result = _fixture_run(fixtures_dir, model_name, "forall2_k1_n3.lang", bounds)
    assert check_inductive(model, bounds, result.formulas).inductive
    assert check_safety(model, bounds, result.formulas)


# ------------------------------------------------------------------ 10

LEMMA_SIG = Signature.build(["node"], relations={"p": ["node"], "q": ["node"],
                                                 "r": ["node", "node"]})
LEMMA_STRUCTURES = list(enumerate_structures_upto(LEMMA_SIG, {"node": 2}))


def _random_literal(rng, vs):
    kind = rng.randrange(4 if len(vs) > 1 else 3)
    if kind == 3:
        a, b = rng.sample(vs, 2)
        atom = EqE(a, b)
    elif kind == 2:
        atom = RelE("r", (rng.choice(vs), rng.choice(vs)))
    else:
        atom = RelE("pq"[kind], (rng.choice(vs),))
    return atom if rng.random() < 0.5 else NotE(atom)


def _random_qf(rng, vs, depth=2):
    if depth == 0 or rng.random() < 0.3:
        return _random_literal(rng, vs)
    parts = tuple(_random_qf(rng, vs, depth - 1) for _ in range(rng.randint(2, 3)))
    return AndE(parts) if rng.random() < 0.5 else OrE(parts)


def _prefix(blocks, body):
    for q, v in reversed(blocks):
        body = QuantE(q, (v,), body)
    return body


def _equivalent(a, b):
    fa, fb = a.compiled(), b.compiled()
    return all(fa(st, {}) == fb(st, {}) for st in LEMMA_STRUCTURES)


def _decomposition(blocks, phi, psi1, psi2):
    whole = _prefix(blocks, OrE((phi, AndE((psi1, psi2)))))
    split = AndE((_prefix(blocks, OrE((phi, psi1))), _prefix(blocks, OrE((phi, psi2)))))
    return whole, split


@criterion(10)
def test_decomposition_lemma_randomized():
    rng = random.Random(10)
    for _ in range(200):
        xs = [Var(f"x{i}", "node") for i in range(rng.randint(1, 2))]
        ys = [Var(f"y{i}", "node") for i in range(rng.randint(0, 2))]
        blocks = [("forall", x) for x in xs] + [(rng.choice(["forall", "exists"]), y) for y in ys]
        every = xs + ys
        whole, split = _decomposition(blocks, _random_qf(rng, every), _random_qf(rng, every),
                                      _random_qf(rng, xs))
        assert _equivalent(whole, split), str(whole)


@criterion(10)
def test_decomposition_counterexample_regression():
    x, y = Var("x", "node"), Var("y", "node")
    phi = NotE(EqE(x, y))
    psi1, psi2 = RelE("q", (x,)), RelE("p", (y,))
    # a = 0, b = 1, p = {a}, q = {b}
    st = Structure({"node": 2}, {}, {"p": [(0,)], "q": [(1,)], "r": []})

    # over-general form: psi2 may use universals that follow an existential
    whole, split = _decomposition([("exists", x), ("forall", y)], phi, psi1, psi2)
    assert not whole.evaluate(st) and split.evaluate(st)
    assert not _equivalent(whole, split)

    # corrected form: psi2's variable leads the prefix universally
    whole, split = _decomposition([("forall", y), ("exists", x)], phi, psi1, psi2)
    assert whole.evaluate(st) == split.evaluate(st)
    assert _equivalent(whole, split)


# ------------------------------------------------------------------ 11


def _cli(*args):
    return subprocess.run([sys.executable, "-m", "fodomain", *args], capture_output=True,
                          check=True).stdout


@criterion(11)
def test_cli_lfp_deterministic(fixtures_dir):
    args = ["lfp", "--model", str(fixtures_dir / "lockserv.model"),
            "--language", str(fixtures_dir / "forall2_k1_n3.lang"), "--bounds", "node=2"]
    first = _cli(*args, "--no-timings", "--threads", "1")
    second = _cli(*args, "--no-timings", "--threads", "1")
    assert first == second
    threaded = _cli(*args, "--no-timings", "--threads", "4")
    assert sorted(json.loads(threaded)["formulas"]) == sorted(json.loads(first)["formulas"])


# ------------------------------------------------------------------ 12


@criterion(12)
def test_report_statistics(fixtures_dir):
    report = json.loads(_cli("lfp", "--model", str(fixtures_dir / "lockserv.model"),
                             "--language", str(fixtures_dir / "forall2_k1_n3.lang"),
                             "--bounds", "node=2"))
    assert report["iterations"] > 0
    assert report["peak_size"] >= report["lfp_size"] == len(report["formulas"])
    timings = report["timings"]
    assert 0.0 <= timings["weaken_percent"] <= 100.0
    assert timings["total"] >= timings["weaken"]
    print(f"iterations={report['iterations']} peak={report['peak_size']} "
          f"weaken%={timings['weaken_percent']}")
