"""Sets of canonical formulas with indexes for the two filters used while
weakening: the members a state violates (``unsat``) and the members that
subsume a formula (``subsuming``).

There is one set class per language constructor.  Each set interns its
members to integer ids; nested sets are keyed by the ids of their parent's
components.
"""

from __future__ import annotations

from typing import Iterable, Iterator

from .fol import State
from .lang import (
    EF, EXISTS, FORALL, And2, AndW, Atoms, Exists, Forall, Formula, LanguageSpec, Or2, OrK,
    Quant, ShapeError, render,
)


class InvariantError(AssertionError):
    pass


def _ensure(cond: bool, msg: str) -> None:
    if not cond:
        raise InvariantError(msg)


class LSet:
    """Common interning and public API; subclasses provide the indexes."""

    def __init__(self, spec: LanguageSpec):
        self.spec = spec
        self._ids: dict[Formula, int] = {}
        self._formulas: dict[int, Formula] = {}
        self._next = 0

    # membership -----------------------------------------------------------

    def __len__(self):
        return len(self._ids)

    def __contains__(self, phi):
        return phi in self._ids

    def __iter__(self) -> Iterator[Formula]:
        return iter(list(self._ids))

    def formulas(self) -> list[Formula]:
        return sorted(self._ids, key=lambda f: f.key)

    def id_of(self, phi: Formula) -> int:
        return self._ids[phi]

    def formula_of(self, i: int) -> Formula:
        return self._formulas[i]

    def dump(self) -> str:
        return "".join(render(f) + "\n" for f in self.formulas())

    # mutation ---------------------------------------------------------------

    def insert(self, phi: Formula, check: bool = True) -> bool:
        if check:
            if not self.spec.contains(phi):
                raise ShapeError(f"{phi!r} does not belong to the language")
            if self.spec.canon(phi) != phi:
                raise ShapeError(f"{phi} is not canonical")
        return self._add(phi)[1]

    def remove(self, phi: Formula) -> bool:
        return self._discard(phi)

    def _add(self, phi: Formula) -> tuple[int, bool]:
        i = self._ids.get(phi)
        if i is not None:
            return i, False
        i = self._next
        self._next += 1
        self._ids[phi] = i
        self._formulas[i] = phi
        self._index(i, phi)
        return i, True

    def _discard(self, phi: Formula) -> bool:
        i = self._ids.pop(phi, None)
        if i is None:
            return False
        del self._formulas[i]
        self._unindex(i, phi)
        return True

    # filters ----------------------------------------------------------------

    def unsat(self, s: State) -> set[Formula]:
        return {self._formulas[i] for i in self._unsat_ids(s)}

    def subsuming(self, phi: Formula) -> set[Formula]:
        return {self._formulas[i] for i in self._subsuming_ids(phi)}

    def is_subsumed(self, phi: Formula) -> bool:
        return self._any_subsuming(phi)

    def _any_subsuming(self, phi) -> bool:
        return bool(self._subsuming_ids(phi))

    # checks -----------------------------------------------------------------

    def check_invariants(self) -> None:
        _ensure(len(self._ids) == len(self._formulas), "id table sizes differ")
        for phi, i in self._ids.items():
            _ensure(self._formulas.get(i) is phi or self._formulas.get(i) == phi,
                    f"id table is not a bijection at {phi}")
        self._check()

    # subclass hooks: _index, _unindex, _unsat_ids, _subsuming_ids, _check


class AtomsLSet(LSet):
    def _index(self, i, phi):
        pass

    def _unindex(self, i, phi):
        pass

    def _unsat_ids(self, s):
        return [i for phi, i in self._ids.items() if not phi.holds(s)]

    def _subsuming_ids(self, phi):
        out = []
        bot = self._ids.get(self.spec.bottom)
        if bot is not None:
            out.append(bot)
        i = self._ids.get(phi)
        if i is not None and i != bot:
            out.append(i)
        return out

    def _check(self):
        pass


class Or2LSet(LSet):
    """Members indexed by first disjunct, then by second disjunct."""

    def __init__(self, spec: Or2):
        super().__init__(spec)
        self.L = make_lset(spec.left)
        self.M: dict[int, LSet] = {}
        self._pair: dict[tuple[int, int], int] = {}

    def _index(self, i, phi):
        a, _ = self.L._add(phi.left)
        sub = self.M.get(a)
        if sub is None:
            sub = self.M[a] = make_lset(self.spec.right)
        b, _ = sub._add(phi.right)
        self._pair[a, b] = i

    def _unindex(self, i, phi):
        a = self.L._ids[phi.left]
        sub = self.M[a]
        b = sub._ids[phi.right]
        del self._pair[a, b]
        sub._discard(phi.right)
        if not sub._ids:
            del self.M[a]
            self.L._discard(phi.left)

    def _unsat_ids(self, s):
        pair = self._pair
        return [pair[a, b] for a in self.L._unsat_ids(s) for b in self.M[a]._unsat_ids(s)]

    def _subsuming_ids(self, phi):
        pair = self._pair
        return [pair[a, b] for a in self.L._subsuming_ids(phi.left)
                for b in self.M[a]._subsuming_ids(phi.right)]

    def _any_subsuming(self, phi):
        return any(self.M[a]._any_subsuming(phi.right) for a in self.L._subsuming_ids(phi.left))

    def _check(self):
        firsts = {f.left for f in self._ids}
        _ensure(set(self.L._ids) == firsts, "first-disjunct set out of sync")
        _ensure(set(self.M) == set(self.L._formulas), "map domain differs from first disjuncts")
        for a, sub in self.M.items():
            left = self.L._formulas[a]
            seconds = {f.right for f in self._ids if f.left == left}
            _ensure(set(sub._ids) == seconds, f"second disjuncts of {left} out of sync")
            sub.check_invariants()
        _ensure(len(self._pair) == len(self._ids), "pair index size differs")
        self.L.check_invariants()


class And2LSet(LSet):
    """Members indexed from both conjunct positions."""

    def __init__(self, spec: And2):
        super().__init__(spec)
        self.L1 = make_lset(spec.left)
        self.L2 = make_lset(spec.right)
        self.M1: dict[int, LSet] = {}
        self.M2: dict[int, LSet] = {}
        self._pair1: dict[tuple[int, int], int] = {}
        self._pair2: dict[tuple[int, int], int] = {}

    @staticmethod
    def _link(L, M, pairs, first, second, second_spec, i):
        a, _ = L._add(first)
        sub = M.get(a)
        if sub is None:
            sub = M[a] = make_lset(second_spec)
        b, _ = sub._add(second)
        pairs[a, b] = i

    @staticmethod
    def _unlink(L, M, pairs, first, second):
        a = L._ids[first]
        sub = M[a]
        del pairs[a, sub._ids[second]]
        sub._discard(second)
        if not sub._ids:
            del M[a]
            L._discard(first)

    def _index(self, i, phi):
        self._link(self.L1, self.M1, self._pair1, phi.left, phi.right, self.spec.right, i)
        self._link(self.L2, self.M2, self._pair2, phi.right, phi.left, self.spec.left, i)

    def _unindex(self, i, phi):
        self._unlink(self.L1, self.M1, self._pair1, phi.left, phi.right)
        self._unlink(self.L2, self.M2, self._pair2, phi.right, phi.left)

    def _unsat_ids(self, s):
        out = set()
        for a in self.L1._unsat_ids(s):
            out.update(self._pair1[a, b] for b in self.M1[a]._formulas)
        for a in self.L2._unsat_ids(s):
            out.update(self._pair2[a, b] for b in self.M2[a]._formulas)
        return out

    def _subsuming_ids(self, phi):
        pair = self._pair1
        return [pair[a, b] for a in self.L1._subsuming_ids(phi.left)
                for b in self.M1[a]._subsuming_ids(phi.right)]

    def _any_subsuming(self, phi):
        return any(self.M1[a]._any_subsuming(phi.right)
                   for a in self.L1._subsuming_ids(phi.left))

    def _check(self):
        for L, M, first, second in ((self.L1, self.M1, "left", "right"),
                                    (self.L2, self.M2, "right", "left")):
            firsts = {getattr(f, first) for f in self._ids}
            _ensure(set(L._ids) == firsts, f"{first} conjunct set out of sync")
            _ensure(set(M) == set(L._formulas), "map domain differs from conjunct set")
            for a, sub in M.items():
                x = L._formulas[a]
                seconds = {getattr(f, second) for f in self._ids if getattr(f, first) == x}
                _ensure(set(sub._ids) == seconds, f"partners of {x} out of sync")
                sub.check_invariants()
            L.check_invariants()
        _ensure(len(self._pair1) == len(self._ids) == len(self._pair2), "pair index size differs")


class _TrieNode:
    __slots__ = ("labels", "children", "terminal")

    def __init__(self, inner: LanguageSpec):
        self.labels = make_lset(inner)
        self.children: dict[int, _TrieNode] = {}
        self.terminal: int | None = None


class OrKLSet(LSet):
    """Disjunction sequences stored in a trie whose edges are disjuncts."""

    def __init__(self, spec: OrK):
        super().__init__(spec)
        self.root = _TrieNode(spec.inner)

    def _index(self, i, phi):
        node = self.root
        for x in phi.items:
            e, new = node.labels._add(x)
            child = node.children.get(e)
            if child is None:
                child = node.children[e] = _TrieNode(self.spec.inner)
            node = child
        node.terminal = i

    def _unindex(self, i, phi):
        path = []
        node = self.root
        for x in phi.items:
            e = node.labels._ids[x]
            path.append((node, e, x))
            node = node.children[e]
        node.terminal = None
        for parent, e, x in reversed(path):
            child = parent.children[e]
            if child.terminal is not None or child.children:
                break
            del parent.children[e]
            parent.labels._discard(x)

    def _unsat_ids(self, s):
        out = []
        stack = [self.root]
        while stack:
            node = stack.pop()
            if node.terminal is not None:
                out.append(node.terminal)
            if node.children:
                children = node.children
                stack.extend(children[e] for e in node.labels._unsat_ids(s))
        return out

    def _collect(self, node: _TrieNode, targets: tuple) -> Iterator[int]:
        if node.terminal is not None:
            yield node.terminal
        if not targets or not node.children:
            return
        labels = node.labels
        tried = set()
        for j, y in enumerate(targets):
            if y in tried:
                continue
            tried.add(y)
            for e in labels._subsuming_ids(y):
                cut = labels._formulas[e].key
                rest = tuple(z for m, z in enumerate(targets) if m != j and z.key >= cut)
                yield from self._collect(node.children[e], rest)

    def _subsuming_ids(self, phi):
        return set(self._collect(self.root, phi.items))

    def _any_subsuming(self, phi):
        return next(self._collect(self.root, phi.items), None) is not None

    def _check(self):
        paths = {}

        def visit(node, prefix):
            _ensure(set(node.children) == set(node.labels._formulas),
                    "trie edge labels differ from child map")
            node.labels.check_invariants()
            if node.terminal is not None:
                paths[node.terminal] = prefix
            _ensure(node.terminal is not None or node.children or node is self.root,
                    "trie keeps an empty leaf")
            for e, child in node.children.items():
                label = node.labels._formulas[e]
                _ensure(not prefix or prefix[-1].key <= label.key,
                        "trie labels decrease along a path")
                visit(child, prefix + (label,))

        visit(self.root, ())
        _ensure(len(paths) == len(self._ids), "trie terminals differ from members")
        for i, items in paths.items():
            _ensure(self._formulas[i].items == items, "trie path differs from member")


class AndWLSet(LSet):
    """Members indexed by each of their conjuncts (reference counted)."""

    def __init__(self, spec: AndW):
        super().__init__(spec)
        self.L = make_lset(spec.inner)
        self._containing: dict[int, set[int]] = {}

    def _index(self, i, phi):
        for x in set(phi.items):
            c, _ = self.L._add(x)
            self._containing.setdefault(c, set()).add(i)

    def _unindex(self, i, phi):
        for x in set(phi.items):
            c = self.L._ids[x]
            owners = self._containing[c]
            owners.discard(i)
            if not owners:
                del self._containing[c]
                self.L._discard(x)

    def _unsat_ids(self, s):
        out = set()
        for c in self.L._unsat_ids(s):
            out |= self._containing[c]
        return out

    def _subsuming_ids(self, phi):
        result = None
        for y in phi.items:
            hits = set()
            for c in self.L._subsuming_ids(y):
                hits |= self._containing[c]
            result = hits if result is None else result & hits
            if not result:
                return set()
        return result

    def _check(self):
        conjuncts = {x for f in self._ids for x in f.items}
        _ensure(set(self.L._ids) == conjuncts, "conjunct set out of sync")
        for c, owners in self._containing.items():
            x = self.L._formulas[c]
            expect = {i for f, i in self._ids.items() if x in f.items}
            _ensure(owners == expect, f"reference set of {x} out of sync")
        _ensure(set(self._containing) == set(self.L._formulas), "reference table domain wrong")
        self.L.check_invariants()


class QuantLSet(LSet):
    """Single-quantifier block: members indexed by body."""

    def __init__(self, spec: Exists | Forall):
        super().__init__(spec)
        self.L = make_lset(spec.inner)
        self._by_body: dict[int, int] = {}
        self._universal = isinstance(spec, Forall)

    def _index(self, i, phi):
        b, _ = self.L._add(phi.body)
        self._by_body[b] = i

    def _unindex(self, i, phi):
        del self._by_body[self.L._ids[phi.body]]
        self.L._discard(phi.body)

    def _unsat_ids(self, s):
        if not self._ids:
            return []
        result = None
        for t in s.extensions(self.spec.vars):
            ids = self.L._unsat_ids(t)
            if self._universal:
                result = set(ids) if result is None else result.union(ids)
            else:
                result = set(ids) if result is None else result.intersection(ids)
                if not result:
                    break
        return [self._by_body[b] for b in result]

    def _subsuming_ids(self, phi):
        spec = self.spec
        out = set()
        for bp in spec.permuted(phi.body):
            for b in self.L._subsuming_ids(spec.inner.canon(bp)):
                out.add(self._by_body[b])
        return out

    def _any_subsuming(self, phi):
        spec = self.spec
        return any(self.L._any_subsuming(spec.inner.canon(bp)) for bp in spec.permuted(phi.body))

    def _check(self):
        bodies = {f.body for f in self._ids}
        _ensure(set(self.L._ids) == bodies, "body set out of sync")
        for b, i in self._by_body.items():
            _ensure(self._formulas[i].body == self.L._formulas[b], "body map out of sync")
        self.L.check_invariants()


class EFLSet(LSet):
    """Either-quantifier block split into an existential and a universal part."""

    def __init__(self, spec: EF):
        super().__init__(spec)
        self.LE = QuantLSet(Exists(spec.vars, spec.inner))
        self.LA = QuantLSet(Forall(spec.vars, spec.inner))
        self._from = {EXISTS: {}, FORALL: {}}

    def _part(self, q):
        return self.LE if q == EXISTS else self.LA

    def _index(self, i, phi):
        j, _ = self._part(phi.quantifier)._add(phi)
        self._from[phi.quantifier][j] = i

    def _unindex(self, i, phi):
        part = self._part(phi.quantifier)
        del self._from[phi.quantifier][part._ids[phi]]
        part._discard(phi)

    def _unsat_ids(self, s):
        out = [self._from[EXISTS][j] for j in self.LE._unsat_ids(s)]
        out += [self._from[FORALL][j] for j in self.LA._unsat_ids(s)]
        return out

    def _universal_query(self, phi):
        return phi if phi.quantifier == FORALL else Quant(FORALL, phi.vars, phi.body)

    def _subsuming_ids(self, phi):
        out = {self._from[FORALL][j] for j in self.LA._subsuming_ids(self._universal_query(phi))}
        if phi.quantifier == EXISTS:
            out.update(self._from[EXISTS][j] for j in self.LE._subsuming_ids(phi))
        return out

    def _any_subsuming(self, phi):
        if self.LA._any_subsuming(self._universal_query(phi)):
            return True
        return phi.quantifier == EXISTS and self.LE._any_subsuming(phi)

    def _check(self):
        for q, part in ((EXISTS, self.LE), (FORALL, self.LA)):
            expect = {f for f in self._ids if f.quantifier == q}
            _ensure(set(part._ids) == expect, f"{q} part out of sync")
            _ensure(len(self._from[q]) == len(expect), f"{q} id map out of sync")
            part.check_invariants()


_CLASSES = {
    Atoms: AtomsLSet,
    Or2: Or2LSet,
    And2: And2LSet,
    OrK: OrKLSet,
    AndW: AndWLSet,
    Exists: QuantLSet,
    Forall: QuantLSet,
    EF: EFLSet,
}


def make_lset(spec: LanguageSpec, formulas: Iterable[Formula] = ()) -> LSet:
    lset = _CLASSES[type(spec)](spec)
    for phi in formulas:
        lset.insert(phi)
    return lset


def insert(R: LSet, phi: Formula) -> bool:
    return R.insert(phi)


def remove(R: LSet, phi: Formula) -> bool:
    return R.remove(phi)


def unsat(R: LSet, s: State) -> set[Formula]:
    return R.unsat(s)


def subsuming(R: LSet, phi: Formula) -> set[Formula]:
    return R.subsuming(phi)


def is_subsumed(R: LSet, phi: Formula) -> bool:
    return R.is_subsumed(phi)
