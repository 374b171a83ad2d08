"""Bounded first-order languages and their formulas.

A language is described by a tree of spec nodes (``Atoms``, ``Or2``,
``And2``, ``OrK``, ``AndW``, ``Exists``, ``Forall``, ``EF``).  Formulas
mirror the tree: ``Atom``, ``Or``, ``And``, ``OrSeq``, ``AndSeq`` and
``Quant``.

Every formula carries a ``key``: a nested tuple whose natural ordering is
the language's total order on canonical formulas.  Disjunction sequences
compare right to left with suffixes first, conjunction sequences compare
left to right with longer sequences first when one is a prefix of the
other, and existential formulas of an ``EF`` block sort after all
universal ones.
"""

from __future__ import annotations

import enum
import itertools
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

from .fol import Literal, Signature, State, Var, permutations

FORALL = "forall"
EXISTS = "exists"

_SEQ_END = ((1,),)


class ShapeError(ValueError):
    """A formula does not belong to the language it is used with."""


class LanguageTooLarge(Exception):
    def __init__(self, size: int, limit: int):
        super().__init__(f"language has {size} formulas, limit is {limit}")
        self.size = size
        self.limit = limit


class Ordering(enum.Enum):
    LESS = -1
    EQUAL = 0
    GREATER = 1


# ---------------------------------------------------------------- formulas


class Formula:
    __slots__ = ("key", "_hash")

    def __eq__(self, other):
        return self is other or (type(self) is type(other) and self.key == other.key)

    def __hash__(self):
        return self._hash

    def __lt__(self, other: Formula):
        return self.key < other.key

    def __le__(self, other: Formula):
        return self.key <= other.key

    def __repr__(self):
        return f"<{type(self).__name__} {self}>"

    def __str__(self):
        return render(self)


class Atom(Formula):
    """A base literal, or the bottom element when ``lit`` is None."""

    __slots__ = ("lit",)

    def __init__(self, lit: Literal | None):
        self.lit = lit
        self.key = () if lit is None else lit.key
        self._hash = hash(self.key)

    @property
    def is_bottom(self) -> bool:
        return self.lit is None

    def holds(self, state: State) -> bool:
        return self.lit is not None and self.lit.holds(state)

    def substitute(self, pi):
        if self.lit is None:
            return self
        lit = self.lit.rename(pi)
        return self if lit is self.lit else Atom(lit)

    def free_vars(self) -> set[Var]:
        return set() if self.lit is None else self.lit.variables()


class _Pair(Formula):
    __slots__ = ("left", "right")

    def __init__(self, left: Formula, right: Formula):
        self.left = left
        self.right = right
        self.key = (left.key, right.key)
        self._hash = hash((type(self).__name__, self.key))

    def substitute(self, pi):
        left, right = self.left.substitute(pi), self.right.substitute(pi)
        if left is self.left and right is self.right:
            return self
        return type(self)(left, right)

    def free_vars(self):
        return self.left.free_vars() | self.right.free_vars()


class Or(_Pair):
    __slots__ = ()

    def holds(self, state):
        return self.left.holds(state) or self.right.holds(state)


class And(_Pair):
    __slots__ = ()

    def holds(self, state):
        return self.left.holds(state) and self.right.holds(state)


class _Seq(Formula):
    __slots__ = ("items",)

    def substitute(self, pi):
        items = tuple(x.substitute(pi) for x in self.items)
        if all(a is b for a, b in zip(items, self.items)):
            return self
        return type(self)(items)

    def free_vars(self):
        out = set()
        for x in self.items:
            out |= x.free_vars()
        return out


class OrSeq(_Seq):
    __slots__ = ()

    def __init__(self, items: Iterable[Formula] = ()):
        self.items = tuple(items)
        self.key = tuple(x.key for x in reversed(self.items))
        self._hash = hash(("or", self.key))

    def holds(self, state):
        return any(x.holds(state) for x in self.items)


class AndSeq(_Seq):
    __slots__ = ()

    def __init__(self, items: Iterable[Formula]):
        self.items = tuple(items)
        if not self.items:
            raise ShapeError("empty conjunctions are not allowed")
        self.key = tuple((0, x.key) for x in self.items) + _SEQ_END
        self._hash = hash(("and", self.key))

    def holds(self, state):
        return all(x.holds(state) for x in self.items)


class Quant(Formula):
    __slots__ = ("quantifier", "vars", "body")

    def __init__(self, quantifier: str, variables: Iterable[Var], body: Formula):
        if quantifier not in (FORALL, EXISTS):
            raise ValueError(f"unknown quantifier {quantifier}")
        self.quantifier = quantifier
        self.vars = tuple(sorted(variables))
        self.body = body
        self.key = (0 if quantifier == FORALL else 1, body.key)
        self._hash = hash(("q", self.key))

    def __eq__(self, other):
        return self is other or (type(other) is Quant and self.key == other.key
                                 and self.vars == other.vars)

    __hash__ = Formula.__hash__

    def holds(self, state):
        states = state.extensions(self.vars)
        if self.quantifier == FORALL:
            return all(self.body.holds(s) for s in states)
        return any(self.body.holds(s) for s in states)

    def with_body(self, body: Formula) -> Quant:
        return Quant(self.quantifier, self.vars, body)

    def substitute(self, pi):
        if any(v in pi for v in self.vars):
            pi = {k: v for k, v in pi.items() if k not in self.vars}
        body = self.body.substitute(pi)
        return self if body is self.body else Quant(self.quantifier, self.vars, body)

    def free_vars(self):
        return self.body.free_vars() - set(self.vars)


BOTTOM_ATOM = Atom(None)


def render(phi: Formula) -> str:
    if isinstance(phi, Atom):
        return "false" if phi.lit is None else str(phi.lit)
    if isinstance(phi, Or):
        return f"({render(phi.left)} | {render(phi.right)})"
    if isinstance(phi, And):
        return f"({render(phi.left)} & {render(phi.right)})"
    if isinstance(phi, OrSeq):
        if not phi.items:
            return "false"
        return "or[" + "; ".join(render(x) for x in phi.items) + "]"
    if isinstance(phi, AndSeq):
        return "and[" + "; ".join(render(x) for x in phi.items) + "]"
    if isinstance(phi, Quant):
        vs = ", ".join(f"{v.name}:{v.sort}" for v in phi.vars)
        return f"{phi.quantifier} {vs}. {render(phi.body)}"
    raise TypeError(f"not a formula: {phi!r}")


# ------------------------------------------------------------- spec nodes


class LanguageSpec:
    """Base class of language spec nodes.

    Subclasses implement the per-constructor rules; the module level
    functions (``subsumes``, ``canonicalize`` ...) validate their arguments
    and dispatch here.
    """

    def children(self) -> tuple[LanguageSpec, ...]:
        return ()

    def walk(self) -> Iterator[LanguageSpec]:
        yield self
        for c in self.children():
            yield from c.walk()

    @property
    def bottom(self) -> Formula:
        cache = self._cache
        if "bottom" not in cache:
            cache["bottom"] = self._bottom()
        return cache["bottom"]

    def is_bottom(self, phi: Formula) -> bool:
        return phi == self.bottom


def _cache_field():
    return field(default_factory=dict, init=False, repr=False, compare=False, hash=False)


@dataclass(frozen=True)
class Atoms(LanguageSpec):
    base: tuple[Literal, ...]
    _cache: dict = _cache_field()

    def __post_init__(self):
        object.__setattr__(self, "base", tuple(sorted(set(self.base))))
        object.__setattr__(self, "_members", frozenset(self.base))

    def _bottom(self):
        return BOTTOM_ATOM

    def contains(self, phi) -> bool:
        return isinstance(phi, Atom) and (phi.lit is None or phi.lit in self._members)

    def subsumes(self, a: Atom, b: Atom) -> bool:
        return a.lit is None or a.key == b.key

    def canon(self, phi):
        return phi

    def size(self) -> int:
        return len(self.base) + 1

    def formulas(self) -> list[Formula]:
        return [BOTTOM_ATOM] + [Atom(lit) for lit in self.base]

    def canonical_formulas(self) -> list[Formula]:
        return self.formulas()


@dataclass(frozen=True)
class _PairSpec(LanguageSpec):
    left: LanguageSpec
    right: LanguageSpec
    _cache: dict = _cache_field()

    def children(self):
        return (self.left, self.right)

    def _bottom(self):
        return self.ftype(self.left.bottom, self.right.bottom)

    def contains(self, phi):
        return (type(phi) is self.ftype and self.left.contains(phi.left)
                and self.right.contains(phi.right))

    def subsumes(self, a, b):
        return self.left.subsumes(a.left, b.left) and self.right.subsumes(a.right, b.right)

    def canon(self, phi):
        left, right = self.left.canon(phi.left), self.right.canon(phi.right)
        if left is phi.left and right is phi.right:
            return phi
        return self.ftype(left, right)

    def size(self):
        return self.left.size() * self.right.size()

    def formulas(self):
        return [self.ftype(a, b) for a in self.left.formulas() for b in self.right.formulas()]

    def canonical_formulas(self):
        return [self.ftype(a, b) for a in self.left.canonical_formulas()
                for b in self.right.canonical_formulas()]


class Or2(_PairSpec):
    ftype = Or


class And2(_PairSpec):
    ftype = And


def _has_injective_match(a_items, b_items, sub) -> bool:
    """Is there an injective map from a_items into b_items along ``sub``?"""
    adj = [[j for j, y in enumerate(b_items) if sub(x, y)] for x in a_items]
    if any(not row for row in adj):
        return False
    owner: dict[int, int] = {}

    def augment(i, seen):
        for j in adj[i]:
            if j in seen:
                continue
            seen.add(j)
            if j not in owner or augment(owner[j], seen):
                owner[j] = i
                return True
        return False

    return all(augment(i, set()) for i in range(len(a_items)))


@dataclass(frozen=True)
class OrK(LanguageSpec):
    """Disjunctions of at most ``k`` formulas of ``inner``.

    Over a literal base the bottom atom is never used as a disjunct: it is
    false, and the empty disjunction already plays that role.  Other inner
    languages keep their bottom, since canonicalization may produce it.
    """

    k: int
    inner: LanguageSpec
    _cache: dict = _cache_field()

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("k must be non-negative")

    def children(self):
        return (self.inner,)

    def _bottom(self):
        return OrSeq(())

    def _excluded(self):
        return self.inner.bottom if isinstance(self.inner, Atoms) else None

    def contains(self, phi):
        if not isinstance(phi, OrSeq) or len(phi.items) > self.k:
            return False
        bot = self._excluded()
        return all(x != bot and self.inner.contains(x) for x in phi.items)

    def subsumes(self, a, b):
        if len(a.items) > len(b.items):
            return False
        if not a.items:
            return True
        if isinstance(self.inner, Atoms):
            avail = Counter(x.key for x in b.items)
            for x in a.items:
                if x.lit is None:
                    continue
                if not avail[x.key]:
                    return False
                avail[x.key] -= 1
            return True
        return _has_injective_match(a.items, b.items, self.inner.subsumes)

    def canon(self, phi):
        items = sorted((self.inner.canon(x) for x in phi.items), key=_key)
        if all(x is y for x, y in zip(items, phi.items)):
            return phi
        return OrSeq(items)

    def size(self):
        n = self.inner.size() - (self._excluded() is not None)
        return sum(n ** i for i in range(self.k + 1))

    def formulas(self):
        bot = self._excluded()
        inner = [x for x in self.inner.formulas() if x != bot]
        out = []
        for length in range(self.k + 1):
            out.extend(OrSeq(c) for c in itertools.product(inner, repeat=length))
        return out

    def canonical_formulas(self):
        bot = self._excluded()
        inner = sorted((x for x in self.inner.canonical_formulas() if x != bot), key=_key)
        out = []
        for length in range(self.k + 1):
            out.extend(OrSeq(c) for c in itertools.combinations_with_replacement(inner, length))
        return out


@dataclass(frozen=True)
class AndW(LanguageSpec):
    """Non-empty conjunctions of any length over ``inner``.

    As a finite enumeration target the language is taken to be the
    conjunctions of distinct conjuncts in increasing order, which covers
    every conjunction up to subsumption-equivalence.
    """

    inner: LanguageSpec
    _cache: dict = _cache_field()

    def children(self):
        return (self.inner,)

    def _bottom(self):
        return AndSeq((self.inner.bottom,))

    def contains(self, phi):
        return isinstance(phi, AndSeq) and all(self.inner.contains(x) for x in phi.items)

    def subsumes(self, a, b):
        sub = self.inner.subsumes
        return all(any(sub(x, y) for x in a.items) for y in b.items)

    def canon(self, phi):
        items = {self.inner.canon(x) for x in phi.items}
        items = minimal(self.inner, items)
        if len(items) == len(phi.items) and all(x is y for x, y in zip(items, phi.items)):
            return phi
        return AndSeq(items)

    def size(self):
        return 2 ** self.inner.size() - 1

    def formulas(self):
        inner = sorted(self.inner.formulas(), key=_key)
        out = []
        for length in range(1, len(inner) + 1):
            out.extend(AndSeq(c) for c in itertools.combinations(inner, length))
        return out

    def canonical_formulas(self):
        inner = sorted(self.inner.canonical_formulas(), key=_key)
        sub = self.inner.subsumes
        out: list[Formula] = []

        def extend(start, chosen):
            for i in range(start, len(inner)):
                x = inner[i]
                if any(sub(c, x) or sub(x, c) for c in chosen):
                    continue
                chosen.append(x)
                out.append(AndSeq(chosen))
                extend(i + 1, chosen)
                chosen.pop()

        extend(0, [])
        out.sort(key=lambda f: (len(f.items), [inner.index(x) for x in f.items]))
        return out


@dataclass(frozen=True)
class _QuantSpec(LanguageSpec):
    vars: tuple[Var, ...]
    inner: LanguageSpec
    _cache: dict = _cache_field()

    def __post_init__(self):
        vs = tuple(sorted(set(self.vars)))
        if len(vs) != len(self.vars):
            raise ValueError("duplicate variable in quantifier block")
        names = [v.name for v in vs]
        if len(set(names)) != len(names):
            raise ValueError("variable names in a block must be distinct")
        object.__setattr__(self, "vars", vs)
        for node in self.inner.walk():
            if isinstance(node, _QuantSpec) and set(node.vars) & set(vs):
                raise ValueError("nested quantifier blocks must bind distinct variables")
        perms = permutations(vs)
        object.__setattr__(self, "perms", perms)
        for node in self.inner.walk():
            if isinstance(node, Atoms):
                for pi in perms[1:]:
                    if any(lit.rename(pi) not in node._members for lit in node.base):
                        raise ValueError("literal base is not closed under permutations "
                                         "of the quantified variables")

    def children(self):
        return (self.inner,)

    def _bottom(self):
        return Quant(self.default_quantifier, self.vars, self.inner.bottom)

    def contains(self, phi):
        return (isinstance(phi, Quant) and phi.vars == self.vars
                and phi.quantifier in self.quantifiers and self.inner.contains(phi.body))

    def permuted(self, body: Formula) -> list[Formula]:
        """``body`` under every permutation of the block, identity first."""
        cache = self._cache.setdefault("perm", {})
        out = cache.get(body)
        if out is None:
            if len(cache) > 200_000:
                cache.clear()
            out = [body] + [body.substitute(pi) for pi in self.perms[1:]]
            cache[body] = out
        return out

    def body_subsumes(self, a: Formula, b: Formula) -> bool:
        sub = self.inner.subsumes
        return any(sub(a, bp) for bp in self.permuted(b))

    def canon_body(self, body: Formula) -> Formula:
        return min((self.inner.canon(bp) for bp in self.permuted(body)), key=_key)

    def canon(self, phi):
        body = self.canon_body(phi.body)
        return phi if body == phi.body else phi.with_body(body)

    def canonical_bodies(self) -> list[Formula]:
        return [b for b in self.inner.canonical_formulas() if self.canon_body(b) == b]

    def size(self):
        return len(self.quantifiers) * self.inner.size()


class Exists(_QuantSpec):
    quantifiers = (EXISTS,)
    default_quantifier = EXISTS

    def subsumes(self, a, b):
        return self.body_subsumes(a.body, b.body)

    def formulas(self):
        return [Quant(EXISTS, self.vars, b) for b in self.inner.formulas()]

    def canonical_formulas(self):
        return [Quant(EXISTS, self.vars, b) for b in self.canonical_bodies()]


class Forall(_QuantSpec):
    quantifiers = (FORALL,)
    default_quantifier = FORALL

    def subsumes(self, a, b):
        return self.body_subsumes(a.body, b.body)

    def formulas(self):
        return [Quant(FORALL, self.vars, b) for b in self.inner.formulas()]

    def canonical_formulas(self):
        return [Quant(FORALL, self.vars, b) for b in self.canonical_bodies()]


class EF(_QuantSpec):
    """A block whose quantifier is chosen per formula, either way."""

    quantifiers = (FORALL, EXISTS)
    default_quantifier = FORALL

    def subsumes(self, a, b):
        if a.quantifier == EXISTS and b.quantifier == FORALL:
            return False
        return self.body_subsumes(a.body, b.body)

    def formulas(self):
        bodies = self.inner.formulas()
        return [Quant(q, self.vars, b) for q in (FORALL, EXISTS) for b in bodies]

    def canonical_formulas(self):
        bodies = self.canonical_bodies()
        return [Quant(q, self.vars, b) for q in (FORALL, EXISTS) for b in bodies]


def _key(phi: Formula):
    return phi.key


# --------------------------------------------------------------- public API


def check_formula(spec: LanguageSpec, phi: Formula) -> None:
    if not spec.contains(phi):
        raise ShapeError(f"{phi!r} does not belong to the language")


def bottom(spec: LanguageSpec) -> Formula:
    return spec.bottom


def satisfies(state: State, spec: LanguageSpec, phi: Formula) -> bool:
    return phi.holds(state)


def subsumes(spec: LanguageSpec, phi: Formula, psi: Formula) -> bool:
    check_formula(spec, phi)
    check_formula(spec, psi)
    return spec.subsumes(phi, psi)


def compare(spec: LanguageSpec, phi: Formula, psi: Formula) -> Ordering:
    """Position of ``phi`` relative to ``psi`` in the order on canonical formulas."""
    if phi.key == psi.key:
        return Ordering.EQUAL
    return Ordering.LESS if phi.key < psi.key else Ordering.GREATER


def canonicalize(spec: LanguageSpec, phi: Formula) -> Formula:
    check_formula(spec, phi)
    return spec.canon(phi)


def is_canonical(spec: LanguageSpec, phi: Formula) -> bool:
    return spec.canon(phi) == phi


def minimal(spec: LanguageSpec, formulas: Iterable[Formula]) -> list[Formula]:
    """The subsumption-minimal members of a set of canonical formulas, sorted.

    Relies on subsumption between canonical formulas implying order, so a
    formula can only be subsumed by one that sorts before it.
    """
    kept: list[Formula] = []
    sub = spec.subsumes
    for f in sorted(set(formulas), key=_key):
        if not any(sub(k, f) for k in kept):
            kept.append(f)
    return kept


def language_size(spec: LanguageSpec) -> int:
    return spec.size()


def enumerate_language(spec: LanguageSpec, limit: int | None = None,
                       canonical_only: bool = False) -> list[Formula]:
    """All formulas of ``spec`` (or only the canonical ones), deterministically ordered."""
    size = spec.size()
    if limit is not None and size > limit:
        raise LanguageTooLarge(size, limit)
    if canonical_only:
        return spec.canonical_formulas()
    return spec.formulas()


def bound_variables(spec: LanguageSpec) -> list[Var]:
    out = []
    for node in spec.walk():
        if isinstance(node, _QuantSpec):
            out.extend(node.vars)
    return out


def free_variables(spec: LanguageSpec) -> list[Var]:
    """Variables used by literals of ``spec`` but not bound inside it."""
    used = set()
    for node in spec.walk():
        if isinstance(node, Atoms):
            for lit in node.base:
                used |= lit.variables()
    return sorted(used - set(bound_variables(spec)))


def spec_signature(spec: LanguageSpec) -> Signature:
    """The smallest signature covering the symbols used by ``spec``."""
    sorts: dict[str, None] = {}
    consts: dict[str, str] = {}
    rels: dict[str, tuple[str, ...]] = {}
    for v in bound_variables(spec):
        sorts.setdefault(v.sort)
    for node in spec.walk():
        if not isinstance(node, Atoms):
            continue
        for lit in node.base:
            for t in lit.args:
                sorts.setdefault(t.sort)
                if not isinstance(t, Var):
                    consts[t.name] = t.sort
            if lit.rel != "=":
                rels[lit.rel] = tuple(t.sort for t in lit.args)
    return Signature(tuple(sorts), tuple(sorted(consts.items())), tuple(sorted(rels.items())))


# ------------------------------------------------------------------ k-pDNF


def build_kpdnf(sig: Signature, prefix: Sequence[tuple[str, Var]], k: int, n: int,
                equality: bool = True) -> LanguageSpec:
    """Quantified ``clause | cube_1 | ... | cube_{k-1}`` language.

    ``prefix`` lists ``(kind, var)`` pairs with kind one of ``forall``,
    ``exists`` or ``ef``.  Consecutive universal (or existential) entries
    share one block; consecutive ``ef`` entries share a block while they
    have the same sort.  Cube literals must mention some variable outside
    the leading universal block, since cubes over those variables alone can
    be split off into separate clauses.
    """
    from .fol import generate_literals

    if k < 1:
        raise ValueError("k must be at least 1")
    if n < 1:
        raise ValueError("n must be at least 1")
    variables = [v for _, v in prefix]
    if len(set(variables)) != len(variables) or len({v.name for v in variables}) != len(variables):
        raise ValueError("prefix variables must be distinct")
    for kind, _ in prefix:
        if kind not in (FORALL, EXISTS, "ef"):
            raise ValueError(f"unknown quantifier kind {kind}")

    leading = set()
    for kind, v in prefix:
        if kind != FORALL:
            break
        leading.add(v)

    a1 = generate_literals(sig, variables, equality=equality)
    a2 = [lit for lit in a1 if lit.variables() - leading]
    clause = OrK(n, Atoms(tuple(a1)))
    if k == 1 or not a2:
        body: LanguageSpec = clause
    else:
        body = Or2(clause, OrK(k - 1, AndW(Atoms(tuple(a2)))))

    blocks: list[tuple[str, list[Var]]] = []
    for kind, v in prefix:
        if blocks and blocks[-1][0] == kind and (kind != "ef" or blocks[-1][1][0].sort == v.sort):
            blocks[-1][1].append(v)
        else:
            blocks.append((kind, [v]))
    wrappers = {FORALL: Forall, EXISTS: Exists, "ef": EF}
    for kind, vs in reversed(blocks):
        body = wrappers[kind](tuple(vs), body)
    return body

