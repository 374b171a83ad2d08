"""Many-sorted relational first-order kernel.

Signatures carry sorts, constants and relations (no function symbols).
Universe elements are dense integers ``0..n-1`` per sort.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence, Union

EQ = "="


class FolError(Exception):
    pass


class UnboundVariableError(FolError, KeyError):
    def __str__(self) -> str:
        return f"unbound variable: {self.args[0]}"


class SignatureError(FolError, ValueError):
    pass


@dataclass(frozen=True, order=True)
class Var:
    name: str
    sort: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, order=True)
class Const:
    name: str
    sort: str

    def __str__(self) -> str:
        return self.name


Term = Union[Var, Const]


@dataclass(frozen=True)
class Signature:
    sorts: tuple[str, ...] = ()
    constants: tuple[tuple[str, str], ...] = ()
    relations: tuple[tuple[str, tuple[str, ...]], ...] = ()

    def __post_init__(self):
        names = list(self.sorts) + [c for c, _ in self.constants] + [r for r, _ in self.relations]
        dupes = {n for n in names if names.count(n) > 1}
        if dupes:
            raise SignatureError(f"duplicate symbol names: {sorted(dupes)}")
        if EQ in names:
            raise SignatureError("'=' is reserved for equality")
        known = set(self.sorts)
        for c, s in self.constants:
            if s not in known:
                raise SignatureError(f"constant {c} has undeclared sort {s}")
        for r, args in self.relations:
            for s in args:
                if s not in known:
                    raise SignatureError(f"relation {r} has undeclared sort {s}")

    @classmethod
    def build(cls, sorts=(), constants=None, relations=None) -> Signature:
        """Convenience constructor taking plain dicts."""
        return cls(
            tuple(sorts),
            tuple((constants or {}).items()),
            tuple((r, tuple(a)) for r, a in (relations or {}).items()),
        )

    def arity(self, rel: str) -> tuple[str, ...]:
        for r, args in self.relations:
            if r == rel:
                return args
        raise SignatureError(f"unknown relation {rel}")

    def constant(self, name: str) -> Const | None:
        for c, s in self.constants:
            if c == name:
                return Const(c, s)
        return None

    def has_relation(self, name: str) -> bool:
        return any(r == name for r, _ in self.relations)

    def merge(self, other: Signature) -> Signature:
        """Union of two signatures; shared symbols must agree."""
        sorts = list(self.sorts) + [s for s in other.sorts if s not in self.sorts]
        consts = dict(self.constants)
        for c, s in other.constants:
            if consts.setdefault(c, s) != s:
                raise SignatureError(f"constant {c} declared with two sorts")
        rels = dict(self.relations)
        for r, a in other.relations:
            if rels.setdefault(r, a) != a:
                raise SignatureError(f"relation {r} declared with two arities")
        return Signature(tuple(sorts), tuple(consts.items()), tuple(rels.items()))


def _term_text(t: Term) -> str:
    return t.name


class Literal:
    """A possibly negated relation application or equality.

    Equalities keep their two operands in a fixed order so that ``x = y``
    and ``y = x`` are the same literal.
    """

    __slots__ = ("rel", "args", "positive", "key", "_hash")

    def __init__(self, rel: str, args: Sequence[Term], positive: bool = True):
        args = tuple(args)
        if rel == EQ:
            if len(args) != 2:
                raise ValueError("equality takes two operands")
            if args[0].sort != args[1].sort:
                raise SignatureError(f"equality between sorts {args[0].sort} and {args[1].sort}")
            if _term_text(args[1]) < _term_text(args[0]):
                args = (args[1], args[0])
        self.rel = rel
        self.args = args
        self.positive = positive
        self.key = (rel, tuple(_term_text(t) for t in args), 0 if positive else 1)
        self._hash = hash(self.key)

    def __eq__(self, other):
        return isinstance(other, Literal) and self.key == other.key

    def __hash__(self):
        return self._hash

    def __lt__(self, other: Literal):
        return self.key < other.key

    def __repr__(self):
        return f"Literal({self})"

    def __str__(self):
        if self.rel == EQ:
            op = "=" if self.positive else "!="
            return f"{self.args[0]} {op} {self.args[1]}"
        atom = f"{self.rel}({', '.join(map(str, self.args))})" if self.args else self.rel
        return atom if self.positive else "!" + atom

    def negate(self) -> Literal:
        return Literal(self.rel, self.args, not self.positive)

    def rename(self, mapping: Mapping[Var, Var]) -> Literal:
        if not mapping:
            return self
        args = tuple(mapping.get(t, t) if isinstance(t, Var) else t for t in self.args)
        if args == self.args:
            return self
        return Literal(self.rel, args, self.positive)

    def variables(self) -> set[Var]:
        return {t for t in self.args if isinstance(t, Var)}

    def holds(self, state: State) -> bool:
        vals = tuple(state.value(t) for t in self.args)
        if self.rel == EQ:
            truth = vals[0] == vals[1]
        else:
            truth = vals in state.structure.relations[self.rel]
        return truth == self.positive


class Structure:
    """A finite structure. Relations map to frozensets of element tuples."""

    __slots__ = ("universe", "constants", "relations", "key", "_hash")

    def __init__(self, universe: Mapping[str, int], constants: Mapping[str, int] | None = None,
                 relations: Mapping[str, Iterable[tuple[int, ...]]] | None = None):
        for s, n in universe.items():
            if n < 1:
                raise FolError(f"universe of sort {s} must be non-empty")
        self.universe = dict(universe)
        self.constants = dict(constants or {})
        self.relations = {r: frozenset(tuple(t) for t in ts) for r, ts in (relations or {}).items()}
        self.key = (
            tuple(sorted(self.universe.items())),
            tuple(sorted(self.constants.items())),
            tuple(sorted((r, tuple(sorted(ts))) for r, ts in self.relations.items())),
        )
        self._hash = hash(self.key)

    def __eq__(self, other):
        return isinstance(other, Structure) and self.key == other.key

    def __hash__(self):
        return self._hash

    def __lt__(self, other):
        return self.key < other.key

    def __repr__(self):
        rels = ", ".join(f"{r}={sorted(ts)}" for r, ts in sorted(self.relations.items()))
        return f"Structure({self.universe}, {self.constants}, {rels})"

    def size(self, sort: str) -> int:
        return self.universe[sort]

    def assignments(self, variables: Sequence[Var]) -> list[dict[Var, int]]:
        """All assignments of ``variables`` in lexicographic order."""
        ranges = [range(self.universe[v.sort]) for v in variables]
        return [dict(zip(variables, vals)) for vals in itertools.product(*ranges)]

    def with_relations(self, updates: Mapping[str, frozenset]) -> Structure:
        rels = dict(self.relations)
        rels.update(updates)
        return Structure(self.universe, self.constants, rels)

    def check(self, sig: Signature) -> None:
        """Validate against a signature, raising SignatureError on mismatch."""
        for s in sig.sorts:
            if s not in self.universe:
                raise SignatureError(f"structure lacks a universe for sort {s}")
        for c, s in sig.constants:
            if c not in self.constants:
                raise SignatureError(f"constant {c} is not interpreted")
            if not 0 <= self.constants[c] < self.universe[s]:
                raise SignatureError(f"constant {c} out of range")
        for r, args in sig.relations:
            if r not in self.relations:
                raise SignatureError(f"relation {r} is not interpreted")
            for t in self.relations[r]:
                if len(t) != len(args) or any(not 0 <= e < self.universe[s] for e, s in zip(t, args)):
                    raise SignatureError(f"bad tuple {t} for relation {r}")


class State:
    """A structure together with a (partial) variable assignment."""

    __slots__ = ("structure", "assignment")

    def __init__(self, structure: Structure, assignment: Mapping[Var, int] | None = None):
        self.structure = structure
        self.assignment = dict(assignment or {})

    def value(self, t: Term) -> int:
        if isinstance(t, Var):
            try:
                return self.assignment[t]
            except KeyError:
                raise UnboundVariableError(t.name) from None
        return self.structure.constants[t.name]

    def updated(self, nu: Mapping[Var, int]) -> State:
        return State(self.structure, update_assignment(self.assignment, nu))

    def extensions(self, variables: Sequence[Var]) -> list[State]:
        """``self[nu]`` for every assignment ``nu`` of ``variables``."""
        return [State(self.structure, {**self.assignment, **nu})
                for nu in self.structure.assignments(variables)]

    def __eq__(self, other):
        return (isinstance(other, State) and self.structure == other.structure
                and self.assignment == other.assignment)

    def __hash__(self):
        return hash((self.structure, frozenset(self.assignment.items())))

    def __repr__(self):
        asg = {v.name: e for v, e in self.assignment.items()}
        return f"State({self.structure!r}, {asg})"


def eval_term(state: State, t: Term) -> int:
    return state.value(t)


def holds(state: State, lit: Literal) -> bool:
    return lit.holds(state)


def update_assignment(mu: Mapping[Var, int], nu: Mapping[Var, int]) -> dict[Var, int]:
    return {**mu, **nu}


def _relation_domains(sig: Signature, universe: Mapping[str, int]):
    doms = []
    for r, args in sig.relations:
        doms.append((r, list(itertools.product(*(range(universe[s]) for s in args)))))
    return doms


def count_structures(sig: Signature, universe: Mapping[str, int]) -> int:
    n = 1
    for _, s in sig.constants:
        n *= universe[s]
    for _, dom in _relation_domains(sig, universe):
        n *= 2 ** len(dom)
    return n


def enumerate_structures(sig: Signature, bounds: Mapping[str, int]) -> Iterator[Structure]:
    """Every structure whose universe sizes equal ``bounds`` exactly."""
    for s in sig.sorts:
        if bounds.get(s, 0) < 1:
            raise FolError(f"bound for sort {s} must be at least 1")
    universe = {s: bounds[s] for s in sig.sorts}
    doms = _relation_domains(sig, universe)
    const_choices = [range(universe[s]) for _, s in sig.constants]
    rel_choices = [range(2 ** len(dom)) for _, dom in doms]
    for combo in itertools.product(*const_choices, *rel_choices):
        consts = {c: combo[i] for i, (c, _) in enumerate(sig.constants)}
        masks = combo[len(sig.constants):]
        rels = {}
        for (r, dom), mask in zip(doms, masks):
            rels[r] = frozenset(t for i, t in enumerate(dom) if mask >> i & 1)
        yield Structure(universe, consts, rels)


def size_vectors(sig: Signature, bounds: Mapping[str, int]) -> list[dict[str, int]]:
    """All per-sort size combinations up to ``bounds``, smallest first."""
    for s in sig.sorts:
        if bounds.get(s, 0) < 1:
            raise FolError(f"bound for sort {s} must be at least 1")
    combos = itertools.product(*(range(1, bounds[s] + 1) for s in sig.sorts))
    return [dict(zip(sig.sorts, c)) for c in combos]


def enumerate_structures_upto(sig: Signature, bounds: Mapping[str, int]) -> Iterator[Structure]:
    """Every structure whose universe sizes are at most ``bounds``."""
    for sizes in size_vectors(sig, bounds):
        yield from enumerate_structures(sig, sizes)


def permutations(variables: Iterable[Var]) -> list[dict[Var, Var]]:
    """Sort-preserving bijections of ``variables``, identity first."""
    variables = sorted(variables)
    by_sort: dict[str, list[Var]] = {}
    for v in variables:
        by_sort.setdefault(v.sort, []).append(v)
    groups = list(by_sort.values())
    result = []
    for images in itertools.product(*(itertools.permutations(g) for g in groups)):
        pi = {}
        for g, img in zip(groups, images):
            pi.update(zip(g, img))
        result.append(pi)
    return result


def apply_permutation(obj, pi: Mapping[Var, Var]):
    """Rename free variables of a literal or formula according to ``pi``."""
    if isinstance(obj, Literal):
        return obj.rename(pi)
    return obj.substitute(pi)


def generate_literals(sig: Signature, variables: Iterable[Var], equality: bool = True,
                      polarity: str = "both") -> list[Literal]:
    """All well-sorted literals over ``variables`` and the signature's constants."""
    if polarity not in ("both", "positive"):
        raise ValueError("polarity must be 'both' or 'positive'")
    terms: dict[str, list[Term]] = {}
    for v in sorted(variables):
        terms.setdefault(v.sort, []).append(v)
    for c, s in sig.constants:
        terms.setdefault(s, []).append(Const(c, s))
    atoms = []
    for r, args in sig.relations:
        for combo in itertools.product(*(terms.get(s, []) for s in args)):
            atoms.append(Literal(r, combo))
    if equality:
        for ts in terms.values():
            for a, b in itertools.combinations(ts, 2):
                atoms.append(Literal(EQ, (a, b)))
    lits = set(atoms)
    if polarity == "both":
        lits |= {a.negate() for a in atoms}
    return sorted(lits)
