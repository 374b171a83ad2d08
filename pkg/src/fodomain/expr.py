"""General first-order formulas used by protocol models.

Model formulas (initial condition, safety, guards, update right-hand sides)
are not restricted to a bounded language.  They are compiled into Python
closures over ``(structure, env)`` where ``env`` maps variable names to
elements.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping

from .fol import Structure, Term, Var

Env = Mapping[str, int]
Evaluator = Callable[[Structure, dict], bool]


class Expr:
    def evaluate(self, structure: Structure, env: Env | None = None) -> bool:
        return self.compiled()(structure, dict(env or {}))

    def compiled(self) -> Evaluator:
        fn = self.__dict__.get("_fn")
        if fn is None:
            fn = self._compile()
            object.__setattr__(self, "_fn", fn)
        return fn

    def __str__(self):
        return render_expr(self)


def _term_getter(t: Term):
    if isinstance(t, Var):
        name = t.name
        return lambda st, env: env[name]
    name = t.name
    return lambda st, env: st.constants[name]


@dataclass(frozen=True)
class TrueE(Expr):
    def _compile(self):
        return lambda st, env: True


@dataclass(frozen=True)
class FalseE(Expr):
    def _compile(self):
        return lambda st, env: False


@dataclass(frozen=True)
class RelE(Expr):
    rel: str
    args: tuple[Term, ...]

    def _compile(self):
        rel = self.rel
        getters = [_term_getter(t) for t in self.args]
        if not getters:
            return lambda st, env: () in st.relations[rel]
        if len(getters) == 1:
            g = getters[0]
            return lambda st, env: (g(st, env),) in st.relations[rel]
        return lambda st, env: tuple(g(st, env) for g in getters) in st.relations[rel]


@dataclass(frozen=True)
class EqE(Expr):
    left: Term
    right: Term

    def _compile(self):
        a, b = _term_getter(self.left), _term_getter(self.right)
        return lambda st, env: a(st, env) == b(st, env)


@dataclass(frozen=True)
class NotE(Expr):
    body: Expr

    def _compile(self):
        f = self.body.compiled()
        return lambda st, env: not f(st, env)


@dataclass(frozen=True)
class AndE(Expr):
    parts: tuple[Expr, ...]

    def _compile(self):
        fs = [p.compiled() for p in self.parts]
        return lambda st, env: all(f(st, env) for f in fs)


@dataclass(frozen=True)
class OrE(Expr):
    parts: tuple[Expr, ...]

    def _compile(self):
        fs = [p.compiled() for p in self.parts]
        return lambda st, env: any(f(st, env) for f in fs)


@dataclass(frozen=True)
class ImpliesE(Expr):
    left: Expr
    right: Expr

    def _compile(self):
        a, b = self.left.compiled(), self.right.compiled()
        return lambda st, env: (not a(st, env)) or b(st, env)


@dataclass(frozen=True)
class IffE(Expr):
    left: Expr
    right: Expr

    def _compile(self):
        a, b = self.left.compiled(), self.right.compiled()
        return lambda st, env: a(st, env) == b(st, env)


@dataclass(frozen=True)
class QuantE(Expr):
    quantifier: str
    vars: tuple[Var, ...]
    body: Expr

    def _compile(self):
        f = self.body.compiled()
        universal = self.quantifier == "forall"

        def nest(vs):
            if not vs:
                return f
            v, rest = vs[0], nest(vs[1:])
            name, sort = v.name, v.sort

            def run(st, env):
                saved = env.get(name, _MISSING)
                try:
                    for e in range(st.universe[sort]):
                        env[name] = e
                        if rest(st, env) != universal:
                            return not universal
                    return universal
                finally:
                    if saved is _MISSING:
                        env.pop(name, None)
                    else:
                        env[name] = saved
            return run

        return nest(self.vars)


_MISSING = object()


def conj(*parts: Expr) -> Expr:
    parts = tuple(p for p in parts if not isinstance(p, TrueE))
    if not parts:
        return TrueE()
    return parts[0] if len(parts) == 1 else AndE(parts)


def disj(*parts: Expr) -> Expr:
    parts = tuple(p for p in parts if not isinstance(p, FalseE))
    if not parts:
        return FalseE()
    return parts[0] if len(parts) == 1 else OrE(parts)


def from_formula(phi) -> Expr:
    """Translate a bounded-language formula into a general expression."""
    from .lang import And, AndSeq, Atom, Or, OrSeq, Quant

    if isinstance(phi, Atom):
        if phi.lit is None:
            return FalseE()
        lit = phi.lit
        atom = EqE(*lit.args) if lit.rel == "=" else RelE(lit.rel, lit.args)
        return atom if lit.positive else NotE(atom)
    if isinstance(phi, Or):
        return OrE((from_formula(phi.left), from_formula(phi.right)))
    if isinstance(phi, And):
        return AndE((from_formula(phi.left), from_formula(phi.right)))
    if isinstance(phi, OrSeq):
        return OrE(tuple(from_formula(x) for x in phi.items)) if phi.items else FalseE()
    if isinstance(phi, AndSeq):
        return AndE(tuple(from_formula(x) for x in phi.items))
    if isinstance(phi, Quant):
        return QuantE(phi.quantifier, phi.vars, from_formula(phi.body))
    raise TypeError(f"not a formula: {phi!r}")


# ------------------------------------------------------------------ render

_PREC = {IffE: 1, ImpliesE: 2, OrE: 3, AndE: 4}


def _term(t: Term) -> str:
    return t.name


def render_expr(e: Expr, parent: int = 0) -> str:
    """Render in the model-file syntax; parses back to an equal expression."""
    if isinstance(e, TrueE):
        return "true"
    if isinstance(e, FalseE):
        return "false"
    if isinstance(e, RelE):
        return f"{e.rel}({', '.join(map(_term, e.args))})" if e.args else e.rel
    if isinstance(e, EqE):
        return f"{_term(e.left)} = {_term(e.right)}"
    if isinstance(e, NotE):
        b = e.body
        if isinstance(b, EqE):
            return f"{_term(b.left)} != {_term(b.right)}"
        if isinstance(b, (RelE, NotE, TrueE, FalseE)):
            return "!" + render_expr(b, 5)
        return "!(" + render_expr(b) + ")"
    if isinstance(e, QuantE):
        vs = ", ".join(f"{v.name}:{v.sort}" for v in e.vars)
        text = f"{e.quantifier} {vs}. {render_expr(e.body)}"
        return f"({text})" if parent else text
    prec = _PREC[type(e)]
    if isinstance(e, (AndE, OrE)):
        op = " & " if isinstance(e, AndE) else " | "
        text = op.join(render_expr(p, prec + 1) for p in e.parts)
    else:
        op = " -> " if isinstance(e, ImpliesE) else " <-> "
        text = render_expr(e.left, prec + 1) + op + render_expr(e.right, prec + 1)
    return f"({text})" if parent > prec or (parent and parent == prec) else text
