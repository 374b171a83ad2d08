"""Text formats: language files, rendered formulas, model files and states."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Any, Iterable, Mapping, Sequence

from .expr import (
    AndE, EqE, Expr, FalseE, IffE, ImpliesE, NotE, OrE, QuantE, RelE, TrueE, conj, render_expr,
)
from .fol import (
    EQ, FolError, Literal, Signature, SignatureError, State, Structure, Term, Var,
    generate_literals, permutations,
)
from .lang import (
    EF, EXISTS, FORALL, And, And2, AndSeq, AndW, Atom, Atoms, BOTTOM_ATOM, Exists, Forall, Formula,
    LanguageSpec, Or, Or2, OrK, OrSeq, Quant, build_kpdnf,
)


class ParseError(Exception):
    def __init__(self, message: str, line: int = 0, col: int = 0, source: str = "<input>"):
        super().__init__(message)
        self.message = message
        self.line = line
        self.col = col
        self.source = source

    def __str__(self):
        return f"{self.source}:{self.line}:{self.col}: {self.message}"


# ------------------------------------------------------------------ lexer

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<num>\d+)
  | (?P<op><->|->|!=|:=|[()\[\],:.;&|!=])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str, line: int = 1, col: int = 1, source: str = "<input>") -> list[Token]:
    """Split one line (or a whole single-line formula) into tokens."""
    out = []
    pos = 0
    cur_line, line_start = line, -(col - 1)
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", cur_line,
                             pos - line_start + 1, source)
        kind = m.lastgroup
        if kind == "ws":
            chunk = m.group()
            if "\n" in chunk:
                cur_line += chunk.count("\n")
                line_start = pos + chunk.rindex("\n") + 1
        else:
            out.append(Token(kind, m.group(), cur_line, pos - line_start + 1))
        pos = m.end()
    out.append(Token("eof", "", cur_line, pos - line_start + 1))
    return out


class _Cursor:
    def __init__(self, tokens: list[Token], source: str):
        self.tokens = tokens
        self.i = 0
        self.source = source

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def error(self, msg: str, tok: Token | None = None) -> ParseError:
        tok = tok or self.tok
        return ParseError(msg, tok.line, tok.col, self.source)

    def next(self) -> Token:
        tok = self.tok
        if tok.kind != "eof":
            self.i += 1
        return tok

    def at(self, text: str) -> bool:
        return self.tok.kind != "eof" and self.tok.text == text

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        return self.next()

    def ident(self, what: str = "identifier") -> Token:
        if self.tok.kind != "ident":
            raise self.error(f"expected {what}, found {self.tok.text or 'end of input'!r}")
        return self.next()

    def end(self) -> None:
        if self.tok.kind != "eof":
            raise self.error(f"unexpected {self.tok.text!r}")


def _var_decls(cur: _Cursor, sig: Signature) -> list[Var]:
    out = []
    while True:
        name = cur.ident("variable name")
        cur.expect(":")
        sort = cur.ident("sort name")
        if sort.text not in sig.sorts:
            raise cur.error(f"unknown sort {sort.text!r}", sort)
        out.append(Var(name.text, sort.text))
        if not cur.accept(","):
            return out


# -------------------------------------------------------- model formulas


class _ExprParser:
    def __init__(self, cur: _Cursor, sig: Signature, scope: Mapping[str, Var]):
        self.cur = cur
        self.sig = sig
        self.scope = dict(scope)

    def formula(self) -> Expr:
        cur = self.cur
        if cur.at(FORALL) or cur.at(EXISTS):
            return self.quant()
        left = self.implies()
        if cur.accept("<->"):
            return IffE(left, self.implies())
        return left

    def quant(self) -> Expr:
        q = self.cur.next().text
        vs = _var_decls(self.cur, self.sig)
        self.cur.expect(".")
        saved = dict(self.scope)
        self.scope.update({v.name: v for v in vs})
        body = self.formula()
        self.scope = saved
        return QuantE(q, tuple(vs), body)

    def implies(self) -> Expr:
        left = self.disj()
        if self.cur.accept("->"):
            return ImpliesE(left, self._rhs(self.implies))
        return left

    def _rhs(self, rule):
        return self.quant() if self.cur.at(FORALL) or self.cur.at(EXISTS) else rule()

    def disj(self) -> Expr:
        parts = [self.conj()]
        while self.cur.accept("|"):
            parts.append(self._rhs(self.conj))
        return parts[0] if len(parts) == 1 else OrE(tuple(parts))

    def conj(self) -> Expr:
        parts = [self.unary()]
        while self.cur.accept("&"):
            parts.append(self._rhs(self.unary))
        return parts[0] if len(parts) == 1 else AndE(tuple(parts))

    def unary(self) -> Expr:
        cur = self.cur
        if cur.accept("!"):
            return NotE(self._rhs(self.unary))
        if cur.at(FORALL) or cur.at(EXISTS):
            return self.quant()
        if cur.accept("("):
            e = self.formula()
            cur.expect(")")
            return e
        if cur.accept("true"):
            return TrueE()
        if cur.accept("false"):
            return FalseE()
        return self.atom()

    def term(self) -> Term:
        tok = self.cur.ident("term")
        if tok.text in self.scope:
            return self.scope[tok.text]
        c = self.sig.constant(tok.text)
        if c is None:
            raise self.cur.error(f"unknown variable or constant {tok.text!r}", tok)
        return c

    def atom(self) -> Expr:
        cur = self.cur
        tok = cur.tok
        if tok.kind != "ident":
            raise cur.error(f"expected a formula, found {tok.text or 'end of input'!r}")
        nxt = cur.peek()
        if nxt.text == "(" and tok.text not in self.scope:
            cur.next()
            return self._relation(tok, self._args())
        if nxt.text in ("=", "!="):
            left = self.term()
            op = cur.next().text
            right = self.term()
            if left.sort != right.sort:
                raise cur.error(f"equality between sorts {left.sort} and {right.sort}", tok)
            eq = EqE(left, right)
            return eq if op == "=" else NotE(eq)
        cur.next()
        if tok.text in self.scope or self.sig.constant(tok.text) is not None:
            raise cur.error(f"{tok.text!r} is a term, not a formula", tok)
        return self._relation(tok, ())

    def _args(self) -> tuple[Term, ...]:
        self.cur.expect("(")
        args = []
        if not self.cur.at(")"):
            args.append(self.term())
            while self.cur.accept(","):
                args.append(self.term())
        self.cur.expect(")")
        return tuple(args)

    def _relation(self, tok: Token, args) -> RelE:
        if not self.sig.has_relation(tok.text):
            raise self.cur.error(f"unknown relation {tok.text!r}", tok)
        sorts = self.sig.arity(tok.text)
        if tuple(t.sort for t in args) != sorts:
            raise self.cur.error(f"relation {tok.text} expects arguments of sorts {sorts}", tok)
        return RelE(tok.text, args)


def parse_expr(text: str, sig: Signature, scope: Mapping[str, Var] | None = None,
               line: int = 1, col: int = 1, source: str = "<input>") -> Expr:
    cur = _Cursor(tokenize(text, line, col, source), source)
    e = _ExprParser(cur, sig, scope or {}).formula()
    cur.end()
    return e


# ------------------------------------------------------------ model files


def _strip_comment(line: str) -> str:
    i = line.find("#")
    return line if i < 0 else line[:i]


def parse_model(text: str, source: str = "<model>"):
    """Parse the line-oriented model format into a ``ProtocolModel``."""
    from .fixpoint import Action, ProtocolModel

    lines = []
    for n, raw in enumerate(text.splitlines(), 1):
        body = _strip_comment(raw)
        if not body.strip():
            continue
        indent = len(body) - len(body.lstrip())
        stripped = body.strip()
        word, _, rest = stripped.partition(" ")
        col = indent + len(word) + 2 + len(rest) - len(rest.lstrip())
        lines.append((n, indent, word, rest.strip(), col))

    sorts, consts, rels = [], [], []
    for n, _, word, rest, col in lines:
        cur = _Cursor(tokenize(rest, n, col, source), source)
        if word == "sort":
            sorts.append(cur.ident("sort name").text)
            cur.end()
        elif word == "relation":
            name = cur.ident("relation name").text
            args = []
            if cur.accept("("):
                if not cur.at(")"):
                    args.append(cur.ident("sort name").text)
                    while cur.accept(","):
                        args.append(cur.ident("sort name").text)
                cur.expect(")")
            cur.end()
            rels.append((name, tuple(args)))
        elif word == "constant":
            name = cur.ident("constant name").text
            cur.expect(":")
            consts.append((name, cur.ident("sort name").text))
            cur.end()
        elif word not in ("init", "safe", "action", "guard", "update"):
            raise ParseError(f"unknown declaration {word!r}", n, indent + 1, source)
    try:
        sig = Signature(tuple(sorts), tuple(consts), tuple(rels))
    except SignatureError as e:
        raise ParseError(str(e), lines[0][0] if lines else 0, 1, source) from None

    inits, safes, actions = [], [], []
    current = None
    for n, indent, word, rest, col in lines:
        if word in ("sort", "relation", "constant"):
            current = None
            continue
        cur = _Cursor(tokenize(rest, n, col, source), source)
        if word in ("init", "safe"):
            current = None
            e = _ExprParser(cur, sig, {}).formula()
            cur.end()
            (inits if word == "init" else safes).append(e)
        elif word == "action":
            name = cur.ident("action name").text
            params = []
            if cur.accept("("):
                if not cur.at(")"):
                    params = _var_decls(cur, sig)
                cur.expect(")")
            cur.end()
            if any(a["name"] == name for a in actions):
                raise ParseError(f"duplicate action {name!r}", n, col, source)
            current = {"name": name, "params": tuple(params), "guards": [], "updates": {}}
            actions.append(current)
        else:
            if current is None:
                raise ParseError(f"{word!r} outside an action", n, indent + 1, source)
            scope = {p.name: p for p in current["params"]}
            if word == "guard":
                e = _ExprParser(cur, sig, scope).formula()
                cur.end()
                current["guards"].append(e)
            else:
                tok = cur.ident("relation name")
                if not sig.has_relation(tok.text):
                    raise cur.error(f"unknown relation {tok.text!r}", tok)
                uvars = []
                if cur.accept("("):
                    if not cur.at(")"):
                        uvars = _var_decls(cur, sig)
                    cur.expect(")")
                if tuple(v.sort for v in uvars) != sig.arity(tok.text):
                    raise cur.error(f"update of {tok.text} has the wrong argument sorts", tok)
                if tok.text in current["updates"]:
                    raise cur.error(f"relation {tok.text} updated twice", tok)
                cur.expect(":=")
                e = _ExprParser(cur, sig, {**scope, **{v.name: v for v in uvars}}).formula()
                cur.end()
                current["updates"][tok.text] = (tuple(uvars), e)
    built = tuple(
        Action(a["name"], a["params"], conj(*a["guards"]),
               tuple(sorted(a["updates"].items())))
        for a in actions)
    init = conj(*inits)
    safety = conj(*safes) if safes else None
    return ProtocolModel(sig, init, built, safety)


def render_model(model) -> str:
    sig = model.signature
    out = [f"sort {s}" for s in sig.sorts]
    for c, s in sig.constants:
        out.append(f"constant {c}: {s}")
    for r, args in sig.relations:
        out.append(f"relation {r}({', '.join(args)})" if args else f"relation {r}")
    out.append(f"init {render_expr(model.init)}")
    if model.safety is not None:
        out.append(f"safe {render_expr(model.safety)}")
    for a in model.actions:
        ps = ", ".join(f"{v.name}: {v.sort}" for v in a.params)
        out.append(f"action {a.name}({ps})" if a.params else f"action {a.name}")
        if not isinstance(a.guard, TrueE):
            out.append(f"  guard {render_expr(a.guard)}")
        for rel, (vs, e) in a.updates:
            lhs = f"{rel}({', '.join(f'{v.name}: {v.sort}' for v in vs)})" if vs else rel
            out.append(f"  update {lhs} := {render_expr(e)}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------- language files


@dataclass
class SNode:
    value: Any
    line: int
    col: int

    @property
    def is_list(self):
        return isinstance(self.value, list)


def read_sexprs(text: str, source: str = "<language>") -> list[SNode]:
    stack: list[SNode] = [SNode([], 0, 0)]
    line, col = 1, 1
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\n":
            line, col = line + 1, 1
            i += 1
            continue
        if ch.isspace():
            i, col = i + 1, col + 1
            continue
        if ch == ";":
            while i < len(text) and text[i] != "\n":
                i += 1
            continue
        if ch == "(":
            node = SNode([], line, col)
            stack[-1].value.append(node)
            stack.append(node)
            i, col = i + 1, col + 1
            continue
        if ch == ")":
            if len(stack) == 1:
                raise ParseError("unbalanced ')'", line, col, source)
            stack.pop()
            i, col = i + 1, col + 1
            continue
        j = i
        while j < len(text) and not text[j].isspace() and text[j] not in "();":
            j += 1
        stack[-1].value.append(SNode(text[i:j], line, col))
        col += j - i
        i = j
    if len(stack) > 1:
        open_node = stack[-1]
        raise ParseError("unclosed '('", open_node.line, open_node.col, source)
    return stack[0].value


class _LanguageBuilder:
    def __init__(self, sig: Signature, free: Sequence[Var], source: str):
        self.sig = sig
        self.free = list(free)
        self.source = source

    def error(self, msg: str, node: SNode) -> ParseError:
        return ParseError(msg, node.line, node.col, self.source)

    def sym(self, node: SNode, what: str) -> str:
        if node.is_list:
            raise self.error(f"expected {what}", node)
        return node.value

    def head(self, node: SNode) -> tuple[str, list[SNode]]:
        if not node.is_list or not node.value:
            raise self.error("expected a parenthesized form", node)
        return self.sym(node.value[0], "a constructor name"), node.value[1:]

    def options(self, items: list[SNode], allowed: dict[str, Any]) -> dict[str, Any]:
        opts = dict(allowed)
        it = iter(items)
        for node in it:
            key = self.sym(node, "a :keyword")
            if not key.startswith(":") or key[1:] not in allowed:
                raise self.error(f"unknown option {key!r}", node)
            try:
                opts[key[1:]] = next(it)
            except StopIteration:
                raise self.error(f"option {key} needs a value", node) from None
        return opts

    def boolean(self, node) -> bool:
        if isinstance(node, bool):
            return node
        text = self.sym(node, "true or false")
        if text not in ("true", "false"):
            raise self.error("expected true or false", node)
        return text == "true"

    def natural(self, node) -> int:
        if isinstance(node, int):
            return node
        text = self.sym(node, "a number")
        if not text.isdigit():
            raise self.error("expected a natural number", node)
        return int(text)

    def var_block(self, node: SNode, scope: list[Var]) -> tuple[Var, ...]:
        if not node.is_list:
            raise self.error("expected a variable list", node)
        out = []
        for decl in node.value:
            if not decl.is_list or len(decl.value) != 2:
                raise self.error("expected (name sort)", decl)
            name, sort = (self.sym(d, "a name") for d in decl.value)
            if sort not in self.sig.sorts:
                raise self.error(f"unknown sort {sort!r}", decl.value[1])
            if any(v.name == name for v in scope + out) or self.sig.constant(name):
                raise self.error(f"name {name!r} is already in use", decl.value[0])
            out.append(Var(name, sort))
        return tuple(out)

    def build(self, node: SNode, scope: list[Var], blocks: list[tuple[Var, ...]]) -> LanguageSpec:
        name, args = self.head(node)
        try:
            return self._build(name, args, node, scope, blocks)
        except (ValueError, SignatureError) as e:
            if isinstance(e, ParseError):
                raise
            raise self.error(str(e), node) from None

    def _arity(self, args, n, node):
        if len(args) != n:
            raise self.error(f"expected {n} argument(s)", node)

    def _build(self, name, args, node, scope, blocks):
        if name == "atoms":
            return self.atoms(args, scope, blocks)
        if name in ("or2", "and2"):
            self._arity(args, 2, node)
            cls = Or2 if name == "or2" else And2
            return cls(self.build(args[0], scope, blocks), self.build(args[1], scope, blocks))
        if name == "or":
            self._arity(args, 2, node)
            return OrK(self.natural(args[0]), self.build(args[1], scope, blocks))
        if name == "and":
            self._arity(args, 1, node)
            return AndW(self.build(args[0], scope, blocks))
        if name in ("exists", "forall", "ef"):
            self._arity(args, 2, node)
            vs = self.var_block(args[0], scope)
            inner = self.build(args[1], scope + list(vs), blocks + [vs])
            return {"exists": Exists, "forall": Forall, "ef": EF}[name](vs, inner)
        if name == "kpdnf":
            return self.kpdnf(args, node, scope)
        raise self.error(f"unknown constructor {name!r}", node)

    def kpdnf(self, args, node, scope):
        opts = self.options(args, {"prefix": None, "k": 1, "n": 1, "equality": True})
        if opts["prefix"] is None or not opts["prefix"].is_list:
            raise self.error("kpdnf needs a :prefix list", node)
        prefix = []
        seen = list(scope)
        for entry in opts["prefix"].value:
            if not entry.is_list or len(entry.value) != 3:
                raise self.error("expected (forall|exists|ef name sort)", entry)
            kind, vname, sort = (self.sym(x, "a name") for x in entry.value)
            if kind not in (FORALL, EXISTS, "ef"):
                raise self.error(f"unknown quantifier {kind!r}", entry)
            if sort not in self.sig.sorts:
                raise self.error(f"unknown sort {sort!r}", entry)
            if any(v.name == vname for v in seen):
                raise self.error(f"name {vname!r} is already in use", entry)
            v = Var(vname, sort)
            seen.append(v)
            prefix.append((kind, v))
        return build_kpdnf(self.sig, prefix, self.natural(opts["k"]), self.natural(opts["n"]),
                           equality=self.boolean(opts["equality"]))

    def atoms(self, items, scope, blocks):
        lits: list[Literal] = []
        in_scope = scope + [v for v in self.free if v not in scope]
        for item in items:
            head, rest = self.head(item)
            if head == "literals":
                opts = self.options(rest, {"equality": True, "polarity": None})
                pol = "both" if opts["polarity"] is None else self.sym(opts["polarity"], "polarity")
                if pol not in ("both", "positive"):
                    raise self.error("polarity must be both or positive", item)
                lits.extend(generate_literals(self.sig, in_scope, self.boolean(opts["equality"]), pol))
            else:
                lits.append(self.literal(item, in_scope))
        closed = set(lits)
        frontier = list(closed)
        perms = [pi for b in blocks for pi in permutations(b)[1:]]
        while frontier:
            lit = frontier.pop()
            for pi in perms:
                img = lit.rename(pi)
                if img not in closed:
                    closed.add(img)
                    frontier.append(img)
        return Atoms(tuple(closed))

    def term(self, node: SNode, scope: list[Var]) -> Term:
        name = self.sym(node, "a term")
        for v in scope:
            if v.name == name:
                return v
        c = self.sig.constant(name)
        if c is None:
            raise self.error(f"unknown variable or constant {name!r}", node)
        return c

    def literal(self, node: SNode, scope: list[Var]) -> Literal:
        head, rest = self.head(node)
        if head == "not":
            self._arity(rest, 1, node)
            return self.literal(rest[0], scope).negate()
        args = [self.term(a, scope) for a in rest]
        if head == EQ:
            self._arity(rest, 2, node)
            if args[0].sort != args[1].sort:
                raise self.error("equality between different sorts", node)
            return Literal(EQ, args)
        if not self.sig.has_relation(head):
            raise self.error(f"unknown relation {head!r}", node)
        if tuple(a.sort for a in args) != self.sig.arity(head):
            raise self.error(f"wrong argument sorts for {head}", node)
        return Literal(head, args)


def parse_language(text: str, sig: Signature | None = None,
                   source: str = "<language>") -> tuple[LanguageSpec, Signature]:
    """Parse a language file; returns the spec and the signature it uses.

    A file holds optional declarations ``(sort s)``, ``(relation r s...)``,
    ``(constant c s)`` and ``(var x s)`` followed by one language form.
    """
    forms = read_sexprs(text, source)
    sorts, consts, rels, free = [], [], [], []
    body = None
    builder = _LanguageBuilder(sig or Signature(), [], source)
    for form in forms:
        name, args = builder.head(form)
        if name in ("sort", "relation", "constant", "var"):
            words = [builder.sym(a, "a name") for a in args]
            if name == "sort" and len(words) == 1:
                sorts.append(words[0])
            elif name == "relation" and words:
                known = set(sorts) | set(sig.sorts if sig else ())
                for a, w in zip(args[1:], words[1:]):
                    if w not in known:
                        raise builder.error(f"unknown sort {w!r}", a)
                rels.append((words[0], tuple(words[1:])))
            elif name in ("constant", "var") and len(words) == 2:
                (consts if name == "constant" else free).append((tuple(words), form))
            else:
                raise builder.error(f"malformed {name} declaration", form)
        else:
            if body is not None:
                raise builder.error("only one language form is allowed", form)
            body = form
    if body is None:
        raise ParseError("no language form found", 1, 1, source)
    try:
        declared = Signature(tuple(sorts), tuple(w for w, _ in consts), tuple(rels))
        full = declared if sig is None else sig.merge(declared)
    except SignatureError as e:
        raise ParseError(str(e), forms[0].line, forms[0].col, source) from None
    free_vars = []
    for (vname, vsort), form in free:
        if vsort not in full.sorts:
            raise builder.error(f"unknown sort {vsort!r}", form)
        free_vars.append(Var(vname, vsort))
    builder = _LanguageBuilder(full, free_vars, source)
    spec = builder.build(body, [], [])
    return spec, full


def render_language_decls(sig: Signature) -> str:
    out = [f"(sort {s})" for s in sig.sorts]
    out += [f"(constant {c} {s})" for c, s in sig.constants]
    out += [f"(relation {r}{''.join(' ' + a for a in args)})" for r, args in sig.relations]
    return "\n".join(out)


# --------------------------------------------------- rendered formula text


def _literal_index(spec: Atoms) -> dict:
    idx = spec._cache.get("parse_index")
    if idx is None:
        idx = {}
        for lit in spec.base:
            names = tuple(t.name for t in lit.args)
            idx[lit.rel, names, lit.positive] = lit
            if lit.rel == EQ:
                idx[lit.rel, names[::-1], lit.positive] = lit
        spec._cache["parse_index"] = idx
    return idx


class _FormulaParser:
    def __init__(self, cur: _Cursor):
        self.cur = cur

    def parse(self, spec: LanguageSpec) -> Formula:
        cur = self.cur
        if isinstance(spec, Atoms):
            return self.atom(spec)
        if isinstance(spec, (Or2, And2)):
            cur.expect("(")
            left = self.parse(spec.left)
            cur.expect("|" if isinstance(spec, Or2) else "&")
            right = self.parse(spec.right)
            cur.expect(")")
            return (Or if isinstance(spec, Or2) else And)(left, right)
        if isinstance(spec, OrK):
            if cur.accept("false"):
                return OrSeq(())
            items = self.seq("or", spec.inner)
            if len(items) > spec.k:
                raise cur.error(f"more than {spec.k} disjuncts")
            if spec._excluded() is not None and spec._excluded() in items:
                raise cur.error("the bottom element cannot be a disjunct")
            return OrSeq(items)
        if isinstance(spec, AndW):
            items = self.seq("and", spec.inner)
            if not items:
                raise cur.error("empty conjunction")
            return AndSeq(items)
        tok = cur.tok
        q = cur.ident("a quantifier").text
        if q not in spec.quantifiers:
            raise cur.error(f"expected {' or '.join(spec.quantifiers)}", tok)
        vs = []
        while True:
            name = cur.ident("variable name")
            cur.expect(":")
            sort = cur.ident("sort name")
            vs.append(Var(name.text, sort.text))
            if not cur.accept(","):
                break
        if tuple(sorted(vs)) != spec.vars:
            raise cur.error("quantified variables differ from the language block", tok)
        cur.expect(".")
        return Quant(q, spec.vars, self.parse(spec.inner))

    def seq(self, word: str, inner: LanguageSpec) -> list[Formula]:
        cur = self.cur
        cur.expect(word)
        cur.expect("[")
        items = []
        if not cur.at("]"):
            items.append(self.parse(inner))
            while cur.accept(";"):
                items.append(self.parse(inner))
        cur.expect("]")
        return items

    def atom(self, spec: Atoms) -> Formula:
        cur = self.cur
        start = cur.tok
        if cur.accept("false"):
            return BOTTOM_ATOM
        positive = not cur.accept("!")
        name = cur.ident("a literal").text
        if cur.accept("("):
            args = []
            if not cur.at(")"):
                args.append(cur.ident("term").text)
                while cur.accept(","):
                    args.append(cur.ident("term").text)
            cur.expect(")")
            key = (name, tuple(args), positive)
        elif cur.at("=") or cur.at("!="):
            if not positive:
                raise cur.error("negated equality is written with '!='", start)
            positive = cur.next().text == "="
            key = (EQ, (name, cur.ident("term").text), positive)
        else:
            key = (name, (), positive)
        lit = _literal_index(spec).get(key)
        if lit is None:
            raise cur.error("literal is not part of the language", start)
        return Atom(lit)


def parse_formula(text: str, spec: LanguageSpec, line: int = 1,
                  source: str = "<formula>") -> Formula:
    """Parse a rendered formula of ``spec`` (inverse of ``render``)."""
    cur = _Cursor(tokenize(text, line, 1, source), source)
    phi = _FormulaParser(cur).parse(spec)
    cur.end()
    return phi


def parse_formula_lines(text: str, spec: LanguageSpec, source: str = "<formulas>") -> list[Formula]:
    out = []
    for n, raw in enumerate(text.splitlines(), 1):
        body = _strip_comment(raw).strip()
        if body:
            out.append(parse_formula(body, spec, n, source))
    return out


# ------------------------------------------------------------------ states


def state_from_json(obj: Mapping, sig: Signature, variables: Iterable[Var] = (),
                    source: str = "<state>") -> State:
    if not isinstance(obj, Mapping) or "universe" not in obj:
        raise ParseError("a state needs a \"universe\" object", 1, 1, source)
    try:
        universe = {s: int(n) for s, n in obj["universe"].items()}
        for s in sig.sorts:
            if s not in universe:
                raise SignatureError(f"state lacks a universe size for sort {s}")
        extra = set(universe) - set(sig.sorts)
        if extra:
            raise SignatureError(f"state mentions unknown sorts {sorted(extra)}")
        consts = {c: int(e) for c, e in obj.get("constants", {}).items()}
        unknown = set(consts) - {c for c, _ in sig.constants}
        if unknown:
            raise SignatureError(f"state mentions unknown constants {sorted(unknown)}")
        rels_in = obj.get("relations", {})
        unknown = set(rels_in) - {r for r, _ in sig.relations}
        if unknown:
            raise SignatureError(f"state mentions unknown relations {sorted(unknown)}")
        rels = {r: [tuple(int(e) for e in t) for t in rels_in.get(r, [])] for r, _ in sig.relations}
        structure = Structure(universe, consts, rels)
        structure.check(sig)
        by_name = {v.name: v for v in variables}
        assignment = {}
        for name, e in obj.get("assignment", {}).items():
            if name not in by_name:
                raise SignatureError(f"assignment to unknown variable {name!r}")
            v = by_name[name]
            if not 0 <= int(e) < universe[v.sort]:
                raise SignatureError(f"value of {name} out of range")
            assignment[v] = int(e)
    except (TypeError, ValueError, AttributeError, FolError) as e:
        raise ParseError(f"invalid state: {e}", 1, 1, source) from None
    return State(structure, assignment)


def state_to_json(state: State) -> dict:
    st = state.structure
    return {
        "universe": dict(sorted(st.universe.items())),
        "constants": dict(sorted(st.constants.items())),
        "relations": {r: [list(t) for t in sorted(ts)] for r, ts in sorted(st.relations.items())},
        "assignment": {v.name: e for v, e in sorted(state.assignment.items())},
    }


def parse_states(text: str, sig: Signature, variables: Iterable[Var] = (),
                 source: str = "<state>") -> list[State]:
    """States from one JSON value, a JSON array, or one JSON object per line."""
    variables = list(variables)
    try:
        data = json.loads(text)
        items = data if isinstance(data, list) else [data]
    except json.JSONDecodeError:
        items = []
        for n, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            try:
                items.append(json.loads(line))
            except json.JSONDecodeError as e:
                raise ParseError(f"invalid JSON: {e.msg}", n, e.colno, source) from None
    return [state_from_json(obj, sig, variables, source) for obj in items]


def parse_bounds(text: str) -> dict[str, int]:
    """``node=2,value=3`` to a dict."""
    out = {}
    for part in filter(None, (p.strip() for p in text.split(","))):
        name, sep, value = part.partition("=")
        if not sep or not value.strip().isdigit():
            raise ValueError(f"bad bound {part!r}; expected sort=N")
        out[name.strip()] = int(value)
    return out
