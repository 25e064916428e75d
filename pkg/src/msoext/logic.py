"""MSO syntax, the formula parser, cardinality constraints and instances.

Surface syntax (whitespace-insensitive)::

    exists X1, X2 ( ... )        set quantifier (capitalised variable)
    forall x, y in X ( ... )     element quantifiers, optionally relativised
    setexists / setforall        explicit set quantifiers
    x in X, x notin X, x = y, x != y, edge(x, y), label(L, x)
    & | ! -> <->, true, false
    #card(id)                    global cardinality constraint atom
    bigand i in 1..3 ( ... X{i} ... )    bounded conjunction, expanded here
    bigor  i in 1..3 ( ... )

Set variables start with an upper-case letter, element variables with a
lower-case one.  A quantifier's body extends as far to the right as possible.

Predicate atoms such as ``independent(X)`` or ``connected(X)`` are shorthand
for fixed MSO formulas; they are kept as single nodes so that the evaluator
and the tree-automaton compiler can handle them directly, but every count
that depends on quantifier structure uses their expansion.
"""

from __future__ import annotations

import itertools
import os
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple, Union

from .errors import (
    FragmentMismatch,
    InputError,
    OracleFailure,
    ParseError,
    UnboundVariable,
    UnknownGlobalConstraint,
)
from .graph import Graph, parse_graph, format_graph
from .intervals import IntervalSet

# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------


class Node:
    __slots__ = ()


@dataclass(frozen=True)
class Const(Node):
    value: bool


@dataclass(frozen=True)
class In(Node):
    elem: str
    setvar: str


@dataclass(frozen=True)
class Eq(Node):
    left: str
    right: str


@dataclass(frozen=True)
class Edge(Node):
    left: str
    right: str


@dataclass(frozen=True)
class Label(Node):
    name: str
    elem: str


@dataclass(frozen=True)
class Card(Node):
    gid: str


@dataclass(frozen=True)
class Not(Node):
    sub: Node


@dataclass(frozen=True)
class And(Node):
    parts: Tuple[Node, ...]


@dataclass(frozen=True)
class Or(Node):
    parts: Tuple[Node, ...]


@dataclass(frozen=True)
class Implies(Node):
    left: Node
    right: Node


@dataclass(frozen=True)
class Iff(Node):
    left: Node
    right: Node


@dataclass(frozen=True)
class Quant(Node):
    """Quantifier; ``kind`` is one of exists, forall, setexists, setforall."""

    kind: str
    var: str
    body: Node

    @property
    def is_set(self):
        return self.kind in ("setexists", "setforall")

    @property
    def is_existential(self):
        return self.kind in ("exists", "setexists")


@dataclass(frozen=True)
class Macro(Node):
    name: str
    args: Tuple[str, ...]


TRUE = Const(True)
FALSE = Const(False)


# name -> argument kinds: "S" set variable, "S*" one or more set variables,
# "L" label, "N" natural number
MACROS = {
    "partition": ("S*",),
    "lpartition": ("L", "S*"),
    "subset": ("S", "S"),
    "disjoint": ("S", "S"),
    "independent": ("S",),
    "dominating": ("S",),
    "covers": ("S",),
    "connected": ("S",),
    "within": ("S", "L"),
    "restrict": ("S", "S", "L"),
    "card_eq": ("S", "N"),
}


def conj(*parts):
    flat = []
    for p in parts:
        if isinstance(p, And):
            flat.extend(p.parts)
        else:
            flat.append(p)
    if not flat:
        return TRUE
    if len(flat) == 1:
        return flat[0]
    return And(tuple(flat))


def disj(*parts):
    flat = []
    for p in parts:
        if isinstance(p, Or):
            flat.extend(p.parts)
        else:
            flat.append(p)
    if not flat:
        return FALSE
    if len(flat) == 1:
        return flat[0]
    return Or(tuple(flat))


@dataclass(frozen=True)
class Formula:
    root: Node
    free_set_vars: Tuple[str, ...]

    @property
    def ell(self):
        return len(self.free_set_vars)

    def __str__(self):
        return format_formula(self.root)


def is_set_name(name):
    return name[:1].isupper()


# ---------------------------------------------------------------------------
# Tokenizer and parser
# ---------------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<num>\d+)"
    r"|(?P<id>[A-Za-z_][A-Za-z0-9_']*(?:\{[A-Za-z]\}[A-Za-z0-9_']*)*)"
    r"|(?P<op><->|->|!=|\.\.|[()&|!=,#])"
    r")"
)

KEYWORDS = {
    "exists", "forall", "setexists", "setforall", "in", "notin", "edge", "label",
    "true", "false", "bigand", "bigor",
}


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    pos: int


def tokenize(text):
    toks = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos:].lstrip()[:1]!r}", pos)
        kind = m.lastgroup
        start = m.start(kind)
        toks.append(_Tok(kind, m.group(kind), start))
        pos = m.end()
    toks.append(_Tok("eof", "", len(text)))
    return toks


class _Parser:
    def __init__(self, toks, declared_globals):
        self.toks = toks
        self.i = 0
        self.declared = declared_globals

    def peek(self, offset=0):
        return self.toks[min(self.i + offset, len(self.toks) - 1)]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, text):
        tok = self.take()
        if tok.text != text:
            raise ParseError(f"expected {text!r}, found {tok.text or 'end of input'!r}", tok.pos)
        return tok

    def ident(self):
        tok = self.take()
        if tok.kind != "id" or tok.text in KEYWORDS:
            raise ParseError(f"expected identifier, found {tok.text or 'end of input'!r}", tok.pos)
        return tok.text

    def parse(self):
        node = self.formula()
        tok = self.peek()
        if tok.kind != "eof":
            raise ParseError(f"unexpected {tok.text!r}", tok.pos)
        return node

    def formula(self):
        left = self.implication()
        if self.peek().text == "<->":
            self.take()
            return Iff(left, self.formula())
        return left

    def implication(self):
        left = self.disjunction()
        if self.peek().text == "->":
            self.take()
            return Implies(left, self.implication())
        return left

    def disjunction(self):
        parts = [self.conjunction()]
        while self.peek().text == "|":
            self.take()
            parts.append(self.conjunction())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def conjunction(self):
        parts = [self.unary()]
        while self.peek().text == "&":
            self.take()
            parts.append(self.unary())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def unary(self):
        tok = self.peek()
        if tok.text == "!":
            self.take()
            return Not(self.unary())
        if tok.text in ("exists", "forall", "setexists", "setforall"):
            return self.quantifier()
        if tok.text in ("bigand", "bigor"):
            return self.bounded()
        if tok.text == "(":
            self.take()
            node = self.formula()
            self.expect(")")
            return node
        return self.atom()

    def quantifier(self):
        kw = self.take().text
        names = [self.ident()]
        while self.peek().text == ",":
            self.take()
            names.append(self.ident())
        guard = None
        if self.peek().text in ("in", "notin"):
            neg = self.take().text == "notin"
            guard = (self.ident(), neg)
        body = self.formula()
        for name in reversed(names):
            if kw in ("setexists", "setforall"):
                kind = kw
            elif is_set_name(name):
                kind = "set" + kw
            else:
                kind = kw
            if guard is not None:
                if kind.startswith("set"):
                    raise ParseError("relativised quantifiers bind element variables only", self.peek().pos)
                g = In(name, guard[0])
                if guard[1]:
                    g = Not(g)
                body = conj(g, body) if kind == "exists" else Implies(g, body)
            body = Quant(kind, name, body)
        return body

    def bounded(self):
        kw = self.take()
        var = self.ident()
        self.expect("in")
        lo = self.take()
        self.expect("..")
        hi = self.take()
        if lo.kind != "num" or hi.kind != "num":
            raise ParseError("bounded conjunction needs integer bounds", lo.pos)
        start = self.i
        self.expect("(")
        depth = 1
        while depth:
            tok = self.take()
            if tok.kind == "eof":
                raise ParseError("unbalanced parenthesis", tok.pos)
            if tok.text == "(":
                depth += 1
            elif tok.text == ")":
                depth -= 1
        body = self.toks[start:self.i]
        pattern = "{" + var + "}"
        parts = []
        for value in range(int(lo.text), int(hi.text) + 1):
            sub = [_Tok(t.kind, t.text.replace(pattern, str(value)), t.pos) if t.kind == "id" else t for t in body]
            sub.append(_Tok("eof", "", body[-1].pos))
            parts.append(_Parser(sub, self.declared).parse())
        if kw.text == "bigand":
            return conj(*parts)
        return disj(*parts)

    def atom(self):
        tok = self.take()
        if tok.text == "true":
            return TRUE
        if tok.text == "false":
            return FALSE
        if tok.text == "#":
            name = self.take()
            if name.text != "card":
                raise ParseError("expected 'card' after '#'", name.pos)
            self.expect("(")
            gid = self.take()
            if gid.kind not in ("id", "num"):
                raise ParseError("expected constraint id", gid.pos)
            self.expect(")")
            if self.declared is not None and gid.text not in self.declared:
                raise UnknownGlobalConstraint(f"undeclared global constraint {gid.text!r}")
            return Card(gid.text)
        if tok.text == "edge":
            self.expect("(")
            a = self.ident()
            self.expect(",")
            b = self.ident()
            self.expect(")")
            return Edge(a, b)
        if tok.text == "label":
            self.expect("(")
            name = self.ident()
            self.expect(",")
            x = self.ident()
            self.expect(")")
            return Label(name, x)
        if tok.kind == "id" and tok.text in MACROS and self.peek().text == "(":
            return self.macro(tok)
        if tok.kind == "id" and tok.text not in KEYWORDS:
            op = self.take()
            if op.text in ("in", "notin"):
                node = In(tok.text, self.ident())
                return Not(node) if op.text == "notin" else node
            if op.text in ("=", "!="):
                node = Eq(tok.text, self.ident())
                return Not(node) if op.text == "!=" else node
            raise ParseError(f"expected 'in' or '=' after {tok.text!r}", op.pos)
        raise ParseError(f"unexpected {tok.text or 'end of input'!r}", tok.pos)

    def macro(self, tok):
        self.expect("(")
        args = []
        while True:
            a = self.take()
            if a.kind not in ("id", "num"):
                raise ParseError("bad predicate argument", a.pos)
            args.append(a.text)
            if self.peek().text == ",":
                self.take()
                continue
            self.expect(")")
            break
        spec = MACROS[tok.text]
        ok = True
        if spec[-1] == "S*":
            fixed = spec[:-1]
            ok = len(args) > len(fixed)
            kinds = list(fixed) + ["S"] * (len(args) - len(fixed))
        else:
            ok = len(args) == len(spec)
            kinds = list(spec)
        if ok:
            for a, k in zip(args, kinds):
                if k == "S" and not is_set_name(a):
                    ok = False
                if k == "N" and not a.isdigit():
                    ok = False
        if not ok:
            raise ParseError(f"bad arguments for {tok.text}", tok.pos)
        return Macro(tok.text, tuple(args))


def _natural_key(name):
    return [int(p) if p.isdigit() else p for p in re.split(r"(\d+)", name)]


def parse_formula(text, declared_globals=None, free_vars=None):
    """Parse ``text``; free set variables default to natural order of names."""
    root = _Parser(tokenize(text), declared_globals).parse()
    free_sets, free_elems = free_variables(root)
    if free_elems:
        raise UnboundVariable(f"unbound element variable(s): {', '.join(sorted(free_elems))}")
    if free_vars is None:
        free_vars = tuple(sorted(free_sets, key=_natural_key))
    else:
        free_vars = tuple(free_vars)
        missing = free_sets - set(free_vars)
        if missing:
            raise UnboundVariable(f"unbound set variable(s): {', '.join(sorted(missing))}")
    return Formula(root, free_vars)


def free_variables(node, bound=frozenset()):
    """Return (free set variables, free element variables)."""
    sets, elems = set(), set()

    def use(name):
        if name in bound:
            return
        (sets if is_set_name(name) else elems).add(name)

    if isinstance(node, In):
        use(node.elem)
        use(node.setvar)
    elif isinstance(node, (Eq, Edge)):
        use(node.left)
        use(node.right)
    elif isinstance(node, Label):
        use(node.elem)
    elif isinstance(node, Macro):
        for a, k in zip(node.args, _macro_kinds(node)):
            if k == "S":
                use(a)
    elif isinstance(node, Not):
        return free_variables(node.sub, bound)
    elif isinstance(node, (And, Or)):
        for p in node.parts:
            s, e = free_variables(p, bound)
            sets |= s
            elems |= e
    elif isinstance(node, (Implies, Iff)):
        for p in (node.left, node.right):
            s, e = free_variables(p, bound)
            sets |= s
            elems |= e
    elif isinstance(node, Quant):
        return free_variables(node.body, bound | {node.var})
    return sets, elems


def _macro_kinds(node):
    spec = MACROS[node.name]
    if spec[-1] == "S*":
        return list(spec[:-1]) + ["S"] * (len(node.args) - len(spec) + 1)
    return list(spec)


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------


def format_formula(node):
    if isinstance(node, Const):
        return "true" if node.value else "false"
    if isinstance(node, In):
        return f"{node.elem} in {node.setvar}"
    if isinstance(node, Eq):
        return f"{node.left} = {node.right}"
    if isinstance(node, Edge):
        return f"edge({node.left}, {node.right})"
    if isinstance(node, Label):
        return f"label({node.name}, {node.elem})"
    if isinstance(node, Card):
        return f"#card({node.gid})"
    if isinstance(node, Macro):
        return f"{node.name}({', '.join(node.args)})"
    if isinstance(node, Not):
        if isinstance(node.sub, In):
            return f"{node.sub.elem} notin {node.sub.setvar}"
        if isinstance(node.sub, Eq):
            return f"{node.sub.left} != {node.sub.right}"
        return "!" + _wrap(node.sub)
    if isinstance(node, And):
        return " & ".join(_wrap(p) for p in node.parts)
    if isinstance(node, Or):
        return " | ".join(_wrap(p) for p in node.parts)
    if isinstance(node, Implies):
        return f"{_wrap(node.left)} -> {_wrap(node.right)}"
    if isinstance(node, Iff):
        return f"{_wrap(node.left)} <-> {_wrap(node.right)}"
    if isinstance(node, Quant):
        kw = node.kind
        if kw.startswith("set") and is_set_name(node.var):
            kw = kw[3:]
        return f"{kw} {node.var} ({format_formula(node.body)})"
    raise TypeError(node)


def _wrap(node):
    if isinstance(node, (Const, In, Eq, Edge, Label, Card, Macro)) or (
            isinstance(node, Not) and isinstance(node.sub, (In, Eq))):
        return format_formula(node)
    return "(" + format_formula(node) + ")"


# ---------------------------------------------------------------------------
# Predicate atoms as plain MSO
# ---------------------------------------------------------------------------


def expand_macro(node):
    """Plain MSO formula equivalent to a predicate atom."""
    a = node.args
    x, y, z = "_x", "_y", "_z"
    if node.name == "partition":
        cover = Quant("forall", x, disj(*(In(x, s) for s in a)))
        apart = [
            Quant("forall", x, Not(conj(In(x, s), In(x, t))))
            for s, t in itertools.combinations(a, 2)
        ]
        return conj(cover, *apart)
    if node.name == "lpartition":
        lab, sets = a[0], a[1:]
        cover = Quant("forall", x, Iff(Label(lab, x), disj(*(In(x, s) for s in sets))))
        apart = [
            Quant("forall", x, Not(conj(In(x, s), In(x, t))))
            for s, t in itertools.combinations(sets, 2)
        ]
        return conj(cover, *apart)
    if node.name == "subset":
        return Quant("forall", x, Implies(In(x, a[0]), In(x, a[1])))
    if node.name == "disjoint":
        return Quant("forall", x, Not(conj(In(x, a[0]), In(x, a[1]))))
    if node.name == "independent":
        return Quant("forall", x, Quant("forall", y, Implies(
            conj(In(x, a[0]), In(y, a[0])), Not(Edge(x, y)))))
    if node.name == "dominating":
        return Quant("forall", x, disj(
            In(x, a[0]), Quant("exists", y, conj(In(y, a[0]), Edge(x, y)))))
    if node.name == "covers":
        return Quant("forall", x, Quant("forall", y, Implies(
            Edge(x, y), disj(In(x, a[0]), In(y, a[0])))))
    if node.name == "connected":
        # every split of X into two non-empty halves has an edge across
        cut = "_Y"
        inside = conj(In(x, a[0]), In(x, cut))
        outside = conj(In(y, a[0]), Not(In(y, cut)))
        return Quant("setforall", cut, Implies(
            conj(Quant("exists", x, inside), Quant("exists", y, outside)),
            Quant("exists", x, Quant("exists", y, conj(inside, outside, Edge(x, y))))))
    if node.name == "within":
        return Quant("forall", x, Implies(In(x, a[0]), Label(a[1], x)))
    if node.name == "restrict":
        return Quant("forall", x, Iff(In(x, a[0]), conj(In(x, a[1]), Label(a[2], x))))
    if node.name == "card_eq":
        c = int(a[1])
        names = [f"_c{i}" for i in range(c)]
        distinct = [Not(Eq(p, q)) for p, q in itertools.combinations(names, 2)]
        members = [In(p, a[0]) for p in names]
        only = Quant("forall", z, Implies(In(z, a[0]), disj(*(Eq(z, p) for p in names))))
        body = conj(*distinct, *members, only)
        for p in reversed(names):
            body = Quant("exists", p, body)
        return body
    raise ValueError(node.name)


def expand_macros(node):
    return transform(node, lambda n: expand_macro(n) if isinstance(n, Macro) else None)


def transform(node, fn):
    """Bottom-up rewrite; ``fn`` returns a replacement or None to recurse."""
    out = fn(node)
    if out is not None:
        return out
    if isinstance(node, Not):
        return Not(transform(node.sub, fn))
    if isinstance(node, And):
        return And(tuple(transform(p, fn) for p in node.parts))
    if isinstance(node, Or):
        return Or(tuple(transform(p, fn) for p in node.parts))
    if isinstance(node, Implies):
        return Implies(transform(node.left, fn), transform(node.right, fn))
    if isinstance(node, Iff):
        return Iff(transform(node.left, fn), transform(node.right, fn))
    if isinstance(node, Quant):
        return Quant(node.kind, node.var, transform(node.body, fn))
    return node


def walk(node):
    yield node
    if isinstance(node, Not):
        yield from walk(node.sub)
    elif isinstance(node, (And, Or)):
        for p in node.parts:
            yield from walk(p)
    elif isinstance(node, (Implies, Iff)):
        yield from walk(node.left)
        yield from walk(node.right)
    elif isinstance(node, Quant):
        yield from walk(node.body)


def quantifier_counts(f):
    """Return ``(q_S, q_e, t)`` with ``t = 2**q_S * q_e`` on the expanded formula."""
    root = f.root if isinstance(f, Formula) else f
    q_s = q_e = 0
    for node in walk(expand_macros(root)):
        if isinstance(node, Quant):
            if node.is_set:
                q_s += 1
            else:
                q_e += 1
    return q_s, q_e, (2 ** q_s) * q_e


def card_ids(node):
    return sorted({n.gid for n in walk(node) if isinstance(n, Card)}, key=_natural_key)


def simplify(node):
    """Constant folding."""
    if isinstance(node, Not):
        sub = simplify(node.sub)
        if isinstance(sub, Const):
            return Const(not sub.value)
        if isinstance(sub, Not):
            return sub.sub
        return Not(sub)
    if isinstance(node, And):
        parts = []
        for p in node.parts:
            p = simplify(p)
            if p == FALSE:
                return FALSE
            if p != TRUE:
                parts.append(p)
        return conj(*parts)
    if isinstance(node, Or):
        parts = []
        for p in node.parts:
            p = simplify(p)
            if p == TRUE:
                return TRUE
            if p != FALSE:
                parts.append(p)
        return disj(*parts)
    if isinstance(node, Implies):
        left, right = simplify(node.left), simplify(node.right)
        if left == FALSE or right == TRUE:
            return TRUE
        if left == TRUE:
            return right
        if right == FALSE:
            return simplify(Not(left))
        return Implies(left, right)
    if isinstance(node, Iff):
        left, right = simplify(node.left), simplify(node.right)
        if isinstance(left, Const) and isinstance(right, Const):
            return Const(left.value == right.value)
        if left == TRUE:
            return right
        if right == TRUE:
            return left
        if left == FALSE:
            return simplify(Not(right))
        if right == FALSE:
            return simplify(Not(left))
        return Iff(left, right)
    if isinstance(node, Quant):
        body = simplify(node.body)
        if isinstance(body, Const):
            # domains may be empty for element quantifiers, so keep them
            if node.is_set:
                return body
        return Quant(node.kind, node.var, body)
    return node


def substitute_cards(node, beta):
    return transform(node, lambda n: Const(beta[n.gid]) if isinstance(n, Card) else None)


# ---------------------------------------------------------------------------
# Global constraints
# ---------------------------------------------------------------------------


SENSES = ("<=", "=", ">=")


@dataclass(frozen=True)
class Linear:
    coeffs: Tuple[Fraction, ...]
    sense: str
    bound: Fraction

    def holds(self, sizes):
        lhs = sum((a * s for a, s in zip(self.coeffs, sizes)), Fraction(0))
        if self.sense == "<=":
            return lhs <= self.bound
        if self.sense == ">=":
            return lhs >= self.bound
        return lhs == self.bound

    def describe(self):
        coeffs = " ".join(str(c) for c in self.coeffs)
        return f"linear {coeffs} {self.sense} {self.bound}"


@dataclass(frozen=True)
class Table:
    tuples: frozenset

    def holds(self, sizes):
        return tuple(sizes) in self.tuples

    def describe(self):
        body = " ".join("(" + ",".join(str(v) for v in t) + ")" for t in sorted(self.tuples))
        return f"table {body}"


@dataclass(frozen=True)
class ModCount:
    residue: int
    modulus: int
    var: int = 0

    def holds(self, sizes):
        return sizes[self.var] % self.modulus == self.residue % self.modulus

    def describe(self):
        return f"mod {self.residue} {self.modulus} {self.var + 1}"


@dataclass(frozen=True)
class Member:
    """``|X_var|`` lies in a fixed set of sizes."""

    var: int
    values: IntervalSet

    def holds(self, sizes):
        return sizes[self.var] in self.values

    def describe(self):
        return f"member {self.var + 1} {self.values}"


@dataclass(frozen=True)
class Oracle:
    """Black-box relation; ``fn`` maps a size tuple to a boolean."""

    name: str
    fn: Callable = None

    def holds(self, sizes):
        return bool(self.fn(tuple(sizes)))

    def describe(self):
        return f"poly {self.name}"


@dataclass(frozen=True)
class GlobalConstraint:
    gid: str
    form: object

    @property
    def is_linear(self):
        return isinstance(self.form, Linear)


def global_support(gc, ell):
    """Indices of the variables whose size the constraint can depend on."""
    form = gc.form
    if isinstance(form, Linear):
        return tuple(j for j, c in enumerate(form.coeffs) if c)
    if isinstance(form, (ModCount, Member)):
        return (form.var,)
    return tuple(range(ell))


def eval_global(gc, sizes):
    try:
        return bool(gc.form.holds(tuple(sizes)))
    except (ArithmeticError, IndexError, TypeError, ValueError) as exc:
        raise OracleFailure(f"global constraint {gc.gid}: {exc}") from exc


def compliance_check(sizes, beta, globals_):
    return all(eval_global(gc, sizes) == beta[gc.gid] for gc in globals_)


def linear(gid, coeffs, sense, bound):
    if sense not in SENSES:
        raise InputError(f"bad sense {sense!r}")
    return GlobalConstraint(gid, Linear(tuple(Fraction(c) for c in coeffs), sense, Fraction(bound)))


# polynomial comparisons, e.g. "x1 >= x2^2"

_POLY_TERM = re.compile(r"^([+-]?\d*)\*?((?:x\d+(?:\^\d+)?\*?)*)$")


def _parse_poly(text):
    terms = []
    text = text.replace(" ", "").replace("-", "+-")
    for part in text.split("+"):
        if not part:
            continue
        m = _POLY_TERM.match(part)
        if not m:
            raise ParseError(f"bad polynomial term {part!r}")
        coef_txt, mono = m.groups()
        if coef_txt in ("", "+"):
            coef = 1
        elif coef_txt == "-":
            coef = -1
        else:
            coef = int(coef_txt)
        powers = []
        for v, e in re.findall(r"x(\d+)(?:\^(\d+))?", mono):
            powers.append((int(v) - 1, int(e or 1)))
        terms.append((coef, tuple(powers)))
    return tuple(terms)


def _eval_poly(terms, sizes):
    total = 0
    for coef, powers in terms:
        value = coef
        for var, e in powers:
            value *= sizes[var] ** e
        total += value
    return total


def poly(gid, text):
    """Oracle constraint from a comparison such as ``x1 >= x2^2``."""
    m = re.match(r"^(.*?)(<=|>=|=|<|>)(.*)$", text.replace(" ", ""))
    if not m:
        raise ParseError(f"bad polynomial comparison {text!r}")
    lhs, op, rhs = _parse_poly(m.group(1)), m.group(2), _parse_poly(m.group(3))
    ops = {
        "<=": lambda a, b: a <= b, ">=": lambda a, b: a >= b, "=": lambda a, b: a == b,
        "<": lambda a, b: a < b, ">": lambda a, b: a > b,
    }

    def fn(sizes, lhs=lhs, rhs=rhs, cmp=ops[op]):
        return cmp(_eval_poly(lhs, sizes), _eval_poly(rhs, sizes))

    return GlobalConstraint(gid, Oracle(text.replace(" ", ""), fn))


@dataclass(frozen=True)
class PreEvaluation:
    values: Tuple[Tuple[str, bool], ...]

    def __getitem__(self, gid):
        return dict(self.values)[gid]

    def as_dict(self):
        return dict(self.values)


def pre_evaluations(f, gids=None):
    """Yield ``(beta, beta(f))`` for all truth assignments to the global atoms."""
    root = f.root if isinstance(f, Formula) else f
    ids = list(gids) if gids is not None else card_ids(root)
    for values in itertools.product((True, False), repeat=len(ids)):
        beta = PreEvaluation(tuple(zip(ids, values)))
        yield beta, simplify(substitute_cards(root, beta.as_dict()))


# ---------------------------------------------------------------------------
# Local constraints
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LocalEntry:
    """Admissible counts for ``|N(v) ∩ X_i|``.

    When ``cond`` is set, ``when_in`` applies if ``v`` belongs to ``X_cond``
    and ``when_out`` otherwise; unconditional entries have both equal.
    """

    when_in: IntervalSet
    when_out: IntervalSet
    cond: Optional[int] = None

    @property
    def is_conditional(self):
        return self.cond is not None and self.when_in != self.when_out

    def admissible(self, member):
        return self.when_in if member else self.when_out


class LocalConstraintMap:
    """Per variable ``i`` and vertex ``v`` the admissible neighborhood counts."""

    def __init__(self, n, ell, entries=None):
        self.n = n
        self.ell = ell
        full = IntervalSet.interval(0, n)
        self.full = full
        self._entries: Dict[Tuple[int, int], LocalEntry] = {}
        for (i, v), e in (entries or {}).items():
            self.set(i, v, e)

    def set(self, i, v, entry):
        if not (0 <= i < self.ell and 0 <= v < self.n):
            raise InputError(f"local constraint index ({i + 1}, {v + 1}) out of range")
        if isinstance(entry, IntervalSet):
            entry = LocalEntry(entry, entry)
        entry = LocalEntry(entry.when_in.clip(0, self.n), entry.when_out.clip(0, self.n), entry.cond)
        if entry.cond is not None and entry.when_in == entry.when_out:
            entry = LocalEntry(entry.when_in, entry.when_out)
        if entry.cond is None and entry.when_in == self.full:
            self._entries.pop((i, v), None)
        else:
            self._entries[(i, v)] = entry

    def entry(self, i, v):
        return self._entries.get((i, v)) or LocalEntry(self.full, self.full)

    def alpha(self, i, v):
        """Unconditional admissible set (error on conditional entries)."""
        e = self.entry(i, v)
        if e.is_conditional:
            raise FragmentMismatch("conditional local constraint where a plain one is required")
        return e.when_in

    def nontrivial(self):
        return sorted(self._entries)

    def is_trivial(self, i, v):
        return (i, v) not in self._entries

    @property
    def empty(self):
        return not self._entries

    @property
    def has_conditional(self):
        return any(e.is_conditional for e in self._entries.values())

    @property
    def all_intervals(self):
        return all(not e.is_conditional and e.when_in.is_interval for e in self._entries.values())

    @property
    def is_fair(self):
        return all(
            not e.is_conditional and e.when_in.is_interval and e.when_in and e.when_in.min() == 0
            for e in self._entries.values()
        )

    def satisfied(self, g, masks):
        """Check every entry against a concrete assignment given as bitmasks."""
        for (i, v), e in self._entries.items():
            count = bin(g.adj_masks[v] & masks[i]).count("1")
            member = bool(masks[e.cond] >> v & 1) if e.cond is not None else True
            if count not in e.admissible(member):
                return False
        return True

    def copy(self):
        out = LocalConstraintMap(self.n, self.ell)
        out._entries = dict(self._entries)
        return out

    def __eq__(self, other):
        return isinstance(other, LocalConstraintMap) and (self.n, self.ell, self._entries) == (
            other.n, other.ell, other._entries)


# ---------------------------------------------------------------------------
# Instances
# ---------------------------------------------------------------------------

FRAGMENTS = ("MSO", "G", "L", "G_lin", "L_lin", "GL", "GL_lin", "fairMSO")


@dataclass
class Instance:
    graph: Graph
    formula: Formula
    globals: Tuple[GlobalConstraint, ...] = ()
    locals: Optional[LocalConstraintMap] = None
    weights: Optional[Tuple[Dict[int, Fraction], ...]] = None
    fragment: Optional[str] = None

    def __post_init__(self):
        if self.locals is None:
            self.locals = LocalConstraintMap(self.graph.n, self.ell)
        self.globals = tuple(self.globals)
        if self.fragment is None:
            self.fragment = infer_fragment(self)

    @property
    def ell(self):
        return self.formula.ell

    @property
    def n(self):
        return self.graph.n

    def global_map(self):
        return {g.gid: g for g in self.globals}

    def effective_root(self):
        """Formula with unreferenced declared globals conjoined."""
        used = set(card_ids(self.formula.root))
        extra = [Card(g.gid) for g in self.globals if g.gid not in used]
        return conj(self.formula.root, *extra) if extra else self.formula.root

    def weight_of(self, masks):
        if not self.weights:
            return Fraction(0)
        total = Fraction(0)
        for i, wmap in enumerate(self.weights):
            for v, w in wmap.items():
                if masks[i] >> v & 1:
                    total += w
        return total

    @property
    def weighted(self):
        return bool(self.weights) and any(any(w != 0 for w in m.values()) for m in self.weights)


def infer_fragment(inst):
    has_g = bool(inst.globals)
    has_l = not inst.locals.empty
    lin_g = all(g.is_linear for g in inst.globals)
    lin_l = inst.locals.all_intervals
    if not has_g and not has_l:
        return "MSO"
    if has_g and not has_l:
        return "G_lin" if lin_g else "G"
    if has_l and not has_g:
        return "L_lin" if lin_l else "L"
    return "GL_lin" if lin_g and lin_l else "GL"


def fits_fragment(inst, tag):
    if tag not in FRAGMENTS:
        raise InputError(f"unknown fragment {tag!r}")
    has_g = bool(inst.globals)
    has_l = not inst.locals.empty
    lin_g = all(g.is_linear for g in inst.globals)
    lin_l = inst.locals.all_intervals
    cond = inst.locals.has_conditional
    return {
        "MSO": not has_g and not has_l,
        "G": not has_l,
        "G_lin": not has_l and lin_g,
        "L": not has_g,
        "L_lin": not has_g and lin_l,
        "GL": True,
        "GL_lin": lin_g and lin_l and not cond,
        "fairMSO": not has_g and inst.locals.is_fair,
    }[tag]


def assignment_sizes(masks):
    return tuple(bin(m).count("1") for m in masks)


# ---------------------------------------------------------------------------
# Instance files
# ---------------------------------------------------------------------------

_SECTION = re.compile(r"^\[(\w+)\]\s*(.*)$")


def _parse_global(tok, ell, lineno):
    gid, kind, rest = tok[1], tok[2], tok[3:]
    if kind == "linear":
        if len(rest) < 2 or rest[-2] not in SENSES:
            raise ParseError(f"line {lineno}: linear constraint needs '<coeffs> <sense> <bound>'")
        coeffs = [Fraction(c) for c in rest[:-2]]
        if len(coeffs) != ell:
            raise ParseError(f"line {lineno}: expected {ell} coefficients")
        return linear(gid, coeffs, rest[-2], Fraction(rest[-1]))
    if kind == "table":
        body = " ".join(rest)
        tuples = set()
        for grp in re.findall(r"\(([^)]*)\)", body):
            vals = tuple(int(x) for x in re.split(r"[\s,]+", grp.strip()) if x)
            if len(vals) != ell:
                raise ParseError(f"line {lineno}: table tuple arity must be {ell}")
            tuples.add(vals)
        return GlobalConstraint(gid, Table(frozenset(tuples)))
    if kind == "mod":
        var = int(rest[2]) - 1 if len(rest) > 2 else 0
        return GlobalConstraint(gid, ModCount(int(rest[0]), int(rest[1]), var))
    if kind == "poly":
        return poly(gid, " ".join(rest))
    if kind == "member":
        if len(rest) < 2:
            raise ParseError(f"line {lineno}: member constraint needs '<var> <interval list>'")
        var = int(rest[0]) - 1
        if not 0 <= var < ell:
            raise ParseError(f"line {lineno}: variable index out of range")
        return GlobalConstraint(gid, Member(var, IntervalSet.parse("".join(rest[1:]))))
    raise ParseError(f"line {lineno}: unknown global constraint form {kind!r}")


def parse_instance(text, base_dir="."):
    sections: Dict[str, Tuple[str, List[Tuple[int, str]]]] = {}
    current = None
    # '#' belongs to the formula syntax, so comments are whole lines starting with '%'
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.rstrip()
        if not line.strip() or line.lstrip().startswith("%"):
            continue
        m = _SECTION.match(line.strip())
        if m:
            current = m.group(1).lower()
            if current in sections:
                raise ParseError(f"line {lineno}: duplicate section [{current}]")
            sections[current] = (m.group(2).strip(), [])
            continue
        if current is None:
            raise ParseError(f"line {lineno}: content before first section")
        sections[current][1].append((lineno, line.strip()))

    if "graph" not in sections:
        raise ParseError("missing [graph] section")
    head, body = sections["graph"]
    if head:
        path = head if os.path.isabs(head) else os.path.join(base_dir, head)
        try:
            with open(path) as fh:
                graph = parse_graph(fh.read())
        except OSError as exc:
            raise InputError(f"cannot read graph file {path}: {exc}") from exc
    else:
        graph = parse_graph("\n".join(l for _, l in body))

    free = None
    if "free" in sections:
        head, body = sections["free"]
        free = tuple((head + " " + " ".join(l for _, l in body)).split())

    # formula text may contain '#card', so it is taken verbatim
    if "formula" not in sections:
        raise ParseError("missing [formula] section")
    head, body = sections["formula"]
    ftext = " ".join([head] + [l for _, l in body]).strip() or "true"

    ell_hint = None
    glob_lines = sections.get("globals", ("", []))[1]
    declared = [tok.split()[1] for _, tok in glob_lines if tok.split()[:1] == ["g"] and len(tok.split()) > 1]
    formula = parse_formula(ftext, declared_globals=declared, free_vars=free)
    ell = formula.ell

    globals_ = []
    for lineno, line in glob_lines:
        tok = line.split()
        if tok[0] != "g" or len(tok) < 3:
            raise ParseError(f"line {lineno}: expected 'g <id> <form> ...'")
        globals_.append(_parse_global(tok, ell, lineno))

    locals_ = LocalConstraintMap(graph.n, ell)
    for lineno, line in sections.get("locals", ("", []))[1]:
        tok = line.split()
        if tok[0] != "a" or len(tok) < 4:
            raise ParseError(f"line {lineno}: expected 'a <i> <v|*> <intervals> [if <j> in|out]'")
        cond = None
        if "if" in tok:
            k = tok.index("if")
            cond = (int(tok[k + 1]) - 1, tok[k + 2])
            if cond[1] not in ("in", "out"):
                raise ParseError(f"line {lineno}: condition must be 'in' or 'out'")
            tok = tok[:k]
        i = int(tok[1]) - 1
        if not 0 <= i < ell:
            raise ParseError(f"line {lineno}: variable index out of range")
        ivs = IntervalSet.parse(" ".join(tok[3:]).replace(" ", ""), upper=graph.n)
        targets = range(graph.n) if tok[2] == "*" else [int(tok[2]) - 1]
        for v in targets:
            if cond is None:
                locals_.set(i, v, ivs)
                continue
            old = locals_.entry(i, v)
            if old.cond is not None and old.cond != cond[0]:
                raise ParseError(f"line {lineno}: two different conditioning variables")
            if cond[1] == "in":
                locals_.set(i, v, LocalEntry(ivs, old.when_out, cond[0]))
            else:
                locals_.set(i, v, LocalEntry(old.when_in, ivs, cond[0]))

    weights = None
    wlines = sections.get("weights", ("", []))[1]
    if wlines:
        weights = tuple({} for _ in range(ell))
        for lineno, line in wlines:
            tok = line.split()
            if tok[0] != "w" or len(tok) != 4:
                raise ParseError(f"line {lineno}: expected 'w <i> <v> <cost>'")
            weights[int(tok[1]) - 1][int(tok[2]) - 1] = Fraction(tok[3])

    fragment = None
    if "fragment" in sections:
        fragment = sections["fragment"][0] or sections["fragment"][1][0][1]
    inst = Instance(graph, formula, tuple(globals_), locals_, weights, None)
    if fragment is not None:
        if not fits_fragment(inst, fragment):
            raise FragmentMismatch(f"instance contents do not fit fragment {fragment}")
        inst.fragment = fragment
    return inst


def read_instance(path):
    with open(path) as fh:
        return parse_instance(fh.read(), os.path.dirname(os.path.abspath(path)))


def format_instance(inst, graph_path=None):
    out = []
    if graph_path:
        out.append(f"[graph] {graph_path}")
    else:
        out.append("[graph]")
        out.append(format_graph(inst.graph).rstrip())
    out.append("[free] " + " ".join(inst.formula.free_set_vars))
    out.append("[formula]")
    out.append(format_formula(inst.formula.root))
    if inst.globals:
        out.append("[globals]")
        for g in inst.globals:
            if isinstance(g.form, Oracle) and g.form.fn is not None and not g.form.name:
                raise InputError("anonymous oracle constraints cannot be written")
            out.append(f"g {g.gid} {g.form.describe()}")
    if not inst.locals.empty:
        out.append("[locals]")
        for (i, v) in inst.locals.nontrivial():
            e = inst.locals.entry(i, v)
            if e.cond is None:
                out.append(f"a {i + 1} {v + 1} {e.when_in}")
            else:
                out.append(f"a {i + 1} {v + 1} {e.when_in} if {e.cond + 1} in")
                out.append(f"a {i + 1} {v + 1} {e.when_out} if {e.cond + 1} out")
    if inst.weights:
        out.append("[weights]")
        for i, wmap in enumerate(inst.weights):
            for v in sorted(wmap):
                if wmap[v]:
                    out.append(f"w {i + 1} {v + 1} {wmap[v]}")
    out.append(f"[fragment] {inst.fragment}")
    return "\n".join(out) + "\n"
