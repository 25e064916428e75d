"""Deterministic tree automata over nice tree decompositions.

An automaton reads a nice decomposition bottom-up.  At every node it sees the
bag and the membership pattern of each bag vertex (bit ``i`` set when the
vertex is in the ``i``-th free set) and keeps a small piece of data.  Two sink
values are shared by all automata: ``DEAD`` (the property already fails for
the whole graph) and ``ACC`` (it already holds whatever comes next), which
lets boolean combinations prune hopeless runs early.

Supported building blocks: constants, the set predicates
partition/lpartition/subset/disjoint/within/restrict/independent/covers/
dominating/connected/card_eq, single-vertex quantifiers whose body only talks
about that vertex, and negation/conjunction/disjunction of these.
"""

from __future__ import annotations

from typing import Callable, Dict, Sequence

from .errors import UnsupportedPredicate
from .logic import (
    And, Const, Edge, Eq, Iff, Implies, In, Label, Macro, Node, Not, Or, Quant, free_variables,
)

DEAD = -1
ACC = -2
SINKS = (DEAD, ACC)


class Automaton:
    """Base class; subclasses override the ``_``-prefixed hooks."""

    def leaf(self):
        return None

    def introduce(self, d, v, bag, mem):
        return d if d in SINKS else self._introduce(d, v, bag, mem)

    def forget(self, d, v, bag, mem):
        return d if d in SINKS else self._forget(d, v, bag, mem)

    def join(self, d1, d2, bag, mem):
        if d1 == DEAD or d2 == DEAD:
            return DEAD
        if d1 == ACC or d2 == ACC:
            return ACC
        return self._join(d1, d2, bag, mem)

    def accept(self, d):
        if d in SINKS:
            return d == ACC
        return self._accept(d)

    def _introduce(self, d, v, bag, mem):
        return d

    def _forget(self, d, v, bag, mem):
        return d

    def _join(self, d1, d2, bag, mem):
        return d1

    def _accept(self, d):
        return True


class ConstAutomaton(Automaton):
    def __init__(self, value):
        self.value = value

    def leaf(self):
        return ACC if self.value else DEAD


class VertexCheck(Automaton):
    """Every vertex must pass ``ok(v, pattern)``."""

    def __init__(self, ok):
        self.ok = ok

    def _introduce(self, d, v, bag, mem):
        return d if self.ok(v, mem[v]) else DEAD


class VertexExists(Automaton):
    """Some vertex passes ``ok(v, pattern)``."""

    def __init__(self, ok):
        self.ok = ok

    def leaf(self):
        return False

    def _introduce(self, d, v, bag, mem):
        return ACC if self.ok(v, mem[v]) else d

    def _accept(self, d):
        return False


class EdgeCheck(Automaton):
    """Every edge ``uv`` must pass ``ok(pattern_u, pattern_v)`` (symmetric)."""

    def __init__(self, g, ok):
        self.g = g
        self.ok = ok

    def _introduce(self, d, v, bag, mem):
        for u in self.g.neighbors(v):
            if u in bag and u != v and not self.ok(mem[u], mem[v]):
                return DEAD
        return d


class NeighbourWitness(Automaton):
    """Every vertex with ``needs(pattern)`` has a neighbour with ``gives(pattern)``.

    Data: bag vertices still waiting for a witness.
    """

    def __init__(self, g, needs, gives):
        self.g = g
        self.needs = needs
        self.gives = gives

    def leaf(self):
        return frozenset()

    def _introduce(self, d, v, bag, mem):
        nbrs = [u for u in self.g.neighbors(v) if u in bag]
        waiting = set(d)
        if self.gives(mem[v]):
            waiting.difference_update(nbrs)
        if self.needs(mem[v]) and not any(self.gives(mem[u]) for u in nbrs):
            waiting.add(v)
        return frozenset(waiting)

    def _forget(self, d, v, bag, mem):
        return DEAD if v in d else d

    def _join(self, d1, d2, bag, mem):
        return d1 & d2

    def _accept(self, d):
        return not d


class Connected(Automaton):
    """The vertices whose pattern has bit ``i`` induce a connected subgraph.

    Data: ``(blocks, closed)`` where ``blocks`` partitions the bag members of
    the set by connectivity in the graph seen so far, and ``closed`` records
    that one component is already complete.  The empty set counts as connected.
    """

    def __init__(self, g, i):
        self.g = g
        self.bit = 1 << i

    def leaf(self):
        return (frozenset(), False)

    def _introduce(self, d, v, bag, mem):
        blocks, closed = d
        if not mem[v] & self.bit:
            return d
        if closed:
            return DEAD
        merged = {v}
        rest = []
        nbrs = set(self.g.neighbors(v))
        for b in blocks:
            if b & nbrs:
                merged |= b
            else:
                rest.append(b)
        return (frozenset(rest + [frozenset(merged)]), False)

    def _forget(self, d, v, bag, mem):
        blocks, closed = d
        if not mem[v] & self.bit:
            return d
        out = []
        emptied = False
        for b in blocks:
            if v in b:
                b = b - {v}
                if not b:
                    emptied = True
                    continue
            out.append(b)
        if emptied:
            if out:
                return DEAD
            return (frozenset(), True)
        return (frozenset(out), closed)

    def _join(self, d1, d2, bag, mem):
        (b1, c1), (b2, c2) = d1, d2
        if c1 and c2:
            return DEAD
        # union of the two connectivity partitions over the same vertex set
        parent = {}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for b in list(b1) + list(b2):
            for x in b:
                parent.setdefault(x, x)
            first = next(iter(sorted(b)))
            for x in b:
                ra, rb = find(first), find(x)
                if ra != rb:
                    parent[rb] = ra
        groups: Dict[int, set] = {}
        for x in parent:
            groups.setdefault(find(x), set()).add(x)
        return (frozenset(frozenset(s) for s in groups.values()), c1 or c2)


class CardEq(Automaton):
    """Exactly ``c`` vertices have bit ``i``."""

    def __init__(self, i, c):
        self.bit = 1 << i
        self.c = c

    def leaf(self):
        return 0

    def _introduce(self, d, v, bag, mem):
        d += bool(mem[v] & self.bit)
        return DEAD if d > self.c else d

    def _join(self, d1, d2, bag, mem):
        d = d1 + d2 - sum(1 for u in bag if mem[u] & self.bit)
        return DEAD if d > self.c else d

    def _accept(self, d):
        return d == self.c


class Product(Automaton):
    """Conjunction (``conjunctive=True``) or disjunction of sub-automata."""

    def __init__(self, parts, conjunctive):
        self.parts = list(parts)
        self.conjunctive = conjunctive

    def _norm(self, ds):
        if self.conjunctive:
            if DEAD in ds:
                return DEAD
            if all(d == ACC for d in ds):
                return ACC
        else:
            if ACC in ds:
                return ACC
            if all(d == DEAD for d in ds):
                return DEAD
        return tuple(ds)

    def leaf(self):
        return self._norm([p.leaf() for p in self.parts])

    def _introduce(self, d, v, bag, mem):
        return self._norm([p.introduce(x, v, bag, mem) for p, x in zip(self.parts, d)])

    def _forget(self, d, v, bag, mem):
        return self._norm([p.forget(x, v, bag, mem) for p, x in zip(self.parts, d)])

    def _join(self, d1, d2, bag, mem):
        return self._norm([p.join(x, y, bag, mem) for p, x, y in zip(self.parts, d1, d2)])

    def _accept(self, d):
        verdicts = [p.accept(x) for p, x in zip(self.parts, d)]
        return all(verdicts) if self.conjunctive else any(verdicts)


class Negation(Automaton):
    def __init__(self, sub):
        self.sub = sub

    @staticmethod
    def _flip(d):
        return ACC if d == DEAD else DEAD if d == ACC else d

    def leaf(self):
        return self._flip(self.sub.leaf())

    def _introduce(self, d, v, bag, mem):
        return self._flip(self.sub.introduce(d, v, bag, mem))

    def _forget(self, d, v, bag, mem):
        return self._flip(self.sub.forget(d, v, bag, mem))

    def _join(self, d1, d2, bag, mem):
        return self._flip(self.sub.join(d1, d2, bag, mem))

    def _accept(self, d):
        return not self.sub.accept(d)


# ---------------------------------------------------------------------------
# Compilation
# ---------------------------------------------------------------------------


def _vertex_formula(node, x, g, index):
    """Compile a quantifier-free body about the single vertex ``x`` to a test."""
    if isinstance(node, Const):
        return lambda v, p: node.value
    if isinstance(node, In):
        if node.elem != x or node.setvar not in index:
            raise UnsupportedPredicate(f"membership {node.elem} in {node.setvar} is not about the quantified vertex")
        bit = 1 << index[node.setvar]
        return lambda v, p: bool(p & bit)
    if isinstance(node, Label):
        if node.elem != x:
            raise UnsupportedPredicate(f"label test on {node.elem}")
        mask = g.label_mask(node.name)
        return lambda v, p: bool(mask >> v & 1)
    if isinstance(node, Eq) and node.left == node.right == x:
        return lambda v, p: True
    if isinstance(node, Edge) and node.left == node.right == x:
        return lambda v, p: False
    if isinstance(node, Not):
        f = _vertex_formula(node.sub, x, g, index)
        return lambda v, p: not f(v, p)
    if isinstance(node, (And, Or)):
        fs = [_vertex_formula(s, x, g, index) for s in node.parts]
        if isinstance(node, And):
            return lambda v, p: all(f(v, p) for f in fs)
        return lambda v, p: any(f(v, p) for f in fs)
    if isinstance(node, Implies):
        a, b = _vertex_formula(node.left, x, g, index), _vertex_formula(node.right, x, g, index)
        return lambda v, p: (not a(v, p)) or b(v, p)
    if isinstance(node, Iff):
        a, b = _vertex_formula(node.left, x, g, index), _vertex_formula(node.right, x, g, index)
        return lambda v, p: a(v, p) == b(v, p)
    raise UnsupportedPredicate(f"{type(node).__name__} is outside the predicate algebra")


def _macro(node, g, index):
    def bit(name):
        if name not in index:
            raise UnsupportedPredicate(f"set {name} is not a free variable")
        return 1 << index[name]

    a = node.args
    name = node.name
    if name == "partition":
        bits = [bit(s) for s in a]
        return VertexCheck(lambda v, p: sum(1 for b in bits if p & b) == 1)
    if name == "lpartition":
        mask = g.label_mask(a[0])
        bits = [bit(s) for s in a[1:]]
        return VertexCheck(lambda v, p: sum(1 for b in bits if p & b) == (1 if mask >> v & 1 else 0))
    if name == "subset":
        x, y = bit(a[0]), bit(a[1])
        return VertexCheck(lambda v, p: not (p & x) or bool(p & y))
    if name == "disjoint":
        x, y = bit(a[0]), bit(a[1])
        return VertexCheck(lambda v, p: not (p & x and p & y))
    if name == "within":
        x, mask = bit(a[0]), g.label_mask(a[1])
        return VertexCheck(lambda v, p: not (p & x) or bool(mask >> v & 1))
    if name == "restrict":
        x, y, mask = bit(a[0]), bit(a[1]), g.label_mask(a[2])
        return VertexCheck(lambda v, p: bool(p & x) == bool(p & y and mask >> v & 1))
    if name == "independent":
        x = bit(a[0])
        return EdgeCheck(g, lambda pu, pv: not (pu & x and pv & x))
    if name == "covers":
        x = bit(a[0])
        return EdgeCheck(g, lambda pu, pv: bool(pu & x or pv & x))
    if name == "dominating":
        x = bit(a[0])
        return NeighbourWitness(g, lambda p: not p & x, lambda p: bool(p & x))
    if name == "connected":
        bit(a[0])
        return Connected(g, index[a[0]])
    if name == "card_eq":
        bit(a[0])
        return CardEq(index[a[0]], int(a[1]))
    raise UnsupportedPredicate(f"predicate {name} has no automaton")


def compile_predicate_automaton(node: Node, g, free_vars: Sequence[str]) -> Automaton:
    """Automaton accepting exactly the assignments that satisfy ``node``.

    Raises UnsupportedPredicate outside the predicate algebra.
    """
    index = {name: i for i, name in enumerate(free_vars)}
    if isinstance(node, Const):
        return ConstAutomaton(node.value)
    if isinstance(node, Macro):
        return _macro(node, g, index)
    if isinstance(node, Not):
        return Negation(compile_predicate_automaton(node.sub, g, free_vars))
    if isinstance(node, And):
        return Product([compile_predicate_automaton(p, g, free_vars) for p in node.parts], True)
    if isinstance(node, Or):
        return Product([compile_predicate_automaton(p, g, free_vars) for p in node.parts], False)
    if isinstance(node, Implies):
        return Product([Negation(compile_predicate_automaton(node.left, g, free_vars)),
                        compile_predicate_automaton(node.right, g, free_vars)], False)
    if isinstance(node, Iff):
        a = compile_predicate_automaton(node.left, g, free_vars)
        b = compile_predicate_automaton(node.right, g, free_vars)
        return Product([Product([a, b], True), Product([Negation(a), Negation(b)], True)], False)
    if isinstance(node, Quant) and not node.is_set:
        if free_variables(node.body)[1] - {node.var}:
            raise UnsupportedPredicate("quantifier body mentions other element variables")
        test = _vertex_formula(node.body, node.var, g, index)
        return VertexCheck(test) if node.kind == "forall" else VertexExists(test)
    raise UnsupportedPredicate(f"{type(node).__name__} is outside the predicate algebra")
