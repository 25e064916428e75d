"""Exhaustive MSO evaluation, assignment shapes and the brute-force oracle."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, List, Optional, Sequence, Tuple

from .errors import InputError, ResourceLimit
from .graph import Graph, NeighborhoodDecomposition, bits, mask_of
from .logic import (
    And, Card, Const, Edge, Eq, Formula, Iff, Implies, In, Label, Macro, Not, Or, Quant,
    assignment_sizes, eval_global, free_variables,
)
from .result import SAT, UNSAT, Result

DEFAULT_WORK_CAP = 1 << 24
BRUTE_FORCE_CAP = 24

UP = -1  # shape value for "more than t"


def popcount(m):
    return bin(m).count("1")


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def _set_depth(node):
    """Largest number of nested set quantifiers."""
    if isinstance(node, Quant):
        return _set_depth(node.body) + (1 if node.is_set else 0)
    if isinstance(node, Not):
        return _set_depth(node.sub)
    if isinstance(node, (And, Or)):
        return max((_set_depth(p) for p in node.parts), default=0)
    if isinstance(node, (Implies, Iff)):
        return max(_set_depth(node.left), _set_depth(node.right))
    return 0


def _connected(g, mask):
    if not mask:
        return True
    start = mask & -mask
    seen = start
    frontier = start
    while frontier:
        v = frontier.bit_length() - 1
        frontier &= ~(1 << v)
        new = g.adj_masks[v] & mask & ~seen
        seen |= new
        frontier |= new
    return seen == mask


def _macro_fn(g, name, args, slot):
    full = (1 << g.n) - 1
    adj = g.adj_masks

    if name == "partition":
        idx = [slot[a] for a in args]

        def fn(env):
            total = 0
            for k in idx:
                m = env[k]
                if total & m:
                    return False
                total |= m
            return total == full
        return fn
    if name == "lpartition":
        lab = g.label_mask(args[0])
        idx = [slot[a] for a in args[1:]]

        def fn(env):
            total = 0
            for k in idx:
                m = env[k]
                if total & m:
                    return False
                total |= m
            return total == lab
        return fn
    if name == "subset":
        a, b = slot[args[0]], slot[args[1]]
        return lambda env: env[a] & ~env[b] == 0
    if name == "disjoint":
        a, b = slot[args[0]], slot[args[1]]
        return lambda env: env[a] & env[b] == 0
    a = slot[args[0]]
    if name == "independent":
        return lambda env: all(adj[v] & env[a] == 0 for v in bits(env[a]))
    if name == "dominating":
        return lambda env: all(adj[v] & env[a] for v in bits(full & ~env[a]))
    if name == "covers":
        return lambda env: all(adj[v] & ~env[a] == 0 for v in bits(full & ~env[a]))
    if name == "connected":
        return lambda env: _connected(g, env[a])
    if name == "within":
        lab = g.label_mask(args[1])
        return lambda env: env[a] & ~lab == 0
    if name == "restrict":
        b = slot[args[1]]
        lab = g.label_mask(args[2])
        return lambda env: env[a] == env[b] & lab
    if name == "card_eq":
        c = int(args[1])
        return lambda env: popcount(env[a]) == c
    raise InputError(f"unknown predicate {name}")


class CompiledFormula:
    """A formula compiled to closures over a slot array.

    Slots ``0..ell-1`` hold the free set variables as bitmasks; bound
    variables get further slots.  Subformulas that mention no bound variable
    are evaluated once per call and cached.
    """

    def __init__(self, g: Graph, root, free_vars: Sequence[str], work_cap=DEFAULT_WORK_CAP):
        depth = _set_depth(root)
        if depth and depth * g.n > work_cap.bit_length() - 1:
            raise ResourceLimit(f"set quantifier nesting {depth} over {g.n} vertices exceeds the work cap")
        self.g = g
        self.free_vars = tuple(free_vars)
        self.nslots = len(self.free_vars)
        self.cache_slots = 0
        self.has_cards = False
        slot = {v: i for i, v in enumerate(self.free_vars)}
        self._fn = self._compile(root, slot)

    def _new_slot(self):
        k = self.nslots
        self.nslots += 1
        return k

    def _compile(self, node, slot):
        fn = self._compile_inner(node, slot)
        if isinstance(node, (Quant, Macro)) and len(slot) == len(self.free_vars):
            # closed up to the free variables: evaluate once per call
            key = self.cache_slots
            self.cache_slots += 1

            def cached(env, cache_key=key, inner=fn):
                memo = env[-1]
                if cache_key not in memo:
                    memo[cache_key] = inner(env)
                return memo[cache_key]
            return cached
        return fn

    def _compile_inner(self, node, slot):
        g = self.g
        if isinstance(node, Const):
            value = node.value
            return lambda env: value
        if isinstance(node, In):
            e, s = slot[node.elem], slot[node.setvar]
            return lambda env: bool(env[s] >> env[e] & 1)
        if isinstance(node, Eq):
            a, b = slot[node.left], slot[node.right]
            return lambda env: env[a] == env[b]
        if isinstance(node, Edge):
            a, b = slot[node.left], slot[node.right]
            adj = g.adj_masks
            return lambda env: bool(adj[env[a]] >> env[b] & 1)
        if isinstance(node, Label):
            lab = g.label_mask(node.name)
            e = slot[node.elem]
            return lambda env: bool(lab >> env[e] & 1)
        if isinstance(node, Card):
            self.has_cards = True
            gid = node.gid
            return lambda env: env[-2][gid]
        if isinstance(node, Macro):
            return _macro_fn(g, node.name, node.args, slot)
        if isinstance(node, Not):
            sub = self._compile(node.sub, slot)
            return lambda env: not sub(env)
        if isinstance(node, And):
            parts = [self._compile(p, slot) for p in node.parts]
            return lambda env: all(p(env) for p in parts)
        if isinstance(node, Or):
            parts = [self._compile(p, slot) for p in node.parts]
            return lambda env: any(p(env) for p in parts)
        if isinstance(node, Implies):
            a, b = self._compile(node.left, slot), self._compile(node.right, slot)
            return lambda env: (not a(env)) or b(env)
        if isinstance(node, Iff):
            a, b = self._compile(node.left, slot), self._compile(node.right, slot)
            return lambda env: a(env) == b(env)
        if isinstance(node, Quant):
            k = self._new_slot()
            inner = dict(slot)
            inner[node.var] = k
            body = self._compile(node.body, inner)
            domain = range(1 << g.n) if node.is_set else range(g.n)
            if node.is_existential:
                def fn(env):
                    for value in domain:
                        env[k] = value
                        if body(env):
                            return True
                    return False
            else:
                def fn(env):
                    for value in domain:
                        env[k] = value
                        if not body(env):
                            return False
                    return True
            return fn
        raise TypeError(node)

    def __call__(self, masks, card_values=None):
        if len(masks) != len(self.free_vars):
            raise InputError("assignment arity does not match the free variables")
        if self.has_cards and card_values is None:
            raise InputError("formula mentions global constraints; pass their truth values")
        env = list(masks) + [0] * (self.nslots - len(self.free_vars)) + [card_values, {}]
        return bool(self._fn(env))


def mc_naive(g, f, masks, free_vars=None, work_cap=DEFAULT_WORK_CAP):
    """Truth of ``f`` on ``g`` under the assignment ``masks`` (one bitmask per free variable)."""
    if isinstance(f, Formula):
        root, free_vars = f.root, f.free_set_vars
    else:
        root = f
        if free_vars is None:
            free_vars = sorted(free_variables(root)[0])
    return CompiledFormula(g, root, free_vars, work_cap)(masks)


# ---------------------------------------------------------------------------
# Shapes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Shape:
    """Per type ``j`` and exact membership pattern ``I`` (a bitmask over the
    free variables) the cell size, capped: values above ``t`` become ``UP``."""

    cells: Tuple[Tuple[int, ...], ...]
    t: int

    @property
    def ell(self):
        return (len(self.cells[0]) - 1).bit_length() if self.cells else 0

    def __str__(self):
        rows = []
        for row in self.cells:
            rows.append("[" + " ".join("^" if c == UP else str(c) for c in row) + "]")
        return " ".join(rows)


def exact_cells(masks, nd, ell):
    """Signature in exact-cell form: counts of vertices in precisely the sets of ``I``."""
    out = []
    for members in nd.types:
        row = [0] * (1 << ell)
        for v in members:
            pattern = 0
            for i in range(ell):
                if masks[i] >> v & 1:
                    pattern |= 1 << i
            row[pattern] += 1
        out.append(tuple(row))
    return tuple(out)


def nested_signature(cells):
    """Counts of ``|intersection of X_i (i in I) within T_j|`` recovered from exact cells."""
    out = []
    for row in cells:
        size = len(row)
        out.append(tuple(sum(row[p] for p in range(size) if p & sub == sub) for sub in range(size)))
    return tuple(out)


def cap_cells(cells, t):
    return Shape(tuple(tuple(c if c <= t else UP for c in row) for row in cells), t)


def shape_of(masks, nd, t, ell=None):
    if ell is None:
        ell = len(masks)
    return cap_cells(exact_cells(masks, nd, ell), t)


def shape_realizable(sh, sizes):
    for row, size in zip(sh.cells, sizes):
        exact = sum(c for c in row if c != UP)
        ups = sum(1 for c in row if c == UP)
        if ups == 0 and exact != size:
            return False
        if ups and exact + (sh.t + 1) * ups > size:
            return False
    return True


def representative_cells(sh, sizes):
    """Concrete cell sizes for a shape: ``t+1`` per UP cell, the remainder on the first one."""
    if not shape_realizable(sh, sizes):
        return None
    out = []
    for row, size in zip(sh.cells, sizes):
        cells = [c if c != UP else sh.t + 1 for c in row]
        rest = size - sum(cells)
        if rest:
            first = row.index(UP)
            cells[first] += rest
        out.append(tuple(cells))
    return tuple(out)


def assignment_from_cells(cells, nd, ell):
    masks = [0] * ell
    for members, row in zip(nd.types, cells):
        it = iter(members)
        for pattern, count in enumerate(row):
            for _ in range(count):
                v = next(it)
                for i in range(ell):
                    if pattern >> i & 1:
                        masks[i] |= 1 << v
    return tuple(masks)


def representative_of_shape(sh, nd):
    """An assignment with shape ``sh``, or None when no assignment has that shape."""
    if len(sh.cells) != nd.nu:
        raise InputError("shape does not match the decomposition")
    cells = representative_cells(sh, nd.sizes())
    if cells is None:
        return None
    return assignment_from_cells(cells, nd, sh.ell)


def enumerate_shapes(nd, ell, t):
    """All realizable shapes (small parameters only)."""
    values = list(range(t + 1)) + [UP]
    rows = []
    for size in nd.sizes():
        opts = []
        for row in itertools.product(values, repeat=1 << ell):
            if shape_realizable(Shape((row,), t), (size,)):
                opts.append(row)
        rows.append(opts)
    for combo in itertools.product(*rows):
        yield Shape(tuple(combo), t)


def shrink_graph(g, nd, cap, ell=1):
    """Keep at most ``2**ell * cap`` vertices per type.

    Returns the induced subgraph, its decomposition and the list mapping new
    vertex ids to old ones.
    """
    limit = (1 << ell) * cap
    keep = []
    for members in nd.types:
        keep.extend(members[:limit])
    if len(keep) == g.n:
        return g, nd, list(range(g.n))
    h, order = g.induced_subgraph(keep)
    index = {v: i for i, v in enumerate(order)}
    types = tuple(tuple(index[v] for v in members[:limit]) for members in nd.types)
    return h, NeighborhoodDecomposition(types, nd.kinds), order


def shape_admissible(sh, g, nd, beta_formula, free_vars, work_cap=DEFAULT_WORK_CAP):
    """Evaluate a pure formula on a representative of ``sh`` in the shrunk graph."""
    ell = len(free_vars)
    if not shape_realizable(sh, nd.sizes()):
        return False
    h, nd_h, _ = shrink_graph(g, nd, sh.t + 1, ell)
    rep = representative_of_shape(sh, nd_h)
    if rep is None:
        return False
    return mc_naive(h, beta_formula, rep, free_vars, work_cap)


# ---------------------------------------------------------------------------
# Brute force
# ---------------------------------------------------------------------------


def check_assignment(inst, masks, compiled=None):
    """Full verification of an assignment: formula, globals and locals."""
    g = inst.graph
    if len(masks) != inst.ell or any(m >> g.n for m in masks):
        return False
    if not inst.locals.satisfied(g, masks):
        return False
    sizes = assignment_sizes(masks)
    cards = {gc.gid: eval_global(gc, sizes) for gc in inst.globals}
    if compiled is None:
        compiled = CompiledFormula(g, inst.effective_root(), inst.formula.free_set_vars)
    return compiled(masks, cards)


def _unconditional_ok(inst, i, mask):
    g = inst.graph
    for (j, v) in inst.locals.nontrivial():
        if j != i:
            continue
        e = inst.locals.entry(j, v)
        if e.cond is not None and e.is_conditional:
            if e.cond != i:
                continue
            admissible = e.admissible(bool(mask >> v & 1))
        else:
            admissible = e.when_in
        if popcount(g.adj_masks[v] & mask) not in admissible:
            return False
    return True


def brute_force_solve(inst, cap=BRUTE_FORCE_CAP, work_cap=DEFAULT_WORK_CAP):
    """Enumerate all assignments; return a minimum-weight satisfying one."""
    g, ell = inst.graph, inst.ell
    if ell * g.n > cap:
        raise ResourceLimit(f"brute force over {ell}*{g.n} bits exceeds cap {cap}")
    compiled = CompiledFormula(g, inst.effective_root(), inst.formula.free_set_vars, work_cap)
    # prefilter per variable on constraints that only look at that variable
    domains = [[m for m in range(1 << g.n) if _unconditional_ok(inst, i, m)] for i in range(ell)]
    weights = inst.weights if inst.weighted else None
    best, best_w = None, None
    checked = 0
    for masks in itertools.product(*domains):
        w = inst.weight_of(masks) if weights else Fraction(0)
        if best is not None and (weights is None or w >= best_w):
            continue
        checked += 1
        if not inst.locals.satisfied(g, masks):
            continue
        sizes = assignment_sizes(masks)
        cards = {gc.gid: eval_global(gc, sizes) for gc in inst.globals}
        if compiled(masks, cards):
            best, best_w = tuple(masks), w
            if weights is None:
                break
    stats = {"checked": checked}
    if best is None:
        return Result(UNSAT, stats=stats)
    return Result(SAT, best, best_w, stats)
