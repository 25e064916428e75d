"""Solving along a tree decomposition through a weighted CSP.

For every pre-evaluation of the global constraints the instance becomes a CSP
over the membership bits ``y[v,j]``:

* an automaton for the remaining formula contributes one state variable per
  nice-decomposition node, tied to its children by transition constraints;
* ``s[a,j]`` counts ``|X_j|`` inside the subgraph below node ``a`` (only when
  there are global constraints) and the root counters carry the relations;
* ``lam[a,v,j]`` counts the ``X_j``-neighbours of ``v`` seen below ``a`` (only
  for vertices with a nontrivial local constraint), checked where ``v`` is
  forgotten;
* unary soft constraints carry the weights.

The base decomposition holds the membership bits of each bag and the state
variables; the counters are added as per-node groups with
``augment_decomposition``.  The CSP is then solved exactly with
``freuder_solve``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from .automata import DEAD, compile_predicate_automaton
from .csp import CspInstance, HardConstraint, SoftConstraint, augment_decomposition, constraint_graph, freuder_solve
from .errors import Infeasible, MsoextError, ResourceLimit
from .graph import NodeKind, TreeDecomposition, heuristic_tree_decomposition, make_nice
from .intervals import IntervalSet
from .logic import (
    FALSE, TRUE, And, LocalEntry, Macro, assignment_sizes, compliance_check, eval_global, global_support,
    pre_evaluations, quantifier_counts,
)
from .mso_eval import CompiledFormula, check_assignment
from .result import SAT, UNSAT, Result

BRUTE_FORCE_BITS = 14
STATE_CAP = 50_000


@dataclass
class EncodedInstance:
    csp: CspInstance
    registry: Dict[tuple, int]  # ("y", v, j) / ("s", a, j) / ("lam", a, v, j) / ("q", a)
    base: TreeDecomposition
    extras: Dict[int, Tuple[int, ...]]
    td: TreeDecomposition
    ntd: object
    states: Dict[int, list] = field(default_factory=dict)

    @property
    def kappa(self):
        return max(len(b) for b in self.base.bags) - 1

    @property
    def width(self):
        return max(len(b) for b in self.td.bags) - 1

    def y_vars(self):
        return sorted(v for k, v in self.registry.items() if k[0] == "y")

    def masks(self, assignment, n, ell):
        out = [0] * ell
        for v in range(n):
            for j in range(ell):
                if assignment[self.registry[("y", v, j)]]:
                    out[j] |= 1 << v
        return tuple(out)


class _Builder:
    def __init__(self, g, ntd, ell):
        self.g = g
        self.ntd = ntd
        self.ell = ell
        self.csp = CspInstance()
        self.registry: Dict[tuple, int] = {}
        self.base_bags = [set() for _ in ntd.nodes]
        self.extras: Dict[int, List[int]] = {a: [] for a in range(len(ntd.nodes))}
        self.below = self._vertices_below()

    def var(self, key, domain):
        idx = self.csp.add_var("[" + ",".join(str(k) for k in key) + "]", domain)
        self.registry[key] = idx
        return idx

    def y(self, v, j):
        return self.registry[("y", v, j)]

    def _vertices_below(self):
        out = {}
        for a in self.ntd.postorder():
            node = self.ntd.nodes[a]
            seen = set(node.bag)
            for c in node.children:
                seen |= out[c]
            out[a] = seen
        return out


def _membership_bits(b):
    for v in range(b.g.n):
        for j in range(b.ell):
            b.var(("y", v, j), (0, 1))
    for a, node in enumerate(b.ntd.nodes):
        b.base_bags[a].update(b.y(v, j) for v in node.bag for j in range(b.ell))


def encode_global_counters(b, counted=None):
    """``s[a,j] = |X_j ∩ V(G_a)|`` along the nice decomposition, for ``j`` in ``counted``."""
    ell = b.ell
    counted = range(ell) if counted is None else counted
    for a in b.ntd.postorder():
        node = b.ntd.nodes[a]
        size = len(b.below[a])
        for j in counted:
            s = b.var(("s", a, j), range(size + 1))
            b.extras[a].append(s)
            if node.kind is NodeKind.LEAF:
                b.csp.add_hard(HardConstraint((s,), function=lambda: 0, target=s, name="s-leaf"))
            elif node.kind is NodeKind.INTRODUCE:
                child = b.registry[("s", node.children[0], j)]
                yv = b.y(node.vertex, j)
                b.csp.add_hard(HardConstraint((s, child, yv), function=lambda c, y: c + y, target=s,
                                              name="s-introduce"))
            elif node.kind is NodeKind.FORGET:
                child = b.registry[("s", node.children[0], j)]
                b.csp.add_hard(HardConstraint((s, child), function=lambda c: c, target=s, name="s-forget"))
            else:
                c1, c2 = (b.registry[("s", c, j)] for c in node.children)
                ys = [b.y(u, j) for u in sorted(node.bag)]
                b.csp.add_hard(HardConstraint((s, c1, c2, *ys), function=lambda x1, x2, *yy: x1 + x2 - sum(yy),
                                              target=s, name="s-join"))


def encode_global_relations(b, globals_, beta):
    """Root counters must satisfy each global exactly when ``beta`` says so."""
    root = b.ntd.root
    for gc in globals_:
        want = beta[gc.gid]
        support = global_support(gc, b.ell)
        scope = tuple(b.registry[("s", root, j)] for j in support)

        def holds(t, gc=gc, want=want, support=support):
            # sizes outside the support cannot matter; fill them with zero
            sizes = [0] * b.ell
            for j, value in zip(support, t):
                sizes[j] = value
            return eval_global(gc, sizes) == want

        b.csp.add_hard(HardConstraint(scope, predicate=holds, name=f"global:{gc.gid}"))


def saturation_point(entry, deg):
    """Least ``c`` such that the entry cannot tell apart any two counts in ``[c, deg]``."""
    sets = [entry.when_in, entry.when_out]
    c = deg
    while c > 0 and all((c - 1 in s) == (deg in s) for s in sets):
        c -= 1
    return c


def encode_local_counters(b, locals_):
    """``lam[a,v,j] = |N(v) ∩ X_j ∩ V(G_a)|`` for constrained ``(v, j)``, checked at top(v).

    Counters saturate at the value above which the constraint no longer
    distinguishes counts; sums stay exact below that point.
    """
    g, ntd = b.g, b.ntd
    tracked = {}
    for (j, v) in locals_.nontrivial():
        tracked.setdefault(v, {})[j] = saturation_point(locals_.entry(j, v), g.degree(v))
    if not tracked:
        return
    tops = ntd.tops()
    adj = [set(g.neighbors(v)) for v in range(g.n)]
    for a in ntd.postorder():
        node = ntd.nodes[a]
        for v in sorted(node.bag):
            for j, cap in sorted(tracked.get(v, {}).items()):
                lam = b.var(("lam", a, v, j), range(cap + 1))
                b.extras[a].append(lam)
                if node.kind is NodeKind.INTRODUCE:
                    child = ntd.nodes[node.children[0]]
                    if v == node.vertex:
                        ys = [b.y(u, j) for u in sorted(child.bag) if u in adj[v]]
                        b.csp.add_hard(HardConstraint((lam, *ys), function=lambda *yy, cap=cap: min(cap, sum(yy)),
                                                      target=lam, name="lam-new"))
                    else:
                        old = b.registry[("lam", node.children[0], v, j)]
                        if node.vertex in adj[v]:
                            yv = b.y(node.vertex, j)
                            b.csp.add_hard(HardConstraint((lam, old, yv), function=lambda c, y, cap=cap: min(cap, c + y),
                                                          target=lam, name="lam-introduce"))
                        else:
                            b.csp.add_hard(HardConstraint((lam, old), function=lambda c: c, target=lam,
                                                          name="lam-copy"))
                elif node.kind is NodeKind.FORGET:
                    old = b.registry[("lam", node.children[0], v, j)]
                    b.csp.add_hard(HardConstraint((lam, old), function=lambda c: c, target=lam, name="lam-copy"))
                else:
                    c1, c2 = (b.registry[("lam", c, v, j)] for c in node.children)
                    ys = [b.y(u, j) for u in sorted(node.bag) if u in adj[v]]

                    def join(x1, x2, *yy, cap=cap):
                        # a saturated side already proves the total is saturated
                        if x1 == cap or x2 == cap:
                            return cap
                        return min(cap, x1 + x2 - sum(yy))

                    b.csp.add_hard(HardConstraint((lam, c1, c2, *ys), function=join, target=lam, name="lam-join"))
    for v, caps in tracked.items():
        top = tops[v]
        for j in caps:
            e = locals_.entry(j, v)
            lam = b.registry[("lam", top, v, j)]
            if e.is_conditional:
                yc = b.y(v, e.cond)
                b.csp.add_hard(HardConstraint((lam, yc), predicate=lambda t, e=e: t[0] in e.admissible(bool(t[1])),
                                              name=f"alpha[{v},{j}]"))
            else:
                b.csp.add_hard(HardConstraint((lam,), predicate=lambda t, s=e.when_in: t[0] in s,
                                              name=f"alpha[{v},{j}]"))


def encode_objective(b, weights):
    """Unary soft constraint per nonzero weight; the empty set costs nothing."""
    if not weights:
        return
    for j, wmap in enumerate(weights):
        for v, w in sorted(wmap.items()):
            if w:
                b.csp.add_soft(SoftConstraint((b.y(v, j),), {(1,): Fraction(w)}))


def reachable_states(aut, ntd, ell, cap=STATE_CAP):
    """Per node the automaton states reachable from some assignment, in a fixed order.

    A state is ``(patterns of the bag vertices in sorted order, data)``.
    """
    states: Dict[int, Dict[tuple, None]] = {}
    for a in ntd.postorder():
        node = ntd.nodes[a]
        bag = sorted(node.bag)
        out: Dict[tuple, None] = {}
        if node.kind is NodeKind.LEAF:
            d = aut.leaf()
            if d != DEAD:
                out[((), d)] = None
        elif node.kind is NodeKind.INTRODUCE:
            child_bag = sorted(ntd.nodes[node.children[0]].bag)
            for mem, d in states[node.children[0]]:
                for p in range(1 << ell):
                    st = _introduce(aut, node, bag, child_bag, mem, d, p)
                    if st is not None:
                        out[st] = None
        elif node.kind is NodeKind.FORGET:
            child_bag = sorted(ntd.nodes[node.children[0]].bag)
            for mem, d in states[node.children[0]]:
                st = _forget(aut, node, bag, child_bag, mem, d)
                if st is not None:
                    out[st] = None
        else:
            left, right = node.children
            by_mem: Dict[tuple, list] = {}
            for mem, d in states[right]:
                by_mem.setdefault(mem, []).append(d)
            for mem, d1 in states[left]:
                for d2 in by_mem.get(mem, ()):
                    st = _join(aut, node, bag, mem, d1, d2)
                    if st is not None:
                        out[st] = None
        if len(out) > cap:
            raise ResourceLimit(f"automaton has more than {cap} states at node {a}")
        states[a] = out
    return {a: list(s) for a, s in states.items()}


def _introduce(aut, node, bag, child_bag, mem, d, p):
    patterns = dict(zip(child_bag, mem))
    patterns[node.vertex] = p
    d = aut.introduce(d, node.vertex, node.bag, patterns)
    if d == DEAD:
        return None
    return (tuple(patterns[u] for u in bag), d)


def _forget(aut, node, bag, child_bag, mem, d):
    patterns = dict(zip(child_bag, mem))
    d = aut.forget(d, node.vertex, node.bag, patterns)
    if d == DEAD:
        return None
    return (tuple(patterns[u] for u in bag), d)


def _join(aut, node, bag, mem, d1, d2):
    d = aut.join(d1, d2, node.bag, dict(zip(bag, mem)))
    if d == DEAD:
        return None
    return (mem, d)


def encode_automaton(b, aut):
    """State variable per node, transition constraints, acceptance at the root."""
    ntd, ell = b.ntd, b.ell
    states = reachable_states(aut, ntd, ell)
    index = {a: {st: k for k, st in enumerate(sts)} for a, sts in states.items()}
    for a in ntd.postorder():
        node = ntd.nodes[a]
        bag = sorted(node.bag)
        q = b.var(("q", a), range(len(states[a])) if states[a] else (0,))
        b.base_bags[a].add(q)
        for c in node.children:
            b.base_bags[a].add(b.registry[("q", c)])
        here = index[a]
        if not states[a]:
            b.csp.add_hard(HardConstraint((q,), relation=frozenset(), name="no-run"))
            continue
        if node.kind is NodeKind.LEAF:
            k = here[states[a][0]]
            b.csp.add_hard(HardConstraint((q,), function=lambda k=k: k, target=q, name="q-leaf"))
        elif node.kind is NodeKind.INTRODUCE:
            c = node.children[0]
            qc = b.registry[("q", c)]
            child_states = states[c]
            child_bag = sorted(ntd.nodes[c].bag)
            ys = [b.y(node.vertex, j) for j in range(ell)]

            def step(kc, *bits, node=node, bag=bag, child_bag=child_bag, child_states=child_states, here=here):
                mem, d = child_states[kc]
                p = sum(bit << j for j, bit in enumerate(bits))
                st = _introduce(aut, node, bag, child_bag, mem, d, p)
                return None if st is None else here[st]

            b.csp.add_hard(HardConstraint((q, qc, *ys), function=step, target=q, name="q-introduce"))
        elif node.kind is NodeKind.FORGET:
            c = node.children[0]
            qc = b.registry[("q", c)]
            child_states = states[c]
            child_bag = sorted(ntd.nodes[c].bag)

            def step(kc, node=node, bag=bag, child_bag=child_bag, child_states=child_states, here=here):
                mem, d = child_states[kc]
                st = _forget(aut, node, bag, child_bag, mem, d)
                return None if st is None else here[st]

            b.csp.add_hard(HardConstraint((q, qc), function=step, target=q, name="q-forget"))
        else:
            left, right = node.children
            q1, q2 = b.registry[("q", left)], b.registry[("q", right)]
            s1, s2 = states[left], states[right]

            def step(k1, k2, node=node, bag=bag, s1=s1, s2=s2, here=here):
                (m1, d1), (m2, d2) = s1[k1], s2[k2]
                if m1 != m2:
                    return None
                st = _join(aut, node, bag, m1, d1, d2)
                return None if st is None else here[st]

            b.csp.add_hard(HardConstraint((q, q1, q2), function=step, target=q, name="q-join"))
        if bag:
            ys = [b.y(u, j) for u in bag for j in range(ell)]
            rel = frozenset(
                (k, *(((pat >> j) & 1) for pat in st[0] for j in range(ell)))
                for k, st in enumerate(states[a]))
            b.csp.add_hard(HardConstraint((q, *ys), relation=rel, name="q-bits"))
    root = ntd.root
    accepting = frozenset((k,) for k, (_, d) in enumerate(states[root]) if aut.accept(d))
    b.csp.add_hard(HardConstraint((b.registry[("q", root)],), relation=accepting, name="accept"))
    return states


def encode_brute_force(b, root, free_vars, card_values=None):
    """A single relation over every membership bit, listing the satisfying assignments."""
    g, ell = b.g, b.ell
    if g.n * ell > BRUTE_FORCE_BITS:
        raise ResourceLimit(f"brute-force backend limited to {BRUTE_FORCE_BITS} membership bits")
    compiled = CompiledFormula(g, root, free_vars)
    scope = tuple(b.y(v, j) for v in range(g.n) for j in range(ell))
    rel = set()
    for bits in itertools.product((0, 1), repeat=len(scope)):
        masks = [0] * ell
        for k, bit in enumerate(bits):
            if bit:
                masks[k % ell] |= 1 << (k // ell)
        if compiled(tuple(masks), card_values):
            rel.add(bits)
    b.csp.add_hard(HardConstraint(scope, relation=frozenset(rel), name="formula"))
    for a in range(len(b.ntd.nodes)):
        b.base_bags[a].update(scope)


def _route_domination(root, locals_, free_vars, n):
    """Move top-level ``dominating(X)`` conjuncts into conditional local constraints."""
    parts = list(root.parts) if isinstance(root, And) else [root]
    locals_ = locals_.copy()
    keep = []
    for p in parts:
        if isinstance(p, Macro) and p.name == "dominating" and p.args[0] in free_vars:
            i = free_vars.index(p.args[0])
            if all(locals_.is_trivial(i, v) for v in range(n)):
                for v in range(n):
                    locals_.set(i, v, LocalEntry(IntervalSet.interval(0, n), IntervalSet.interval(1, n), i))
                continue
        keep.append(p)
    if not keep:
        return TRUE, locals_
    return (And(tuple(keep)) if len(keep) > 1 else keep[0]), locals_


def _scope_edges(csp, extra_vars):
    edges = set()
    for c in list(csp.hard) + list(csp.soft):
        for u, v in itertools.combinations(sorted(set(c.scope)), 2):
            if u in extra_vars or v in extra_vars:
                edges.add((u, v))
    return sorted(edges)


def assemble(inst, ntd, residue, beta, backend="automaton", route=True):
    """Build the CSP for one pre-evaluation ``beta`` with formula ``residue``."""
    g, ell = inst.graph, inst.ell
    free = inst.formula.free_set_vars
    b = _Builder(g, ntd, ell)
    _membership_bits(b)
    locals_ = inst.locals
    if backend == "automaton":
        if route:
            residue, locals_ = _route_domination(residue, locals_, list(free), g.n)
        aut = compile_predicate_automaton(residue, g, free)
        states = encode_automaton(b, aut)
    elif backend == "bruteforce":
        encode_brute_force(b, residue, free)
        states = {}
    else:
        raise ValueError(f"unknown backend {backend!r}")
    if inst.globals:
        encode_global_counters(b, sorted({j for gc in inst.globals for j in global_support(gc, ell)}))
        encode_global_relations(b, inst.globals, beta)
    encode_local_counters(b, locals_)
    encode_objective(b, inst.weights if inst.weighted else None)
    base = TreeDecomposition(tuple(frozenset(s) for s in b.base_bags),
                             tuple((a, c) for a, node in enumerate(ntd.nodes) for c in node.children))
    extras = {a: tuple(vs) for a, vs in b.extras.items() if vs}
    extra_vars = {v for vs in extras.values() for v in vs}
    td = augment_decomposition(base, extras, _scope_edges(b.csp, extra_vars), ntd.root) if extras else base
    return EncodedInstance(b.csp, b.registry, base, extras, td, ntd, states)


def reference_instance(inst, enc, residue, beta):
    """The CSP over membership bits alone that ``enc`` should extend.

    Its single hard constraint accepts exactly the assignments satisfying the
    residue formula, complying with ``beta`` and meeting the local
    constraints.  Returns ``(csp, shared)`` ready for ``check_extension``.
    """
    g, ell = inst.graph, inst.ell
    compiled = CompiledFormula(g, residue, inst.formula.free_set_vars)
    small = CspInstance()
    keys = [(v, j) for v in range(g.n) for j in range(ell)]
    for v, j in keys:
        small.add_var(f"y[{v},{j}]", (0, 1))

    def accepts(bits):
        masks = [0] * ell
        for (v, j), bit in zip(keys, bits):
            if bit:
                masks[j] |= 1 << v
        masks = tuple(masks)
        return (inst.locals.satisfied(g, masks)
                and compliance_check(assignment_sizes(masks), beta, inst.globals)
                and compiled(masks, None))

    small.add_hard(HardConstraint(tuple(range(len(keys))), predicate=accepts, name="reference"))
    shared = {k: enc.registry[("y", v, j)] for k, (v, j) in enumerate(keys)}
    return small, shared


def extra_budget(ell, tau):
    """Per-node allowance of extra variables: counters, neighbourhood counters and a state."""
    return ell * (tau + 2) + 1


def check_local_scope(enc):
    """Every constraint scope fits one node's base bag plus its and its children's extras."""
    parent, children, _ = enc.base.rooted(enc.ntd.root)
    pools = []
    for a, bag in enumerate(enc.base.bags):
        pool = set(bag) | set(enc.extras.get(a, ()))
        for c in children[a]:
            pool |= set(enc.extras.get(c, ()))
        pools.append(pool)
    for c in list(enc.csp.hard) + list(enc.csp.soft):
        scope = set(c.scope)
        if not any(scope <= p for p in pools):
            return False
    return True


def nice_decomposition(g, td=None):
    if td is None:
        td = heuristic_tree_decomposition(g)
    return make_nice(g, td)


def solve_tw(inst, ntd=None, backend="automaton", route=True, emit=None, table_cap=None):
    """Solve an instance along a tree decomposition; minimum weight when weighted.

    ``emit`` (optional callable) receives each assembled EncodedInstance;
    ``table_cap`` is passed on to ``freuder_solve``.
    """
    g, ell = inst.graph, inst.ell
    if ntd is None:
        ntd = nice_decomposition(g)
    root = inst.effective_root()
    gids = [gc.gid for gc in inst.globals]
    best = None
    stats = {"width": ntd.width, "branches": 0, "csp_vars": 0, "augmented_width": 0, "kappa": 0}
    for beta, residue in pre_evaluations(root, gids):
        if residue == FALSE:
            continue
        enc = assemble(inst, ntd, residue, beta.as_dict(), backend, route)
        stats["branches"] += 1
        stats["csp_vars"] = max(stats["csp_vars"], enc.csp.num_vars)
        stats["augmented_width"] = max(stats["augmented_width"], enc.width)
        stats["kappa"] = max(stats["kappa"], enc.kappa)
        if emit is not None:
            emit(enc)
        try:
            sol = freuder_solve(enc.csp, enc.td, root=enc.ntd.root, table_cap=table_cap)
        except Infeasible:
            continue
        masks = enc.masks(sol.assignment, g.n, ell)
        if not check_assignment(inst, masks):
            raise MsoextError("internal error: treewidth witness failed verification")
        if not inst.weighted:
            return Result(SAT, masks, Fraction(0), stats={**stats, "accepted": f"beta={beta.as_dict()}"})
        if best is None or sol.weight < best[0]:
            best = (sol.weight, masks, beta.as_dict())
    if best is None:
        return Result(UNSAT, stats=stats)
    return Result(SAT, best[1], inst.weight_of(best[1]), stats={**stats, "accepted": f"beta={best[2]}"})
