"""Named problems as solver instances, plus reduction-based generators.

Domination-style problems are phrased with conditional local constraints
rather than formula quantifiers, so every encoder here stays inside the
predicate algebra of the treewidth solver.  Problems that talk about edges
work on the incidence structure (one extra vertex per edge, label ``L_E``),
and problems that orient or assign edges work on the half-edge structure
(two extra vertices per edge, label ``L_H``).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import ColorMissing, InputError, NonUniform, ResourceLimit, ShapeViolation, UnknownKind
from .graph import (
    EDGE_LABEL, VERTEX_LABEL, Graph, TypeKind, heuristic_tree_decomposition, incidence_structure,
    mask_of, nd_decomposition, type_graph,
)
from .intervals import IntervalSet
from .logic import GlobalConstraint, Instance, LocalEntry, Member, infer_fragment, linear, parse_formula

HALF_LABEL = "L_H"


def _full(n):
    return IntervalSet.interval(0, n)


def _unit_weights(ell, which, vertices, weight=None):
    weights = tuple({} for _ in range(ell))
    for v in vertices:
        weights[which][v] = Fraction(1) if weight is None else Fraction(weight(v))
    return weights


def _equitable_globals(k, ell):
    """Pairwise ``-1 <= |X_i| - |X_j| <= 1`` for the first ``k`` variables."""
    out = []
    for i, j in itertools.combinations(range(k), 2):
        coeffs = [0] * ell
        coeffs[i], coeffs[j] = 1, -1
        out.append(linear(f"eq{i + 1}_{j + 1}u", coeffs, "<=", 1))
        out.append(linear(f"eq{i + 1}_{j + 1}l", coeffs, ">=", -1))
    return out


def _with_cards(body, globals_):
    return " & ".join([f"({body})"] + [f"#card({gc.gid})" for gc in globals_])


def _incidence(g):
    h, _, edge_vertex = incidence_structure(g, heuristic_tree_decomposition(g))
    return h, edge_vertex


def half_edge_structure(g):
    """Replace each edge ``uv`` by a path ``u - h(u,v) - h(v,u) - v``.

    Returns ``(graph, halves)`` where ``halves[(u, v)]`` is the half of edge
    ``uv`` attached to ``u``.  Original vertices keep their ids.
    """
    n = g.n
    halves = {}
    edges = []
    nxt = n
    for u, v in g.edges():
        halves[(u, v)], halves[(v, u)] = nxt, nxt + 1
        edges += [(u, nxt), (nxt, nxt + 1), (nxt + 1, v)]
        nxt += 2
    labels = dict(g.vertex_labels)
    labels[VERTEX_LABEL] = frozenset(range(n))
    labels[HALF_LABEL] = frozenset(range(n, nxt))
    return Graph(nxt, edges, labels), halves


def _one_half_per_edge(inst, var, halves):
    """Exactly one of the two halves of every edge lies in ``X_var``."""
    for h in halves.values():
        inst.locals.set(var, h, LocalEntry(IntervalSet.point(0), IntervalSet.point(1), var))


# ---------------------------------------------------------------------------
# Encoders
# ---------------------------------------------------------------------------


def encode_equitable_coloring(g, k):
    """Proper ``k``-colouring whose colour classes differ in size by at most one."""
    if k < 1:
        raise InputError("k must be at least 1")
    names = [f"X{i + 1}" for i in range(k)]
    globals_ = _equitable_globals(k, k)
    body = " & ".join([f"partition({', '.join(names)})"] + [f"independent({x})" for x in names])
    f = parse_formula(_with_cards(body, globals_), [gc.gid for gc in globals_], names)
    return Instance(g, f, tuple(globals_))


def encode_capacitated_dominating_set(g, capacities):
    """Minimum dominating set ``D`` where ``v`` in ``D`` dominates at most ``c(v)`` others.

    Works on the incidence structure with variables ``D`` (vertices) and ``F``
    (edges used for domination).  Returns an instance whose first ``g.n``
    vertices are the original ones.
    """
    h, edge_vertex = _incidence(g)
    f = parse_formula(f"within(D, {VERTEX_LABEL}) & within(F, {EDGE_LABEL})", free_vars=["D", "F"])
    inst = Instance(h, f, (), None, _unit_weights(2, 0, range(g.n)))
    N = h.n
    for v in range(g.n):
        cap = IntervalSet.interval(0, min(int(capacities[v]), N))
        # inside D: at most c(v) incident F-edges; outside: dominated through one
        inst.locals.set(1, v, LocalEntry(cap, IntervalSet.interval(1, N), 0))
    for x in edge_vertex.values():
        inst.locals.set(0, x, LocalEntry(IntervalSet.interval(1, N), _full(N), 1))
    inst.fragment = infer_fragment(inst)
    return inst


def _vector_domination(g, params):
    d = params["demands"]
    f = parse_formula("true", free_vars=["D"])
    inst = Instance(g, f, (), None, _unit_weights(1, 0, range(g.n)))
    for v in range(g.n):
        inst.locals.set(0, v, LocalEntry(_full(g.n), IntervalSet.interval(int(d[v]), g.n), 0))
    return inst


def _as_set(values, n):
    if values is None:
        return _full(n)
    if isinstance(values, IntervalSet):
        return values.clip(0, n)
    return IntervalSet.of(v for v in values if 0 <= v <= n)


def _generalized_domination(g, params):
    sigma = _as_set(params.get("sigma"), g.n)
    rho = _as_set(params.get("rho"), g.n)
    f = parse_formula("true", free_vars=["D"])
    weights = _unit_weights(1, 0, range(g.n)) if params.get("minimize") else None
    inst = Instance(g, f, (), None, weights)
    for v in range(g.n):
        inst.locals.set(0, v, LocalEntry(sigma, rho, 0))
    return inst


def _capacitated_vertex_cover(g, params):
    caps = params["capacities"]
    h, halves = half_edge_structure(g)
    f = parse_formula(f"within(C, {VERTEX_LABEL}) & within(A, {HALF_LABEL})", free_vars=["C", "A"])
    inst = Instance(h, f, (), None, _unit_weights(2, 0, range(g.n)))
    N = h.n
    _one_half_per_edge(inst, 1, halves)
    for x in halves.values():
        # a chosen half assigns its edge to its endpoint, which must be in C
        inst.locals.set(0, x, LocalEntry(IntervalSet.interval(1, N), _full(N), 1))
    for v in range(g.n):
        inst.locals.set(1, v, IntervalSet.interval(0, min(int(caps[v]), N)))
    return inst


def _general_factor(g, params):
    allowed = params["degrees"]
    h, _ = _incidence(g)
    f = parse_formula(f"within(F, {EDGE_LABEL})", free_vars=["F"])
    inst = Instance(h, f)
    for v in range(g.n):
        inst.locals.set(0, v, _as_set(allowed[v], h.n))
    return inst


def _min_max_outdegree(g, params):
    bound = int(params["bound"])
    h, halves = half_edge_structure(g)
    f = parse_formula(f"within(A, {HALF_LABEL})", free_vars=["A"])
    inst = Instance(h, f)
    _one_half_per_edge(inst, 0, halves)
    for v in range(g.n):
        inst.locals.set(0, v, IntervalSet.interval(0, min(bound, h.n)))
    return inst


DOMINATION_KINDS = {
    "VectorDominatingSet": _vector_domination,
    "GeneralizedDomination": _generalized_domination,
    "CapacitatedVertexCover": _capacitated_vertex_cover,
    "GeneralFactor": _general_factor,
    "MinMaxOutdegree": _min_max_outdegree,
}


def encode_domination_family(kind, g, params):
    """Local-constraint encodings.

    ``params`` per kind: ``demands`` (VectorDominatingSet), ``sigma``/``rho``
    and optional ``minimize`` (GeneralizedDomination; None means all of N),
    ``capacities`` (CapacitatedVertexCover), ``degrees`` (GeneralFactor: one
    admissible set per vertex), ``bound`` (MinMaxOutdegree: the orientation
    is read off the chosen halves, a half at ``u`` meaning ``u`` is the tail).
    """
    try:
        build = DOMINATION_KINDS[kind]
    except KeyError:
        raise UnknownKind(f"unknown problem kind {kind!r}") from None
    inst = build(g, params)
    inst.fragment = infer_fragment(inst)
    return inst


def graph_colors(g, colors=None):
    names = sorted(g.vertex_labels) if colors is None else list(colors)
    for v in range(g.n):
        if not any(v in g.vertex_labels.get(c, ()) for c in names):
            raise ColorMissing(f"vertex {v + 1} has no colour")
    return names


def encode_graph_motif(g, motif, colors=None):
    """Connected ``S`` whose colour multiset is ``motif`` (a colour -> multiplicity map).

    One auxiliary variable per colour holds ``S`` restricted to that colour so
    the multiplicities become linear size constraints.  The empty motif is
    satisfied by the empty set, which counts as connected.
    """
    names = graph_colors(g, colors)
    for c in motif:
        if c not in names:
            raise ColorMissing(f"motif colour {c!r} does not occur in the graph")
    free = ["S"] + [f"S{i + 1}" for i in range(len(names))]
    ell = len(free)
    globals_ = []
    for i, c in enumerate(names):
        coeffs = [0] * ell
        coeffs[i + 1] = 1
        globals_.append(linear(f"m{i + 1}", coeffs, "=", int(motif.get(c, 0))))
    body = " & ".join(["connected(S)"] + [f"restrict(S{i + 1}, S, {c})" for i, c in enumerate(names)])
    f = parse_formula(_with_cards(body, globals_), [gc.gid for gc in globals_], free)
    return Instance(g, f, tuple(globals_))


def encode_balanced_partitioning(g, k, weights=None):
    """Equitable ``k``-partition minimising the (weighted) number of cut edges.

    Variables ``X1..Xk`` partition the original vertices and ``Y`` holds the
    cut edges on the incidence structure.  An edge vertex has exactly its two
    endpoints as neighbours, so it is uncut iff every ``X_i`` holds zero or
    two of them, and cut iff every ``X_i`` holds at most one.
    """
    if k < 1:
        raise InputError("k must be at least 1")
    h, edge_vertex = _incidence(g)
    names = [f"X{i + 1}" for i in range(k)]
    free = names + ["Y"]
    ell = k + 1
    globals_ = _equitable_globals(k, ell)
    body = f"lpartition({VERTEX_LABEL}, {', '.join(names)}) & within(Y, {EDGE_LABEL})"
    f = parse_formula(_with_cards(body, globals_), [gc.gid for gc in globals_], free)
    wmap = {x: Fraction(1 if weights is None else weights[e]) for e, x in edge_vertex.items()}
    w = tuple({} for _ in range(k)) + (wmap,)
    inst = Instance(h, f, tuple(globals_), None, w)
    for x in edge_vertex.values():
        for i in range(k):
            inst.locals.set(i, x, LocalEntry(IntervalSet.interval(0, 1), IntervalSet.of([0, 2]), k))
    inst.fragment = infer_fragment(inst)
    return inst


# ---------------------------------------------------------------------------
# Multicoloured clique and LCC subset
# ---------------------------------------------------------------------------


@dataclass
class MulticoloredCliqueInstance:
    """``k`` independent colour classes of ``n`` vertices each.

    Vertex ``i`` of class ``a`` is numbered ``i + 1``; ``edges[(a, b)]`` for
    ``a < b`` lists pairs ``(i, j)`` (``i`` in class ``a``, ``j`` in class
    ``b``), numbered ``1..m`` in list order.  Every pair of classes has the
    same number ``m`` of edges.
    """

    k: int
    n: int
    edges: Dict[Tuple[int, int], List[Tuple[int, int]]]

    def __post_init__(self):
        if self.k < 2 or self.n < 1:
            raise InputError("need k >= 2 classes of at least one vertex")
        sizes = set()
        for a, b in itertools.combinations(range(self.k), 2):
            lst = self.edges.get((a, b), [])
            if len(set(lst)) != len(lst):
                raise InputError(f"parallel edges between classes {a + 1} and {b + 1}")
            if any(not (0 <= i < self.n and 0 <= j < self.n) for i, j in lst):
                raise InputError("edge endpoint outside its class")
            sizes.add(len(lst))
        if len(sizes) > 1:
            raise InputError("edge sets between class pairs must have equal size; use pad_multicolored")
        if 0 in sizes:
            raise InputError("every pair of classes needs at least one edge")

    @property
    def m(self):
        return len(self.edges[(0, 1)])

    def is_clique(self, choice):
        return all((choice[a], choice[b]) in set(self.edges[(a, b)])
                   for a, b in itertools.combinations(range(self.k), 2))

    def find_clique(self):
        """A multicoloured clique as one vertex per class, or None."""
        sets = {p: set(e) for p, e in self.edges.items()}
        choice: List[int] = []

        def rec(a):
            if a == self.k:
                return True
            for i in range(self.n):
                if all((choice[b], i) in sets[(b, a)] for b in range(a)):
                    choice.append(i)
                    if rec(a + 1):
                        return True
                    choice.pop()
            return False

        return tuple(choice) if rec(0) else None


def pad_multicolored(k, class_sizes, edges):
    """Equalise class and edge-set sizes.

    Short edge sets get dummy edges between fresh sink vertices used by that
    pair only; a sink has no neighbour in a third class, so for ``k >= 3`` it
    never lies in a multicoloured clique.  Short classes get isolated vertices.
    """
    sizes = list(class_sizes)
    edges = {p: list(edges.get(p, [])) for p in itertools.combinations(range(k), 2)}
    m = max(max((len(e) for e in edges.values()), default=0), 1)
    for (a, b), lst in edges.items():
        deficit = m - len(lst)
        if deficit <= 0:
            continue
        if k < 3:
            raise InputError("dummy edges would create cliques when k < 3")
        side = 1
        while side * side < deficit:
            side += 1
        left = list(range(sizes[a], sizes[a] + side))
        right = list(range(sizes[b], sizes[b] + side))
        sizes[a] += side
        sizes[b] += side
        lst.extend(itertools.islice(itertools.product(left, right), deficit))
    return MulticoloredCliqueInstance(k, max(sizes), edges)


def random_multicolored(rng, k, n, m, planted=False):
    """Random instance; ``planted`` forces a clique on a random vertex choice."""
    m = min(m, n * n)
    clique = tuple(rng.randrange(n) for _ in range(k)) if planted else None
    edges = {}
    for a, b in itertools.combinations(range(k), 2):
        pool = [(i, j) for i in range(n) for j in range(n)]
        chosen = set()
        if clique is not None:
            chosen.add((clique[a], clique[b]))
        rest = [p for p in pool if p not in chosen]
        rng.shuffle(rest)
        chosen.update(rest[:m - len(chosen)])
        lst = sorted(chosen)
        rng.shuffle(lst)
        edges[(a, b)] = lst
    return MulticoloredCliqueInstance(k, n, edges), clique


@dataclass
class LccSubsetInstance:
    """Find ``U`` with ``|U ∩ N(v)|`` in ``demands[v]`` for every vertex."""

    graph: Graph
    demands: Tuple[IntervalSet, ...]
    cover: Optional[Tuple[int, ...]] = None
    groups: Dict[str, Tuple[int, ...]] = field(default_factory=dict)

    def __post_init__(self):
        n = self.graph.n
        self.demands = tuple(self.demands)
        if len(self.demands) != n:
            raise InputError("one demand set per vertex required")
        if any(d and (d.min() < 0 or d.max() > max(n - 1, 0)) for d in self.demands):
            raise InputError("demands must lie in [0, n-1]")

    def satisfied(self, mask):
        g = self.graph
        return all(bin(g.adj_masks[v] & mask).count("1") in self.demands[v] for v in range(g.n))

    def to_instance(self):
        """The same question as an instance with the empty formula."""
        g = self.graph
        inst = Instance(g, parse_formula("true", free_vars=["U"]))
        for v in range(g.n):
            inst.locals.set(0, v, self.demands[v])
        inst.fragment = infer_fragment(inst)
        return inst


def gadget_scale(n):
    """The multiplier ``N``; must exceed ``n``."""
    return n * n if n > 1 else 2


def gen_clique_to_lcc(mc):
    """LCC subset instance that is satisfiable iff ``mc`` has a multicoloured clique.

    Groups: ``S_a`` (``n`` vertices), ``T_ab`` (``m*N`` vertices), ``Mult_ab``
    and ``Inc_ab``/``Inc_ba``; Inc and Mult vertices form the vertex cover.
    """
    k, n, m = mc.k, mc.n, mc.m
    N = gadget_scale(n)
    pairs = list(itertools.combinations(range(k), 2))
    nxt = 0
    groups: Dict[str, Tuple[int, ...]] = {}

    def block(name, size):
        nonlocal nxt
        groups[name] = tuple(range(nxt, nxt + size))
        nxt += size

    for a in range(k):
        block(f"S{a + 1}", n)
    for a, b in pairs:
        block(f"T{a + 1},{b + 1}", m * N)
    for a, b in pairs:
        block(f"Mult{a + 1},{b + 1}", 1)
    for a, b in itertools.permutations(range(k), 2):
        block(f"Inc{a + 1},{b + 1}", 1)
    edges = []
    demands: List[IntervalSet] = [IntervalSet.point(0)] * nxt
    for a, b in pairs:
        t = groups[f"T{a + 1},{b + 1}"]
        mult = groups[f"Mult{a + 1},{b + 1}"][0]
        edges += [(x, mult) for x in t]
        demands[mult] = IntervalSet.of(s * N for s in range(1, m + 1))
    for a, b in itertools.permutations(range(k), 2):
        inc = groups[f"Inc{a + 1},{b + 1}"][0]
        lo, hi = min(a, b), max(a, b)
        t = groups[f"T{lo + 1},{hi + 1}"]
        edges += [(x, inc) for x in groups[f"S{a + 1}"]]
        edges += [(x, inc) for x in t]
        values = set()
        for eps, (i, j) in enumerate(mc.edges[(lo, hi)], 1):
            mine = i if a == lo else j
            values.add(mine + 1 + N * eps)
        demands[inc] = IntervalSet.of(values)
    cover = tuple(v for name, vs in groups.items() if name.startswith(("Mult", "Inc")) for v in vs)
    return LccSubsetInstance(Graph(nxt, edges), tuple(demands), cover, groups)


def lcc_witness(mc, lcc, clique):
    """Selection mask for the planted solution of a clique ``clique`` (one index per class)."""
    N = gadget_scale(mc.n)
    chosen = []
    for a in range(mc.k):
        chosen += lcc.groups[f"S{a + 1}"][:clique[a] + 1]
    for a, b in itertools.combinations(range(mc.k), 2):
        eps = mc.edges[(a, b)].index((clique[a], clique[b])) + 1
        chosen += lcc.groups[f"T{a + 1},{b + 1}"][:N * eps]
    return mask_of(chosen)


def gadget_cover_size(k):
    """Cover size of the gadget: one Mult per pair and two Inc per pair."""
    return k * (k - 1) // 2 + k * (k - 1)


def minimum_vertex_cover(g):
    """Exact minimum vertex cover by branching on a vertex of maximum live degree."""
    best = [list(range(g.n))]

    def rec(alive, chosen):
        if len(chosen) >= len(best[0]):
            return
        live = {v: [w for w in g.adjacency[v] if w in alive] for v in alive}
        v = max(live, key=lambda u: (len(live[u]), -u), default=None)
        if v is None or not live[v]:
            best[0] = list(chosen)
            return
        # either v is in the cover or all its live neighbours are
        rec(alive - {v}, chosen + [v])
        rec(alive - {v} - set(live[v]), chosen + live[v])

    rec(frozenset(range(g.n)), [])
    return sorted(best[0])


# ---------------------------------------------------------------------------
# Marker construction
# ---------------------------------------------------------------------------


def _check_cover_shape(lcc):
    g = lcc.graph
    if lcc.cover is None:
        raise ShapeViolation("instance carries no vertex cover")
    cover = set(lcc.cover)
    for u, v in g.edges():
        if u not in cover and v not in cover:
            raise ShapeViolation(f"edge ({u + 1}, {v + 1}) is not covered")
        if u in cover and v in cover:
            raise ShapeViolation("the cover must be an independent set")
    for v in range(g.n):
        if v not in cover and lcc.demands[v] != IntervalSet.point(0):
            raise ShapeViolation(f"vertex {v + 1} outside the cover must demand {{0}}")


def _same(x, y):
    return f"(forall w_ (w_ = {x} | w_ = {y} | (edge(w_, {x}) <-> edge(w_, {y}))))"


def _marker_text(q, size):
    clique = f"(forall x_ (forall y_ ((x_ in {q} & y_ in {q} & !(x_ = y_)) -> edge(x_, y_))))"
    one_type = (f"(exists x_ (x_ in {q})) & (forall x_ (forall y_ ((x_ in {q} & y_ in {q}) -> {_same('x_', 'y_')})))"
                f" & (forall x_ (forall y_ ((x_ in {q} & !(y_ in {q})) -> !{_same('x_', 'y_')})))")
    return f"card_eq({q}, {size}) & {clique} & {one_type}"


def lcc_to_msog(lcc):
    """Marker construction: the local demands become global size constraints.

    Each cover vertex ``v`` (the ``i``-th) gets a clique marker of ``2 + i``
    fresh vertices joined to ``N(v)``.  Free variables ``X`` and ``X1..Xc``;
    ``Xi`` must equal ``X ∩ N(v_i)``, recognised through the marker as the
    vertices outside it adjacent to all of it, and ``|Xi|`` must lie in the
    demand of ``v_i``.  Returns ``(instance, marker_blocks)``.
    """
    _check_cover_shape(lcc)
    g = lcc.graph
    cover = list(lcc.cover)
    edges = list(g.edges())
    nxt = g.n
    markers = []
    for idx, v in enumerate(cover, 1):
        block = list(range(nxt, nxt + 2 + idx))
        nxt += 2 + idx
        edges += list(itertools.combinations(block, 2))
        edges += [(u, x) for u in g.adjacency[v] for x in block]
        markers.append(tuple(block))
    h = Graph(nxt, edges, dict(g.vertex_labels))
    free = ["X"] + [f"X{i}" for i in range(1, len(cover) + 1)]
    parts = []
    globals_ = []
    for i, v in enumerate(cover, 1):
        q, z = f"Q{i}", f"Z{i}"
        neigh = (f"setexists {q} ({_marker_text(q, 2 + i)} & "
                 f"(forall u_ (u_ in {z} <-> (!(u_ in {q}) & (forall w_ (w_ in {q} -> edge(u_, w_)))))))")
        sel = f"setexists {z} (({neigh}) & (forall u_ (u_ in X{i} <-> (u_ in {z} & u_ in X))))"
        parts.append(f"({sel})")
        globals_.append(GlobalConstraint(f"f{i}", Member(i, lcc.demands[v])))
    body = " & ".join(parts) if parts else "true"
    f = parse_formula(_with_cards(body, globals_), [gc.gid for gc in globals_], free)
    return Instance(h, f, tuple(globals_)), tuple(markers)


def msog_assignment(lcc, mask):
    """Free-variable masks for ``lcc_to_msog`` induced by an LCC selection ``mask``."""
    g = lcc.graph
    return (mask,) + tuple(g.adj_masks[v] & mask for v in lcc.cover)


# ---------------------------------------------------------------------------
# Set multicover
# ---------------------------------------------------------------------------


@dataclass
class SetMulticoverInstance:
    """Choose multiplicities ``m_j`` summing to ``r`` so every element's coverage is in its demand.

    ``caps`` optionally bounds each ``m_j``.
    """

    universe: int
    demands: Tuple[IntervalSet, ...]
    family: Tuple[frozenset, ...]
    r: int
    caps: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        self.demands = tuple(self.demands)
        self.family = tuple(frozenset(s) for s in self.family)
        if len(self.demands) != self.universe:
            raise InputError("one demand per element required")
        if any(not (0 <= u < self.universe) for s in self.family for u in s):
            raise InputError("family member outside the universe")
        if self.caps is not None and len(self.caps) != len(self.family):
            raise InputError("one cap per family member required")

    def coverage(self, m):
        cov = [0] * self.universe
        for s, mult in zip(self.family, m):
            for u in s:
                cov[u] += mult
        return cov

    def feasible(self, m):
        if sum(m) != self.r or any(x < 0 for x in m):
            return False
        if self.caps is not None and any(x > c for x, c in zip(m, self.caps)):
            return False
        return all(c in d for c, d in zip(self.coverage(m), self.demands))


def solve_set_multicover(smc, r_cap=10_000, node_cap=2_000_000):
    """Depth-first search over multiplicity vectors; returns a tuple or None."""
    if smc.r > r_cap:
        raise ResourceLimit(f"r = {smc.r} exceeds the cap {r_cap}")
    f = len(smc.family)
    covering = [[j for j in range(f) if u in smc.family[j]] for u in range(smc.universe)]
    if any(not d for d in smc.demands):
        return None
    if any(not covering[u] and 0 not in smc.demands[u] for u in range(smc.universe)):
        return None
    caps = [smc.r if smc.caps is None else min(c, smc.r) for c in (smc.caps or [0] * f)]
    hi = [d.max() for d in smc.demands]
    lo = [d.min() for d in smc.demands]
    cov = [0] * smc.universe
    left = [len(c) for c in covering]
    m = [None] * f
    nodes = [0]

    def pick():
        best, best_key = None, None
        for u in range(smc.universe):
            if left[u]:
                key = (left[u], u)
                if best_key is None or key < best_key:
                    best_key = key
                    best = next(j for j in covering[u] if m[j] is None)
        if best is None:
            best = next((j for j in range(f) if m[j] is None), None)
        return best

    def rec(budget):
        nodes[0] += 1
        if nodes[0] > node_cap:
            raise ResourceLimit(f"set multicover search exceeded {node_cap} nodes")
        j = pick()
        if j is None:
            return budget == 0
        undecided = sum(1 for x in m if x is None)
        top = min(caps[j], budget)
        start = budget if undecided == 1 else 0
        for value in range(start, top + 1):
            ok = True
            touched = smc.family[j]
            for u in touched:
                cov[u] += value
                left[u] -= 1
            m[j] = value
            for u in touched:
                if cov[u] > hi[u] or (left[u] == 0 and cov[u] not in smc.demands[u]):
                    ok = False
                elif left[u] and cov[u] + budget - value < lo[u]:
                    ok = False
            if ok and rec(budget - value):
                return True
            m[j] = None
            for u in touched:
                cov[u] -= value
                left[u] += 1
        return False

    if rec(smc.r):
        return tuple(m)
    return None


def lcc_to_set_multicover(lcc):
    """One multicover instance per ``r`` in ``0..n``, over the neighbourhood types.

    Requires every type to be an independent set with a single demand set.
    Multiplicities are capped by the type sizes so that each multicover
    solution corresponds to an actual selection.
    """
    g = lcc.graph
    nd = nd_decomposition(g)
    tg = type_graph(g, nd)
    demands = []
    for j, members in enumerate(nd.types):
        if len(members) > 1 and nd.kinds[j] is TypeKind.CLIQUE:
            raise NonUniform(f"type {j + 1} is a clique, not an independent set")
        ds = {lcc.demands[v] for v in members}
        if len(ds) > 1:
            raise NonUniform(f"type {j + 1} mixes demand sets")
        demands.append(ds.pop())
    family = tuple(frozenset(u for u in tg.neighbors(j) if u != j or len(nd.types[j]) > 1)
                   for j in range(nd.nu))
    sizes = nd.sizes()
    out = [SetMulticoverInstance(nd.nu, tuple(demands), family, r, sizes) for r in range(g.n + 1)]
    return out, nd


def multicover_selection(nd, m):
    """LCC selection taking the first ``m_j`` vertices of every type ``j``."""
    chosen = []
    for members, count in zip(nd.types, m):
        chosen += sorted(members)[:count]
    return mask_of(chosen)


def solve_lcc(lcc, **caps):
    """Decide an LCC subset instance through the multicover family; returns a mask or None."""
    family, nd = lcc_to_set_multicover(lcc)
    for smc in family:
        m = solve_set_multicover(smc, **caps)
        if m is not None:
            mask = multicover_selection(nd, m)
            if not lcc.satisfied(mask):
                raise AssertionError("multicover solution does not realise the LCC instance")
            return mask
    return None
