"""Graphs, neighborhood diversity, tree decompositions and the incidence transform.

Vertices are ``0..n-1`` internally.  Files use 1-indexed vertices.
"""

from __future__ import annotations

import enum
import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

from .errors import (
    InputError,
    InvalidDecomposition,
    ParseError,
    ResourceLimit,
    VertexNotInDecomposition,
)

LOG = logging.getLogger(__name__)

VERTEX_LABEL = "L_V"
EDGE_LABEL = "L_E"

EXACT_TREEWIDTH_LIMIT = 12


def bits(mask):
    """Yield the positions of set bits in ``mask`` in increasing order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def mask_of(vertices):
    m = 0
    for v in vertices:
        m |= 1 << v
    return m


# ---------------------------------------------------------------------------
# Graph
# ---------------------------------------------------------------------------


class Graph:
    """Simple undirected graph with optional named vertex labels."""

    __slots__ = ("n", "adjacency", "vertex_labels", "is_sigma2", "adj_masks", "_edges")

    def __init__(self, n, edges=(), labels=None, is_sigma2=False):
        if n < 0:
            raise InputError("negative vertex count")
        nbrs = [set() for _ in range(n)]
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise InputError(f"edge ({u}, {v}) out of range for n={n}")
            if u == v:
                raise InputError(f"self-loop at vertex {u}")
            nbrs[u].add(v)
            nbrs[v].add(u)
        self.n = n
        self.adjacency = tuple(tuple(sorted(s)) for s in nbrs)
        self.adj_masks = tuple(mask_of(s) for s in nbrs)
        self._edges = tuple((u, v) for u in range(n) for v in self.adjacency[u] if u < v)
        lab = {}
        for name, vs in (labels or {}).items():
            vs = frozenset(vs)
            if any(not (0 <= v < n) for v in vs):
                raise InputError(f"label {name} names a vertex out of range")
            lab[name] = vs
        self.vertex_labels = lab
        self.is_sigma2 = is_sigma2
        if is_sigma2:
            lv = lab.get(VERTEX_LABEL, frozenset())
            le = lab.get(EDGE_LABEL, frozenset())
            if lv & le or len(lv) + len(le) != n:
                raise InputError("L_V and L_E must partition the vertex set")

    @property
    def m(self):
        return len(self._edges)

    def edges(self):
        return self._edges

    def neighbors(self, v):
        return self.adjacency[v]

    def degree(self, v):
        return len(self.adjacency[v])

    def has_edge(self, u, v):
        return bool(self.adj_masks[u] >> v & 1)

    def label_mask(self, name):
        return mask_of(self.vertex_labels.get(name, ()))

    def has_label(self, name, v):
        return v in self.vertex_labels.get(name, ())

    def labels_of(self, v):
        return frozenset(name for name, vs in self.vertex_labels.items() if v in vs)

    def induced_subgraph(self, vertices):
        """Return the induced subgraph and the list mapping new ids to old ids."""
        order = sorted(vertices)
        index = {v: i for i, v in enumerate(order)}
        edges = [(index[u], index[v]) for u, v in self._edges if u in index and v in index]
        labels = {name: [index[v] for v in vs if v in index] for name, vs in self.vertex_labels.items()}
        sigma2 = self.is_sigma2
        return Graph(len(order), edges, labels, is_sigma2=sigma2), order

    def __eq__(self, other):
        return (
            isinstance(other, Graph)
            and self.n == other.n
            and self._edges == other._edges
            and self.vertex_labels == other.vertex_labels
        )

    def __hash__(self):
        return hash((self.n, self._edges))

    def __repr__(self):
        return f"Graph(n={self.n}, m={self.m})"


def complete_graph(n):
    return Graph(n, itertools.combinations(range(n), 2))


def path_graph(n):
    return Graph(n, [(i, i + 1) for i in range(n - 1)])


def cycle_graph(n):
    return Graph(n, [(i, (i + 1) % n) for i in range(n)])


def complete_bipartite(a, b):
    return Graph(a + b, [(i, a + j) for i in range(a) for j in range(b)])


def star_graph(leaves):
    return Graph(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


# ---------------------------------------------------------------------------
# Neighborhood diversity
# ---------------------------------------------------------------------------


class TypeKind(enum.Enum):
    CLIQUE = "clique"
    INDEPENDENT = "independent"


@dataclass(frozen=True)
class NeighborhoodDecomposition:
    types: Tuple[Tuple[int, ...], ...]
    kinds: Tuple[TypeKind, ...]

    @property
    def nu(self):
        return len(self.types)

    def type_of(self):
        """Map vertex -> type index."""
        out = {}
        for j, t in enumerate(self.types):
            for v in t:
                out[v] = j
        return out

    def sizes(self):
        return tuple(len(t) for t in self.types)


def same_type(g, u, v):
    """The twin predicate N(u)\\{v} = N(v)\\{u}."""
    mu = g.adj_masks[u] & ~(1 << v)
    mv = g.adj_masks[v] & ~(1 << u)
    return mu == mv


def _kind_for(g, members):
    if len(members) >= 2 and g.has_edge(members[0], members[1]):
        return TypeKind.CLIQUE
    return TypeKind.INDEPENDENT


def nd_decomposition(g, respect_labels=False):
    """Coarsest partition into twin classes.

    With ``respect_labels`` two vertices are only merged if they carry the same
    labels, which is what the solvers need so that formulas with label atoms
    cannot tell vertices of one type apart.
    """
    def key_extra(v):
        return g.labels_of(v) if respect_labels else frozenset()

    open_groups: Dict[tuple, List[int]] = {}
    closed_groups: Dict[tuple, List[int]] = {}
    for v in range(g.n):
        open_groups.setdefault((g.adj_masks[v], key_extra(v)), []).append(v)
        closed_groups.setdefault((g.adj_masks[v] | 1 << v, key_extra(v)), []).append(v)
    assigned = {}
    types = []
    for v in range(g.n):
        if v in assigned:
            continue
        group = closed_groups[(g.adj_masks[v] | 1 << v, key_extra(v))]
        if len(group) < 2:
            group = open_groups[(g.adj_masks[v], key_extra(v))]
        for u in group:
            assigned[u] = len(types)
        types.append(tuple(group))
    kinds = tuple(_kind_for(g, t) for t in types)
    return NeighborhoodDecomposition(tuple(types), kinds)


def check_decomposition(g, nd, respect_labels=False):
    """Raise InvalidDecomposition unless ``nd`` is a valid twin partition of ``g``."""
    seen = set()
    for t in nd.types:
        for v in t:
            if v in seen or not 0 <= v < g.n:
                raise InvalidDecomposition(f"vertex {v} repeated or out of range")
            seen.add(v)
    if len(seen) != g.n:
        raise InvalidDecomposition("types do not cover the vertex set")
    for t, kind in zip(nd.types, nd.kinds):
        for u, v in itertools.combinations(t, 2):
            if not same_type(g, u, v):
                raise InvalidDecomposition(f"vertices {u} and {v} are not twins")
            if respect_labels and g.labels_of(u) != g.labels_of(v):
                raise InvalidDecomposition(f"vertices {u} and {v} carry different labels")
        if kind is TypeKind.CLIQUE and len(t) < 2:
            raise InvalidDecomposition("singleton types must be flagged independent")
        if len(t) >= 2 and kind is not _kind_for(g, t):
            raise InvalidDecomposition(f"type {t} has the wrong clique/independent flag")


@dataclass(frozen=True)
class TypeGraph:
    """Quotient graph over types; clique types carry a loop."""

    kinds: Tuple[TypeKind, ...]
    sizes: Tuple[int, ...]
    adjacency: Tuple[FrozenSet[int], ...]

    @property
    def nu(self):
        return len(self.kinds)

    def neighbors(self, j):
        """Adjacent types, including ``j`` itself for clique types."""
        return self.adjacency[j]

    def has_loop(self, j):
        return j in self.adjacency[j]

    def edges(self):
        return sorted((i, j) for i in range(self.nu) for j in self.adjacency[i] if i <= j)


def type_graph(g, nd, respect_labels=False):
    check_decomposition(g, nd, respect_labels)
    reps = [t[0] for t in nd.types]
    adj = []
    for i, ti in enumerate(nd.types):
        row = set()
        for j, tj in enumerate(nd.types):
            if i == j:
                if nd.kinds[i] is TypeKind.CLIQUE:
                    row.add(i)
            elif g.has_edge(reps[i], reps[j]):
                row.add(j)
        adj.append(frozenset(row))
    return TypeGraph(nd.kinds, nd.sizes(), tuple(adj))


# ---------------------------------------------------------------------------
# Tree decompositions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TreeDecomposition:
    bags: Tuple[FrozenSet[int], ...]
    edges: Tuple[Tuple[int, int], ...]

    @property
    def width(self):
        if not self.bags:
            return -1
        return max(len(b) for b in self.bags) - 1

    def node_count(self):
        return len(self.bags)

    def adjacency(self):
        adj = [[] for _ in self.bags]
        for a, b in self.edges:
            adj[a].append(b)
            adj[b].append(a)
        return adj

    def rooted(self, root=0):
        """Return (parent, children, order) with ``order`` a preorder from ``root``."""
        adj = self.adjacency()
        parent = [-1] * len(self.bags)
        children = [[] for _ in self.bags]
        seen = [False] * len(self.bags)
        order = []
        if not self.bags:
            return parent, children, order
        stack = [root]
        seen[root] = True
        while stack:
            a = stack.pop()
            order.append(a)
            for b in sorted(adj[a], reverse=True):
                if not seen[b]:
                    seen[b] = True
                    parent[b] = a
                    children[a].append(b)
                    stack.append(b)
        for c in children:
            c.sort()
        return parent, children, order


def _is_tree(count, edges):
    if count == 0:
        return not edges
    if len(edges) != count - 1:
        return False
    parent = list(range(count))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in edges:
        if not (0 <= a < count and 0 <= b < count):
            return False
        ra, rb = find(a), find(b)
        if ra == rb:
            return False
        parent[ra] = rb
    return True


def validate_tree_decomposition(g, td):
    """Return ``(ok, report)``; ``report`` names the first violation found."""
    if not _is_tree(len(td.bags), td.edges):
        if g.n == 0 and not td.bags:
            return True, "ok"
        return False, "decomposition graph is not a tree"
    where = [[] for _ in range(g.n)]
    for a, bag in enumerate(td.bags):
        for v in bag:
            if not 0 <= v < g.n:
                return False, f"bag {a} contains unknown vertex {v}"
            where[v].append(a)
    for v in range(g.n):
        if not where[v]:
            return False, f"vertex {v} appears in no bag"
    for u, v in g.edges():
        if not any(v in td.bags[a] for a in where[u]):
            return False, f"edge ({u}, {v}) is not covered by any bag"
    adj = td.adjacency()
    for v in range(g.n):
        nodes = set(where[v])
        start = where[v][0]
        seen = {start}
        stack = [start]
        while stack:
            a = stack.pop()
            for b in adj[a]:
                if b in nodes and b not in seen:
                    seen.add(b)
                    stack.append(b)
        if seen != nodes:
            return False, f"bags containing vertex {v} are not connected"
    return True, "ok"


def require_valid(g, td):
    ok, report = validate_tree_decomposition(g, td)
    if not ok:
        raise InvalidDecomposition(report)


class NodeKind(enum.Enum):
    LEAF = "leaf"
    INTRODUCE = "introduce"
    FORGET = "forget"
    JOIN = "join"


@dataclass(frozen=True)
class NiceNode:
    kind: NodeKind
    bag: FrozenSet[int]
    children: Tuple[int, ...]
    vertex: Optional[int] = None


@dataclass(frozen=True)
class NiceTreeDecomposition:
    nodes: Tuple[NiceNode, ...]
    root: int
    parent: Tuple[int, ...] = field(compare=False)

    @property
    def width(self):
        return max(len(x.bag) for x in self.nodes) - 1

    def __len__(self):
        return len(self.nodes)

    def postorder(self):
        """Children before parents."""
        out = []
        stack = [(self.root, False)]
        while stack:
            a, done = stack.pop()
            if done:
                out.append(a)
                continue
            stack.append((a, True))
            for c in reversed(self.nodes[a].children):
                stack.append((c, False))
        return out

    def as_tree_decomposition(self):
        edges = tuple((a, c) for a, node in enumerate(self.nodes) for c in node.children)
        return TreeDecomposition(tuple(x.bag for x in self.nodes), edges)

    def tops(self):
        """Map vertex -> its topmost node."""
        out = {}
        for a, node in enumerate(self.nodes):
            p = self.parent[a]
            for v in node.bag:
                if p < 0 or v not in self.nodes[p].bag:
                    out[v] = a
        return out


def check_nice(ntd):
    """Assert the structural invariants of a nice decomposition."""
    for a, node in enumerate(ntd.nodes):
        kids = [ntd.nodes[c] for c in node.children]
        if node.kind is NodeKind.LEAF:
            assert not kids and not node.bag, a
        elif node.kind is NodeKind.INTRODUCE:
            assert len(kids) == 1 and node.bag == kids[0].bag | {node.vertex}, a
            assert node.vertex not in kids[0].bag, a
        elif node.kind is NodeKind.FORGET:
            assert len(kids) == 1 and node.bag == kids[0].bag - {node.vertex}, a
            assert node.vertex in kids[0].bag, a
        else:
            assert len(kids) == 2 and kids[0].bag == node.bag == kids[1].bag, a
        for c in node.children:
            assert ntd.parent[c] == a
    assert ntd.parent[ntd.root] == -1
    return True


def _compress(td):
    """Contract tree edges whose bags are nested; keeps validity and width."""
    bags = [set(b) for b in td.bags]
    alive = [True] * len(bags)
    adj = [set() for _ in bags]
    for a, b in td.edges:
        adj[a].add(b)
        adj[b].add(a)
    changed = True
    while changed:
        changed = False
        for a in range(len(bags)):
            if not alive[a]:
                continue
            for b in sorted(adj[a]):
                if bags[a] <= bags[b]:
                    # fold a into b
                    for c in adj[a]:
                        if c != b:
                            adj[c].discard(a)
                            adj[c].add(b)
                            adj[b].add(c)
                    adj[b].discard(a)
                    adj[a] = set()
                    alive[a] = False
                    changed = True
                    break
    keep = [a for a in range(len(bags)) if alive[a]]
    index = {a: i for i, a in enumerate(keep)}
    edges = tuple(sorted({(min(index[a], index[b]), max(index[a], index[b])) for a in keep for b in adj[a]}))
    return TreeDecomposition(tuple(frozenset(bags[a]) for a in keep), edges)


def make_nice(g, td):
    """Convert a valid decomposition to nice form with the same width.

    Leaves have empty bags and the root bag is empty as well, so every vertex
    is forgotten exactly once.
    """
    require_valid(g, td)
    nodes: List[list] = []  # [kind, bag, children, vertex]

    def add(kind, bag, children, vertex=None):
        nodes.append([kind, frozenset(bag), tuple(children), vertex])
        return len(nodes) - 1

    def introduce_all(cur, bag, targets):
        for v in sorted(targets):
            bag = bag | {v}
            cur = add(NodeKind.INTRODUCE, bag, (cur,), v)
        return cur, bag

    def forget_all(cur, bag, targets):
        for v in sorted(targets):
            bag = bag - {v}
            cur = add(NodeKind.FORGET, bag, (cur,), v)
        return cur, bag

    if not td.bags:
        leaf = add(NodeKind.LEAF, (), ())
        return _finish(nodes, leaf)
    td = _compress(td)
    parent, children, order = td.rooted(0)
    built = {}
    for a in reversed(order):
        target = td.bags[a]
        branches = []
        for c in children[a]:
            cur, bag = built.pop(c)
            cur, bag = forget_all(cur, bag, bag - target)
            branches.append((cur, bag))
        if not branches:
            cur = add(NodeKind.LEAF, (), ())
            cur, bag = introduce_all(cur, frozenset(), target)
            built[a] = (cur, bag)
            continue
        union = frozenset().union(*(b for _, b in branches))
        aligned = [introduce_all(cur, bag, union - bag)[0] for cur, bag in branches]
        cur = aligned[0]
        for other in aligned[1:]:
            cur = add(NodeKind.JOIN, union, (cur, other))
        cur, bag = introduce_all(cur, union, target - union)
        built[a] = (cur, bag)
    cur, bag = built.pop(0)
    cur, bag = forget_all(cur, bag, bag)
    return _finish(nodes, cur)


def _finish(raw, root):
    parent = [-1] * len(raw)
    for a, (_, _, kids, _) in enumerate(raw):
        for c in kids:
            parent[c] = a
    nodes = tuple(NiceNode(k, b, c, v) for k, b, c, v in raw)
    return NiceTreeDecomposition(nodes, root, tuple(parent))


def top_node(ntd, v):
    """Highest node whose bag contains ``v``."""
    for a, node in enumerate(ntd.nodes):
        if v in node.bag:
            p = ntd.parent[a]
            if p < 0 or v not in ntd.nodes[p].bag:
                return a
    raise VertexNotInDecomposition(f"vertex {v} occurs in no bag")


# ---------------------------------------------------------------------------
# Computing decompositions
# ---------------------------------------------------------------------------


def _min_fill_order(g):
    adj = [set(g.adjacency[v]) for v in range(g.n)]
    remaining = set(range(g.n))
    order = []
    while remaining:
        best = None
        for v in sorted(remaining):
            nb = adj[v]
            fill = sum(1 for x, y in itertools.combinations(sorted(nb), 2) if y not in adj[x])
            key = (fill, len(nb), v)
            if best is None or key < best[0]:
                best = (key, v)
        v = best[1]
        nb = adj[v]
        for x, y in itertools.combinations(nb, 2):
            adj[x].add(y)
            adj[y].add(x)
        for x in nb:
            adj[x].discard(v)
        remaining.discard(v)
        order.append(v)
    return order


def _exact_order(g):
    """Optimal elimination ordering by dynamic programming over vertex subsets."""
    n = g.n
    full = (1 << n) - 1

    def q_size(s_mask, v):
        # vertices outside s∪{v} reachable from v through s
        seen = 1 << v
        frontier = 1 << v
        reach = 0
        while frontier:
            nxt = 0
            for x in bits(frontier):
                nb = g.adj_masks[x] & ~seen
                seen |= nb
                inside = nb & s_mask
                reach |= nb & ~s_mask
                nxt |= inside
            frontier = nxt
        return bin(reach & ~(1 << v)).count("1")

    best = {0: (-1, None)}
    for size in range(1, n + 1):
        for combo in itertools.combinations(range(n), size):
            s = mask_of(combo)
            cand = None
            for v in combo:
                rest = s & ~(1 << v)
                w = max(best[rest][0], q_size(rest, v))
                if cand is None or w < cand[0]:
                    cand = (w, v)
            best[s] = cand
    order = []
    s = full
    while s:
        v = best[s][1]
        order.append(v)
        s &= ~(1 << v)
    order.reverse()
    return order


def decomposition_from_order(g, order):
    """Tree decomposition induced by an elimination ordering."""
    pos = {v: i for i, v in enumerate(order)}
    adj = [set(g.adjacency[v]) for v in range(g.n)]
    bags = []
    higher_sets = []
    for v in order:
        higher = {u for u in adj[v] if pos[u] > pos[v]}
        for x, y in itertools.combinations(higher, 2):
            adj[x].add(y)
            adj[y].add(x)
        bags.append(frozenset(higher | {v}))
        higher_sets.append(higher)
    edges = []
    roots = []
    for i, v in enumerate(order):
        higher = higher_sets[i]
        if higher:
            p = min(pos[u] for u in higher)
            edges.append((i, p))
        else:
            roots.append(i)
    for a, b in zip(roots, roots[1:]):
        edges.append((a, b))
    return TreeDecomposition(tuple(bags), tuple(edges))


def heuristic_tree_decomposition(g, exact=False):
    """Min-fill decomposition, or an optimal one for ``n <= 12`` when ``exact``."""
    if g.n == 0:
        return TreeDecomposition((), ())
    if exact:
        if g.n > EXACT_TREEWIDTH_LIMIT:
            raise ResourceLimit(f"exact treewidth limited to n <= {EXACT_TREEWIDTH_LIMIT}")
        order = _exact_order(g)
    else:
        order = _min_fill_order(g)
    return _compress(decomposition_from_order(g, order))


def treewidth(g, exact=True):
    return heuristic_tree_decomposition(g, exact=exact).width


# ---------------------------------------------------------------------------
# Incidence structure
# ---------------------------------------------------------------------------


def incidence_structure(g, td):
    """Keep every edge and add a subdivision vertex per edge.

    Returns ``(graph, decomposition, edge_vertex)`` where ``edge_vertex`` maps
    each original edge ``(u, v)`` with ``u < v`` to its new vertex.
    """
    edge_list = list(g.edges())
    n = g.n
    edge_vertex = {e: n + i for i, e in enumerate(edge_list)}
    new_edges = list(edge_list)
    for (u, v), x in edge_vertex.items():
        new_edges.append((u, x))
        new_edges.append((v, x))
    labels = dict(g.vertex_labels)
    labels[VERTEX_LABEL] = frozenset(range(n))
    labels[EDGE_LABEL] = frozenset(edge_vertex.values())
    h = Graph(n + len(edge_list), new_edges, labels, is_sigma2=True)
    bags = list(td.bags)
    edges = list(td.edges)
    for (u, v), x in edge_vertex.items():
        home = next(a for a, bag in enumerate(td.bags) if u in bag and v in bag)
        bags.append(td.bags[home] | {x})
        edges.append((home, len(bags) - 1))
    return h, TreeDecomposition(tuple(bags), tuple(edges)), edge_vertex


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------


def _lines(text):
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line or line.startswith("c ") or line == "c":
            continue
        yield lineno, line.split()


def parse_graph(text):
    n = None
    edges = []
    labels: Dict[str, List[int]] = {}
    for lineno, tok in _lines(text):
        try:
            if tok[0] == "p":
                nums = [t for t in tok[1:] if t.isdigit()]
                n = int(nums[0])
            elif tok[0] == "e":
                edges.append((int(tok[1]) - 1, int(tok[2]) - 1))
            elif tok[0] == "l":
                labels.setdefault(tok[1], []).extend(int(t) - 1 for t in tok[2:])
            else:
                raise ParseError(f"line {lineno}: unknown record {tok[0]!r}")
        except (IndexError, ValueError):
            raise ParseError(f"line {lineno}: malformed record") from None
    if n is None:
        raise ParseError("missing 'p' header")
    sigma2 = VERTEX_LABEL in labels and EDGE_LABEL in labels
    return Graph(n, edges, labels, is_sigma2=sigma2)


def format_graph(g):
    out = [f"p {g.n} {g.m}"]
    out += [f"e {u + 1} {v + 1}" for u, v in g.edges()]
    for name in sorted(g.vertex_labels):
        vs = sorted(g.vertex_labels[name])
        out.append(" ".join(["l", name] + [str(v + 1) for v in vs]))
    return "\n".join(out) + "\n"


def parse_tree_decomposition(text):
    count = None
    bags: Dict[int, FrozenSet[int]] = {}
    edges = []
    for lineno, tok in _lines(text):
        try:
            if tok[0] in ("td", "s"):
                nums = [int(t) for t in tok[1:] if t.isdigit()]
                count = nums[0]
            elif tok[0] == "b":
                bags[int(tok[1]) - 1] = frozenset(int(t) - 1 for t in tok[2:])
            elif tok[0] == "t":
                edges.append((int(tok[1]) - 1, int(tok[2]) - 1))
            else:
                raise ParseError(f"line {lineno}: unknown record {tok[0]!r}")
        except (IndexError, ValueError):
            raise ParseError(f"line {lineno}: malformed record") from None
    if count is None:
        raise ParseError("missing 'td' header")
    if set(bags) != set(range(count)):
        raise ParseError("bag ids must be 1..node-count")
    return TreeDecomposition(tuple(bags[i] for i in range(count)), tuple(edges))


def format_tree_decomposition(td, n):
    out = [f"td {len(td.bags)} {td.width + 1} {n}"]
    for a, bag in enumerate(td.bags):
        out.append(" ".join(["b", str(a + 1)] + [str(v + 1) for v in sorted(bag)]))
    out += [f"t {a + 1} {b + 1}" for a, b in td.edges]
    return "\n".join(out) + "\n"


def read_graph(path):
    with open(path) as fh:
        return parse_graph(fh.read())


def read_tree_decomposition(path):
    with open(path) as fh:
        return parse_tree_decomposition(fh.read())
