"""Direct problem-specific algorithms used as oracles for the encoders.

They work on the original graph by plain enumeration (plus max-flow for
assignment feasibility) and never go through the logic layer.
"""

import itertools
from collections import Counter

import networkx as nx


def _nx(g, vertices=None):
    h = nx.Graph()
    h.add_nodes_from(range(g.n) if vertices is None else vertices)
    for u, v in g.edges():
        if vertices is None or (u in vertices and v in vertices):
            h.add_edge(u, v)
    return h


def subsets_by_size(n):
    for size in range(n + 1):
        yield from itertools.combinations(range(n), size)


def equitable_coloring_exists(g, k):
    for colors in itertools.product(range(k), repeat=g.n):
        if any(colors[u] == colors[v] for u, v in g.edges()):
            continue
        sizes = Counter(colors)
        counts = [sizes.get(c, 0) for c in range(k)]
        if max(counts) - min(counts) <= 1:
            return True
    return False


def _assignable(demand_side, supply, capacity):
    """Each item of ``demand_side`` picks one allowed supplier within capacities (max-flow)."""
    f = nx.DiGraph()
    for item, options in demand_side.items():
        f.add_edge("s", ("d", item), capacity=1)
        for u in options:
            f.add_edge(("d", item), ("u", u), capacity=1)
    for u in supply:
        f.add_edge(("u", u), "t", capacity=capacity[u])
    if not demand_side:
        return True
    if "t" not in f:
        return False
    return nx.maximum_flow_value(f, "s", "t") == len(demand_side)


def capacitated_domination_number(g, caps):
    for d in subsets_by_size(g.n):
        ds = set(d)
        need = {v: [u for u in g.adjacency[v] if u in ds] for v in range(g.n) if v not in ds}
        if any(not opts for opts in need.values()):
            continue
        if _assignable(need, ds, caps):
            return len(d)
    return None


def capacitated_vertex_cover_number(g, caps):
    edges = list(g.edges())
    for c in subsets_by_size(g.n):
        cs = set(c)
        need = {e: [u for u in e if u in cs] for e in edges}
        if any(not opts for opts in need.values()):
            continue
        if _assignable(need, cs, caps):
            return len(c)
    return None


def vector_domination_number(g, demands):
    for d in subsets_by_size(g.n):
        ds = set(d)
        if all(v in ds or sum(u in ds for u in g.adjacency[v]) >= demands[v] for v in range(g.n)):
            return len(d)
    return None


def generalized_domination_exists(g, sigma, rho):
    for d in subsets_by_size(g.n):
        ds = set(d)
        if all(sum(u in ds for u in g.adjacency[v]) in (sigma if v in ds else rho) for v in range(g.n)):
            return True
    return False


def general_factor_exists(g, degrees):
    edges = list(g.edges())
    for size in range(len(edges) + 1):
        for f in itertools.combinations(edges, size):
            deg = Counter(x for e in f for x in e)
            if all(deg.get(v, 0) in degrees[v] for v in range(g.n)):
                return True
    return False


def orientation_exists(g, bound):
    edges = list(g.edges())
    for flips in itertools.product((0, 1), repeat=len(edges)):
        out = Counter(e[f] for e, f in zip(edges, flips))
        if all(c <= bound for c in out.values()):
            return True
    return False


def motif_exists(g, motif, colors):
    want = Counter({c: m for c, m in motif.items() if m})
    for s in subsets_by_size(g.n):
        got = Counter(c for v in s for c in colors if v in g.vertex_labels[c])
        if got != want:
            continue
        if not s or nx.is_connected(_nx(g, s)):
            return True
    return False


def balanced_cut(g, k, weights=None):
    best = None
    for parts in itertools.product(range(k), repeat=g.n):
        sizes = Counter(parts)
        counts = [sizes.get(c, 0) for c in range(k)]
        if max(counts) - min(counts) > 1:
            continue
        cut = sum(1 if weights is None else weights[(u, v)] for u, v in g.edges() if parts[u] != parts[v])
        if best is None or cut < best:
            best = cut
    return best


# random encoder cases: (instance, expected) with expected a bool verdict or an optimum


def random_graph(rng, n, p):
    from msoext.graph import Graph
    return Graph(n, [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < p])


def equitable_case(rng, max_n=8):
    from msoext.problems import encode_equitable_coloring
    g = random_graph(rng, rng.randint(1, max_n), rng.choice([0.2, 0.4, 0.6]))
    k = rng.randint(1, 3)
    return encode_equitable_coloring(g, k), equitable_coloring_exists(g, k)


def cds_case(rng, max_n=8):
    from msoext.problems import encode_capacitated_dominating_set
    g = random_graph(rng, rng.randint(1, max_n), rng.choice([0.2, 0.3, 0.5]))
    caps = [rng.randint(0, 3) for _ in range(g.n)]
    return encode_capacitated_dominating_set(g, caps), capacitated_domination_number(g, caps)


def motif_case(rng, max_n=8):
    from msoext.graph import Graph
    from msoext.problems import encode_graph_motif
    base = random_graph(rng, rng.randint(1, max_n), rng.choice([0.25, 0.4, 0.6]))
    palette = ["r", "g", "b"][:rng.randint(1, 3)]
    labels = {c: set() for c in palette}
    for v in range(base.n):
        labels[rng.choice(palette)].add(v)
    g = Graph(base.n, base.edges(), labels)
    motif = {c: rng.randint(0, 2) for c in palette if rng.random() < 0.8}
    return encode_graph_motif(g, motif), motif_exists(g, motif, palette)


def balanced_case(rng, max_n=8):
    from msoext.problems import encode_balanced_partitioning
    g = random_graph(rng, rng.randint(1, max_n), rng.choice([0.2, 0.35, 0.5]))
    k = rng.randint(1, 3)
    weights = {e: rng.randint(1, 3) for e in g.edges()} if rng.random() < 0.5 else None
    return encode_balanced_partitioning(g, k, weights), balanced_cut(g, k, weights)


ENCODER_CASES = {
    "equitable": equitable_case,
    "capacitated domination": cds_case,
    "graph motif": motif_case,
    "balanced partitioning": balanced_case,
}


def solve_encoded(inst, bits=14):
    """Brute force when the assignment space is small, the treewidth solver otherwise."""
    from msoext.mso_eval import brute_force_solve
    from msoext.tw_solver import solve_tw
    if inst.ell * inst.n <= bits:
        return brute_force_solve(inst)
    return solve_tw(inst)


def agrees(result, expected):
    if isinstance(expected, bool):
        return result.sat == expected
    if expected is None:
        return not result.sat
    return result.sat and result.weight == expected
