"""Random instance generators shared by the solver and acceptance tests."""

import itertools
from fractions import Fraction

from msoext.graph import Graph
from msoext.intervals import IntervalSet
from msoext.logic import GlobalConstraint, Instance, LocalEntry, ModCount, Table, linear, parse_formula, poly

from conftest import blowup

# formulas whose expansion has at most two set quantifiers
TEMPLATES_1 = [
    "true",
    "independent(X1)",
    "dominating(X1)",
    "connected(X1)",
    "covers(X1)",
    "independent(X1) & dominating(X1)",
    "forall x in X1 (exists y in X1 edge(x, y))",
    "exists x (x in X1) & connected(X1)",
    "forall x, y (x in X1 & y in X1 -> x = y | edge(x, y))",
]
TEMPLATES_2 = [
    "true",
    "partition(X1, X2) & independent(X1)",
    "disjoint(X1, X2) & dominating(X2)",
    "forall x in X1 (exists y in X2 edge(x, y))",
    "exists x (x in X1 & x in X2)",
    "connected(X1) & connected(X2)",
    "subset(X1, X2) | independent(X2)",
    "partition(X1, X2) & independent(X1) & independent(X2)",
    "covers(X1) & !covers(X2)",
]


def _graph(rng, max_n, max_nu):
    while True:
        g = blowup(rng, rng.randint(1, max_nu), 3, p=rng.choice([0.3, 0.6]))
        if g.n <= max_n:
            return g


def _linear(rng, gid, ell):
    coeffs = [rng.randint(-2, 2) for _ in range(ell)]
    if rng.random() < 0.2:
        coeffs[0] = Fraction(rng.randint(1, 3), 2)
    return linear(gid, coeffs, rng.choice(["<=", "=", ">="]), rng.randint(-1, 4))


def _oracle(rng, gid, ell):
    kind = rng.randrange(3)
    if kind == 0:
        return poly(gid, rng.choice(["x1 >= x1^2 - 2", "x1*x1 <= 4", "x1 + 2 >= x1^2"]) if ell == 1 else
                    rng.choice(["x1 >= x2^2", "x1*x2 <= 2", "x1^2 + x2^2 <= 9"]))
    if kind == 1:
        return GlobalConstraint(gid, ModCount(rng.randrange(2), 2, rng.randrange(ell)))
    tuples = frozenset(tuple(rng.randint(0, 4) for _ in range(ell)) for _ in range(6))
    return GlobalConstraint(gid, Table(tuples))


def _combine(rng, body, gids):
    parts = [body]
    for gid in gids:
        atom = f"#card({gid})"
        r = rng.random()
        if r < 0.6:
            parts.append(atom)
        elif r < 0.8:
            parts.append("!" + atom)
        else:
            parts[-1] = f"({parts[-1]}) | {atom}"
    return " & ".join(f"({p})" for p in parts)


def random_instance(rng, max_n=7, max_nu=4, linear_only=True, max_bits=14, weighted=None):
    """A random instance with ell <= 2; ``linear_only`` keeps it in the linear fragment."""
    while True:
        g = _graph(rng, max_n, max_nu)
        ell = 1 if 2 * g.n > max_bits or rng.random() < 0.4 else 2
        templates = TEMPLATES_1 if ell == 1 else TEMPLATES_2
        body = rng.choice(templates)
        gids = [f"g{k}" for k in range(rng.randint(0, 2))]
        make = _linear if linear_only else (lambda r, gid, l: _linear(r, gid, l) if r.random() < 0.5 else _oracle(r, gid, l))
        globals_ = [make(rng, gid, ell) for gid in gids]
        text = _combine(rng, body, gids)
        free = ["X1"] if ell == 1 else ["X1", "X2"]
        f = parse_formula(text, declared_globals=gids, free_vars=free)
        inst = Instance(g, f, tuple(globals_))
        if rng.random() < 0.7:
            for v in range(g.n):
                for i in range(ell):
                    if rng.random() < 0.35:
                        deg = g.degree(v)
                        if linear_only or rng.random() < 0.5:
                            a = rng.randint(0, deg)
                            b = rng.randint(a, deg + 1) if rng.random() < 0.9 else a - 1
                            inst.locals.set(i, v, IntervalSet.interval(a, b))
                        elif rng.random() < 0.5:
                            inst.locals.set(i, v, IntervalSet.of(rng.sample(range(deg + 2), 2)))
                        else:
                            when_in = IntervalSet.of(rng.sample(range(deg + 2), 2))
                            when_out = IntervalSet.interval(0, rng.randint(0, deg))
                            inst.locals.set(i, v, LocalEntry(when_in, when_out, rng.randrange(ell)))
        if weighted is None:
            weighted = rng.random() < 0.5
        if weighted:
            inst.weights = tuple({v: Fraction(rng.randint(-1, 3)) for v in range(g.n)} for _ in range(ell))
        inst.fragment = None
        from msoext.logic import infer_fragment
        inst.fragment = infer_fragment(inst)
        return inst


# formulas inside the automaton algebra
ALGEBRA_1 = [
    "true",
    "independent(X1)",
    "dominating(X1)",
    "connected(X1)",
    "covers(X1)",
    "independent(X1) & dominating(X1)",
    "connected(X1) & !independent(X1)",
    "card_eq(X1, 2) | covers(X1)",
    "exists x (x in X1)",
    "forall x (x in X1 -> label(red, x))",
    "!connected(X1) | card_eq(X1, 3)",
]
ALGEBRA_2 = [
    "true",
    "partition(X1, X2) & independent(X1)",
    "disjoint(X1, X2) & dominating(X2)",
    "connected(X1) & connected(X2)",
    "subset(X1, X2) | independent(X2)",
    "partition(X1, X2) & independent(X1) & independent(X2)",
    "covers(X1) & !covers(X2)",
    "(exists x (x in X1 & x in X2)) -> connected(X2)",
    "dominating(X1) & card_eq(X2, 1) & subset(X2, X1)",
    "restrict(X2, X1, red) & connected(X1)",
]


def bounded_tw_graph(rng, max_n=8, max_tw=3):
    """Random graph of treewidth at most ``max_tw``: subgraph of a random k-tree."""
    n = rng.randint(1, max_n)
    k = rng.randint(1, max_tw)
    edges = set()
    cliques = [tuple(range(min(n, k + 1)))]
    for u, v in itertools.combinations(cliques[0], 2):
        edges.add((u, v))
    for v in range(k + 1, n):
        base = rng.choice(cliques)
        sub = tuple(rng.sample(base, min(k, len(base))))
        for u in sub:
            edges.add((u, v))
        cliques.append(sub + (v,))
    keep = [e for e in sorted(edges) if rng.random() < 0.75]
    red = [v for v in range(n) if rng.random() < 0.5]
    return Graph(n, keep, {"red": red})


def random_algebra_instance(rng, max_n=8, max_tw=3, max_bits=14, weighted=None):
    """Random instance whose formula the automaton backend supports."""
    g = bounded_tw_graph(rng, max_n, max_tw)
    ell = 1 if 2 * g.n > max_bits or rng.random() < 0.4 else 2
    body = rng.choice(ALGEBRA_1 if ell == 1 else ALGEBRA_2)
    gids = [f"g{k}" for k in range(rng.randint(0, 2))]
    globals_ = [_linear(rng, gid, ell) if rng.random() < 0.6 else _oracle(rng, gid, ell) for gid in gids]
    text = _combine(rng, body, gids)
    free = ["X1"] if ell == 1 else ["X1", "X2"]
    inst = Instance(g, parse_formula(text, declared_globals=gids, free_vars=free), tuple(globals_))
    if rng.random() < 0.6:
        for v in range(g.n):
            for i in range(ell):
                if rng.random() < 0.3:
                    deg = g.degree(v)
                    r = rng.random()
                    if r < 0.5:
                        a = rng.randint(0, deg)
                        inst.locals.set(i, v, IntervalSet.interval(a, rng.randint(a, deg + 1)))
                    elif r < 0.75:
                        inst.locals.set(i, v, IntervalSet.of(rng.sample(range(deg + 2), 2)))
                    else:
                        inst.locals.set(i, v, LocalEntry(IntervalSet.interval(0, deg),
                                                         IntervalSet.interval(1, max(1, deg)), rng.randrange(ell)))
    if weighted is None:
        weighted = rng.random() < 0.5
    if weighted:
        inst.weights = tuple({v: Fraction(rng.randint(-2, 3), rng.choice([1, 1, 2])) for v in range(g.n)}
                             for _ in range(ell))
    from msoext.logic import infer_fragment
    inst.fragment = infer_fragment(inst)
    return inst
