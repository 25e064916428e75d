import itertools
import random
from fractions import Fraction

import pytest

from msoext.csp import (
    CspInstance,
    HardConstraint,
    SoftConstraint,
    augment_decomposition,
    check_extension,
    constraint_graph,
    decompose,
    dump_csp,
    freuder_solve,
    ilp_to_csp,
    solve_exhaustive,
)
from msoext.errors import Infeasible, InvalidDecomposition, LocalityViolation, ResourceLimit, UnboundedVariable
from msoext.graph import Graph, TreeDecomposition, heuristic_tree_decomposition, path_graph, validate_tree_decomposition
from msoext.ilp import IlpInstance, solve_ilp

from test_nd_solver import grid, random_ilp


def binary_csp(domain=(0, 1)):
    csp = CspInstance()
    csp.add_var("x", domain)
    csp.add_var("y", domain)
    return csp


def test_constraint_graph_examples():
    csp = binary_csp()
    csp.add_hard(HardConstraint((0, 1), relation=frozenset({(0, 1)})))
    assert list(constraint_graph(csp).edges()) == [(0, 1)]
    tri = CspInstance()
    for k in range(3):
        tri.add_var(f"z{k}", (0, 1))
    tri.add_soft(SoftConstraint((0, 1, 2), {(1, 1, 1): 1}))
    assert constraint_graph(tri).m == 3


def test_single_variable():
    csp = CspInstance()
    csp.add_var("x", (0, 1))
    csp.add_soft(SoftConstraint((0,), {(1,): 5}))
    sol = freuder_solve(csp, decompose(csp))
    assert sol.assignment == [0] and sol.weight == 0


def test_inequality_with_preference():
    csp = binary_csp()
    csp.add_hard(HardConstraint((0, 1), predicate=lambda t: t[0] != t[1]))
    csp.add_soft(SoftConstraint((0, 1), {(1, 1): -3, (0, 1): 2, (1, 0): 1}))
    sol = freuder_solve(csp, decompose(csp))
    assert sol.weight == 1 and sol.assignment == [1, 0]


def test_infeasible():
    csp = binary_csp()
    csp.add_hard(HardConstraint((0, 1), relation=frozenset()))
    with pytest.raises(Infeasible):
        freuder_solve(csp, decompose(csp))


def test_invalid_decomposition():
    csp = binary_csp()
    csp.add_hard(HardConstraint((0, 1), relation=frozenset({(0, 0)})))
    td = TreeDecomposition((frozenset({0}), frozenset({1})), ((0, 1),))
    with pytest.raises(InvalidDecomposition):
        freuder_solve(csp, td)


def test_functional_constraint():
    csp = CspInstance()
    for name in "abc":
        csp.add_var(name, range(4))
    csp.add_hard(HardConstraint((0, 1, 2), function=lambda a, b: a + b if a + b < 4 else None, target=2))
    csp.add_soft(SoftConstraint((2,), {(v,): -v for v in range(4)}))
    csp.add_soft(SoftConstraint((0,), {(v,): v for v in range(4)}))
    sol = freuder_solve(csp, decompose(csp))
    assert sol.weight == -3 and sol.assignment == [0, 3, 3]


def random_csp(rng):
    csp = CspInstance()
    nv = rng.randint(1, 8)
    for k in range(nv):
        csp.add_var(f"z{k}", tuple(range(rng.randint(1, 4))))
    for _ in range(rng.randint(0, 8)):
        scope = tuple(rng.sample(range(nv), rng.randint(1, min(3, nv))))
        tuples = list(itertools.product(*(csp.domains[v] for v in scope)))
        kind = rng.randrange(3)
        if kind == 0:
            rel = frozenset(t for t in tuples if rng.random() < 0.7)
            csp.add_hard(HardConstraint(scope, relation=rel))
        elif kind == 1:
            salt = rng.randrange(5)
            csp.add_hard(HardConstraint(scope, predicate=lambda t, s=salt: (sum(t) + s) % 5 != 0))
        else:
            csp.add_soft(SoftConstraint(scope, {t: Fraction(rng.randint(-4, 4), rng.randint(1, 2))
                                                for t in tuples if rng.random() < 0.5}))
    return csp


def test_freuder_matches_exhaustive():
    rng = random.Random(5)
    solved = 0
    for _ in range(300):
        csp = random_csp(rng)
        td = decompose(csp)
        try:
            expected = solve_exhaustive(csp)
        except Infeasible:
            with pytest.raises(Infeasible):
                freuder_solve(csp, td)
            continue
        got = freuder_solve(csp, td)
        assert got.weight == expected.weight
        assert csp.feasible(got.assignment) and csp.weight(got.assignment) == got.weight
        solved += 1
    assert solved > 100


def test_freuder_root_independent():
    rng = random.Random(8)
    for _ in range(100):
        csp = random_csp(rng)
        td = decompose(csp)
        outcomes = set()
        for root in range(len(td.bags)):
            try:
                outcomes.add(freuder_solve(csp, td, root=root).weight)
            except Infeasible:
                outcomes.add(None)
        assert len(outcomes) == 1


def test_freuder_pins():
    rng = random.Random(6)
    for _ in range(60):
        csp = random_csp(rng)
        td = decompose(csp)
        v = rng.randrange(csp.num_vars)
        value = csp.domains[v][-1]
        feasible = [x for x in itertools.product(*csp.domains) if csp.feasible(x) and x[v] == value]
        if not feasible:
            with pytest.raises(Infeasible):
                freuder_solve(csp, td, pins={v: value})
            continue
        got = freuder_solve(csp, td, pins={v: value})
        assert got.assignment[v] == value
        assert got.weight == min(csp.weight(x) for x in feasible)


def test_ilp_to_csp_relation():
    ilp = IlpInstance()
    x = ilp.add_var("x", 0, 1)
    y = ilp.add_var("y", 0, 1)
    ilp.add_row({x: 1, y: 1}, "<=", 1)
    csp = ilp_to_csp(ilp)
    assert csp.hard[0].relation == frozenset({(0, 0), (0, 1), (1, 0)})


def test_ilp_to_csp_ternary():
    ilp = IlpInstance()
    vs = [ilp.add_var(f"v{k}", 0, 2) for k in range(3)]
    ilp.add_row({v: 1 for v in vs}, "=", 3)
    csp = ilp_to_csp(ilp)
    assert len(csp.hard) == 1 and len(csp.hard[0].scope) == 3
    assert len(csp.hard[0].relation) <= 3 ** 3


def test_ilp_to_csp_unbounded():
    ilp = IlpInstance()
    with pytest.raises(UnboundedVariable):
        ilp.add_var("x", 0, None)


def test_ilp_to_csp_preserves_solutions():
    rng = random.Random(9)
    for _ in range(150):
        ilp = random_ilp(rng)
        csp = ilp_to_csp(ilp)
        for x in itertools.product(*csp.domains):
            assert csp.feasible(x) == ilp.feasible(x)
        g = constraint_graph(csp)
        gaifman = {tuple(sorted(e)) for r in ilp.rows for e in itertools.combinations(r.coeffs, 2)}
        assert set(g.edges()) == gaifman
        expected = grid(ilp)
        if expected is None:
            with pytest.raises(Infeasible):
                freuder_solve(csp, decompose(csp))
        else:
            assert freuder_solve(csp, decompose(csp)).weight == expected


def test_extension_examples():
    small = binary_csp()
    small.add_hard(HardConstraint((0, 1), predicate=lambda t: t[0] <= t[1]))
    big = binary_csp()
    big.add_var("fresh", (0, 1, 2))
    big.add_hard(HardConstraint((0, 1), predicate=lambda t: t[0] <= t[1]))
    assert check_extension(small, big, {0: 0, 1: 1})
    big.add_hard(HardConstraint((0,), relation=frozenset({(0,)})))
    assert not check_extension(small, big, {0: 0, 1: 1})


def test_extension_with_auxiliary_sum():
    # z = x + y as an auxiliary variable, then z <= 1
    small = binary_csp()
    small.add_hard(HardConstraint((0, 1), predicate=lambda t: t[0] + t[1] <= 1))
    big = binary_csp()
    big.add_var("z", range(3))
    big.add_hard(HardConstraint((0, 1, 2), function=lambda a, b: a + b, target=2))
    big.add_hard(HardConstraint((2,), predicate=lambda t: t[0] <= 1))
    assert check_extension(small, big, {0: 0, 1: 1})


def test_extension_cap():
    small = CspInstance()
    for k in range(20):
        small.add_var(f"z{k}", (0, 1))
    with pytest.raises(ResourceLimit):
        check_extension(small, small, {k: k for k in range(20)})


# augmentation


def width(td):
    return max(len(b) for b in td.bags) - 1


def test_augment_identity():
    g = path_graph(4)
    td = heuristic_tree_decomposition(g)
    out = augment_decomposition(td, {}, [])
    assert sorted(map(sorted, out.bags)) == sorted(map(sorted, td.bags))


def test_augment_path_width():
    g = path_graph(4)
    td = heuristic_tree_decomposition(g)
    assert width(td) == 1
    extras = {0: (4, 5)}
    edges = [(4, 5)] + [(4, v) for v in td.bags[0]]
    out = augment_decomposition(td, extras, edges)
    assert width(out) <= 1 + 2 * 2
    ok, report = validate_tree_decomposition(Graph(6, list(g.edges()) + edges), out)
    assert ok, report


def test_augment_locality_violation():
    g = path_graph(3)
    td = TreeDecomposition((frozenset({0, 1}), frozenset({1, 2})), ((0, 1),))
    with pytest.raises(LocalityViolation):
        augment_decomposition(td, {0: (3,), 1: (4,)}, [(3, 2)])


def test_augment_random_valid():
    rng = random.Random(3)
    for _ in range(150):
        n = rng.randint(2, 9)
        base = Graph(n, [(u, v) for u, v in itertools.combinations(range(n), 2) if rng.random() < 0.3])
        td = heuristic_tree_decomposition(base)
        parent, children, _ = td.rooted(0)
        kappa_prime = rng.randint(1, 2)
        extras = {}
        nxt = n
        for a in range(len(td.bags)):
            extras[a] = tuple(range(nxt, nxt + kappa_prime))
            nxt += kappa_prime
        edges = []
        for a in range(len(td.bags)):
            pool = list(td.bags[a]) + list(extras[a]) + [x for c in children[a] for x in extras[c]]
            for u, v in itertools.combinations(pool, 2):
                if (u >= n or v >= n) and rng.random() < 0.4:
                    edges.append((u, v))
        out = augment_decomposition(td, extras, edges)
        g = Graph(nxt, list(base.edges()) + edges)
        ok, report = validate_tree_decomposition(g, out)
        assert ok, report
        kappa = width(td)
        if all(len(ch) <= 1 for ch in children):
            assert width(out) <= kappa + 2 * kappa_prime
        else:
            most = max(len(ch) for ch in children)
            assert width(out) <= kappa + (most + 1) * kappa_prime


def test_dump_sections():
    csp = binary_csp()
    csp.add_hard(HardConstraint((0, 1), relation=frozenset({(0, 1)})))
    csp.add_soft(SoftConstraint((0,), {(1,): 2}))
    text = dump_csp(csp)
    for head in ("[vars]", "[domains]", "[hard]", "[soft]"):
        assert head in text
    assert "0 1 : (0,1)" in text and "0 : (1,)=2" in text.replace("(1)", "(1,)")
