import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from msoext.errors import FragmentMismatch, Infeasible
from msoext.graph import Graph, NeighborhoodDecomposition, TypeKind, complete_graph, nd_decomposition, path_graph, type_graph
from msoext.ilp import IlpInstance, solve_ilp
from msoext.intervals import IntervalSet
from msoext.logic import Instance, LocalEntry, linear, parse_formula, quantifier_counts
from msoext.mso_eval import UP, Shape, brute_force_solve, check_assignment
from msoext.nd_solver import (
    build_ilp,
    compositions,
    enumerate_shapes_for,
    enumerate_sigma,
    fixed_shape_feasible,
    possibly_satisfied,
    refine_type,
    refine_uniform,
    shape_weight_bound,
    sigma_models,
    solve_fpt_lin,
    solve_xp,
)

from conftest import blowup
from instances import random_instance


def subset(a, b):
    return (a & b) == a


def clique_nd(n):
    return NeighborhoodDecomposition((tuple(range(n)),), (TypeKind.CLIQUE,))


# refinement


def test_refine_clique_three_subtypes():
    g = complete_graph(3)
    alpha = {0: IntervalSet.of([2]), 1: IntervalSet.of([3]), 2: IntervalSet.of([2, 3])}
    parts, refined = refine_type(g, clique_nd(3), alpha.__getitem__, 0)
    assert len(parts) == 3
    assert all(subset(refined[v], IntervalSet.interval(2, 3)) for v in range(3))


def test_refine_clique_infeasible():
    g = complete_graph(8)
    alpha = lambda v: IntervalSet.point(0) if v == 0 else (IntervalSet.point(5) if v == 1 else IntervalSet.interval(0, 7))
    with pytest.raises(Infeasible):
        refine_type(g, clique_nd(8), alpha, 0)


def test_refine_independent_intersection():
    g = Graph(2)
    nd = NeighborhoodDecomposition(((0, 1),), (TypeKind.INDEPENDENT,))
    alpha = {0: IntervalSet.interval(0, 3), 1: IntervalSet.interval(2, 5)}
    parts, refined = refine_type(g, nd, alpha.__getitem__, 0)
    assert parts == [(0, 1)]
    assert refined[0] == refined[1] == IntervalSet.interval(2, 3)


def test_refine_uniform_identity():
    g = blowup(random.Random(1), 3, 4)
    nd = nd_decomposition(g)
    out, table = refine_uniform(g, nd, [lambda v: IntervalSet.interval(0, 2)])
    assert out.types == nd.types
    assert all(row == (IntervalSet.interval(0, 2),) for row in table)


@given(st.lists(st.tuples(st.integers(0, 9), st.integers(0, 9)), min_size=10, max_size=10),
       st.lists(st.tuples(st.integers(0, 9), st.integers(0, 9)), min_size=10, max_size=10))
@settings(max_examples=60, deadline=None)
def test_refine_uniform_type_bound(a1, a2):
    # one clique type, two variables, interval constraints: at most 4**2 types
    g = complete_graph(10)
    alphas = [lambda v, a=a: IntervalSet.interval(min(a[v]), max(a[v])) for a in (a1, a2)]
    try:
        out, table = refine_uniform(g, clique_nd(10), alphas)
    except Infeasible:
        return
    assert out.nu <= 16
    for members, row in zip(out.types, table):
        for i, a in enumerate(alphas):
            assert all(subset(row[i], a(v)) for v in members)


def test_refinement_preserves_solutions(rng):
    # brute force with original versus refined constraints
    for _ in range(40):
        g = blowup(rng, rng.randint(1, 3), 4, p=0.5)
        if g.n > 9:
            continue
        f = parse_formula("true", free_vars=["X1"])
        inst = Instance(g, f)
        for v in range(g.n):
            a = rng.randint(0, g.degree(v))
            inst.locals.set(0, v, IntervalSet.interval(a, rng.randint(a, g.degree(v))))
        nd = nd_decomposition(g)
        try:
            out, table = refine_uniform(g, nd, [lambda v: inst.locals.alpha(0, v)])
        except Infeasible:
            assert not brute_force_solve(inst).sat
            continue
        refined = Instance(g, f)
        for members, row in zip(out.types, table):
            for v in members:
                refined.locals.set(0, v, row[0])
        for mask in range(1 << g.n):
            assert inst.locals.satisfied(g, (mask,)) == refined.locals.satisfied(g, (mask,))


# integer program


def test_build_ilp_independent_row():
    g = Graph(2)
    nd = nd_decomposition(g)
    tg = type_graph(g, nd)
    sh = Shape(((1, 1),), 1)
    ilp = build_ilp(sh, {}, tg, [(IntervalSet.interval(1, 2),)], ())
    lli = [r for r in ilp.rows if r.tag == "(lli)"]
    assert [(r.sense, r.rhs) for r in lli] == [(">=", 1), ("<=", 2)]
    assert all(not r.coeffs for r in lli)  # the type has no neighbours
    assert ilp.num_vars == 1 * 2 + 1 + 1


def test_build_ilp_clique_rows():
    g = complete_graph(4)
    nd = nd_decomposition(g)
    tg = type_graph(g, nd)
    ilp = build_ilp(Shape(((2, UP),), 1), {}, tg, [(IntervalSet.interval(0, 3),)], ())
    tags = {r.tag for r in ilp.rows}
    assert "(llc1)" in tags and "(llc2)" in tags
    up = [r for r in ilp.rows if r.tag == "(sh2)"]
    assert len(up) == 1 and up[0].sense == ">=" and up[0].rhs == 2


def test_build_ilp_variable_count(rng):
    for _ in range(10):
        g = blowup(rng, rng.randint(1, 4), 3)
        nd = nd_decomposition(g)
        tg = type_graph(g, nd)
        for ell in (1, 2):
            sh = next(iter(enumerate_shapes_for(nd.sizes(), ell, 1)))
            table = [(IntervalSet.interval(0, g.n),) * ell for _ in nd.types]
            ilp = build_ilp(sh, {}, tg, table, ())
            assert ilp.num_vars == nd.nu * 2 ** ell + nd.nu * ell + ell


def test_solve_ilp_examples():
    ilp = IlpInstance()
    x = ilp.add_var("x", 0, 2)
    y = ilp.add_var("y", 0, 2)
    ilp.add_row({x: 1, y: 1}, "=", 3)
    assert tuple(solve_ilp(ilp)) in {(1, 2), (2, 1)}
    bad = IlpInstance()
    x = bad.add_var("x", 0, 5)
    bad.add_row({x: 1}, "=", 1)
    bad.add_row({x: 1}, "=", 2)
    assert solve_ilp(bad) is None


def random_ilp(rng):
    ilp = IlpInstance()
    nv = rng.randint(1, 6)
    for k in range(nv):
        lo = rng.randint(-2, 2)
        ilp.add_var(f"v{k}", lo, lo + rng.randint(0, 4))
    for _ in range(rng.randint(1, 5)):
        support = rng.sample(range(nv), rng.randint(1, nv))
        coeffs = {v: rng.choice([-3, -2, -1, 1, 2, 3, Fraction(1, 2)]) for v in support}
        ilp.add_row(coeffs, rng.choice(["<=", ">=", "="]), rng.randint(-4, 6))
    if rng.random() < 0.5:
        ilp.objective = {v: Fraction(rng.randint(-3, 3)) for v in range(nv)}
    return ilp


def grid(ilp):
    best = None
    for x in itertools.product(*(range(a, b + 1) for a, b in zip(ilp.lower, ilp.upper))):
        if ilp.feasible(x):
            value = ilp.value(x)
            if best is None or value < best:
                best = value
    return best


def test_solve_ilp_matches_grid_search():
    rng = random.Random(11)
    for _ in range(300):
        ilp = random_ilp(rng)
        expected = grid(ilp)
        got = solve_ilp(ilp, minimize=True)
        if expected is None:
            assert got is None
        else:
            assert got is not None and ilp.feasible(got)
            assert ilp.value(got) == expected
        plain = solve_ilp(ilp)
        assert (plain is None) == (expected is None)


# shapes


def test_shape_count_bound(rng):
    for _ in range(20):
        sizes = [rng.randint(1, 6) for _ in range(rng.randint(1, 2))]
        for ell in (1, 2):
            for t in (0, 1, 2):
                count = sum(1 for _ in enumerate_shapes_for(sizes, ell, t))
                assert count <= (t + 2) ** (len(sizes) * 2 ** ell)


def test_fixed_shapes_agree_with_ilp(rng):
    # two routes to feasibility of a shape without UP cells
    checked = 0
    for _ in range(60):
        g = blowup(rng, rng.randint(1, 3), 3, p=0.5)
        nd = nd_decomposition(g)
        tg = type_graph(g, nd)
        ell = rng.randint(1, 2)
        table = []
        for members in nd.types:
            row = []
            for _ in range(ell):
                a = rng.randint(0, 3)
                row.append(IntervalSet.interval(a, a + rng.randint(0, 3)))
            table.append(tuple(row))
        globals_ = [linear("g0", [rng.randint(-1, 2) for _ in range(ell)], rng.choice(["<=", ">=", "="]),
                           rng.randint(0, 3))]
        beta = {"g0": rng.random() < 0.5}
        for sh in enumerate_shapes_for(nd.sizes(), ell, max(nd.sizes())):
            for choice in ({"g0": 0}, {"g0": 1}):
                direct = fixed_shape_feasible(sh, tg, table, globals_, beta, choice)
                via_ilp = solve_ilp(build_ilp(sh, beta, tg, table, globals_, choice)) is not None
                assert direct == via_ilp
                checked += 1
    assert checked > 200


def test_shape_weight_bound_is_a_lower_bound(rng):
    for _ in range(30):
        size = rng.randint(1, 6)
        w = [(Fraction(rng.randint(-2, 3)), Fraction(rng.randint(-2, 3)))]
        for sh in enumerate_shapes_for([size], 2, 1):
            bound = shape_weight_bound(sh, [size], w, 2)
            best = None
            for cells in compositions(size, 4):
                if all((c >= 2) if r == UP else c == r for c, r in zip(cells, sh.cells[0])):
                    cost = sum(c * sum(w[0][i] for i in range(2) if p >> i & 1) for p, c in enumerate(cells))
                    best = cost if best is None else min(best, cost)
            assert best == bound


# FPT solver


def test_fpt_empty_formula():
    g = path_graph(4)
    inst = Instance(g, parse_formula("true", free_vars=["X1"]))
    for v in range(4):
        inst.locals.set(0, v, IntervalSet.interval(0, 4))
    res = solve_fpt_lin(inst)
    assert res.sat and check_assignment(inst, res.assignment)


def test_fpt_contradictory_global():
    f = parse_formula("forall x (x in X1 <-> x in X2) & #card(g)", ["g"])
    inst = Instance(path_graph(4), f, (linear("g", [1, -1], "=", 1),))
    assert not solve_fpt_lin(inst).sat


def test_fpt_equitable_path():
    f = parse_formula("partition(X1, X2) & independent(X1) & independent(X2) & #card(a) & #card(b)", ["a", "b"])
    gl = (linear("a", [1, -1], "<=", 1), linear("b", [-1, 1], "<=", 1))
    inst = Instance(path_graph(4), f, gl)
    assert solve_fpt_lin(inst).sat == brute_force_solve(inst).sat == True


def test_fpt_rejects_conditional_locals():
    inst = Instance(path_graph(3), parse_formula("true", free_vars=["X1", "X2"]))
    inst.locals.set(0, 0, LocalEntry(IntervalSet.point(1), IntervalSet.point(0), 1))
    with pytest.raises(FragmentMismatch):
        solve_fpt_lin(inst)


def test_fpt_matches_brute_force():
    rng = random.Random(101)
    for _ in range(60):
        inst = random_instance(rng, linear_only=True)
        a, b = solve_fpt_lin(inst), brute_force_solve(inst)
        assert (a.status, a.weight) == (b.status, b.weight)
        if a.sat:
            assert check_assignment(inst, a.assignment)


# XP solver


def test_enumerate_sigma_counts():
    assert len(list(enumerate_sigma(Graph(1), nd_decomposition(Graph(1)), 1))) == 2
    assert len(list(enumerate_sigma(Graph(2), nd_decomposition(Graph(2)), 1))) == 3
    g = blowup(random.Random(2), 2, 3)
    nd = nd_decomposition(g)
    count = len(list(enumerate_sigma(g, nd, 2)))
    expected = 1
    for size in nd.sizes():
        expected *= len(list(compositions(size, 4)))
    assert count == expected


def test_compositions_stars_and_bars():
    from math import comb
    for total in range(6):
        for parts in range(1, 5):
            assert len(list(compositions(total, parts))) == comb(total + parts - 1, parts - 1)


def test_sigma_models_true():
    g = blowup(random.Random(4), 2, 3)
    nd = nd_decomposition(g)
    root = parse_formula("true", free_vars=["X1"]).root
    assert all(sigma_models(g, nd, s, root, (), ("X1",)) for s in enumerate_sigma(g, nd, 1))


def test_possibly_satisfied_examples():
    g = Graph(4, [(0, 2), (0, 3), (1, 2), (1, 3)])
    nd = nd_decomposition(g)
    tg = type_graph(g, nd)
    inst = Instance(g, parse_formula("true", free_vars=["X1"]))
    for v in range(4):
        inst.locals.set(0, v, IntervalSet.interval(0, 3))
    sigma = tuple((0, len(m)) for m in nd.types)  # everything selected: s = 2
    assert possibly_satisfied(nd, tg, sigma, inst.locals, 1).ok
    k = complete_graph(4)
    knd = nd_decomposition(k)
    ktg = type_graph(k, knd)
    kinst = Instance(k, parse_formula("true", free_vars=["X1"]))
    kinst.locals.set(0, 0, IntervalSet.point(5))
    assert not possibly_satisfied(knd, ktg, ((1, 3),), kinst.locals, 1).ok


def test_possibly_satisfied_window_counts():
    k = complete_graph(4)
    nd = nd_decomposition(k)
    tg = type_graph(k, nd)
    inst = Instance(k, parse_formula("true", free_vars=["X1"]))
    inst.locals.set(0, 0, IntervalSet.point(1))
    inst.locals.set(0, 1, IntervalSet.point(2))
    inst.locals.set(0, 2, IntervalSet.interval(1, 2))
    inst.locals.set(0, 3, IntervalSet.interval(1, 2))
    poss = possibly_satisfied(nd, tg, ((2, 2),), inst.locals, 1)
    # s = 2: selected vertices see 1, unselected see 2
    assert poss.ok and poss.counts[(0, 0)] == (1, 1, 2)


def test_xp_empty_formula():
    g = complete_graph(4)
    inst = Instance(g, parse_formula("true", free_vars=["X1"]))
    for v in range(4):
        inst.locals.set(0, v, IntervalSet.interval(1, 2))
    res = solve_xp(inst)
    assert res.sat and check_assignment(inst, res.assignment)
    for v in range(4):
        inst.locals.set(0, v, IntervalSet.point(1))
    assert not solve_xp(inst).sat


def test_xp_matches_brute_force():
    rng = random.Random(202)
    for _ in range(60):
        inst = random_instance(rng, linear_only=False)
        a, b = solve_xp(inst), brute_force_solve(inst)
        assert (a.status, a.weight) == (b.status, b.weight)
        if a.sat:
            assert check_assignment(inst, a.assignment)


def test_xp_pruning_agrees():
    rng = random.Random(303)
    for _ in range(40):
        inst = random_instance(rng, linear_only=False)
        a, b = solve_xp(inst, prune=True), solve_xp(inst, prune=False)
        assert (a.status, a.weight) == (b.status, b.weight)
