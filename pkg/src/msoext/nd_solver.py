"""Solvers parameterized by neighborhood diversity.

``solve_fpt_lin`` handles linear global and interval local constraints: it
makes local constraints uniform per type, then for every pre-evaluation and
every shape solves a small integer program over cell sizes.

``solve_xp`` handles arbitrary constraints by enumerating exact cell tables
(extended numerical assignments) and realizing each table with a bipartite
assignment of vertices to cells.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import FragmentMismatch, Infeasible, MsoextError, ResourceLimit
from .graph import NeighborhoodDecomposition, TypeGraph, TypeKind, nd_decomposition, type_graph
from .ilp import IlpInstance, solve_ilp
from .intervals import IntervalSet
from .logic import (
    FALSE, Formula, Linear, assignment_sizes, card_ids, eval_global, fits_fragment,
    pre_evaluations, quantifier_counts, simplify, substitute_cards,
)
from .mso_eval import (
    UP, CompiledFormula, Shape, assignment_from_cells, cap_cells, check_assignment,
    representative_cells, shape_admissible,
)
from .result import SAT, UNSAT, Result

LOG = logging.getLogger(__name__)


def _kind(g, members):
    if len(members) >= 2 and g.has_edge(members[0], members[1]):
        return TypeKind.CLIQUE
    return TypeKind.INDEPENDENT


def split_types(g, nd, key):
    """Refine every type by ``key(v)``; order of first appearance is kept."""
    types, kinds = [], []
    for members in nd.types:
        groups: Dict[object, List[int]] = {}
        for v in members:
            groups.setdefault(key(v), []).append(v)
        for grp in groups.values():
            types.append(tuple(grp))
            kinds.append(_kind(g, grp))
    return NeighborhoodDecomposition(tuple(types), tuple(kinds))


def solver_decomposition(inst):
    """Label-respecting twin classes, split further so weights are uniform per type."""
    nd = nd_decomposition(inst.graph, respect_labels=True)
    if inst.weighted:
        weights = inst.weights
        nd = split_types(inst.graph, nd, lambda v: tuple(w.get(v, 0) for w in weights))
    return nd


# ---------------------------------------------------------------------------
# Making local constraints uniform
# ---------------------------------------------------------------------------


def refine_type(g, nd, alpha, j):
    """Split type ``j`` so that ``alpha`` (vertex -> IntervalSet) becomes uniform.

    Returns ``(subtypes, refined)`` where ``refined`` maps every vertex of the
    type to its new admissible set.  Raises Infeasible when no assignment can
    meet the constraints of a clique type.
    """
    members = nd.types[j]
    if nd.kinds[j] is TypeKind.INDEPENDENT:
        # twins in an independent type all see the same count
        common = alpha(members[0])
        for v in members[1:]:
            common = common & alpha(v)
        return [tuple(members)], {v: common for v in members}
    sets = [alpha(v) for v in members]
    if any(not s for s in sets):
        raise Infeasible(f"vertex {members[sets.index(IntervalSet.empty())]} has no admissible count")
    lo = max(s.min() for s in sets)
    hi = min(s.max() for s in sets)
    if hi <= lo - 2:
        raise Infeasible(f"clique type {j}: counts {lo} and {hi} cannot both be met")
    window = IntervalSet.interval(lo - 1, hi + 1)
    refined = {v: s & window for v, s in zip(members, sets)}
    groups: Dict[IntervalSet, List[int]] = {}
    for v in members:
        groups.setdefault(refined[v], []).append(v)
    return [tuple(grp) for grp in groups.values()], refined


def refine_uniform(g, nd, alphas):
    """Refine until every type is uniform for every variable.

    ``alphas`` is a list of callables ``v -> IntervalSet``.  Returns the new
    decomposition and ``table[j][i]``, the common admissible set of type ``j``.
    """
    current = [dict((v, a(v)) for v in range(g.n)) for a in alphas]
    types = list(nd.types)
    kinds = list(nd.kinds)
    for i in range(len(alphas)):
        new_types, new_kinds = [], []
        for members, kind in zip(types, kinds):
            if len({current[i][v] for v in members}) <= 1:
                new_types.append(members)
                new_kinds.append(kind)
                continue
            sub_nd = NeighborhoodDecomposition((members,), (kind,))
            parts, refined = refine_type(g, sub_nd, current[i].__getitem__, 0)
            current[i].update(refined)
            for part in parts:
                new_types.append(part)
                new_kinds.append(_kind(g, part))
        types, kinds = new_types, new_kinds
    out = NeighborhoodDecomposition(tuple(types), tuple(kinds))
    table = [tuple(current[i][members[0]] for i in range(len(alphas))) for members in types]
    return out, table


# ---------------------------------------------------------------------------
# Shapes and the integer program
# ---------------------------------------------------------------------------


def shape_rows(size, ell, t):
    """All realizable cell rows for a type of ``size`` vertices, lexicographic (UP last)."""
    cells = 1 << ell
    out = []
    row = [0] * cells

    def rec(k, remaining, ups):
        if k == cells:
            if (ups and remaining >= 0) or (not ups and remaining == 0):
                out.append(tuple(row))
            return
        for value in range(0, min(t, remaining) + 1):
            row[k] = value
            rec(k + 1, remaining - value, ups)
        if remaining >= t + 1:
            row[k] = UP
            rec(k + 1, remaining - (t + 1), ups + 1)
        row[k] = 0

    rec(0, size, 0)
    return out


def enumerate_shapes_for(sizes, ell, t):
    per_type = [shape_rows(size, ell, t) for size in sizes]
    for combo in itertools.product(*per_type):
        yield Shape(tuple(combo), t)


def _scaled(form):
    scale = 1
    for c in list(form.coeffs) + [form.bound]:
        scale = scale * c.denominator // math.gcd(scale, c.denominator)
    coeffs = [int(c * scale) for c in form.coeffs]
    return coeffs, int(form.bound * scale)


def global_rows(globals_, beta, choice=None):
    """Rows ``(coeffs, sense, rhs, tag)`` over the size variables pinned by ``beta``.

    A false equality becomes one of two strict sides; ``choice`` maps its id
    to 0 (below) or 1 (above).
    """
    rows = []
    for gc in globals_:
        coeffs, b = _scaled(gc.form)
        sense = gc.form.sense
        if beta[gc.gid]:
            rows.append((coeffs, sense, b, gc.gid))
        elif sense == "<=":
            rows.append((coeffs, ">=", b + 1, gc.gid))
        elif sense == ">=":
            rows.append((coeffs, "<=", b - 1, gc.gid))
        else:
            side = (choice or {}).get(gc.gid, 0)
            rows.append((coeffs, "<=", b - 1, gc.gid) if side == 0 else (coeffs, ">=", b + 1, gc.gid))
    return rows


def equality_splits(globals_, beta):
    return [gc.gid for gc in globals_ if not beta[gc.gid] and gc.form.sense == "="]


def _interval_rows(interval):
    """``(lo, hi)`` bounds for an admissible interval, or None if it is empty."""
    if not interval:
        return None
    return interval.min(), interval.max()


def build_ilp(sh, beta, tg, table, globals_, choice=None, weights=None):
    """Integer program whose solutions are the cell tables of assignments with shape ``sh``.

    ``table[j][i]`` is the uniform admissible interval of type ``j`` for
    variable ``i``; ``weights[j][i]`` (optional) the per-vertex cost.
    """
    ell = len(table[0]) if table else 0
    ilp = IlpInstance()
    nu = tg.nu
    x = [[ilp.add_var(f"x[{j},{p}]", 0, tg.sizes[j]) for p in range(1 << ell)] for j in range(nu)]
    y = [[ilp.add_var(f"y[{j},{i}]", 0, tg.sizes[j]) for i in range(ell)] for j in range(nu)]
    n = sum(tg.sizes)
    z = [ilp.add_var(f"z[{i}]", 0, n) for i in range(ell)]
    for j in range(nu):
        ilp.add_row({x[j][p]: 1 for p in range(1 << ell)}, "=", tg.sizes[j], "(0)")
        for i in range(ell):
            coeffs = {x[j][p]: 1 for p in range(1 << ell) if p >> i & 1}
            coeffs[y[j][i]] = -1
            ilp.add_row(coeffs, "=", 0, "(a1)")
    for i in range(ell):
        coeffs = {y[j][i]: 1 for j in range(nu)}
        coeffs[z[i]] = -1
        ilp.add_row(coeffs, "=", 0, "(a2)")
    for j, row in enumerate(sh.cells):
        for p, value in enumerate(row):
            if value == UP:
                ilp.add_row({x[j][p]: 1}, ">=", sh.t + 1, "(sh2)")
            else:
                ilp.add_row({x[j][p]: 1}, "=", value, "(sh1)")
    for j in range(nu):
        for i in range(ell):
            bounds = _interval_rows(table[j][i])
            neigh = {y[k][i]: 1 for k in tg.neighbors(j)}
            if bounds is None:
                ilp.add_row({}, ">=", 1, "(lli)" if tg.kinds[j] is TypeKind.INDEPENDENT else "(llc)")
                continue
            lo, hi = bounds
            if tg.kinds[j] is TypeKind.INDEPENDENT:
                ilp.add_row(neigh, ">=", lo, "(lli)")
                ilp.add_row(neigh, "<=", hi, "(lli)")
                continue
            row = sh.cells[j]
            selected = any(row[p] != 0 for p in range(1 << ell) if p >> i & 1)
            unselected = any(row[p] != 0 for p in range(1 << ell) if not p >> i & 1)
            if selected:
                # a selected vertex of a clique type does not count itself
                ilp.add_row(neigh, ">=", lo + 1, "(llc1)")
                ilp.add_row(neigh, "<=", hi + 1, "(llc1)")
            if unselected:
                ilp.add_row(neigh, ">=", lo, "(llc2)")
                ilp.add_row(neigh, "<=", hi, "(llc2)")
    for coeffs, sense, rhs, tag in global_rows(globals_, beta, choice):
        ilp.add_row({z[i]: c for i, c in enumerate(coeffs)}, sense, rhs, f"global:{tag}")
    if weights is not None:
        ilp.objective = {y[j][i]: Fraction(weights[j][i]) for j in range(nu) for i in range(ell)
                         if weights[j][i]}
    ilp.x_index = x
    return ilp


def fixed_shape_feasible(sh, tg, table, globals_, beta, choice=None):
    """Feasibility of the program for a shape without UP cells, by direct arithmetic."""
    ell = len(table[0]) if table else 0
    nu = tg.nu
    y = [[sum(row[p] for p in range(1 << ell) if p >> i & 1) for i in range(ell)] for row in sh.cells]
    for j in range(nu):
        row = sh.cells[j]
        for i in range(ell):
            interval = table[j][i]
            s = sum(y[k][i] for k in tg.neighbors(j))
            if tg.kinds[j] is TypeKind.INDEPENDENT:
                if s not in interval:
                    return False
                continue
            if y[j][i] and s - 1 not in interval:
                return False
            if tg.sizes[j] - y[j][i] and s not in interval:
                return False
    z = [sum(y[j][i] for j in range(nu)) for i in range(ell)]
    for coeffs, sense, rhs, _ in global_rows(globals_, beta, choice):
        lhs = sum(c * v for c, v in zip(coeffs, z))
        if (sense == "<=" and lhs > rhs) or (sense == ">=" and lhs < rhs) or (sense == "=" and lhs != rhs):
            return False
    return True


def shape_weight_bound(sh, sizes, weights, ell):
    """Least weight of any cell table with shape ``sh``, ignoring all constraints."""
    total = Fraction(0)
    for row, size, w in zip(sh.cells, sizes, weights):
        cost = [sum((w[i] for i in range(ell) if p >> i & 1), Fraction(0)) for p in range(1 << ell)]
        ups = [p for p, c in enumerate(row) if c == UP]
        fixed = sum(c for c in row if c != UP)
        total += sum(cost[p] * c for p, c in enumerate(row) if c != UP)
        if ups:
            spare = size - fixed - len(ups) * (sh.t + 1)
            total += sum(cost[p] for p in ups) * (sh.t + 1) + min(cost[p] for p in ups) * spare
    return total


def _materialize(cells, nd, ell):
    return assignment_from_cells(cells, nd, ell)


# ---------------------------------------------------------------------------
# FPT solver
# ---------------------------------------------------------------------------


@dataclass
class FptReport:
    types: int = 0
    shapes: int = 0
    ilps: int = 0
    admissibility_checks: int = 0
    accepted: Optional[str] = None


def solve_fpt_lin(inst, node_cap=200_000, max_shapes=None):
    """Solve an instance with linear global and interval local constraints."""
    if not fits_fragment(inst, "GL_lin"):
        raise FragmentMismatch("the FPT solver needs linear globals and unconditional interval locals")
    g, ell = inst.graph, inst.ell
    free = inst.formula.free_set_vars
    report = FptReport()
    nd = solver_decomposition(inst)
    try:
        nd, table = refine_uniform(g, nd, [
            (lambda v, i=i: inst.locals.alpha(i, v)) for i in range(ell)])
    except Infeasible as exc:
        return Result(UNSAT, stats={"reason": str(exc)})
    report.types = nd.nu
    tg = type_graph(g, nd, respect_labels=True)
    weights = None
    if inst.weighted:
        weights = [[inst.weights[i].get(members[0], 0) for i in range(ell)] for members in nd.types]
    root = inst.effective_root()
    t = quantifier_counts(root)[2]
    gids = [gc.gid for gc in inst.globals]
    admissible_cache: Dict[tuple, bool] = {}
    best = None  # (weight, masks, description)

    for beta, residue in pre_evaluations(root, gids):
        if residue == FALSE:
            continue
        splits = equality_splits(inst.globals, beta)
        for sh in enumerate_shapes_for(nd.sizes(), ell, t):
            report.shapes += 1
            if max_shapes is not None and report.shapes > max_shapes:
                raise ResourceLimit(f"more than {max_shapes} shapes")
            if best is not None and shape_weight_bound(sh, nd.sizes(), weights, ell) >= best[0]:
                continue
            has_up = any(UP in row for row in sh.cells)
            for sides in itertools.product((0, 1), repeat=len(splits)):
                choice = dict(zip(splits, sides))
                if not has_up:
                    if not fixed_shape_feasible(sh, tg, table, inst.globals, beta.as_dict(), choice):
                        continue
                    cells = sh.cells
                else:
                    ilp = build_ilp(sh, beta.as_dict(), tg, table, inst.globals, choice, weights)
                    report.ilps += 1
                    point = solve_ilp(ilp, minimize=weights is not None, node_cap=node_cap)
                    if point is None:
                        continue
                    cells = tuple(tuple(point[v] for v in row) for row in ilp.x_index)
                key = (residue, sh)
                if key not in admissible_cache:
                    report.admissibility_checks += 1
                    admissible_cache[key] = shape_admissible(sh, g, nd, residue, free)
                if not admissible_cache[key]:
                    break
                masks = _materialize(cells, nd, ell)
                if not check_assignment(inst, masks):
                    raise MsoextError("internal error: FPT witness failed verification")
                desc = f"beta={beta.as_dict()} shape={sh}"
                if weights is None:
                    report.accepted = desc
                    return Result(SAT, masks, Fraction(0), stats=report.__dict__)
                w = inst.weight_of(masks)
                if best is None or w < best[0]:
                    best = (w, masks, desc)
    if best is None:
        return Result(UNSAT, stats=report.__dict__)
    report.accepted = best[2]
    return Result(SAT, best[1], best[0], stats=report.__dict__)


# ---------------------------------------------------------------------------
# XP solver
# ---------------------------------------------------------------------------


def compositions(total, parts):
    """All tuples of ``parts`` non-negative integers summing to ``total``, lexicographic."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in compositions(total - first, parts - 1):
            yield (first,) + rest


def enumerate_sigma(g, nd, ell):
    """All exact cell tables: per type a composition of its size into ``2**ell`` cells."""
    per_type = [list(compositions(size, 1 << ell)) for size in nd.sizes()]
    for combo in itertools.product(*per_type):
        yield tuple(combo)


def sigma_sizes(sigma, ell):
    return tuple(sum(row[p] for row in sigma for p in range(1 << ell) if p >> i & 1) for i in range(ell))


def sigma_models(g, nd, sigma, root, globals_, free_vars, cache=None):
    """Truth of ``root`` (with global atoms) on any realization of ``sigma``."""
    ell = len(free_vars)
    sizes = sigma_sizes(sigma, ell)
    beta = {gc.gid: eval_global(gc, sizes) for gc in globals_}
    key = tuple(sorted(beta.items()))
    if cache is None:
        cache = {}
    if key not in cache:
        residue = simplify(substitute_cards(root, beta))
        cache[key] = (residue, quantifier_counts(residue)[2])
    residue, t = cache[key]
    if residue == FALSE:
        return False
    sh = cap_cells(sigma, t)
    return shape_admissible(sh, g, nd, residue, free_vars)


@dataclass
class Possibly:
    ok: bool
    counts: Dict[Tuple[int, int], Tuple[int, int, int]] = field(default_factory=dict)  # (j, i) -> t+, t-, t+-


def neighbourhood_sums(tg, sigma, ell):
    y = [[sum(row[p] for p in range(1 << ell) if p >> i & 1) for i in range(ell)] for row in sigma]
    return [[sum(y[k][i] for k in tg.neighbors(j)) for i in range(ell)] for j in range(tg.nu)], y


def possibly_satisfied(nd, tg, sigma, locals_, ell, types=None):
    """Necessary conditions for realizing ``sigma`` under the local constraints.

    Independent types need the common count in every admissible set; in clique
    types selected vertices see one less, so every vertex must admit ``s - 1``
    or ``s``, and the number of selected vertices must fit between the forced
    and the optional ones.
    """
    s, y = neighbourhood_sums(tg, sigma, ell)
    out = Possibly(True)
    for j in (range(tg.nu) if types is None else types):
        members = nd.types[j]
        for i in range(ell):
            entries = [locals_.entry(i, v) for v in members]
            if any(e.is_conditional for e in entries):
                continue
            sets = [e.when_in for e in entries]
            if tg.kinds[j] is TypeKind.INDEPENDENT:
                if any(s[j][i] not in a for a in sets):
                    out.ok = False
                    return out
                continue
            plus = minus = both = 0
            for a in sets:
                inside, outside = s[j][i] - 1 in a, s[j][i] in a
                if inside and outside:
                    both += 1
                elif inside:
                    plus += 1
                elif outside:
                    minus += 1
                else:
                    out.ok = False
                    return out
            out.counts[(j, i)] = (plus, minus, both)
            if not plus <= y[j][i] <= plus + both:
                out.ok = False
                return out
    return out


def _allowed(locals_, v, pattern, counts, ell):
    for i in range(ell):
        e = locals_.entry(i, v)
        member = bool(pattern >> e.cond & 1) if e.cond is not None else True
        if counts[i] not in e.admissible(member):
            return False
    return True


def realize_type(nd, tg, sigma, j, locals_, ell, s, weights=None):
    """Assign the vertices of type ``j`` to cells meeting every local constraint.

    Returns ``(cost, {vertex: pattern})`` of a cheapest assignment or None.
    """
    members = nd.types[j]
    slots = [p for p, c in enumerate(sigma[j]) for _ in range(c)]
    clique = tg.kinds[j] is TypeKind.CLIQUE
    big = 1
    cost = np.zeros((len(members), len(slots)))
    scale = 1
    if weights is not None:
        for i in range(ell):
            for v in members:
                scale = scale * weights[i].get(v, Fraction(0)).denominator // math.gcd(
                    scale, weights[i].get(v, Fraction(0)).denominator)
        big = 1 + sum(abs(int(weights[i].get(v, 0) * scale)) for i in range(ell) for v in members)
    allowed_cache = {}
    for a, v in enumerate(members):
        for b, p in enumerate(slots):
            key = (v, p)
            if key not in allowed_cache:
                counts = [s[j][i] - (1 if clique and p >> i & 1 else 0) for i in range(ell)]
                allowed_cache[key] = _allowed(locals_, v, p, counts, ell)
            if not allowed_cache[key]:
                cost[a, b] = big * (len(members) + 1)
            elif weights is not None:
                cost[a, b] = sum(int(weights[i].get(v, 0) * scale) for i in range(ell) if p >> i & 1)
    rows, cols = linear_sum_assignment(cost)
    placement = {}
    total = Fraction(0)
    for a, b in zip(rows, cols):
        v, p = members[a], slots[b]
        if not allowed_cache[(v, p)]:
            return None
        placement[v] = p
        if weights is not None:
            total += sum(weights[i].get(v, 0) for i in range(ell) if p >> i & 1)
    return total, placement


def _masks_from_placement(placement, ell):
    masks = [0] * ell
    for v, p in placement.items():
        for i in range(ell):
            if p >> i & 1:
                masks[i] |= 1 << v
    return tuple(masks)


@dataclass
class XpReport:
    sigmas: int = 0
    model_checks: int = 0
    accepted: Optional[str] = None
    windows: Dict[str, Tuple[int, int, int]] = field(default_factory=dict)


def solve_xp(inst, prune=True, max_sigma=None):
    """Solve any instance with a bounded number of types by enumerating cell tables."""
    g, ell = inst.graph, inst.ell
    free = inst.formula.free_set_vars
    nd = nd_decomposition(g, respect_labels=True)
    tg = type_graph(g, nd, respect_labels=True)
    root = inst.effective_root()
    weights = inst.weights if inst.weighted else None
    report = XpReport()
    residues: Dict[tuple, tuple] = {}
    best = None

    def accept(sigma):
        """Full check of a complete table; returns (weight, masks) or None."""
        s, _ = neighbourhood_sums(tg, sigma, ell)
        poss = possibly_satisfied(nd, tg, sigma, inst.locals, ell)
        if not poss.ok:
            return None
        placement = {}
        total = Fraction(0)
        for j in range(tg.nu):
            got = realize_type(nd, tg, sigma, j, inst.locals, ell, s, weights)
            if got is None:
                return None
            total += got[0]
            placement.update(got[1])
        report.model_checks += 1
        if not sigma_models(g, nd, sigma, root, inst.globals, free, residues):
            return None
        masks = _masks_from_placement(placement, ell)
        if not check_assignment(inst, masks):
            raise MsoextError("internal error: XP witness failed verification")
        report.windows = {f"{j},{i}": c for (j, i), c in poss.counts.items()}
        return total, masks, sigma

    if not prune:
        candidates = enumerate_sigma(g, nd, ell)
    else:
        candidates = _pruned_sigmas(nd, tg, inst.locals, ell)
    for sigma in candidates:
        report.sigmas += 1
        if max_sigma is not None and report.sigmas > max_sigma:
            raise ResourceLimit(f"more than {max_sigma} cell tables")
        got = accept(sigma)
        if got is None:
            continue
        if weights is None:
            report.accepted = f"sigma={got[2]}"
            return Result(SAT, got[1], Fraction(0), stats=report.__dict__)
        if best is None or got[0] < best[0]:
            best = got
    if best is None:
        return Result(UNSAT, stats=report.__dict__)
    report.accepted = f"sigma={best[2]}"
    return Result(SAT, best[1], inst.weight_of(best[1]), stats=report.__dict__)


def _pruned_sigmas(nd, tg, locals_, ell):
    """Cell tables in the same order as ``enumerate_sigma``, skipping branches whose
    fully determined types already violate the local constraints."""
    nu = tg.nu
    per_type = [list(compositions(size, 1 << ell)) for size in nd.sizes()]
    # type j can be checked once every neighbour index is assigned
    ready_at: Dict[int, List[int]] = {}
    for j in range(nu):
        last = max([j] + list(tg.neighbors(j)))
        ready_at.setdefault(last, []).append(j)
    chosen: List[tuple] = []
    trivial = locals_.empty

    def partial_ok(k):
        if trivial:
            return True
        sigma = tuple(chosen) + tuple((size,) + (0,) * ((1 << ell) - 1) for size in nd.sizes()[k + 1:])
        s, _ = neighbourhood_sums(tg, sigma, ell)
        poss = possibly_satisfied(nd, tg, sigma, locals_, ell, types=ready_at.get(k, []))
        if not poss.ok:
            return False
        for j in ready_at.get(k, []):
            if realize_type(nd, tg, sigma, j, locals_, ell, s) is None:
                return False
        return True

    def rec(k):
        if k == nu:
            yield tuple(chosen)
            return
        for row in per_type[k]:
            chosen.append(row)
            if partial_ok(k):
                yield from rec(k + 1)
            chosen.pop()

    yield from rec(0)
