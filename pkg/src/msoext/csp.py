"""Constraint satisfaction with hard and weighted soft constraints.

The solver is the classic dynamic program over a tree decomposition of the
constraint graph: every node keeps, for each consistent assignment of its bag,
the cheapest weight of the subtree below.  Tables are sparse and built by
backtracking, so functional constraints (``z = f(inputs)``) and the children's
projected tables cut the enumeration down to consistent tuples only.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, FrozenSet, List, Optional, Sequence, Tuple

from .errors import Infeasible, InputError, InvalidDecomposition, LocalityViolation, ResourceLimit, UnboundedVariable
from .graph import Graph, TreeDecomposition, heuristic_tree_decomposition, validate_tree_decomposition

EXTENSION_CAP = 1 << 14


@dataclass
class HardConstraint:
    """A relation over ``scope``.

    Exactly one of ``relation`` (explicit tuples), ``predicate`` (callable on
    the value tuple) or ``function`` is used.  A functional constraint fixes
    ``target`` (a variable of the scope) to ``function(*inputs)``; the function
    may return None to reject.
    """

    scope: Tuple[int, ...]
    relation: Optional[FrozenSet[tuple]] = None
    predicate: Optional[Callable] = None
    function: Optional[Callable] = None
    target: Optional[int] = None
    name: str = ""

    def __post_init__(self):
        self.scope = tuple(self.scope)
        if self.function is not None:
            if self.target not in self.scope:
                raise InputError("functional constraint target must be in its scope")
            self.inputs = tuple(v for v in self.scope if v != self.target)
            self._in_pos = tuple(self.scope.index(v) for v in self.inputs)
            self._target_pos = self.scope.index(self.target)

    def holds(self, values):
        """``allows`` reading the scope from a variable -> value mapping."""
        get = values.__getitem__
        if self.function is not None:
            return self.function(*map(get, self.inputs)) == values[self.target]
        if self.relation is not None:
            return tuple(map(get, self.scope)) in self.relation
        return bool(self.predicate(tuple(map(get, self.scope))))

    def allows(self, values):
        if self.relation is not None:
            return tuple(values) in self.relation
        if self.predicate is not None:
            return bool(self.predicate(tuple(values)))
        return self.function(*[values[k] for k in self._in_pos]) == values[self._target_pos]


@dataclass
class SoftConstraint:
    scope: Tuple[int, ...]
    weights: Dict[tuple, Fraction]  # only non-zero tuples
    name: str = ""

    def __post_init__(self):
        self.scope = tuple(self.scope)

    def weight(self, values):
        return self.weights.get(tuple(values), Fraction(0))


@dataclass
class CspInstance:
    names: List[str] = field(default_factory=list)
    domains: List[Tuple[int, ...]] = field(default_factory=list)
    hard: List[HardConstraint] = field(default_factory=list)
    soft: List[SoftConstraint] = field(default_factory=list)

    def add_var(self, name, domain):
        domain = tuple(domain)
        if not domain:
            raise InputError(f"variable {name} has an empty domain")
        self.names.append(name)
        self.domains.append(domain)
        return len(self.names) - 1

    @property
    def num_vars(self):
        return len(self.names)

    def _check_scope(self, scope):
        for v in scope:
            if not 0 <= v < self.num_vars:
                raise InputError(f"scope references undeclared variable {v}")

    def add_hard(self, constraint):
        self._check_scope(constraint.scope)
        self.hard.append(constraint)
        return constraint

    def add_soft(self, constraint):
        self._check_scope(constraint.scope)
        weights = {tuple(k): Fraction(w) for k, w in constraint.weights.items() if w}
        if weights:
            self.soft.append(SoftConstraint(constraint.scope, weights, constraint.name))

    def feasible(self, x):
        return all(c.allows([x[v] for v in c.scope]) for c in self.hard)

    def weight(self, x):
        return sum((c.weight([x[v] for v in c.scope]) for c in self.soft), Fraction(0))

    def sizes(self):
        """(||D||, ||H||, ||S||) with intensional constraints counted by their scope."""
        d = sum(len(dom) for dom in self.domains)
        h = sum(len(c.scope) * (len(c.relation) if c.relation is not None else 1) for c in self.hard)
        s = sum(len(c.scope) * len(c.weights) for c in self.soft)
        return d, h, s


@dataclass
class CspSolution:
    assignment: List[int]
    weight: Fraction


def constraint_graph(csp):
    edges = set()
    for c in list(csp.hard) + list(csp.soft):
        for u, v in itertools.combinations(sorted(set(c.scope)), 2):
            edges.add((u, v))
    return Graph(csp.num_vars, sorted(edges))


# ---------------------------------------------------------------------------
# Dynamic program
# ---------------------------------------------------------------------------


def _node_plan(bag, child_shared, hard):
    """Order in which the bag variables get values.

    Returns a list of steps ``(kind, payload)``; ``kind`` is "child" (take
    values from a child's projected table), "compute" (functional target),
    "lookup" (tuples of a table constraint matching what is already set) or
    "domain".  Every step also lists the hard constraints that become fully
    assigned by it.
    """
    assigned = set()
    steps = []
    for c, shared in child_shared:
        bound = tuple(k for k, v in enumerate(shared) if v in assigned)
        steps.append(["child", (c, bound), [v for v in shared if v not in assigned], []])
        assigned.update(shared)
    funcs = [h for h in hard if h.function is not None]
    tables = [h for h in hard if h.relation is not None]
    pending = [v for v in bag if v not in assigned]
    while pending:
        picked = None
        for h in funcs:
            if h.target in pending and all(v in assigned for v in h.inputs):
                picked = ("compute", h)
                break
        if picked is None:
            # a table constraint with the fewest unset variables fixes them all at once
            best = None
            for h in tables:
                fresh = [v for v in dict.fromkeys(h.scope) if v not in assigned]
                if fresh and (best is None or len(fresh) < len(best[1])):
                    best = (h, fresh)
            if best is not None:
                h, fresh = best
                bound = tuple(k for k, v in enumerate(h.scope) if v in assigned)
                steps.append(["lookup", (h, bound), fresh, []])
                assigned.update(fresh)
                for v in fresh:
                    pending.remove(v)
                continue
        if picked is None:
            # branch on a variable no functional constraint here can compute
            targets = {h.target for h in funcs}
            free = [v for v in pending if v not in targets]
            picked = ("domain", free[0] if free else pending[0])
        if picked[0] == "compute":
            v = picked[1].target
            steps.append(["compute", picked[1], v, []])
        else:
            v = picked[1]
            steps.append(["domain", v, v, []])
        assigned.add(v)
        pending.remove(v)
    # attach checks at the first step after which the whole scope is assigned
    done = set()
    order = []
    for step in steps:
        if step[0] in ("child", "lookup"):
            done.update(step[2])
        else:
            done.add(step[2])
        order.append(set(done))
    for h in hard:
        for k, seen in enumerate(order):
            if all(v in seen for v in h.scope):
                kind, payload = steps[k][0], steps[k][1]
                owner = payload if kind == "compute" else payload[0] if kind == "lookup" else None
                if owner is not h:
                    steps[k][3].append(h)
                break
    return steps


def freuder_solve(csp, td, pins=None, feasibility_only=False, root=0, table_cap=None):
    """Minimum-weight feasible assignment; raises Infeasible if there is none.

    ``pins`` optionally restricts some variables to a single value.  The
    result does not depend on ``root``, but the running time can: counters
    are computed bottom-up only when the tree is rooted the way it was built.
    ``table_cap`` bounds the entries of any single node table.
    """
    g = constraint_graph(csp)
    ok, report = validate_tree_decomposition(g, td)
    if not ok:
        raise InvalidDecomposition(f"decomposition invalid for the constraint graph: {report}")
    domains = list(csp.domains)
    if pins:
        for v, value in pins.items():
            if value not in domains[v]:
                raise Infeasible(f"pinned value {value} outside the domain of {csp.names[v]}")
            domains[v] = (value,)
    for h in csp.hard:
        if not h.scope and not h.allows(()):
            raise Infeasible(f"constraint {h.name} is unsatisfiable")
    soft_const = sum((s.weight(()) for s in csp.soft if not s.scope), Fraction(0))
    if not td.bags:
        return CspSolution([], soft_const)
    parent, children, preorder = td.rooted(root)
    post = list(reversed(preorder))
    bags = [tuple(sorted(b)) for b in td.bags]
    bag_sets = [set(b) for b in bags]

    # hard constraints go to every node whose bag holds their scope;
    # soft ones to the first such node in post-order only
    # a child already enforced every constraint that fits its own bag
    node_hard: List[List[HardConstraint]] = [[] for _ in bags]
    for h in csp.hard:
        if not h.scope:
            continue
        scope = set(h.scope)
        for a in range(len(bags)):
            if scope <= bag_sets[a] and not any(scope <= bag_sets[c] for c in children[a]):
                node_hard[a].append(h)
    node_soft: List[List[SoftConstraint]] = [[] for _ in bags]
    for s in csp.soft:
        if not s.scope:
            continue
        scope = set(s.scope)
        home = next((a for a in post if scope <= bag_sets[a]), None)
        if home is None:
            raise InvalidDecomposition(f"soft scope {s.scope} fits no bag")
        node_soft[home].append(s)

    tables: Dict[int, Dict[tuple, Tuple[Fraction, tuple]]] = {}
    projections: Dict[int, Dict[tuple, Tuple[Fraction, tuple]]] = {}

    for a in post:
        bag = bags[a]
        pos = {v: k for k, v in enumerate(bag)}
        child_shared = []
        for c in children[a]:
            shared = tuple(v for v in bags[c] if v in bag_sets[a])
            child_shared.append((c, shared))
        steps = _node_plan(bag, child_shared, node_hard[a])
        shared_of = dict(child_shared)
        # child tables keyed by the shared variables fixed before the child's step
        indexes = {}
        for step in steps:
            if step[0] == "child":
                c, bound = step[1]
                index: Dict[tuple, List[tuple]] = {}
                for key in projections[c]:
                    index.setdefault(tuple(key[k] for k in bound), []).append(key)
                indexes[c] = index
            elif step[0] == "lookup":
                h, bound = step[1]
                index = {}
                for row in h.relation:
                    index.setdefault(tuple(row[k] for k in bound), []).append(row)
                indexes[id(h)] = index
        table: Dict[tuple, Tuple[Fraction, tuple]] = {}
        values: Dict[int, int] = {}
        chosen: Dict[int, tuple] = {}

        def finish():
            key = tuple(values[v] for v in bag)
            w = 0
            for s in node_soft[a]:
                w += s.weight([values[v] for v in s.scope])
            for c, _ in child_shared:
                cw = projections[c][chosen[c]][0]
                if cw:
                    w += cw
            old = table.get(key)
            if old is None and table_cap is not None and len(table) >= table_cap:
                raise ResourceLimit(f"a node table exceeds {table_cap} entries")
            if old is None or w < old[0]:
                table[key] = (w, tuple(chosen[c] for c, _ in child_shared))

        def checks_ok(hs):
            for h in hs:
                if not h.holds(values):
                    return False
            return True

        def rec(k):
            if k == len(steps):
                finish()
                return
            kind, payload, target, hs = steps[k]
            if kind == "child":
                c, bound = payload
                shared = shared_of[c]
                fresh = target
                probe = tuple(values[shared[k]] for k in bound)
                for key in indexes[c].get(probe, ()):
                    for v, val in zip(shared, key):
                        if v in fresh:
                            values[v] = val
                    if all(values[v] in domains[v] for v in fresh) and checks_ok(hs):
                        chosen[c] = key
                        rec(k + 1)
                    for v in fresh:
                        values.pop(v, None)
                return
            if kind == "lookup":
                h, bound = payload
                probe = tuple(values[h.scope[k]] for k in bound)
                for row in indexes[id(h)].get(probe, ()):
                    fine = True
                    for v, val in zip(h.scope, row):
                        if values.get(v, val) != val or val not in domains[v]:
                            fine = False
                            break
                        values[v] = val
                    if fine and checks_ok(hs):
                        rec(k + 1)
                    for v in target:
                        values.pop(v, None)
                return
            if kind == "compute":
                h = payload
                val = h.function(*(values[v] for v in h.inputs))
                if val is None or val not in domains[target]:
                    return
                values[target] = val
                if checks_ok(hs):
                    rec(k + 1)
                del values[target]
                return
            for val in domains[target]:
                values[target] = val
                if checks_ok(hs):
                    rec(k + 1)
            del values[target]

        rec(0)
        tables[a] = table
        if parent[a] is not None and parent[a] >= 0:
            up = parent[a]
            shared = tuple(v for v in bag if v in bag_sets[up])
            idx = [pos[v] for v in shared]
            proj: Dict[tuple, Tuple[Fraction, tuple]] = {}
            for key, (w, _) in table.items():
                sub = tuple(key[k] for k in idx)
                if sub not in proj or w < proj[sub][0]:
                    proj[sub] = (w, key)
            projections[a] = proj

    root = preorder[0]
    if not tables[root]:
        raise Infeasible("no feasible assignment")
    best_key = min(tables[root], key=lambda k: (tables[root][k][0], k))
    best_w = tables[root][best_key][0] + soft_const
    if feasibility_only:
        return CspSolution([], best_w)

    # walk down recovering the chosen tuples
    assignment: List[Optional[int]] = [None] * csp.num_vars
    stack = [(root, best_key)]
    while stack:
        a, key = stack.pop()
        for v, val in zip(bags[a], key):
            assignment[v] = val
        _, child_keys = tables[a][key]
        for c, ck in zip(children[a], child_keys):
            stack.append((c, projections[c][ck][1]))
    for v in range(csp.num_vars):
        if assignment[v] is None:
            assignment[v] = domains[v][0]
    return CspSolution(assignment, best_w)


def solve_exhaustive(csp, cap=1 << 20):
    """Reference optimum by enumerating every assignment."""
    total = 1
    for d in csp.domains:
        total *= len(d)
    if total > cap:
        raise ResourceLimit(f"{total} assignments exceed the cap")
    best = None
    for x in itertools.product(*csp.domains):
        if csp.feasible(x):
            w = csp.weight(x)
            if best is None or w < best.weight:
                best = CspSolution(list(x), w)
    if best is None:
        raise Infeasible("no feasible assignment")
    return best


def decompose(csp, exact=False):
    return heuristic_tree_decomposition(constraint_graph(csp), exact=exact)


# ---------------------------------------------------------------------------
# ILP translation and extensions
# ---------------------------------------------------------------------------


def ilp_to_csp(ilp):
    """One hard constraint per row over its support, listing all satisfying tuples."""
    csp = CspInstance()
    for name, lo, hi in zip(ilp.names, ilp.lower, ilp.upper):
        if lo is None or hi is None:
            raise UnboundedVariable(f"variable {name} is unbounded")
        csp.add_var(name, range(lo, hi + 1))
    for r in ilp.rows:
        scope = tuple(sorted(r.coeffs))
        rel = set()
        for values in itertools.product(*(csp.domains[v] for v in scope)):
            lhs = sum(r.coeffs[v] * x for v, x in zip(scope, values))
            if (r.sense == "<=" and lhs <= r.rhs) or (r.sense == ">=" and lhs >= r.rhs) or (
                    r.sense == "=" and lhs == r.rhs):
                rel.add(values)
        csp.add_hard(HardConstraint(scope, relation=frozenset(rel), name=r.tag))
    for v, c in ilp.objective.items():
        csp.add_soft(SoftConstraint((v,), {(x,): c * x for x in csp.domains[v]}))
    return csp


def feasible_projection_contains(csp, td, pins):
    try:
        freuder_solve(csp, td, pins=pins, feasibility_only=True)
        return True
    except Infeasible:
        return False


def check_extension(small, big, shared, td_big=None, cap=EXTENSION_CAP):
    """Whether the feasible set of ``small`` is exactly the projection of ``big``'s.

    ``shared`` maps each variable of ``small`` to a variable of ``big``.
    """
    if len(shared) != small.num_vars:
        raise InputError("every variable of the smaller instance needs a counterpart")
    total = 1
    for d in small.domains:
        total *= len(d)
    if total > cap:
        raise ResourceLimit(f"{total} assignments exceed the extension-check cap")
    if td_big is None:
        td_big = decompose(big)
    for x in itertools.product(*small.domains):
        pins = {shared[v]: x[v] for v in range(small.num_vars)}
        inside = small.feasible(x)
        projected = feasible_projection_contains(big, td_big, pins)
        if inside != projected:
            return False
    return True


def augment_decomposition(td, extras, edges, root=0):
    """Add the variable groups ``extras[a]`` to a tree decomposition.

    Every new edge must lie within ``B(a) ∪ W_a ∪ W_c1 ∪ ... `` for some node
    ``a`` with children ``c1, ...`` (after rooting at ``root``).  A node with at
    most one child absorbs its child's group; between a node with several
    children and those children a chain is inserted that introduces ``W_a``
    one variable at a time while dropping children's variables that are no
    longer needed.
    """
    parent, children, preorder = td.rooted(root)
    count = len(td.bags)
    groups = [frozenset(extras.get(a, ())) for a in range(count)]
    seen = set()
    for a, w in enumerate(groups):
        if seen & w:
            raise InputError("extra variable groups must be disjoint")
        seen |= w
    local = []
    for a in range(count):
        below = frozenset().union(*(groups[c] for c in children[a])) if children[a] else frozenset()
        local.append(td.bags[a] | groups[a] | below)
    for u, v in edges:
        if not any(u in s and v in s for s in local):
            raise LocalityViolation(f"edge ({u}, {v}) fits no node together with its children's extras")

    adj = {}
    for u, v in edges:
        adj.setdefault(u, set()).add(v)
        adj.setdefault(v, set()).add(u)

    bags: List[FrozenSet[int]] = []
    tree_edges: List[Tuple[int, int]] = []
    new_id = {}
    for a in range(count):
        if len(children[a]) <= 1:
            below = groups[children[a][0]] if children[a] else frozenset()
            bag = td.bags[a] | groups[a] | below
        else:
            bag = td.bags[a] | groups[a]
        new_id[a] = len(bags)
        bags.append(bag)
    for a in range(count):
        kids = children[a]
        if len(kids) <= 1:
            for c in kids:
                tree_edges.append((new_id[a], new_id[c]))
            continue
        below = frozenset().union(*(groups[c] for c in kids))
        base = td.bags[a]
        bottom = len(bags)
        bags.append(base | below)
        for c in kids:
            tree_edges.append((bottom, new_id[c]))
        prev = bottom
        order = sorted(groups[a])
        for i in range(len(order)):
            later = set(order[i:])
            keep = frozenset(x for x in below if adj.get(x, set()) & later)
            node = len(bags)
            bags.append(base | frozenset(order[: i + 1]) | keep)
            tree_edges.append((prev, node))
            prev = node
        tree_edges.append((prev, new_id[a]))
    return TreeDecomposition(tuple(bags), tuple(tree_edges))


# ---------------------------------------------------------------------------
# Audit dump
# ---------------------------------------------------------------------------


def dump_csp(csp):
    out = ["[vars]"]
    for k, name in enumerate(csp.names):
        out.append(f"{k} {name}")
    out.append("[domains]")
    for k, dom in enumerate(csp.domains):
        if dom == tuple(range(dom[0], dom[-1] + 1)):
            out.append(f"{k} {dom[0]}..{dom[-1]}")
        else:
            out.append(f"{k} " + " ".join(str(x) for x in dom))
    out.append("[hard]")
    for h in csp.hard:
        scope = " ".join(str(v) for v in h.scope)
        if h.relation is not None:
            tuples = " ".join("(" + ",".join(str(x) for x in t) + ")" for t in sorted(h.relation))
            out.append(f"{scope} : {tuples}")
        else:
            out.append(f"{scope} : {h.name or ('function' if h.function else 'predicate')}")
    out.append("[soft]")
    for s in csp.soft:
        scope = " ".join(str(v) for v in s.scope)
        body = " ".join("(" + ",".join(str(x) for x in t) + ")=" + str(w) for t, w in sorted(s.weights.items()))
        out.append(f"{scope} : {body}")
    return "\n".join(out) + "\n"
