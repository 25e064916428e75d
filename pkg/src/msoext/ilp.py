"""Bounded integer programs solved exactly.

Rational two-phase simplex (Bland's rule) for the relaxation, depth-first
branch and bound on top, and a presolve that propagates bounds through rows
until no more variables get fixed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import InputError, ResourceLimit, UnboundedVariable

NODE_CAP = 200_000


@dataclass
class Row:
    coeffs: Dict[int, Fraction]
    sense: str  # "<=", "=", ">="
    rhs: Fraction
    tag: str = ""

    def activity(self, x):
        return sum(c * x[v] for v, c in self.coeffs.items())

    def holds(self, x):
        lhs = self.activity(x)
        if self.sense == "<=":
            return lhs <= self.rhs
        if self.sense == ">=":
            return lhs >= self.rhs
        return lhs == self.rhs


@dataclass
class IlpInstance:
    names: List[str] = field(default_factory=list)
    lower: List[int] = field(default_factory=list)
    upper: List[int] = field(default_factory=list)
    rows: List[Row] = field(default_factory=list)
    objective: Dict[int, Fraction] = field(default_factory=dict)  # minimised

    def add_var(self, name, lo, hi):
        if lo is None or hi is None:
            raise UnboundedVariable(f"variable {name} needs finite bounds")
        self.names.append(name)
        self.lower.append(int(lo))
        self.upper.append(int(hi))
        return len(self.names) - 1

    def add_row(self, coeffs, sense, rhs, tag=""):
        if sense not in ("<=", "=", ">="):
            raise InputError(f"bad row sense {sense!r}")
        clean = {}
        for v, c in dict(coeffs).items():
            if not 0 <= v < len(self.names):
                raise InputError(f"row references undeclared variable {v}")
            c = Fraction(c)
            if c:
                clean[v] = clean.get(v, 0) + c
        self.rows.append(Row(clean, sense, Fraction(rhs), tag))

    @property
    def num_vars(self):
        return len(self.names)

    def index(self, name):
        return self.names.index(name)

    def feasible(self, x):
        return all(self.lower[v] <= x[v] <= self.upper[v] for v in range(self.num_vars)) and all(
            r.holds(x) for r in self.rows)

    def value(self, x):
        return sum((c * x[v] for v, c in self.objective.items()), Fraction(0))


# ---------------------------------------------------------------------------
# Presolve
# ---------------------------------------------------------------------------


def _integer_rows(rows):
    """Rows scaled to integer coefficients: ``(items, sense, rhs)``."""
    out = []
    for r in rows:
        scale = 1
        for c in list(r.coeffs.values()) + [r.rhs]:
            scale = scale * c.denominator // math.gcd(scale, c.denominator)
        items = [(v, int(c * scale)) for v, c in r.coeffs.items()]
        out.append((items, r.sense, int(r.rhs * scale)))
    return out


def _propagate(rows, lo, hi):
    """Tighten integer bounds in place; return False on proven infeasibility.

    ``rows`` come from :func:`_integer_rows`.
    """
    changed = True
    rounds = 0
    while changed:
        changed = False
        rounds += 1
        if rounds > 100:
            break
        for items, sense, rhs in rows:
            min_act = max_act = 0
            for v, c in items:
                if c > 0:
                    min_act += c * lo[v]
                    max_act += c * hi[v]
                else:
                    min_act += c * hi[v]
                    max_act += c * lo[v]
            upper = sense != ">="
            lower = sense != "<="
            if upper and min_act > rhs:
                return False
            if lower and max_act < rhs:
                return False
            for v, c in items:
                if lo[v] == hi[v]:
                    continue
                if upper:
                    # c*x <= rhs - (min_act - own_min)
                    slack = rhs - min_act + (c * lo[v] if c > 0 else c * hi[v])
                    if c > 0:
                        new_hi = slack // c
                        if new_hi < hi[v]:
                            hi[v] = new_hi
                            changed = True
                    else:
                        new_lo = -(slack // -c)
                        if new_lo > lo[v]:
                            lo[v] = new_lo
                            changed = True
                if lower:
                    slack = rhs - max_act + (c * hi[v] if c > 0 else c * lo[v])
                    if c > 0:
                        new_lo = -(-slack // c)
                        if new_lo > lo[v]:
                            lo[v] = new_lo
                            changed = True
                    else:
                        new_hi = -slack // -c
                        if new_hi < hi[v]:
                            hi[v] = new_hi
                            changed = True
                if lo[v] > hi[v]:
                    return False
    return True


# ---------------------------------------------------------------------------
# Simplex
# ---------------------------------------------------------------------------


def _simplex(tab, basis, cost_row, ncols):
    """Minimise the row ``cost_row`` of ``tab`` in place; False if unbounded."""
    m = len(tab)
    while True:
        cost = tab[cost_row]
        enter = None
        for j in range(ncols):
            if cost[j] < 0:
                enter = j
                break
        if enter is None:
            return True
        leave = None
        best = None
        for i in range(m):
            if i == cost_row:
                continue
            a = tab[i][enter]
            if a > 0:
                ratio = tab[i][-1] / a
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    best, leave = ratio, i
        if leave is None:
            return False
        _pivot(tab, leave, enter)
        basis[leave] = enter


def _pivot(tab, r, c):
    piv = tab[r][c]
    row = tab[r]
    if piv != 1:
        tab[r] = row = [a / piv for a in row]
    for i, other in enumerate(tab):
        if i != r:
            f = other[c]
            if f:
                tab[i] = [a - f * b for a, b in zip(other, row)]


def lp_minimize(c, rows, lo, hi):
    """Minimise ``c.x`` over rows with ``lo <= x <= hi`` (rational).

    Returns (x, value) or None if infeasible.  ``rows`` are Row objects.
    """
    n = len(lo)
    # substitute x = lo + x'
    cons = []
    for r in rows:
        rhs = r.rhs - sum(cf * lo[v] for v, cf in r.coeffs.items())
        cons.append((dict(r.coeffs), r.sense, rhs))
    for v in range(n):
        if hi[v] - lo[v] >= 0:
            cons.append(({v: Fraction(1)}, "<=", Fraction(hi[v] - lo[v])))
    m = len(cons)
    art_cols = []
    col = n
    layout = []
    for coeffs, sense, rhs in cons:
        if rhs < 0:
            coeffs = {v: -a for v, a in coeffs.items()}
            rhs = -rhs
            sense = {"<=": ">=", ">=": "<=", "=": "="}[sense]
        s = a = None
        if sense == "<=":
            s = col
            col += 1
        elif sense == ">=":
            s = col
            col += 1
            a = True
        else:
            a = True
        layout.append((coeffs, sense, rhs, s, a))
    for k, item in enumerate(layout):
        if item[4]:
            layout[k] = item[:4] + (col,)
            col += 1
        else:
            layout[k] = item[:4] + (None,)
    ncols = col
    tab = []
    basis = []
    for coeffs, sense, rhs, s, a in layout:
        row = [Fraction(0)] * (ncols + 1)
        for v, cf in coeffs.items():
            row[v] = Fraction(cf)
        if s is not None:
            row[s] = Fraction(1) if sense == "<=" else Fraction(-1)
        if a is not None:
            row[a] = Fraction(1)
            art_cols.append(a)
        row[-1] = rhs
        tab.append(row)
        basis.append(a if a is not None else s)
    # phase one
    phase1 = [Fraction(0)] * (ncols + 1)
    for a in art_cols:
        phase1[a] = Fraction(1)
    for i, b in enumerate(basis):
        if b in art_cols:
            phase1 = [p - q for p, q in zip(phase1, tab[i])]
    tab.append(phase1)
    basis.append(-1)
    _simplex(tab, basis, m, ncols)
    if tab[m][-1] < 0:
        return None
    # drive remaining artificials out of the basis
    art = set(art_cols)
    for i in range(m):
        if basis[i] in art:
            for j in range(ncols):
                if j not in art and tab[i][j] != 0:
                    _pivot(tab, i, j)
                    basis[i] = j
                    break
    tab.pop()
    basis.pop()
    # phase two: forbid artificials by zeroing their columns
    for row in tab:
        for a in art_cols:
            row[a] = Fraction(0)
    cost = [Fraction(0)] * (ncols + 1)
    for v, cf in c.items():
        cost[v] = Fraction(cf)
    for i, b in enumerate(basis):
        if b is not None and b >= 0 and cost[b] != 0:
            f = cost[b]
            cost = [p - f * q for p, q in zip(cost, tab[i])]
    tab.append(cost)
    basis.append(-1)
    if not _simplex(tab, basis, m, ncols):
        raise UnboundedVariable("relaxation unbounded")
    x = [Fraction(lo[v]) for v in range(n)]
    for i in range(m):
        b = basis[i]
        if b is not None and 0 <= b < n:
            x[b] += tab[i][-1]
    value = sum((Fraction(cf) * x[v] for v, cf in c.items()), Fraction(0))
    return x, value


# ---------------------------------------------------------------------------
# Branch and bound
# ---------------------------------------------------------------------------


def solve_ilp(ilp: IlpInstance, minimize=False, node_cap=NODE_CAP):
    """Feasible integer point (or optimum when ``minimize``), or None if infeasible."""
    lo = list(ilp.lower)
    hi = list(ilp.upper)
    if any(a > b for a, b in zip(lo, hi)):
        return None
    int_rows = _integer_rows(ilp.rows)
    if not _propagate(int_rows, lo, hi):
        return None
    objective = ilp.objective if minimize else {}
    if all(a == b for a, b in zip(lo, hi)):
        return list(lo) if ilp.feasible(lo) else None

    best = [None, None]
    nodes = [0]

    def branch(lo, hi):
        nodes[0] += 1
        if nodes[0] > node_cap:
            raise ResourceLimit(f"branch and bound exceeded {node_cap} nodes")
        if not _propagate(int_rows, lo, hi):
            return False
        if all(a == b for a, b in zip(lo, hi)):
            if not ilp.feasible(lo):
                return False
            value = ilp.value(lo)
            if best[0] is None or value < best[1]:
                best[0], best[1] = list(lo), value
            return not minimize
        relax = lp_minimize(objective, ilp.rows, lo, hi)
        if relax is None:
            return False
        x, value = relax
        if minimize and best[0] is not None and value >= best[1]:
            return False
        frac = next((v for v in range(len(x)) if x[v].denominator != 1), None)
        if frac is None:
            point = [int(a) for a in x]
            value = ilp.value(point)
            if best[0] is None or value < best[1]:
                best[0], best[1] = point, value
            return not minimize
        down = math.floor(x[frac])
        lo2, hi2 = list(lo), list(hi)
        hi2[frac] = down
        if branch(lo2, hi2):
            return True
        lo3, hi3 = list(lo), list(hi)
        lo3[frac] = down + 1
        return branch(lo3, hi3)

    branch(lo, hi)
    return best[0]
