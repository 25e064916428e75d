"""Command-line entry point: ``solve``, ``oracle``, ``gen`` and ``decomp``.

Exit codes: 0 SAT (or success), 1 UNSAT, 2 input error, 3 resource limit,
4 unsupported predicate, 5 internal error (a witness failed verification).
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
import time

from .csp import dump_csp
from .errors import InputError, InvalidDecomposition, MsoextError, OracleFailure, ResourceLimit, UnsupportedPredicate
from .graph import (
    EXACT_TREEWIDTH_LIMIT, Graph, bits, check_decomposition, check_nice, format_graph, format_tree_decomposition,
    heuristic_tree_decomposition, nd_decomposition, read_graph, read_tree_decomposition, require_valid, type_graph,
    validate_tree_decomposition,
)
from .logic import FRAGMENTS, TRUE, eval_global, fits_fragment, format_instance, infer_fragment, quantifier_counts, read_instance
from .mso_eval import brute_force_solve, check_assignment
from .nd_solver import solve_fpt_lin, solve_xp
from .problems import (
    DOMINATION_KINDS, LccSubsetInstance, encode_balanced_partitioning, encode_capacitated_dominating_set,
    encode_domination_family, encode_equitable_coloring, encode_graph_motif, gen_clique_to_lcc, lcc_to_msog,
    lcc_to_set_multicover, lcc_witness, msog_assignment, random_multicolored,
)
from .result import SAT
from .tw_solver import nice_decomposition, solve_tw

EXIT_SAT, EXIT_UNSAT, EXIT_INPUT, EXIT_LIMIT, EXIT_UNSUPPORTED, EXIT_INTERNAL = range(6)

PATHS = {
    "fpt": "nd-fpt: shapes + ILP, linear fragment parameterised by neighbourhood diversity",
    "xp": "nd-xp: cell-table enumeration parameterised by neighbourhood diversity",
    "tw": "tw: CSP extension solved along a tree decomposition",
    "oracle": "oracle: exhaustive enumeration",
}


class VerificationFailed(MsoextError):
    """A solver produced a witness that does not check out."""


def seed_from(args):
    if getattr(args, "seed", None) is not None:
        return args.seed
    return int(os.environ.get("MSOEXT_SEED", "0"))


def normalise_fragment(tag):
    """Accept ``gl-lin``, ``GL_lin`` and similar spellings."""
    key = tag.replace("-", "_").lower()
    for name in FRAGMENTS:
        if name.lower() == key:
            return name
    raise InputError(f"unknown fragment {tag!r}; expected one of {', '.join(FRAGMENTS)}")


def write_out(text, path):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# solve / oracle
# ---------------------------------------------------------------------------


def choose_path(inst, args):
    if args.oracle:
        return "oracle"
    fragment = normalise_fragment(args.fragment) if args.fragment else None
    if fragment is not None and not fits_fragment(inst, fragment):
        raise InputError(f"instance does not fit fragment {fragment}")
    param = args.param
    if param == "auto":
        param = "nd" if fits_fragment(inst, "GL_lin") else "tw"
    if param == "nd":
        # a declared non-linear fragment asks for the XP path even on linear contents
        declared_lin = fragment is None or fragment == "MSO" or fragment.endswith("_lin")
        return "fpt" if declared_lin and fits_fragment(inst, "GL_lin") else "xp"
    return "tw"


def run_path(path, inst, args, report):
    if path == "oracle":
        return brute_force_solve(inst)
    if path == "fpt":
        return solve_fpt_lin(inst, max_shapes=args.max_shapes)
    if path == "xp":
        return solve_xp(inst, max_sigma=args.max_sigma)
    ntd = None
    if args.td:
        td = read_tree_decomposition(args.td)
        require_valid(inst.graph, td)
        ntd = nice_decomposition(inst.graph, td)
    dumps = []

    def emit(enc):
        report["csp_branches"] = report.get("csp_branches", 0) + 1
        if args.emit_csp:
            dumps.append(dump_csp(enc.csp))

    try:
        return solve_tw(inst, ntd=ntd, backend=args.backend, emit=emit, table_cap=args.max_table)
    finally:
        if args.emit_csp:
            write_out("".join(f"% branch {k + 1}\n{d}" for k, d in enumerate(dumps)), args.emit_csp)


def parameters(inst):
    g = inst.graph
    out = {"n": g.n, "ell": inst.ell, "nu": nd_decomposition(g, respect_labels=True).nu}
    if g.n <= EXACT_TREEWIDTH_LIMIT:
        out["tau"] = heuristic_tree_decomposition(g, exact=True).width
    else:
        out["tau_upper"] = heuristic_tree_decomposition(g).width
    out["quantifiers"] = quantifier_counts(inst.effective_root())[2]
    return out


def format_report(lines):
    out = []
    for key, value in lines:
        if isinstance(value, dict):
            value = " ".join(f"{k}={v}" for k, v in value.items())
        out.append(f"{key}: {value}")
    return "\n".join(out) + "\n"


def cmd_solve(args):
    inst = read_instance(args.instance)
    if inst.fragment is None:
        inst.fragment = infer_fragment(inst)
    path = choose_path(inst, args)
    report = {}
    timings = {}
    t0 = time.perf_counter()
    result = run_path(path, inst, args, report)
    timings["solve"] = time.perf_counter() - t0
    lines = [("path", PATHS[path]), ("fragment", inst.fragment), ("parameters", parameters(inst))]
    if result.status == SAT:
        t1 = time.perf_counter()
        # mandatory re-verification of the witness against the oracle checks
        if not check_assignment(inst, result.assignment):
            raise VerificationFailed("the solver's witness does not satisfy the instance")
        timings["verify"] = time.perf_counter() - t1
        lines.append(("verdict", "SAT"))
        if inst.weighted:
            lines.append(("weight", result.weight))
        names = inst.formula.free_set_vars
        for name, mask in zip(names, result.assignment):
            lines.append((f"set {name}", " ".join(str(v + 1) for v in bits(mask)) or "-"))
        lines.append(("verified", "yes"))
    else:
        lines.append(("verdict", "UNSAT"))
    for key in ("accepted", "shapes", "ilps", "sigmas", "model_checks", "width", "augmented_width", "kappa",
                "csp_vars", "branches", "checked"):
        if key in result.stats and result.stats[key] not in (None, {}):
            lines.append((key, result.stats[key]))
    if "csp_branches" in report:
        lines.append(("csp_branches", report["csp_branches"]))
    if args.timings:
        lines.append(("timings", {k: f"{v:.3f}s" for k, v in timings.items()}))
    text = format_report(lines)
    write_out(text, args.output)
    return EXIT_SAT if result.status == SAT else EXIT_UNSAT


# ---------------------------------------------------------------------------
# gen
# ---------------------------------------------------------------------------


def _graph_arg(args):
    if not args.graph:
        raise InputError("--graph is required for this generator")
    return read_graph(args.graph)


def _int_list(text, n, name):
    values = [int(x) for x in text.split(",")]
    if len(values) == 1:
        values *= n
    if len(values) != n:
        raise InputError(f"--{name} needs one value or one per vertex ({n})")
    return values


def gen_clique(args, msog=False):
    if args.k < 2 or args.n < 1:
        raise InputError("need --k >= 2 and --n >= 1")
    rng = random.Random(seed_from(args))
    m = args.m if args.m is not None else args.n
    mc, clique = random_multicolored(rng, args.k, args.n, m, planted=args.planted)
    lcc = gen_clique_to_lcc(mc)
    witness = None
    if msog:
        inst, _ = lcc_to_msog(lcc)
    else:
        inst = lcc.to_instance()
    if clique is not None:
        selection = lcc_witness(mc, lcc, clique)
        if not lcc.satisfied(selection):
            raise VerificationFailed("planted witness does not satisfy the generated instance")
        if msog:
            # the marker formula is too large to model-check exactly; its globals are
            # checked here and the selection itself was checked against the demands
            witness = msog_assignment(lcc, selection)
            sizes = [bin(m).count("1") for m in witness]
            if not all(eval_global(gc, sizes) for gc in inst.globals):
                raise VerificationFailed("planted witness violates a global constraint")
        else:
            witness = (selection,)
            if not check_assignment(inst, witness):
                raise VerificationFailed("planted witness does not satisfy the generated instance")
    header = f"% generated clique reduction: k={mc.k} n={mc.n} m={mc.m} seed={seed_from(args)}\n"
    text = header + format_instance(inst)
    if args.planted:
        if args.output in (None, "-"):
            raise InputError("--planted needs -o so the witness can be written next to the instance")
        side = [f"% planted clique (one vertex per class): {' '.join(str(c + 1) for c in clique)}"]
        side += [f"set {name} " + (" ".join(str(v + 1) for v in bits(mask)) or "-")
                 for name, mask in zip(inst.formula.free_set_vars, witness)]
        write_out("\n".join(side) + "\n", args.output + ".witness")
    return text


def lcc_from_instance(inst):
    if inst.ell != 1 or inst.globals or inst.formula.root != TRUE:
        raise InputError("expected a local-constraints-only instance with one free variable and formula 'true'")
    if inst.locals.has_conditional:
        raise InputError("conditional local constraints have no multicover form")
    demands = [inst.locals.alpha(0, v) for v in range(inst.n)]
    return LccSubsetInstance(inst.graph, demands)


def format_multicover(family, nd):
    first = family[0]
    out = [f"% set multicover family over {nd.nu} types, one instance per r",
           f"universe {first.universe}"]
    out += [f"d {u + 1} {d}" for u, d in enumerate(first.demands)]
    out += [f"s {j + 1} " + " ".join(str(u + 1) for u in sorted(s)) for j, s in enumerate(first.family)]
    if first.caps is not None:
        out += [f"cap {j + 1} {c}" for j, c in enumerate(first.caps)]
    out += ["type {} ".format(j + 1) + " ".join(str(v + 1) for v in t) for j, t in enumerate(nd.types)]
    out.append("r " + " ".join(str(s.r) for s in family))
    return "\n".join(out) + "\n"


def cmd_gen(args):
    name = args.generator
    if name == "clique-lcc":
        text = gen_clique(args)
    elif name == "clique-msog":
        text = gen_clique(args, msog=True)
    elif name == "equitable":
        text = format_instance(encode_equitable_coloring(_graph_arg(args), args.k))
    elif name == "capacitated-domination":
        g = _graph_arg(args)
        text = format_instance(encode_capacitated_dominating_set(g, _int_list(args.capacities, g.n, "capacities")))
    elif name == "domination":
        g = _graph_arg(args)
        params = json.loads(args.params or "{}")
        text = format_instance(encode_domination_family(args.kind, g, params))
    elif name == "motif":
        g = _graph_arg(args)
        motif = {}
        for part in filter(None, (args.motif or "").split(",")):
            colour, _, mult = part.partition("=")
            motif[colour] = int(mult or 1)
        text = format_instance(encode_graph_motif(g, motif))
    elif name == "balanced":
        g = _graph_arg(args)
        text = format_instance(encode_balanced_partitioning(g, args.k))
    elif name == "multicover":
        if not args.source:
            raise InputError("multicover needs --from <instance>")
        family, nd = lcc_to_set_multicover(lcc_from_instance(read_instance(args.source)))
        text = format_multicover(family, nd)
    elif name == "random-graph":
        rng = random.Random(seed_from(args))
        n = args.n
        g = Graph(n, [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < args.p])
        text = format_graph(g)
    else:
        raise InputError(f"unknown generator {name!r}")
    write_out(text, args.output)
    return EXIT_SAT


# ---------------------------------------------------------------------------
# decomp
# ---------------------------------------------------------------------------


def cmd_decomp(args):
    g = read_graph(args.graph)
    if args.nd == args.tw:
        raise InputError("choose exactly one of --nd and --tw")
    if args.nd:
        nd = nd_decomposition(g, respect_labels=args.labels)
        check_decomposition(g, nd, respect_labels=args.labels)
        tg = type_graph(g, nd, respect_labels=args.labels)
        out = [f"c neighbourhood diversity {nd.nu}", f"nd {nd.nu} {g.n}"]
        for j, (members, kind) in enumerate(zip(nd.types, nd.kinds)):
            out.append(" ".join(["y", str(j + 1), kind.value] + [str(v + 1) for v in members]))
        out += [f"t {i + 1} {j + 1}" for i, j in tg.edges()]
        write_out("\n".join(out) + "\n", args.output)
        return EXIT_SAT
    exact = g.n <= EXACT_TREEWIDTH_LIMIT and not args.heuristic
    td = heuristic_tree_decomposition(g, exact=exact)
    ok, why = validate_tree_decomposition(g, td)
    if not ok:
        raise InvalidDecomposition(f"decomposition failed validation: {why}")
    note = "exact" if exact else "min-fill heuristic"
    if args.nice:
        ntd = nice_decomposition(g, td)
        check_nice(ntd)
        td = ntd.as_tree_decomposition()
        require_valid(g, td)
        note += f", nice with {len(ntd)} nodes rooted at {ntd.root + 1}"
    text = f"c width {td.width} ({note})\n" + format_tree_decomposition(td, g.n)
    write_out(text, args.output)
    return EXIT_SAT


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def add_solve_options(p):
    p.add_argument("instance", help="instance file")
    p.add_argument("--param", choices=["auto", "nd", "tw"], default="auto",
                   help="structural parameter to exploit (default: nd for linear instances, tw otherwise)")
    p.add_argument("--fragment", help="declare the fragment, e.g. gl-lin; checked against the instance")
    p.add_argument("--backend", choices=["automaton", "bruteforce"], default="automaton",
                   help="how the tw path realises the formula")
    p.add_argument("--td", help="tree decomposition file for the tw path")
    p.add_argument("--emit-csp", metavar="PATH", help="dump every assembled CSP (tw path)")
    p.add_argument("--max-shapes", type=int, default=200_000)
    p.add_argument("--max-sigma", type=int, default=200_000)
    p.add_argument("--max-table", type=int, default=2_000_000)
    p.add_argument("--timings", action="store_true", help="add wall-clock timings (makes output non-reproducible)")
    p.add_argument("-o", "--output", help="write the report here instead of stdout")


def build_parser():
    parser = argparse.ArgumentParser(prog="msoext", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve an instance")
    add_solve_options(p)
    p.add_argument("--oracle", action="store_true", help="use exhaustive enumeration instead")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("oracle", help="solve an instance by exhaustive enumeration")
    add_solve_options(p)
    p.set_defaults(func=cmd_solve, oracle=True)

    p = sub.add_parser("gen", help="write a generated instance")
    p.add_argument("generator", choices=["clique-lcc", "clique-msog", "equitable", "capacitated-domination",
                                         "domination", "motif", "balanced", "multicover", "random-graph"])
    p.add_argument("--graph", help="graph file")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--m", type=int)
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--planted", action="store_true")
    p.add_argument("--capacities", default="1", help="one value or a comma-separated list")
    p.add_argument("--kind", choices=sorted(DOMINATION_KINDS))
    p.add_argument("--params", help="JSON parameters for --kind")
    p.add_argument("--motif", help="colour multiset, e.g. r=1,g=2")
    p.add_argument("--from", dest="source", help="source instance (multicover)")
    p.add_argument("--seed", type=int, help="overrides MSOEXT_SEED")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("decomp", help="compute and validate a decomposition")
    p.add_argument("graph")
    p.add_argument("--nd", action="store_true", help="neighbourhood-diversity type partition")
    p.add_argument("--tw", action="store_true", help="tree decomposition")
    p.add_argument("--nice", action="store_true", help="emit the nice tree decomposition")
    p.add_argument("--heuristic", action="store_true", help="skip the exact search on small graphs")
    p.add_argument("--labels", action="store_true", help="only merge vertices with equal labels")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_decomp)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_SAT
    if args.verbose:
        import logging
        logging.basicConfig(level=logging.INFO, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except UnsupportedPredicate as exc:
        print(f"error: unsupported predicate: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except ResourceLimit as exc:
        print(f"error: resource limit: {exc}", file=sys.stderr)
        return EXIT_LIMIT
    except VerificationFailed as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except (InputError, InvalidDecomposition, OracleFailure, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
