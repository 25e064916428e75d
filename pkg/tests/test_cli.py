import random

import pytest

from msoext import cli
from msoext.graph import format_graph, parse_tree_decomposition, path_graph, star_graph, validate_tree_decomposition
from msoext.logic import format_instance, parse_formula, Instance, read_instance
from msoext.mso_eval import check_assignment
from msoext.problems import encode_capacitated_dominating_set, encode_equitable_coloring
from msoext.result import Result

from conftest import random_graph
from formulas import CHEAP

RGB_GRAPH = "p 3 2\ne 1 2\ne 2 3\nl r 1\nl g 2\nl b 3\n"


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    return code, capsys.readouterr()


def report(out):
    return dict(line.split(": ", 1) for line in out.strip().splitlines())


@pytest.fixture
def c4(tmp_path):
    return write(tmp_path, "c4.gr", "p 4 4\ne 1 2\ne 2 3\ne 3 4\ne 4 1\n")


def test_gen_equitable_and_solve_paths(tmp_path, capsys, c4):
    inst = tmp_path / "eq.msoi"
    assert run(capsys, "gen", "equitable", "--k", 2, "--graph", c4, "-o", inst)[0] == 0
    assert read_instance(str(inst)).fragment == "G_lin"
    code, out = run(capsys, "solve", "--param", "nd", "--fragment", "gl-lin", inst)
    assert code == 0 and report(out.out)["path"].startswith("nd-fpt")
    code, out = run(capsys, "solve", "--param", "nd", "--fragment", "gl", inst)
    assert code == 0 and report(out.out)["path"].startswith("nd-xp")
    dump = tmp_path / "dump.csp"
    code, out = run(capsys, "solve", "--param", "tw", inst, "--emit-csp", dump)
    assert code == 0 and report(out.out)["path"].startswith("tw")
    text = dump.read_text()
    assert "[vars]" in text and "[hard]" in text and "[soft]" in text
    assert report(out.out)["verified"] == "yes"


def test_unsat_exit_code(tmp_path, capsys):
    inst = write(tmp_path, "k3.msoi", format_instance(encode_equitable_coloring(path_graph(3), 2)))
    assert run(capsys, "solve", inst)[0] == 0
    text = "[graph]\np 3 3\ne 1 2\ne 2 3\ne 1 3\n[free] X1\n[formula]\nindependent(X1) & card_eq(X1, 2)\n"
    code, out = run(capsys, "solve", write(tmp_path, "u.msoi", text))
    assert code == 1 and report(out.out)["verdict"] == "UNSAT"


def test_input_errors(tmp_path, capsys):
    assert run(capsys, "solve", tmp_path / "missing.msoi")[0] == 2
    assert run(capsys, "solve", write(tmp_path, "bad.msoi", "[formula]\ntrue\n"))[0] == 2
    assert run(capsys, "solve", write(tmp_path, "bad2.msoi", "[graph]\np 2 1\ne 1 2\n[formula]\nfoo(\n"))[0] == 2
    assert run(capsys, "gen", "equitable", "--k", 2)[0] == 2
    assert run(capsys, "bogus")[0] == 2
    text = "[graph]\np 2 0\n[free] X1\n[formula]\ntrue\n[locals]\na 1 1 0\n"
    assert run(capsys, "solve", "--fragment", "g-lin", write(tmp_path, "f.msoi", text))[0] == 2


def test_unsupported_predicate_exit_code(tmp_path, capsys):
    text = "[graph]\np 3 2\ne 1 2\ne 2 3\n[free] X1\n[formula]\nforall x (forall y (x in X1 -> edge(x, y)))\n"
    code, out = run(capsys, "solve", "--param", "tw", write(tmp_path, "q.msoi", text))
    assert code == 4 and "unsupported" in out.err


def test_resource_limit_exit_code(tmp_path, capsys, c4):
    inst = tmp_path / "eq.msoi"
    run(capsys, "gen", "equitable", "--k", 2, "--graph", c4, "-o", inst)
    assert run(capsys, "solve", "--param", "nd", inst, "--max-shapes", 2)[0] == 3
    assert run(capsys, "solve", "--param", "nd", "--fragment", "gl", inst, "--max-sigma", 2)[0] == 3
    assert run(capsys, "solve", "--param", "tw", inst, "--max-table", 1)[0] == 3


def test_unverified_witness_never_exits_sat(tmp_path, capsys, c4, monkeypatch):
    inst = tmp_path / "eq.msoi"
    run(capsys, "gen", "equitable", "--k", 2, "--graph", c4, "-o", inst)
    monkeypatch.setattr(cli, "solve_tw", lambda *a, **k: Result("SAT", (0b1111, 0b1111)))
    code, out = run(capsys, "solve", "--param", "tw", inst)
    assert code == 5 and out.out == ""


def fixture_corpus(tmp_path):
    rng = random.Random(60)
    paths = []
    insts = [
        encode_equitable_coloring(path_graph(5), 2),
        encode_equitable_coloring(star_graph(3), 2),
        encode_capacitated_dominating_set(star_graph(2), [1, 0, 0]),
    ]
    for text in CHEAP[:6]:
        g = random_graph(rng, 5, 0.4)
        free = sorted({w for w in text.replace("(", " ").replace(")", " ").replace(",", " ").split()
                       if w[:1] == "X" and w[1:].isdigit()}) or ["X1"]
        insts.append(Instance(g, parse_formula(text, free_vars=free)))
    for k, inst in enumerate(insts):
        paths.append(write(tmp_path, f"i{k}.msoi", format_instance(inst)))
    paths.append(write(tmp_path, "rgb.gr", RGB_GRAPH))
    return paths


def test_oracle_agrees_with_main_paths(tmp_path, capsys):
    paths = fixture_corpus(tmp_path)
    motif = tmp_path / "motif.msoi"
    run(capsys, "gen", "motif", "--graph", paths.pop(), "--motif", "r=1,g=1", "-o", motif)
    paths.append(str(motif))
    for path in paths:
        code, out = run(capsys, "oracle", path)
        expected = report(out.out)
        for param in ("nd", "tw"):
            c, o = run(capsys, "solve", "--param", param, path)
            if c == 4:
                continue
            got = report(o.out)
            assert c == code and got["verdict"] == expected["verdict"]
            assert got.get("weight") == expected.get("weight")


def test_reports_are_deterministic(tmp_path, capsys, c4):
    inst = tmp_path / "eq.msoi"
    run(capsys, "gen", "equitable", "--k", 2, "--graph", c4, "-o", inst)
    for param in ("nd", "tw"):
        first = run(capsys, "solve", "--param", param, inst)[1].out
        assert run(capsys, "solve", "--param", param, inst)[1].out == first


def test_gen_clique_planted(tmp_path, capsys, monkeypatch):
    out = tmp_path / "cl.msoi"
    monkeypatch.setenv("MSOEXT_SEED", "3")
    assert run(capsys, "gen", "clique-lcc", "--k", 3, "--n", 2, "--planted", "-o", out)[0] == 0
    inst = read_instance(str(out))
    lines = (tmp_path / "cl.msoi.witness").read_text().splitlines()
    chosen = [int(t) - 1 for t in lines[-1].split()[2:]]
    assert check_assignment(inst, (sum(1 << v for v in chosen),))
    first = out.read_text()
    run(capsys, "gen", "clique-lcc", "--k", 3, "--n", 2, "--planted", "-o", out)
    assert out.read_text() == first
    monkeypatch.setenv("MSOEXT_SEED", "4")
    run(capsys, "gen", "clique-lcc", "--k", 3, "--n", 3, "--m", 3, "--planted", "-o", out)
    assert out.read_text() != first
    code, res = run(capsys, "solve", out)
    assert code == 0
    assert run(capsys, "gen", "clique-lcc", "--planted")[0] == 2


def test_gen_clique_msog_round_trip(tmp_path, capsys):
    out = tmp_path / "ms.msoi"
    assert run(capsys, "gen", "clique-msog", "--k", 3, "--n", 2, "--planted", "-o", out)[0] == 0
    inst = read_instance(str(out))
    assert inst.fragment == "G" and len(inst.globals) == 9
    assert (tmp_path / "ms.msoi.witness").exists()


def test_gen_multicover(tmp_path, capsys):
    text = "[graph]\np 3 2\ne 1 2\ne 2 3\n[free] U\n[formula]\ntrue\n[locals]\na 1 * 1\n"
    code, out = run(capsys, "gen", "multicover", "--from", write(tmp_path, "l.msoi", text))
    assert code == 0
    lines = out.out.splitlines()
    assert "universe 2" in lines and lines[-1] == "r 0 1 2 3"
    assert run(capsys, "gen", "multicover", "--from", write(tmp_path, "x.msoi", text.replace("true", "connected(U)")))[0] == 2


def test_gen_other_generators(tmp_path, capsys):
    g = write(tmp_path, "p.gr", format_graph(path_graph(4)))
    for argv in (["capacitated-domination", "--capacities", "2"],
                 ["domination", "--kind", "MinMaxOutdegree", "--params", '{"bound": 1}'],
                 ["balanced", "--k", 2]):
        code, out = run(capsys, "gen", *argv, "--graph", g)
        assert code == 0 and "[formula]" in out.out
    code, out = run(capsys, "gen", "random-graph", "--n", 6, "--p", 0.5, "--seed", 1)
    assert code == 0 and out.out.startswith("p 6 ")


def test_decomp_nd_clique(tmp_path, capsys):
    edges = "".join(f"e {u} {v}\n" for u in range(1, 6) for v in range(u + 1, 6))
    code, out = run(capsys, "decomp", write(tmp_path, "k5.gr", "p 5 10\n" + edges), "--nd")
    assert code == 0 and "nd 1 5" in out.out.splitlines()


def test_decomp_tree_width_one(tmp_path, capsys):
    code, out = run(capsys, "decomp", write(tmp_path, "t.gr", "p 4 3\ne 1 2\ne 2 3\ne 2 4\n"), "--tw")
    assert code == 0
    assert parse_tree_decomposition(out.out).width == 1


def test_decomp_validator_round_trip(tmp_path, capsys):
    rng = random.Random(61)
    for k in range(8):
        g = random_graph(rng, rng.randint(1, 14), 0.3)
        path = write(tmp_path, f"g{k}.gr", format_graph(g))
        for extra in ([], ["--nice"], ["--heuristic"]):
            code, out = run(capsys, "decomp", path, "--tw", *extra)
            assert code == 0
            ok, _ = validate_tree_decomposition(g, parse_tree_decomposition(out.out))
            assert ok
    assert run(capsys, "decomp", path)[0] == 2


def test_solve_with_given_decomposition(tmp_path, capsys):
    g = path_graph(5)
    inst = write(tmp_path, "p5.msoi", format_instance(encode_equitable_coloring(g, 2)))
    gpath = write(tmp_path, "p5.gr", format_graph(g))
    td = tmp_path / "p5.td"
    run(capsys, "decomp", gpath, "--tw", "-o", td)
    code, out = run(capsys, "solve", "--param", "tw", "--td", td, inst)
    assert code == 0
    bad = write(tmp_path, "bad.td", "td 1 2 5\nb 1 1 2\n")
    assert run(capsys, "solve", "--param", "tw", "--td", bad, inst)[0] == 2


def test_module_entry_point():
    import subprocess
    import sys
    proc = subprocess.run([sys.executable, "-m", "msoext", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "solve" in proc.stdout
