import random

import pytest

from msoext.graph import Graph


def random_graph(rng, n, p):
    edges = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < p]
    return Graph(n, edges)


@pytest.fixture
def rng():
    return random.Random(20240611)


def blowup(rng, nu, max_size, p=0.5):
    """Random graph with a prescribed small type structure."""
    sizes = [rng.randint(1, max_size) for _ in range(nu)]
    cliques = [rng.random() < 0.5 for _ in range(nu)]
    links = {(a, b) for a in range(nu) for b in range(a + 1, nu) if rng.random() < p}
    start = [sum(sizes[:j]) for j in range(nu)]
    members = [list(range(start[j], start[j] + sizes[j])) for j in range(nu)]
    edges = []
    for j in range(nu):
        if cliques[j]:
            edges += [(u, v) for u in members[j] for v in members[j] if u < v]
    for a, b in links:
        edges += [(u, v) for u in members[a] for v in members[b]]
    return Graph(sum(sizes), edges)


def random_masks(rng, n, ell, p=0.5):
    return tuple(sum(1 << v for v in range(n) if rng.random() < p) for _ in range(ell))


def pytest_terminal_summary(terminalreporter):
    import sys
    module = sys.modules.get("test_acceptance")
    if module is not None and module.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(module.RESULTS):
            terminalreporter.write_line(line)
