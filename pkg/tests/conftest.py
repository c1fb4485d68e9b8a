import sys

import numpy as np
import pytest
from hypothesis import settings

from graphcde import VertexMeasure, WeightedGraph, _config

_config.DEBUG = True

settings.register_profile("repo", deadline=None, derandomize=True, max_examples=60)
settings.load_profile("repo")


def random_graph(rng, nmax=12, nmin=2):
    """Connected graph: random spanning tree plus extra edges, weights in [0.2, 3]."""
    n = int(rng.integers(nmin, nmax + 1))
    perm = rng.permutation(n)
    edges = set()
    for i in range(1, n):
        j = int(rng.integers(0, i))
        a, b = sorted((int(perm[i]), int(perm[j])))
        edges.add((a, b))
    for _ in range(int(rng.integers(0, 2 * n))):
        a, b = sorted(int(v) for v in rng.choice(n, 2, replace=False))
        edges.add((a, b))
    sym = rng.random() < 0.5
    E = []
    for a, b in sorted(edges):
        w = rng.uniform(0.2, 3)
        E.append((a, b, w))
        E.append((b, a, w if sym else rng.uniform(0.2, 3)))
    G = WeightedGraph.from_edges(n, E)
    kind = int(rng.integers(3))
    if kind == 0:
        mu = VertexMeasure.unit(G)
    elif kind == 1:
        mu = VertexMeasure.degree(G)
    else:
        mu = VertexMeasure(rng.uniform(0.2, 3, n))
    return G, mu


@pytest.fixture
def k2():
    G = WeightedGraph.from_edges(2, [(0, 1, 1.0)], mirror=True)
    return G, VertexMeasure.unit(G)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for i in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[i])
