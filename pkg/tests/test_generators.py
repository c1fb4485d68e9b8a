import itertools
import json

import numpy as np
import pytest

from graphcde import DomainError, ParseError, VertexMeasure
from graphcde.generators import (RicciFlatStructure, make_hypercube, make_named, make_torus, make_tree,
                                 tree_depths, verify_ricci_flat)
from graphcde.io import graph_to_dict, load_edgelist_text, load_graph, save_edgelist, save_graph


def canon(G):
    r, c, w = G.edges()
    return sorted(zip(r.tolist(), c.tolist(), w.tolist()))


def test_torus_examples():
    G, mu, S = make_torus(1, 4)
    C4 = make_named("cycle", 4)
    assert canon(G) == canon(C4)
    assert np.all(G.degree == 2)
    G, _, _ = make_torus(2, 3)
    assert G.n == 9 and all(len(G.neighbors(x)) == 4 for x in range(9))
    G, _, _ = make_torus(1, 5, weights=[2, 2])
    assert np.all(G.degree == 4)
    with pytest.raises(DomainError):
        make_torus(1, 2)


def test_tree_counts():
    G = make_tree(3, 2)
    assert G.n == 10 and len(G.neighbors(0)) == 3
    assert make_tree(2, 2).n == 5
    depth = tree_depths(4, 3)
    assert np.sum(depth == 3) == 4 * 3 * 3
    G = make_tree(4, 3)
    inner = np.flatnonzero(depth < 3)
    assert np.all(G.degree[inner] == 4)
    with pytest.raises(DomainError):
        make_tree(3, 1)


def test_named():
    C = make_named("cycle", 4)
    assert C.n == 4 and C.num_edges == 4
    S = make_named("star", 3)
    assert len(S.neighbors(0)) == 3
    Q = make_named("hypercube", 3)
    assert Q.n == 8 and np.all(Q.degree == 3)
    with pytest.raises(DomainError):
        make_named("cycle", 2)
    with pytest.raises(DomainError):
        make_named("wheel", 5)


def test_ricci_flat_modes():
    G, _, S = make_torus(2, 5)
    assert verify_ricci_flat(G, S, "consistent").status == "pass"
    G, _, S = make_torus(1, 5, weights=[1, 2])
    assert verify_ricci_flat(G, S, "weakly_consistent").status == "pass"
    assert verify_ricci_flat(G, S, "consistent").status == "fail"
    G, S = make_hypercube(3)
    assert verify_ricci_flat(G, S, "consistent").status == "pass"


def test_star_never_ricci_flat():
    G = make_named("star", 3)
    leaves = [1, 2, 3]
    for centre in itertools.product(leaves, repeat=3):
        eta = np.zeros((3, 4), dtype=int)
        eta[:, 0] = centre
        S = RicciFlatStructure(eta)
        rep = verify_ricci_flat(G, S)
        assert rep.status == "fail"
        # leaves have degree 1 and all maps send them to the centre
        assert any(v["vertex"] != 0 for v in rep.details["violations"])


def test_condition_one_reported():
    G, _, S = make_torus(1, 5)
    eta = S.eta.copy()
    eta[0, 0] = 2
    rep = verify_ricci_flat(G, RicciFlatStructure(eta))
    assert rep.status == "fail"
    assert {"vertex": 0, "condition": 1, "i": 0} in rep.details["violations"]


def test_round_trip(tmp_path):
    C4 = make_named("cycle", 4)
    p = tmp_path / "c4.json"
    save_graph(p, C4, VertexMeasure.degree(C4))
    G, mu = load_graph(p)
    assert canon(G) == canon(C4)
    assert mu.kind == "degree" and np.all(mu.values == 2)
    G, _, _ = make_torus(2, 3, weights=[0.1, 1 / 3])
    save_graph(p, G)
    assert canon(load_graph(p)[0]) == canon(G)
    q = tmp_path / "c4.txt"
    save_edgelist(q, G)
    assert canon(load_graph(q)[0]) == canon(G)


def test_rejects_bad_files(tmp_path):
    d = graph_to_dict(make_named("cycle", 4))
    d["edges"][0][2] = 0
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(d, indent=1))
    with pytest.raises(ParseError) as exc:
        load_graph(p)
    assert exc.value.line is not None
    d["edges"][0] = [0, 9, 1.0]
    p.write_text(json.dumps(d))
    with pytest.raises(ParseError):
        load_graph(p)
    with pytest.raises(ParseError) as exc:
        load_edgelist_text("# n=3 symmetric=true\n0 1 1.0\n1 2 -1\n")
    assert exc.value.line == 3


def test_edgelist_example():
    G, mu = load_edgelist_text("# n=3 symmetric=true\n0 1 1.0\n1 2 2.5\n", "degree")
    assert G.weight(2, 1) == 2.5
    assert mu.values.tolist() == [1.0, 3.5, 2.5]
