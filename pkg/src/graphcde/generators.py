"""Graph families (tori, trees, named graphs) and Ricci-flat structure data."""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .graph import VertexMeasure, WeightedGraph
from .reports import BoundReport


@dataclass(frozen=True)
class RicciFlatStructure:
    """Maps eta_i : V -> V stored as an int array of shape (d, n)."""

    eta: np.ndarray
    weights: tuple | None = None

    @property
    def d(self):
        return self.eta.shape[0]

    def __post_init__(self):
        eta = np.asarray(self.eta, dtype=np.int64)
        eta.setflags(write=False)
        object.__setattr__(self, "eta", eta)
        if self.weights is not None:
            w = tuple(float(v) for v in self.weights)
            if len(w) != eta.shape[0]:
                raise DomainError("need one weight per map")
            object.__setattr__(self, "weights", w)


def _weights_2d(d, weights):
    if weights is None:
        return [1.0] * (2 * d)
    w = np.atleast_1d(np.asarray(weights, dtype=float))
    if w.size == 1:
        return [float(w[0])] * (2 * d)
    if w.size == d:
        return [float(v) for v in np.repeat(w, 2)]
    if w.size == 2 * d:
        return [float(v) for v in w]
    raise DomainError("torus weights: give a scalar, d values, or 2d values (+e1, -e1, +e2, ...)")


def torus_coords(d, m):
    """Coordinates of every torus vertex; vertex index = sum_i c_i m^i."""
    idx = np.arange(m ** d)
    return np.stack([(idx // m ** i) % m for i in range(d)], axis=1)


def torus_index(coords, m):
    coords = np.asarray(coords) % m
    d = coords.shape[-1]
    return (coords * (m ** np.arange(d))).sum(axis=-1)


def make_torus(d, m, weights=None, measure_kind="unit"):
    """Cayley graph of (Z_m)^d with generators +-e_i.

    ``weights`` may be a scalar, one value per coordinate, or 2d values
    ordered (+e1, -e1, +e2, -e2, ...); the weight of x -> x+g is the value
    of generator g.  Returns (graph, measure, Ricci-flat structure).
    """
    if d < 1:
        raise DomainError("d must be >= 1")
    if m < 3:
        raise DomainError("torus needs m >= 3 so that +e_i and -e_i differ")
    w = _weights_2d(d, weights)
    C = torus_coords(d, m)
    n = m ** d
    eta = np.empty((2 * d, n), dtype=np.int64)
    edges = []
    for i in range(d):
        for s, sign in enumerate((1, -1)):
            step = np.zeros(d, dtype=np.int64)
            step[i] = sign
            eta[2 * i + s] = torus_index(C + step, m)
    for g in range(2 * d):
        edges.extend(zip(range(n), eta[g], itertools.repeat(w[g])))
    G = WeightedGraph.from_edges(n, edges)
    mu = VertexMeasure.of_kind(G, measure_kind)
    return G, mu, RicciFlatStructure(eta, tuple(w))


def make_tree(D, L):
    """Rooted tree: root has D children, every other internal vertex D-1.

    Vertices are numbered breadth-first with the root at 0.
    """
    if D < 2:
        raise DomainError("branching degree D must be >= 2")
    if L < 2:
        raise DomainError("depth L must be >= 2 (root 2-ball must be complete)")
    edges = []
    frontier = [0]
    nxt = 1
    for depth in range(L):
        new = []
        for v in frontier:
            kids = D if depth == 0 else D - 1
            for _ in range(kids):
                edges.append((v, nxt, 1.0))
                new.append(nxt)
                nxt += 1
        frontier = new
    return WeightedGraph.from_edges(nxt, edges, mirror=True)


def tree_depths(D, L):
    depth = [0]
    count = 1
    level = 1
    for k in range(1, L + 1):
        level = D if k == 1 else level * (D - 1)
        depth += [k] * level
        count += level
    return np.array(depth)


_MINIMUM = {"path": 1, "cycle": 3, "complete": 1, "star": 1, "hypercube": 1}


def make_named(family, size):
    """path(n), cycle(n), complete(n), star(leaves), hypercube(d); unit weights."""
    if family not in _MINIMUM:
        raise DomainError(f"unknown family {family!r}")
    size = int(size)
    if size < _MINIMUM[family]:
        raise DomainError(f"{family} needs size >= {_MINIMUM[family]}")
    if family == "path":
        return WeightedGraph.from_edges(size, [(i, i + 1, 1.0) for i in range(size - 1)], mirror=True)
    if family == "cycle":
        return WeightedGraph.from_edges(size, [(i, (i + 1) % size, 1.0) for i in range(size)], mirror=True)
    if family == "complete":
        return WeightedGraph.from_edges(size, [(i, j, 1.0) for i in range(size) for j in range(i + 1, size)],
                                        mirror=True)
    if family == "star":
        return WeightedGraph.from_edges(size + 1, [(0, i, 1.0) for i in range(1, size + 1)], mirror=True)
    return make_hypercube(size)[0]


def make_hypercube(d, weights=None):
    """Q_d with coordinate-flip maps (which commute)."""
    n = 1 << d
    w = [1.0] * d if weights is None else [float(v) for v in weights]
    if len(w) != d:
        raise DomainError("hypercube needs one weight per coordinate")
    eta = np.array([np.arange(n) ^ (1 << i) for i in range(d)], dtype=np.int64)
    edges = [(x, int(eta[i, x]), w[i]) for i in range(d) for x in range(n)]
    return WeightedGraph.from_edges(n, edges), RicciFlatStructure(eta, tuple(w))


def random_weights(G, rng, low=0.5, high=2.0, symmetric=True):
    """Same topology, i.i.d. uniform weights."""
    r, c, _ = G.edges()
    if symmetric:
        und = r < c
        vals = rng.uniform(low, high, size=int(und.sum()))
        table = dict(zip(zip(r[und].tolist(), c[und].tolist()), vals))
        w = [table[(min(a, b), max(a, b))] for a, b in zip(r.tolist(), c.tolist())]
    else:
        w = rng.uniform(low, high, size=len(r))
    return WeightedGraph(G.n, G.indptr, G.indices, w, G.labels)


# -------------------------------------------------------------- Ricci-flat

def verify_ricci_flat(G, S, mode="unweighted", vertices=None):
    """Check the Ricci-flat conditions (and weight conditions) vertex by vertex.

    ``vertices`` restricts the check to a subset; this is the local-at-x
    variant, which only reads eta on the given vertices and their
    neighbours.  Violations are collected, the first one is the witness.
    """
    if mode not in ("unweighted", "weakly_consistent", "consistent"):
        raise DomainError(f"unknown mode {mode!r}")
    eta = S.eta
    d = S.d
    if eta.shape[1] != G.n:
        raise DomainError("structure size differs from graph")
    verts = range(G.n) if vertices is None else [G.check_vertex(v) for v in vertices]
    bad = []
    for x in verts:
        nb = G.neighbors(x)
        if len(nb) != d:
            bad.append({"vertex": x, "condition": "regularity", "degree": int(len(nb)), "d": d})
        img = eta[:, x]
        for i in range(d):
            if G.weight(x, int(img[i])) == 0.0:
                bad.append({"vertex": x, "condition": 1, "i": i})
        for i in range(d):
            for j in range(i + 1, d):
                if img[i] == img[j]:
                    bad.append({"vertex": x, "condition": 2, "i": i, "j": j})
        for i in range(d):
            left = Counter(int(eta[i, eta[j, x]]) for j in range(d))
            right = Counter(int(eta[j, eta[i, x]]) for j in range(d))
            if left != right:
                bad.append({"vertex": x, "condition": 3, "i": i})
        if mode != "unweighted":
            if S.weights is None:
                bad.append({"vertex": x, "condition": "weights", "reason": "no per-map weights"})
                continue
            for i in range(d):
                w = G.weight(x, int(img[i]))
                if w != S.weights[i]:
                    bad.append({"vertex": x, "condition": "weight_1", "i": i, "w": w, "w_i": S.weights[i]})
            for i in range(d):
                for j in range(d):
                    for k in range(d):
                        if eta[j, eta[i, x]] == eta[i, eta[k, x]] and S.weights[j] != S.weights[k]:
                            bad.append({"vertex": x, "condition": "weight_2", "i": i, "j": j, "k": k})
    if mode == "consistent" and not G.symmetric:
        bad.append({"vertex": None, "condition": "weight_symmetry"})
    ok = not bad
    return BoundReport(
        name="ricci_flat",
        lhs=float(len(bad)),
        rhs=0.0,
        margin=0.0 if ok else -float(len(bad)),
        witness=bad[0] if bad else {},
        status="pass" if ok else "fail",
        details={"mode": mode, "violations": bad[:50], "num_violations": len(bad),
                 "local": vertices is not None},
    )
