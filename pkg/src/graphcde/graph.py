"""Weighted graphs, vertex measures and the Gamma calculus.

Vertices are integers ``0..n-1``.  Edges are stored in CSR form (one
directed entry per ordered pair), so ``w_xy`` and ``w_yx`` may differ, but
the adjacency itself is required to be symmetric.

Operators come in two flavours: pass a vertex ``x`` to get a scalar
(with domain checks on the vertices it reads), or leave ``x=None`` for the
whole-vertex-set batch version, which also accepts a stack of functions
of shape ``(S, n)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import shortest_path

from . import _config, _kernels
from .errors import DomainError


def _readonly(a):
    a = np.array(a)
    a.setflags(write=False)
    return a


class WeightedGraph:
    """Immutable weighted graph with symmetric adjacency."""

    def __init__(self, n, indptr, indices, weights, labels=None):
        self.n = int(n)
        self.indptr = _readonly(np.asarray(indptr, dtype=np.int64))
        self.indices = _readonly(np.asarray(indices, dtype=np.int64))
        self.weights = _readonly(np.asarray(weights, dtype=float))
        self.labels = tuple(labels) if labels is not None else None
        self._validate()

    @classmethod
    def from_edges(cls, n, edges, labels=None, mirror=False):
        """Build from ``(x, y, w)`` triples, one per directed edge.

        With ``mirror=True`` each triple also inserts ``(y, x, w)``.
        """
        n = int(n)
        arr = [tuple(e) for e in edges]
        if mirror:
            arr = arr + [(y, x, w) for x, y, w in arr]
        if arr:
            xs = np.array([e[0] for e in arr], dtype=np.int64)
            ys = np.array([e[1] for e in arr], dtype=np.int64)
            ws = np.array([e[2] for e in arr], dtype=float)
        else:
            xs = ys = np.zeros(0, dtype=np.int64)
            ws = np.zeros(0)
        if len(xs) and (xs.min() < 0 or ys.min() < 0 or xs.max() >= n or ys.max() >= n):
            raise DomainError("edge endpoint outside 0..n-1")
        order = np.lexsort((ys, xs))
        xs, ys, ws = xs[order], ys[order], ws[order]
        if len(xs) > 1:
            dup = (xs[1:] == xs[:-1]) & (ys[1:] == ys[:-1])
            if dup.any():
                i = int(np.argmax(dup))
                raise DomainError(f"duplicate edge ({xs[i]}, {ys[i]})")
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(indptr, xs + 1, 1)
        return cls(n, np.cumsum(indptr), ys, ws, labels)

    def _validate(self):
        if self.n < 0 or len(self.indptr) != self.n + 1:
            raise DomainError("bad CSR structure")
        if self.labels is not None and len(self.labels) != self.n:
            raise DomainError("label table length differs from n")
        w = self.weights
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise DomainError("edge weights must be finite and > 0")
        rows = self.rows
        if np.any(rows == self.indices):
            raise DomainError("self-loops are not allowed")
        a = sp.csr_matrix((np.ones(len(w)), self.indices, self.indptr), shape=(self.n, self.n))
        if (a != a.T).nnz:
            raise DomainError("adjacency must be symmetric (w_xy exists iff w_yx does)")

    # structure
    @cached_property
    def rows(self):
        return _readonly(np.repeat(np.arange(self.n), np.diff(self.indptr)))

    @cached_property
    def csr(self):
        return sp.csr_matrix((self.weights, self.indices, self.indptr), shape=(self.n, self.n))

    @cached_property
    def symmetric(self):
        W = self.csr
        return bool(abs(W - W.T).max() == 0) if W.nnz else True

    @cached_property
    def degree(self):
        return _readonly(np.bincount(self.rows, self.weights, minlength=self.n).astype(float))

    @property
    def num_edges(self):
        """Number of undirected edges."""
        return len(self.indices) // 2

    @property
    def w_min(self):
        return float(self.weights.min()) if len(self.weights) else np.inf

    def neighbors(self, x):
        x = self.check_vertex(x)
        return self.indices[self.indptr[x]:self.indptr[x + 1]]

    def neighbor_weights(self, x):
        x = self.check_vertex(x)
        return self.weights[self.indptr[x]:self.indptr[x + 1]]

    def weight(self, x, y):
        nb = self.neighbors(x)
        j = np.searchsorted(nb, y)
        if j < len(nb) and nb[j] == y:
            return float(self.weights[self.indptr[x] + j])
        return 0.0

    def edges(self):
        """Directed edge list as arrays (x, y, w)."""
        return self.rows, self.indices, self.weights

    def check_vertex(self, x):
        if isinstance(x, (bool, np.bool_)) or not isinstance(x, (int, np.integer)):
            raise DomainError(f"vertex must be an integer index, got {x!r}")
        if not 0 <= x < self.n:
            raise DomainError(f"unknown vertex {x}")
        return int(x)

    # distances
    def distances(self, x0):
        """Hop distances from x0 (inf when unreachable)."""
        x0 = self.check_vertex(x0)
        return shortest_path(self.csr, unweighted=True, indices=x0, directed=True)

    def distance(self, x, y):
        d = self.distances(x)[self.check_vertex(y)]
        return int(d) if np.isfinite(d) else np.inf

    @cached_property
    def _all_distances(self):
        return shortest_path(self.csr, unweighted=True, directed=True)

    def distance_matrix(self):
        return self._all_distances

    def ball(self, x0, r):
        if r < 0:
            raise DomainError("radius must be nonnegative")
        return np.flatnonzero(self.distances(x0) <= r)

    def is_connected(self):
        if self.n == 0:
            return True
        return bool(np.all(np.isfinite(self.distances(0))))

    def subgraph(self, vertices):
        """Induced subgraph; returns (H, vertices) with H vertex i = vertices[i]."""
        vertices = np.asarray(sorted(set(int(v) for v in vertices)), dtype=np.int64)
        pos = -np.ones(self.n, dtype=np.int64)
        pos[vertices] = np.arange(len(vertices))
        r, c, w = self.edges()
        keep = (pos[r] >= 0) & (pos[c] >= 0)
        labels = None if self.labels is None else [self.labels[v] for v in vertices]
        H = WeightedGraph.from_edges(len(vertices), zip(pos[r[keep]], pos[c[keep]], w[keep]), labels)
        return H, vertices

    def scaled(self, c):
        return WeightedGraph(self.n, self.indptr, self.indices, self.weights * c, self.labels)

    def __repr__(self):
        return f"WeightedGraph(n={self.n}, edges={self.num_edges}, symmetric={self.symmetric})"


class VertexMeasure:
    """Positive measure on the vertices."""

    def __init__(self, values, kind="explicit"):
        v = np.asarray(values, dtype=float)
        if v.ndim != 1:
            raise DomainError("measure must be one-dimensional")
        if not np.all(np.isfinite(v)) or np.any(v <= 0):
            raise DomainError("measure values must be finite and > 0")
        self.values = _readonly(v)
        self.kind = kind

    @classmethod
    def unit(cls, G):
        return cls(np.ones(G.n), "unit")

    @classmethod
    def degree(cls, G):
        return cls(G.degree, "degree")

    @classmethod
    def of_kind(cls, G, kind, values=None):
        if kind == "unit":
            return cls.unit(G)
        if kind == "degree":
            return cls.degree(G)
        if kind == "explicit":
            if values is None or len(values) != G.n:
                raise DomainError("explicit measure needs one value per vertex")
            return cls(values, "explicit")
        raise DomainError(f"unknown measure kind {kind!r}")

    @property
    def mu_max(self):
        return float(self.values.max())

    def __len__(self):
        return len(self.values)

    def __getitem__(self, x):
        return self.values[x]

    def total(self, vertices=None):
        return float(self.values.sum() if vertices is None else self.values[vertices].sum())

    def restrict(self, vertices):
        return VertexMeasure(self.values[np.asarray(vertices)], self.kind)

    def scaled(self, c):
        return VertexMeasure(self.values * c, self.kind)

    def is_constant(self):
        return bool(np.all(self.values == self.values[0]))


@dataclass(frozen=True)
class GraphConstants:
    d_w: float
    d_mu: float
    w_min: float
    mu_max: float

    def as_dict(self):
        return {"d_w": self.d_w, "d_mu": self.d_mu, "w_min": self.w_min, "mu_max": self.mu_max}


def graph_constants(G, mu):
    if G.n == 0:
        raise DomainError("empty graph")
    _check_measure(G, mu)
    r, _, w = G.edges()
    deg = G.degree
    d_w = float(np.max(deg[r] / w)) if len(w) else 0.0
    d_mu = float(np.max(deg / mu.values))
    return GraphConstants(d_w=d_w, d_mu=d_mu, w_min=G.w_min, mu_max=mu.mu_max)


def _check_measure(G, mu):
    if len(mu) != G.n:
        raise DomainError(f"measure has {len(mu)} entries for {G.n} vertices")


def ball(G, x0, r):
    return G.ball(x0, r)


def two_ball(G, x):
    return G.ball(x, 2)


# ---------------------------------------------------------------- operators

def _as_values(G, f):
    f = np.asarray(f, dtype=float)
    if f.shape[-1] != G.n:
        raise DomainError(f"function has {f.shape[-1]} values for {G.n} vertices")
    return f


def _need(G, f, verts, positive=False, what="f"):
    vals = f[..., verts]
    if not np.all(np.isfinite(vals)):
        raise DomainError(f"{what} undefined (non-finite) on a required vertex")
    if positive and np.any(vals <= 0):
        raise DomainError(f"{what} must be positive on the 2-ball")


def _lap(G, mu, F):
    return _kernels.laplacian_batch(G.indptr, G.indices, G.weights, mu.values, F)


def _gam(G, mu, F, H):
    return _kernels.gamma_batch(G.indptr, G.indices, G.weights, mu.values, F, H)


def _item(v):
    return float(v) if np.ndim(v) == 0 else v


def _shape_out(out, f):
    return out[0] if np.ndim(f) == 1 else out


def laplacian(G, mu, f, x=None):
    """(1/mu(x)) sum_y w_xy (f(y) - f(x))."""
    _check_measure(G, mu)
    f = _as_values(G, f)
    if x is None:
        return _shape_out(_lap(G, mu, f), f)
    x = G.check_vertex(x)
    nb = G.neighbors(x)
    _need(G, f, np.append(nb, x))
    w = G.neighbor_weights(x)
    return float(w @ (f[nb] - f[x]) / mu.values[x])


def gamma(G, mu, f, g=None, x=None):
    _check_measure(G, mu)
    f = _as_values(G, f)
    g = f if g is None else _as_values(G, g)
    if x is None:
        return _shape_out(_gam(G, mu, f, g), f if np.ndim(f) >= np.ndim(g) else g)
    x = G.check_vertex(x)
    nb = G.neighbors(x)
    _need(G, f, np.append(nb, x))
    _need(G, g, np.append(nb, x), what="g")
    w = G.neighbor_weights(x)
    return float(w @ ((f[nb] - f[x]) * (g[nb] - g[x])) / (2.0 * mu.values[x]))


def _gamma2_parts(G, mu, f):
    """Pieces shared by Gamma_2 and the two Gamma-tilde-2 formulas (batch)."""
    F = np.atleast_2d(f)
    Gf = _gam(G, mu, F, F)
    Lf = _lap(G, mu, F)
    half_lap_gamma = 0.5 * _lap(G, mu, Gf)
    return F, Gf, Lf, half_lap_gamma


def gamma2(G, mu, f, x=None):
    """Gamma_2(f) = (Delta Gamma(f) - 2 Gamma(f, Delta f)) / 2."""
    _check_measure(G, mu)
    f = _as_values(G, f)
    if x is not None:
        x = G.check_vertex(x)
        _need(G, f, G.ball(x, 2))
        return _item(gamma2(G, mu, f)[..., x])
    F, Gf, Lf, hlg = _gamma2_parts(G, mu, f)
    return _shape_out(hlg - _gam(G, mu, F, Lf), f)


def close(a, b, scale=0.0, rtol=None, atol=None):
    """Equality under the package tolerance policy (elementwise)."""
    rtol = _config.REL_TOL if rtol is None else rtol
    atol = _config.ABS_TOL if atol is None else atol
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ref = np.maximum(np.maximum(np.abs(a), np.abs(b)), np.abs(scale))
    return np.abs(a - b) <= rtol * ref + atol


def gamma2_tilde_both(G, mu, f):
    """Both closed forms of Gamma-tilde-2 plus the magnitude of their terms.

    form A: Gamma_2(f) - Gamma(f, Gamma(f)/f)
    form B: Delta Gamma(f)/2 - Gamma(f, Delta(f^2)/(2f))
    """
    F, Gf, Lf, hlg = _gamma2_parts(G, mu, f)
    t1 = _gam(G, mu, F, Lf)
    t2 = _gam(G, mu, F, Gf / F)
    t3 = _gam(G, mu, F, _lap(G, mu, F * F) / (2.0 * F))
    a = hlg - t1 - t2
    b = hlg - t3
    scale = np.maximum.reduce([np.abs(hlg), np.abs(t1), np.abs(t2), np.abs(t3)])
    return a, b, scale


def gamma2_tilde(G, mu, f, x=None, check=None):
    """Gamma_2(f) - Gamma(f, Gamma(f)/f) for positive f.

    With ``check`` (default: the GRAPHCDE_DEBUG switch) the alternative
    form is evaluated too and the two must agree to 1e-10 relative.
    """
    _check_measure(G, mu)
    f = _as_values(G, f)
    check = _config.DEBUG if check is None else check
    if x is not None:
        x = G.check_vertex(x)
        _need(G, f, G.ball(x, 2), positive=True)
        H, verts = G.subgraph(G.ball(x, 2))
        i = int(np.searchsorted(verts, x))
        return _item(gamma2_tilde(H, mu.restrict(verts), f[..., verts], check=check)[..., i])
    if not np.all(f > 0):
        raise DomainError("gamma2_tilde needs f > 0")
    a, b, scale = gamma2_tilde_both(G, mu, f)
    if check:
        ok = close(a, b, scale)
        if not np.all(ok):
            err = float(np.max(np.abs(a - b)))
            raise AssertionError(f"Gamma-tilde-2 forms disagree (max abs diff {err:.3e})")
    return _shape_out(a, f)
