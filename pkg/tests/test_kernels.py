import os
import subprocess
import sys

import numpy as np
import pytest

from graphcde import _kernels
from graphcde.curvature import BETAS, build_stencil, inv_dim
from graphcde.generators import make_named, make_torus
from graphcde.graph import VertexMeasure

from conftest import random_graph

nb = _kernels.numba_impl
np_ = _kernels.numpy_impl
needs_numba = pytest.mark.skipif(nb is None, reason="numba backend unavailable")


def csr(G, mu):
    return G.indptr, G.indices, G.weights, mu.values


@needs_numba
def test_batch_operators_agree(rng):
    for _ in range(20):
        G, mu = random_graph(rng)
        F = rng.normal(size=(5, G.n))
        H = rng.normal(size=(5, G.n))
        a = nb.laplacian_batch(*csr(G, mu), F)
        b = np_.laplacian_batch(*csr(G, mu), F)
        assert np.allclose(a, b, rtol=1e-13, atol=1e-13)
        a = nb.gamma_batch(*csr(G, mu), F, H)
        b = np_.gamma_batch(*csr(G, mu), F, H)
        assert np.allclose(a, b, rtol=1e-13, atol=1e-13)


def _stencils(rng):
    out = []
    G, mu, _ = make_torus(2, 5)
    out.append(build_stencil(G, mu, 0))
    G = make_named("hypercube", 3)
    out.append(build_stencil(G, VertexMeasure.degree(G), 3))
    for _ in range(6):
        G, mu = random_graph(rng, nmin=4)
        out.append(build_stencil(G, mu, int(rng.integers(G.n))))
    return out


@needs_numba
@pytest.mark.parametrize("mode", [0, 1])
def test_reduced_objective_agrees(rng, mode):
    for st in _stencils(rng):
        S = np.ascontiguousarray(rng.normal(scale=0.7, size=(16, len(st.nbrs))))
        for n in (2.0, 4.5, "inf"):
            args = st.args(inv_dim(n), mode)
            a = nb.reduced_objective(S, *args)
            b = np_.reduced_objective(S, *args)
            for u, v in zip(a, b):
                assert np.allclose(u, v, rtol=1e-10, atol=1e-10)


@pytest.mark.parametrize("impl", [m for m in (np_, nb) if m is not None], ids=lambda m: m.__name__.rsplit(".", 1)[-1])
@pytest.mark.parametrize("mode", [0, 1])
def test_reduced_gradient(rng, impl, mode):
    for st in _stencils(rng)[:5]:
        args = st.args(inv_dim(3.0), mode)
        S = rng.normal(scale=0.5, size=(1, len(st.nbrs)))
        _, g, _, _ = impl.reduced_objective(S, *args)
        h = 1e-6
        for j in range(S.shape[1]):
            E = np.zeros_like(S)
            E[0, j] = h
            fd = (impl.reduced_objective(S + E, *args)[0] - impl.reduced_objective(S - E, *args)[0]) / (2 * h)
            assert fd[0] == pytest.approx(g[0, j], rel=1e-6, abs=1e-7)


@needs_numba
def test_multistart_agrees(rng):
    G = make_named("complete", 5)
    st = build_stencil(G, VertexMeasure.unit(G), 0)
    S0 = rng.normal(scale=0.5, size=(8, len(st.nbrs)))
    args = st.args(inv_dim(4.0), 1)
    a = nb.cde_multistart(np.ascontiguousarray(S0), np.array(BETAS[:1]) * 0, 200, -40.0, 40.0, *args)
    b = np_.cde_multistart(S0, [0.0], 200, -40.0, 40.0, *args)
    ra = np_.reduced_objective(a[-1], *args)[0]
    rb = np_.reduced_objective(b[-1], *args)[0]
    assert ra.min() == pytest.approx(rb.min(), abs=1e-7)


@needs_numba
def test_cut_enumerate_agrees(rng):
    for _ in range(10):
        G, mu = random_graph(rng, nmax=12, nmin=3)
        ha, ma = nb.cut_enumerate(*csr(G, mu))
        hb, mb = np_.cut_enumerate(*csr(G, mu))
        assert ha == pytest.approx(hb, rel=1e-12)
        for m in (ma, mb):
            vol = sum(mu.values[i] for i in range(G.n) if (int(m) >> i) & 1)
            assert 0 < vol <= mu.values.sum() / 2 + 1e-12


def test_pure_numpy_flag():
    env = dict(os.environ, GRAPHCDE_PURE_NUMPY="1")
    r = subprocess.run([sys.executable, "-c", "from graphcde import _kernels; print(_kernels.BACKEND)"],
                       env=env, capture_output=True, text=True)
    assert r.stdout.strip() == "numpy"
