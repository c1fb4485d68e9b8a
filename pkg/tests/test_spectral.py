import itertools
import math

import numpy as np
import pytest
from scipy.optimize import minimize

from conftest import random_graph
from graphcde import DomainError, PreconditionError, VertexMeasure, WeightedGraph, gamma
from graphcde.generators import make_named, make_torus
from graphcde.heat import heat_semigroup
from graphcde.spectral import (HeatKernelBoundConstants, buser_constant, cheeger_constant, cheeger_lower_bound,
                               check_infnorm_lemma, check_l1_lemma, heat_kernel, heat_operator_norms,
                               poincare_constant, poincare_quotient, polynomial_growth_report, spectrum,
                               verify_buser, verify_heat_kernel_bounds, volume_doubling_constant)


def brute_cheeger(G, mu):
    r, c, w = G.edges()
    vol = mu.total()
    best = math.inf
    for k in range(1, G.n):
        for U in itertools.combinations(range(G.n), k):
            inU = np.zeros(G.n, bool)
            inU[list(U)] = True
            v = mu.values[inU].sum()
            if v > vol / 2 + 1e-12:
                continue
            best = min(best, w[inU[r] & ~inU[c]].sum() / v)
    return best


def test_spectrum_examples(k2):
    C4 = make_named("cycle", 4)
    sp = spectrum(C4, VertexMeasure.degree(C4))
    assert np.allclose(sp.eigenvalues, [0, 1, 1, 2], atol=1e-12)
    assert sp.lambda1 == pytest.approx(1)
    C7 = make_named("cycle", 7)
    ev = spectrum(C7, VertexMeasure.degree(C7)).eigenvalues
    assert np.allclose(ev, np.sort(1 - np.cos(2 * np.pi * np.arange(7) / 7)), atol=1e-12)
    assert np.allclose(spectrum(*k2).eigenvalues, [0, 2], atol=1e-12)
    G = WeightedGraph.from_edges(4, [(0, 1, 1.0), (2, 3, 1.0)], mirror=True)
    assert spectrum(G, VertexMeasure.unit(G)).lambda1 == pytest.approx(0, abs=1e-12)
    A = WeightedGraph.from_edges(2, [(0, 1, 1.0), (1, 0, 2.0)])
    with pytest.raises(PreconditionError):
        spectrum(A, VertexMeasure.unit(A))


def test_spectral_reconstruction(rng):
    for seed in range(5):
        G, mu = random_graph(np.random.default_rng(seed), nmax=10)
        if not G.symmetric:
            continue
        f = rng.uniform(0.1, 1, G.n)
        sp = spectrum(G, mu)
        for t in (0.1, 0.7, 3.0):
            assert np.max(np.abs(heat_semigroup(G, mu, f, [t]).values[0] - sp.evolve(f, t))) <= 1e-8
        V = sp.vectors
        assert np.allclose(V.T @ (mu.values[:, None] * V), np.eye(G.n), atol=1e-10)


def test_cheeger_examples(k2):
    C4 = make_named("cycle", 4)
    h, cut = cheeger_constant(C4, VertexMeasure.degree(C4))
    assert h == 0.5 and cut.boundary == 2 and cut.volume == 4
    U = sorted(cut.subset)
    assert C4.weight(U[0], U[1]) == 1
    assert cheeger_constant(*k2)[0] == 1
    G = WeightedGraph.from_edges(5, [(0, 1, 1.0), (2, 3, 1.0), (3, 4, 1.0)], mirror=True)
    h, cut = cheeger_constant(G, VertexMeasure.unit(G))
    assert h == 0 and sorted(cut.subset) == [0, 1]


def test_cheeger_methods_agree():
    rng = np.random.default_rng(21)
    done = 0
    while done < 8:
        G, mu = random_graph(rng, nmax=10, nmin=4)
        if not G.symmetric:
            continue
        done += 1
        h_exact = cheeger_constant(G, mu, "exact")[0]
        assert h_exact == pytest.approx(brute_cheeger(G, mu), rel=1e-12)
        assert cheeger_constant(G, mu, "milp")[0] == pytest.approx(h_exact, rel=1e-9)
        hs, cs = cheeger_constant(G, mu, "sweep")
        assert hs >= h_exact - 1e-12 and cs.approximate


def test_buser_constant_values():
    assert buser_constant(2, 2) == 8 * math.sqrt(12)
    assert buser_constant(4, 1, 0.1, 0.5) == pytest.approx(8 * math.sqrt(3 * 1.5 * 4 / (0.5 * 0.25)))
    with pytest.raises(DomainError):
        buser_constant(4, 1, 0.1)


def test_buser_c4():
    C4 = make_named("cycle", 4)
    r = verify_buser(C4, VertexMeasure.degree(C4), 2)
    assert r.rhs == pytest.approx(768) and r.margin == pytest.approx(767)
    assert r.status == "pass" and r.hypothesis_checked


def test_buser_grows_with_torus():
    out = []
    for m in (4, 6, 8):
        G, mu, _ = make_torus(2, m)
        r = verify_buser(G, mu, 4, curvature=0.0, cheeger_method="exact" if m < 8 else "sweep")
        assert r.status == "pass" and r.margin >= 0
        assert r.details["cheeger_lower"]["margin"] >= -1e-9
        out.append(r.details["margin_over_lambda1"])
    assert out[0] < out[1] or out[1] < out[2]


def test_buser_hypothesis():
    G, mu, _ = make_torus(2, 4)
    assert verify_buser(G, mu, 4, curvature=-1.0).status == "hypothesis-unverified"
    assert verify_buser(G, mu, 4, K=2.0, alpha=0.5, curvature=-1.0).status == "pass"


def test_cheeger_lower_bound_random():
    rng = np.random.default_rng(5)
    done = 0
    while done < 10:
        G, mu = random_graph(rng, nmax=9)
        if not G.symmetric:
            continue
        done += 1
        assert cheeger_lower_bound(G, mu).margin >= -1e-9


def test_lemmas(rng):
    G, mu, _ = make_torus(2, 5)
    t = np.linspace(0.05, 1, 20)
    for _ in range(5):
        f = rng.uniform(0.1, 1, G.n)
        r = check_infnorm_lemma(G, mu, f, 4, 0.1, 0.5, t, 1)
        assert r.status == "pass" and r.margin >= -1e-9
        r2 = check_infnorm_lemma(G, mu, 2 * f, 4, 0.1, 0.5, t, 1)
        assert r2.lhs == pytest.approx(4 * r.lhs) and r2.rhs == pytest.approx(4 * r.rhs)
    assert check_infnorm_lemma(G, mu, np.full(G.n, 3.0), 4, 0.1, 0.5, t, 1).lhs == pytest.approx(0, abs=1e-20)
    U = np.zeros(G.n)
    U[[0, 1, 5, 6]] = 1
    r = check_l1_lemma(G, mu, U, 4, 0.1, 0.5, [1e-3, 1e-2, 0.5, 1], 1)
    assert r.status == "pass" and np.all(r.details["margins"][:2] > 0)
    r = check_l1_lemma(G, mu, np.full(G.n, 2.0), 4, 0.1, 0.5, [0.5], 1)
    assert r.margin == pytest.approx(0, abs=1e-12)
    with pytest.raises(DomainError):
        check_l1_lemma(G, mu, U, 4, 0.1, 0.5, [2.0], 1)


def test_heat_kernel_and_norms():
    G, mu, _ = make_torus(2, 4, measure_kind="degree")
    P = heat_kernel(G, mu, 0.8)
    assert np.allclose(P, P.T, atol=1e-13)
    f = np.linspace(1, 2, G.n)
    assert np.allclose(P @ (mu.values * f), heat_semigroup(G, mu, f, [0.8]).values[0])
    big = heat_kernel(G, mu, 200.0)
    assert np.allclose(big, 1 / mu.total(), rtol=1e-8)
    norms = heat_operator_norms(G, mu, 0.5)
    assert norms["inf_to_inf"] == pytest.approx(norms["one_to_one"], rel=1e-12)
    Gw, mw = random_graph(np.random.default_rng(30), nmax=8, nmin=6)
    if Gw.symmetric:
        n2 = heat_operator_norms(Gw, mw, 0.3)
        assert n2["inf_to_inf"] == pytest.approx(n2["one_to_one"], rel=1e-10)


def test_heat_kernel_bounds_fit_and_check():
    G, mu, _ = make_torus(2, 7)
    r = verify_heat_kernel_bounds(G, mu, 4)
    assert r.status == "pass"
    c = r.details["constants"]
    assert all(np.isfinite([c["C_lower"], c["C_prime"], c["C_upper"]]))
    assert r.details["fit_pairs"] + r.details["recheck_pairs"] == G.n * G.n
    k = HeatKernelBoundConstants(c["C_lower"], c["C_prime"], c["C_upper"], 4)
    assert verify_heat_kernel_bounds(G, mu, 4, constants=k).status == "pass"
    bad = HeatKernelBoundConstants(c["C_lower"] * 100, c["C_prime"], c["C_upper"], 4)
    assert verify_heat_kernel_bounds(G, mu, 4, constants=bad).status == "fail"
    assert polynomial_growth_report(G, mu, k, np.arange(2.0, 11.0)).status == "pass"
    with pytest.raises(DomainError):
        verify_heat_kernel_bounds(G, mu, 4, t_grid=[1.0, 2.0])


def test_volume_doubling():
    K5 = make_named("complete", 5)
    assert volume_doubling_constant(K5, VertexMeasure.unit(K5), [1, 2, 3]) == 1.0
    C8 = make_named("cycle", 8)
    assert volume_doubling_constant(C8, VertexMeasure.unit(C8), [1]) == pytest.approx(5 / 3)


def test_poincare_against_optimizer(rng):
    P5 = make_named("path", 5)
    mu = VertexMeasure.unit(P5)
    c = poincare_constant(P5, mu, 2, 1)
    best = max(-minimize(lambda f: -poincare_quotient(P5, mu, 2, 1, f), rng.normal(size=5)).fun
               for _ in range(10))
    assert c == pytest.approx(best, abs=1e-6)
    for _ in range(200):
        assert poincare_quotient(P5, mu, 2, 1, rng.normal(size=5)) <= c + 1e-12
    G, mg, _ = make_torus(2, 6)
    c2 = poincare_constant(G, mg, 0, 1)
    f = rng.normal(size=len(G.ball(0, 2)))
    assert np.isfinite(c2) and poincare_quotient(G, mg, 0, 1, f) <= c2 + 1e-12
