from fractions import Fraction as Fr

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_graph
from graphcde import (InadmissibleError, NoAdmissibleFunction, PreconditionError, VertexMeasure,
                      WeightedGraph, gamma, gamma2_tilde, laplacian)
from graphcde.curvature import (INF, Condition, build_stencil, cd_quotient_batch, cd_random_search,
                                check_cde_at, check_cde_prime_at, optimal_cd_k, optimal_cde_k, optimal_k_all,
                                reduced_value, ricci_flat_cde_check, sampling_oracle, tree_sharpness_witness,
                                universal_lower_bound, witness_slack)
from graphcde.generators import make_hypercube, make_named, make_torus, make_tree


def admissible(G, mu, x, rng, sigma=1.0, tries=1000):
    for _ in range(tries):
        f = np.exp(sigma * rng.standard_normal(G.n))
        if laplacian(G, mu, f, x) < 0:
            return f
    raise AssertionError("no admissible sample")


def test_check_cde_at_k2_exact(k2):
    G, mu = k2
    a, b = Fr(3), Fr(1)
    gt2 = (b - a) ** 2 + (b - a) ** 4 / (4 * a * b)
    exact = gt2 - Fr(1, 2) * (b - a) ** 2 - 1 * (b - a) ** 2 / 2
    assert exact == Fr(4, 3)
    assert check_cde_at(G, mu, 0, 2, 1, np.array([3.0, 1.0])) == pytest.approx(float(exact), rel=1e-12)


def test_constant_is_inadmissible():
    G, mu, _ = make_torus(2, 4)
    with pytest.raises(InadmissibleError):
        check_cde_at(G, mu, 0, 4, 0, np.full(G.n, 2.0))
    assert check_cde_prime_at(G, mu, 0, 4, 7.0, np.full(G.n, 2.0)) == 0.0


def test_zd_random_functions(rng):
    G, mu, _ = make_torus(2, 5)
    for _ in range(100):
        f = admissible(G, mu, 0, rng)
        assert check_cde_at(G, mu, 0, 4, 0, f) >= 0
    for _ in range(100):
        f = np.exp(rng.standard_normal(G.n))
        assert check_cde_prime_at(G, mu, 0, 4.53 * 2, 0, f) >= -1e-8


def test_k2_optima(k2):
    G, mu = k2
    assert optimal_cd_k(G, mu, 0, INF).optimal_k == pytest.approx(2, abs=1e-9)
    assert optimal_cd_k(G, mu, 0, 2).optimal_k == pytest.approx(1, abs=1e-9)
    r = optimal_cde_k(G, mu, 0, INF)
    assert abs(r.optimal_k - 2) < 1e-3
    r = optimal_cde_k(G, mu, 0, 2)
    assert abs(r.optimal_k - 1) < 1e-3
    assert r.boundary_approach


def test_no_admissible_function():
    G = WeightedGraph.from_edges(3, [(0, 1, 1.0)], mirror=True)
    mu = VertexMeasure.unit(G)
    with pytest.raises(NoAdmissibleFunction):
        optimal_cde_k(G, mu, 2, 2)
    with pytest.raises(NoAdmissibleFunction):
        optimal_cd_k(G, mu, 2, 2)


def test_tree_has_no_cde_prime_bound():
    G = make_tree(3, 2)
    mu = VertexMeasure.degree(G)
    r = optimal_cde_k(G, mu, 0, 2, condition="cdeprime")
    assert r.diagnostics["unbounded"]
    f = r.witness_array(G.n)
    for K in (1.0, 10.0, 1e3, 1e6):
        assert check_cde_prime_at(G, mu, 0, 2, -K, f) < 0


def test_wide_spread_evaluated_exactly():
    # values spanning e^{+-80}: float formulas cancel, the rational route does not
    from test_graph import r_gam, r_gam2_tilde
    G = make_tree(3, 2)
    mu = VertexMeasure.degree(G)
    f = np.exp(np.array([0, -40, -0.5, 39, -80, -80, -1.1, -1.1, 78, 78], dtype=float))
    adj = {x: {int(y): Fr(float(w)) for y, w in zip(G.neighbors(x), G.neighbor_weights(x))} for x in range(G.n)}
    m = {x: Fr(float(mu.values[x])) for x in range(G.n)}
    ff = {x: Fr(float(f[x])) for x in range(G.n)}
    exact = r_gam2_tilde(adj, m, ff)[0] - r_gam(adj, m, ff, ff)[0]
    assert check_cde_prime_at(G, mu, 0, INF, 1.0, f) == pytest.approx(float(exact), rel=1e-12)


def test_universal_lower_bound_examples(k2):
    G, _, _ = make_torus(2, 4)
    assert universal_lower_bound(G, VertexMeasure.degree(G)) == -(4 / 2 + 1)
    assert universal_lower_bound(*k2) == -1.5
    G, _, _ = make_torus(1, 5)
    assert universal_lower_bound(G, VertexMeasure.degree(G)) == -2


def test_tree_sharpness():
    ratios = {}
    for D in (16, 64, 256):
        w, ratios[D] = tree_sharpness_witness(D)
    assert ratios[16] <= -0.3 * 16
    assert ratios[256] <= -0.4 * 256
    seq = [ratios[D] / (-D / 2) for D in (16, 64, 256)]
    assert seq[0] < seq[1] < seq[2] < 1
    G = make_tree(16, 2)
    mu = VertexMeasure.degree(G)
    f = np.array([w for _, w in sorted(tree_sharpness_witness(16)[0].items())])
    for c in (0.01, 7.0):
        g = c * f
        assert gamma2_tilde(G, mu, g, 0) / gamma(G, mu, g, x=0) == pytest.approx(ratios[16], rel=1e-10)


def test_ricci_flat_checks():
    G, mu, S = make_torus(2, 5)
    assert ricci_flat_cde_check(G, mu, S, vertices=[0]).status == "pass"
    G, mu, S = make_torus(1, 5, weights=[1, 2])
    assert ricci_flat_cde_check(G, mu, S, mode="weakly_consistent").status == "pass"
    G, S = make_hypercube(3)
    assert ricci_flat_cde_check(G, VertexMeasure.unit(G), S, vertices=[0, 5]).status == "pass"
    with pytest.raises(PreconditionError):
        ricci_flat_cde_check(G, VertexMeasure(np.arange(1.0, 9.0)), S)


def test_star_fails_ricci_flat_precondition():
    from graphcde.generators import RicciFlatStructure
    G = make_named("star", 3)
    eta = np.zeros((3, 4), dtype=int)
    eta[:, 0] = [1, 2, 3]
    with pytest.raises(PreconditionError):
        ricci_flat_cde_check(G, VertexMeasure.unit(G), RicciFlatStructure(eta))


def test_scale_invariance(rng):
    G, mu = random_graph(np.random.default_rng(3), nmax=7, nmin=5)
    a = optimal_cde_k(G, mu, 0, 3)
    b = optimal_cde_k(G.scaled(2.5), mu.scaled(2.5), 0, 3)
    assert b.optimal_k == pytest.approx(a.optimal_k, abs=1e-8)
    c = optimal_cd_k(G, mu, 0, 3)
    d = optimal_cd_k(G.scaled(2.5), mu.scaled(2.5), 0, 3)
    assert d.optimal_k == pytest.approx(c.optimal_k, abs=1e-8)
    f = admissible(G, mu, 0, rng)
    r = check_cde_at(G, mu, 0, 3, 0, f) / gamma(G, mu, f, x=0)
    r5 = check_cde_at(G, mu, 0, 3, 0, 5 * f) / gamma(G, mu, 5 * f, x=0)
    assert r5 == pytest.approx(r, rel=1e-8)


def test_monotone_in_n():
    rng = np.random.default_rng(11)
    for _ in range(4):
        G, mu = random_graph(rng, nmax=8)
        vals = [optimal_cde_k(G, mu, 0, n, oracle_samples=0).optimal_k for n in (1.5, 2, 4, 10, INF)]
        assert all(a <= b + 1e-7 for a, b in zip(vals, vals[1:])), vals


@given(st.integers(0, 2 ** 32 - 1))
def test_cde_prime_implies_cde(seed):
    rng = np.random.default_rng(seed)
    G, mu = random_graph(rng, nmax=8)
    for _ in range(20):
        f = np.exp(1.5 * rng.standard_normal(G.n))
        x = int(rng.integers(G.n))
        if laplacian(G, mu, f, x) >= 0:
            continue
        n, K = rng.uniform(1, 10), rng.normal()
        p = check_cde_prime_at(G, mu, x, n, K, f)
        c = check_cde_at(G, mu, x, n, K, f)
        assert c >= p - 1e-9 * (1 + abs(p))


def test_solver_beats_sampling():
    rng = np.random.default_rng(8)
    for _ in range(6):
        G, mu = random_graph(rng, nmax=7)
        r = optimal_cde_k(G, mu, 0, 2, oracle_samples=0)
        ov, of = sampling_oracle(G, mu, 0, 2, samples=100_000)
        assert r.optimal_k <= ov + 1e-6
        assert abs(witness_slack(G, mu, r)) < 1e-7


def test_cd_eigensolve_vs_search():
    rng = np.random.default_rng(2)
    for _ in range(3):
        G, mu = random_graph(rng, nmax=6)
        k = optimal_cd_k(G, mu, 0, 3).optimal_k
        s = cd_random_search(G, mu, 0, 3, budget=200_000, walkers=500)
        assert k - 1e-9 <= s <= k + 1e-3
        st_ = build_stencil(G, mu, 0)
        q = cd_quotient_batch(G, mu, 0, 3, rng.normal(size=(2000, len(st_.verts))))
        assert np.nanmin(q) >= k - 1e-9


def test_reduced_objective_matches_generic(rng):
    G, mu = random_graph(np.random.default_rng(4), nmax=9, nmin=6)
    st_ = build_stencil(G, mu, 0)
    S = rng.normal(size=(8, len(st_.nbrs)))
    r, _, delta, gx = reduced_value(st_, S, 4.0)
    full = st_.fill(S)
    for i in range(8):
        f = np.ones(G.n)
        f[st_.verts] = full[i]
        direct = (gamma2_tilde(G, mu, f, 0) - 0.25 * laplacian(G, mu, f, 0) ** 2) / gamma(G, mu, f, x=0)
        assert r[i] == pytest.approx(direct, rel=1e-9, abs=1e-12)
        assert delta[i] == pytest.approx(laplacian(G, mu, f, 0), rel=1e-12, abs=1e-14)


def test_distance_two_elimination_is_optimal(rng):
    # perturbing the eliminated distance-two values never lowers the ratio
    G, mu, _ = make_torus(2, 5)
    st_ = build_stencil(G, mu, 0)
    S = 0.5 * rng.normal(size=(1, len(st_.nbrs)))
    base = st_.fill(S)[0]
    f = np.ones(G.n)
    f[st_.verts] = base
    g0 = gamma2_tilde(G, mu, f, 0)
    k = 1 + len(st_.nbrs)
    for _ in range(50):
        h = f.copy()
        h[st_.verts[k:]] *= np.exp(0.3 * rng.normal(size=len(st_.d2)))
        assert gamma2_tilde(G, mu, h, 0) >= g0 - 1e-12


def test_deterministic_and_order_free():
    G, mu, _ = make_torus(2, 4)
    G = G.scaled(1.0)
    a = optimal_k_all(G, mu, 3, vertices=[3, 0])
    b = [optimal_cde_k(G, mu, 0, 3), optimal_cde_k(G, mu, 3, 3)]
    assert a[1].to_dict() == b[0].to_dict()
    assert a[0].to_dict() == b[1].to_dict()


def test_report_json():
    G = make_named("path", 2)
    d = optimal_cde_k(G, VertexMeasure.unit(G), 0, INF).to_dict()
    assert set(d) >= {"vertex", "n", "condition", "optimal_k", "witness", "method", "boundary_approach"}
    assert d["n"] == "inf" and d["condition"] == Condition.CDE.value
