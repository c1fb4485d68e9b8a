import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from graphcde import CapExceededError, DomainError, UnreachableError, VertexMeasure, WeightedGraph
from graphcde.generators import make_named, make_torus
from graphcde.harnack import (AgmonQuery, HarnackConstants, agmon_closed_form, agmon_distance, agmon_search,
                              check_averaging_lemma, verify_H_property, verify_harnack)
from graphcde.heat import Potential, heat_semigroup

TG = np.round(np.linspace(0.1, 4, 40), 12)


@pytest.fixture(scope="module")
def torus_deg():
    return make_torus(2, 5, measure_kind="degree")[:2]


def brute_agmon(G, q, x, y, T1, T2, cap, mu_max=1.0, w_min=1.0):
    """Enumerate every walk up to ``cap`` hops and integrate with quad."""
    best = math.inf
    dT = T2 - T1
    for k in range(1, cap + 1):
        for walk in itertools.product(range(G.n), repeat=k - 1):
            p = [x, *walk, y]
            if any(G.weight(a, b) == 0 for a, b in zip(p, p[1:])):
                continue
            h = dT / k
            tot = 2 * mu_max * k * k / (w_min * dT)
            for i in range(k):
                lo, hi = T1 + i * h, T1 + (i + 1) * h
                tot += quad(lambda t: q.at(t)[p[i]], lo, hi, points=q.times)[0]
                tot += k / dT ** 2 * quad(lambda t: (t - lo) ** 2 * (q.at(t)[p[i]] - q.at(t)[p[i + 1]]),
                                          lo, hi, points=q.times)[0]
            best = min(best, tot)
    return best


def test_closed_form_examples():
    P = make_named("path", 3)
    mu = VertexMeasure.unit(P)
    assert agmon_distance(P, mu, AgmonQuery(0, 2, 1.0, 2.0)) == 8
    assert agmon_distance(P, mu, AgmonQuery(1, 1, 1.0, 2.0)) == 0
    assert agmon_closed_form(P, mu, 0, 2, 1.0, 2.0) == 8


def test_dp_matches_closed_form(torus_deg, rng):
    G, mu = torus_deg
    zero = Potential(G, mu, np.zeros(G.n))
    for _ in range(30):
        x, y = (int(v) for v in rng.integers(0, G.n, 2))
        T1 = rng.uniform(0.1, 1)
        T2 = T1 + rng.uniform(0.1, 2)
        cf = agmon_closed_form(G, mu, x, y, T1, T2)
        assert agmon_distance(G, mu, AgmonQuery(x, y, T1, T2)) == pytest.approx(cf, rel=1e-12, abs=1e-12)
        assert agmon_distance(G, mu, AgmonQuery(x, y, T1, T2, q=zero)) == pytest.approx(cf, rel=1e-12, abs=1e-12)


def test_constant_potential_telescopes():
    C6 = make_named("cycle", 6)
    mu = VertexMeasure.unit(C6)
    q = Potential(C6, mu, np.full(6, 0.7))
    r = agmon_search(C6, mu, AgmonQuery(0, 3, 0.5, 1.5, q=q))
    assert r.value == pytest.approx(2 * 9 / 1.0 + 0.7 * 1.0, rel=1e-12)
    assert r.length == 3 and r.certified


def test_time_dependent_potential_vs_brute_force(rng):
    C5 = make_named("cycle", 5)
    mu = VertexMeasure.unit(C5)
    T = np.linspace(0, 3, 13)
    q = Potential(C5, mu, rng.uniform(0, 2, (13, 5)), times=T)
    qq = AgmonQuery(0, 2, 0.3, 2.1, q=q, max_path_length=6)
    r = agmon_search(C5, mu, qq)
    assert r.value == pytest.approx(brute_agmon(C5, q, 0, 2, 0.3, 2.1, 6), rel=1e-9)


def test_unreachable_and_cap():
    G = WeightedGraph.from_edges(4, [(0, 1, 1.0), (2, 3, 1.0)], mirror=True)
    mu = VertexMeasure.unit(G)
    with pytest.raises(UnreachableError):
        agmon_distance(G, mu, AgmonQuery(0, 3, 1.0, 2.0))
    P = make_named("path", 7)
    mp = VertexMeasure.unit(P)
    with pytest.raises(UnreachableError):
        agmon_distance(P, mp, AgmonQuery(0, 4, 1.0, 2.0, x0=0, R=2))
    with pytest.raises(CapExceededError):
        agmon_distance(P, mp, AgmonQuery(0, 4, 1.0, 2.0, max_path_length=3))
    # a strongly negative potential far from the path rewards long detours
    q = Potential(P, mp, np.array([0, 0, 0, 0, -400.0, -400.0, -400.0]))
    with pytest.raises(CapExceededError) as exc:
        agmon_distance(P, mp, AgmonQuery(0, 1, 1.0, 2.0, q=q, max_path_length=4))
    assert exc.value.best is not None


def test_monotone_and_symmetric(torus_deg):
    G, mu = torus_deg
    vals = [agmon_distance(G, mu, AgmonQuery(0, 12, 1.0, 1.0 + dT)) for dT in (0.5, 1.0, 2.0, 4.0)]
    assert all(a >= b for a, b in zip(vals, vals[1:]))
    assert agmon_distance(G, mu, AgmonQuery(3, 17, 1, 2)) == agmon_distance(G, mu, AgmonQuery(17, 3, 1, 2))


def test_constant_solution_margin(torus_deg):
    G, mu = torus_deg
    sol = heat_semigroup(G, mu, np.full(G.n, 2.0), TG)
    c = HarnackConstants(2.0, 0.5)
    Q = AgmonQuery(0, 7, TG[3], TG[20])
    r = verify_harnack(G, mu, sol, c, Q)
    rho = agmon_distance(G, mu, Q)
    assert r.margin == pytest.approx(2 * math.log(TG[20] / TG[3]) + 0.5 * (TG[20] - TG[3]) + rho)


def test_harnack_on_torus(torus_deg, rng):
    G, mu = torus_deg
    for _ in range(5):
        sol = heat_semigroup(G, mu, rng.uniform(0.01, 1, G.n) ** 3, TG)
        for _ in range(4):
            x, y = (int(v) for v in rng.integers(0, G.n, 2))
            j1, j2 = sorted(rng.choice(len(TG), 2, replace=False))
            Q = AgmonQuery(x, y, TG[j1], TG[j2])
            r = verify_harnack(G, mu, sol, HarnackConstants(4.0), Q, form="corollary")
            assert r.status == "pass" and r.margin >= -1e-9
            r = verify_harnack(G, mu, sol, HarnackConstants.from_gradient("finite_n0", 4), Q)
            assert r.status == "pass" and r.margin >= -1e-9


def test_adversarial_short_window(torus_deg):
    G, mu = torus_deg
    u0 = np.full(G.n, 1e-3)
    u0[0] = 1.0
    T = np.round(np.linspace(1.0, 1.2, 21), 12)
    sol = heat_semigroup(G, mu, u0, T)
    for j in (1, 5, 20):
        Q = AgmonQuery(0, 12, T[0], T[j])
        r = verify_harnack(G, mu, sol, HarnackConstants(4.0), Q, form="corollary")
        assert r.status == "pass"
        assert r.details["agmon"]["value"] > 0.5 * r.rhs


def test_corollary_needs_normalised_measure():
    G, mu, _ = make_torus(2, 5)
    sol = heat_semigroup(G, mu, np.linspace(1, 2, G.n), TG)
    r = verify_harnack(G, mu, sol, HarnackConstants(4.0), AgmonQuery(0, 1, TG[1], TG[5]), form="corollary")
    assert r.status == "hypothesis-unverified"


def test_hypothesis_sweep_catches_small_constants(torus_deg):
    G, mu = torus_deg
    u0 = np.full(G.n, 1e-3)
    u0[0] = 1.0
    sol = heat_semigroup(G, mu, u0, TG)
    r = verify_harnack(G, mu, sol, HarnackConstants(0.01), AgmonQuery(0, 1, TG[1], TG[5]))
    assert r.status == "hypothesis-unverified"
    assert HarnackConstants.from_gradient("finite_nK", 4, K=0.1, alpha=0.5).to_dict() == pytest.approx({"c1": 4.0, "c2": 0.8})
    with pytest.raises(DomainError):
        HarnackConstants(-1.0)


def test_averaging_lemma_examples():
    t = np.linspace(0, 1, 129)
    z = np.zeros_like(t)
    r = check_averaging_lemma(z, z, z, 2.0, 0.0, 1.0)
    assert r.lhs == 0 and r.rhs == 2.0
    r = check_averaging_lemma(np.ones_like(t), z, z, 1.0, 0.0, 1.0)
    assert r.lhs == pytest.approx(0.0, abs=1e-12) and r.rhs == pytest.approx(1.0)
    with pytest.raises(DomainError):
        check_averaging_lemma(np.ones(10), np.ones(10), np.ones(10), 1.0, 0.0, 1.0)


@given(st.integers(0, 2 ** 32 - 1))
def test_averaging_lemma_random(seed):
    rng = np.random.default_rng(seed)
    T1 = rng.uniform(0, 2)
    T2 = T1 + rng.uniform(0.1, 3)
    coef = rng.normal(size=(3, 4))
    freq = rng.uniform(0.5, 4, (3, 4))
    c = rng.uniform(0.1, 5)

    def sample(m):
        t = np.linspace(T1, T2, m)
        return [sum(coef[j, i] * np.sin(freq[j, i] * t + i) for i in range(4)) for j in range(3)]

    r = check_averaging_lemma(*sample(257), c, T1, T2)
    assert r.margin >= -1e-6
    # oracle: the same functions at double resolution
    r2 = check_averaging_lemma(*sample(513), c, T1, T2)
    assert r2.margin >= -1e-6
    assert r.rhs == pytest.approx(r2.rhs, rel=1e-8, abs=1e-8)
    assert abs(r.lhs - r2.lhs) < 1e-3 * (1 + abs(r.lhs))


def test_H_property():
    G, mu, _ = make_torus(2, 7)
    theta = (1, 2, 3, 4)
    c_rand, rep = verify_H_property(G, mu, theta, 1, 0, trials=50)
    c_pt, _ = verify_H_property(G, mu, theta, 1, 0, trials=1, data="point")
    c_const, _ = verify_H_property(G, mu, theta, 1, 0, trials=1, data="constant")
    assert c_const == pytest.approx(1.0, rel=1e-12)
    assert math.isfinite(c_rand) and rep.status == "pass"
    assert c_pt > c_const
    assert verify_H_property(G, mu, theta, 1, 0, trials=50)[0] == c_rand
    with pytest.raises(DomainError):
        verify_H_property(G, mu, (1, 3, 2, 4), 1, 0)
