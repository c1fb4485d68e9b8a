"""Spectrum, Cheeger constant, Buser bound, heat-kernel bounds, VD and Poincare constants."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy import optimize, sparse

from . import _config, _kernels
from .curvature import optimal_cde_k
from .errors import DomainError, PreconditionError
from .graph import _gam, graph_constants
from .heat import HeatPropagator, generator_matrix
from .reports import BoundReport

EXACT_MAX = 22
TOL = 1e-9


def _need_symmetric(G, what):
    if not G.symmetric:
        raise PreconditionError(f"{what} needs symmetric weights")


@dataclass
class Spectrum:
    eigenvalues: np.ndarray
    vectors: np.ndarray  # columns are mu-orthonormal eigenfunctions
    mu: np.ndarray

    @property
    def lambda1(self):
        return float(self.eigenvalues[1]) if len(self.eigenvalues) > 1 else 0.0

    def coefficients(self, f):
        return self.vectors.T @ (self.mu * np.asarray(f, dtype=float))

    def evolve(self, f, t):
        """sum_i exp(-lambda_i t) alpha_i psi_i."""
        a = self.coefficients(f)
        return self.vectors @ (np.exp(-self.eigenvalues * t) * a)

    def to_dict(self):
        return {"eigenvalues": self.eigenvalues, "lambda1": self.lambda1}

    def to_csv(self):
        return "i,lambda_i\n" + "".join(f"{i},{float(v)!r}\n" for i, v in enumerate(self.eigenvalues))


def spectrum(G, mu):
    """Eigenpairs of -Delta via the mu-symmetrised matrix."""
    _need_symmetric(G, "spectrum")
    if G.n > _config.DENSE_THRESHOLD:
        raise PreconditionError(f"dense eigensolve limited to {_config.DENSE_THRESHOLD} vertices")
    s = np.sqrt(mu.values)
    L = generator_matrix(G, mu)
    S = -(s[:, None] * L / s[None, :])
    S = 0.5 * (S + S.T)
    lam, V = sla.eigh(S)
    lam[np.abs(lam) < 1e-13] = 0.0
    return Spectrum(lam, V / s[:, None], mu.values.copy())


# --------------------------------------------------------------------- Cheeger

@dataclass
class CheegerCut:
    subset: np.ndarray
    boundary: float
    volume: float
    ratio: float
    method: str
    approximate: bool = False
    details: dict = field(default_factory=dict)

    def to_dict(self):
        return {"subset": self.subset, "boundary": self.boundary, "volume": self.volume, "ratio": self.ratio,
                "method": self.method, "approximate": self.approximate, "details": self.details}


def _cut(G, mu, U, method, approximate=False, **details):
    U = np.sort(np.asarray(U, dtype=np.int64))
    inside = np.zeros(G.n, bool)
    inside[U] = True
    r, c, w = G.edges()
    bnd = float(w[inside[r] & ~inside[c]].sum())
    vol = float(mu.values[U].sum())
    return CheegerCut(U, bnd, vol, bnd / vol, method, approximate, details)


def _components(G):
    ncomp, lab = sparse.csgraph.connected_components(G.csr, directed=False)
    return ncomp, lab


def _exact_enumerate(G, mu):
    h, mask = _kernels.cut_enumerate(G.indptr, G.indices, G.weights, mu.values)
    U = [i for i in range(G.n) if (int(mask) >> i) & 1]
    return _cut(G, mu, U, "exact")


def _milp_cut(G, mu, lam0, max_rounds=50):
    """Dinkelbach iterations; each round minimises |dU| - lam vol(U) as a MILP."""
    n = G.n
    r, c, w = G.edges()
    und = r < c
    er, ec, ew = r[und], c[und], w[und]
    m = len(er)
    half = mu.total() / 2.0
    # variables: x (n binaries) then y (m continuous edge indicators)
    k = np.arange(m)
    rows = np.concatenate([2 * k, 2 * k, 2 * k, 2 * k + 1, 2 * k + 1, 2 * k + 1])
    cols = np.concatenate([er, ec, n + k, er, ec, n + k])
    vals = np.concatenate([np.ones(m), -np.ones(m), -np.ones(m), -np.ones(m), np.ones(m), -np.ones(m)])
    A_edge = sparse.csr_array((vals, (rows, cols)), shape=(2 * m, n + m))
    A_vol = sparse.csr_array(np.concatenate([mu.values, np.zeros(m)])[None, :])
    A_one = sparse.csr_array(np.concatenate([np.ones(n), np.zeros(m)])[None, :])
    cons = [optimize.LinearConstraint(A_edge, -np.inf, 0.0),
            optimize.LinearConstraint(A_vol, -np.inf, half * (1 + 1e-12)),
            optimize.LinearConstraint(A_one, 1.0, np.inf)]
    integrality = np.concatenate([np.ones(n), np.zeros(m)])
    bounds = optimize.Bounds(np.zeros(n + m), np.ones(n + m))
    lam = lam0
    best = None
    for it in range(max_rounds):
        cost = np.concatenate([-lam * mu.values, ew])
        res = optimize.milp(cost, constraints=cons, integrality=integrality, bounds=bounds,
                            options={"mip_rel_gap": 0.0})
        if res.x is None:
            raise PreconditionError(f"MILP failed: {res.message}")
        U = np.flatnonzero(res.x[:n] > 0.5)
        cut = _cut(G, mu, U, "milp")
        if best is None or cut.ratio < best.ratio:
            best = cut
        if cut.boundary - lam * cut.volume >= -1e-12 * max(1.0, lam * cut.volume):
            break
        lam = cut.ratio
    best.details = {"dinkelbach_rounds": it + 1}
    return best


def _sweep(G, mu):
    spec = spectrum(G, mu)
    v = spec.vectors[:, 1]
    order = np.lexsort((np.arange(G.n), v))
    r, c, w = G.edges()
    best = None
    ratios = []
    total = mu.total()
    for k in range(1, G.n):
        U = order[:k]
        volU = float(mu.values[U].sum())
        if volU > total / 2 * (1 + 1e-12):
            U = order[k:]
        cut = _cut(G, mu, U, "sweep", True)
        ratios.append((k, cut.ratio))
        if best is None or cut.ratio < best.ratio - 1e-15:
            best = cut
    best.details = {"sweep_curve": ratios}
    return best


def cheeger_constant(G, mu, method="exact"):
    """h and a cut achieving it (exact/milp) or the best sweep cut (approximate)."""
    _need_symmetric(G, "cheeger_constant")
    if method not in ("exact", "milp", "sweep"):
        raise DomainError(f"unknown method {method!r}")
    if G.n < 2:
        raise DomainError("need at least two vertices")
    ncomp, lab = _components(G)
    if ncomp > 1:
        vols = np.bincount(lab, mu.values)
        comp = int(np.argmin(vols))
        cut = _cut(G, mu, np.flatnonzero(lab == comp), "component")
        return 0.0, cut
    if method == "sweep":
        cut = _sweep(G, mu)
    elif method == "exact" and G.n <= EXACT_MAX:
        cut = _exact_enumerate(G, mu)
    else:
        cut = _milp_cut(G, mu, _sweep(G, mu).ratio)
    return cut.ratio, cut


def cheeger_lower_bound(G, mu, h=None, lam1=None):
    """h^2 / (2 D_mu) <= lambda_1."""
    h = cheeger_constant(G, mu)[0] if h is None else h
    lam1 = spectrum(G, mu).lambda1 if lam1 is None else lam1
    dmu = graph_constants(G, mu).d_mu
    lhs = h * h / (2 * dmu)
    m = lam1 - lhs
    return BoundReport("cheeger_lower", lhs, lam1, m, {"h": h, "lambda1": lam1}, status="pass" if m >= -TOL else "fail",
                       details={"d_mu": dmu})


def buser_constant(n, mu_max, K=0.0, alpha=None):
    if K == 0:
        return 8.0 * math.sqrt(3 * n * mu_max)
    if alpha is None or not 0 < alpha < 1:
        raise DomainError("K > 0 needs alpha in (0, 1)")
    return 8.0 * math.sqrt(3 * mu_max * (2 - alpha) * n / (alpha * (1 - alpha) ** 2))


def _cde_hypothesis(G, mu, n, K, curvature, check):
    if curvature is not None:
        kmin = float(curvature) if isinstance(curvature, (int, float)) else min(r.optimal_k for r in curvature)
        return True, kmin >= -K - 1e-6, kmin
    if not check:
        return False, True, None
    kmin = min(optimal_cde_k(G, mu, x, n).optimal_k for x in range(G.n))
    return True, kmin >= -K - 1e-6, kmin


def verify_buser(G, mu, n, K=0.0, alpha=None, curvature=None, check_hypothesis=True, cheeger_method="exact"):
    _need_symmetric(G, "verify_buser")
    if not G.is_connected():
        raise PreconditionError("Buser bound is stated for connected graphs")
    if K < 0:
        raise DomainError("K must be >= 0")
    consts = graph_constants(G, mu)
    C = buser_constant(n, consts.mu_max, K, alpha)
    lam1 = spectrum(G, mu).lambda1
    h, cut = cheeger_constant(G, mu, cheeger_method)
    rhs = max(2 * C * math.sqrt(K) * h, 4 * C * C * h * h)
    checked, ok, kmin = _cde_hypothesis(G, mu, n, K, curvature, check_hypothesis)
    margin = rhs - lam1
    low = cheeger_lower_bound(G, mu, h, lam1)
    status = "hypothesis-unverified" if not ok else ("pass" if margin >= 0 else "fail")
    return BoundReport(
        name="buser",
        lhs=lam1,
        rhs=rhs,
        margin=margin,
        witness={"cut": cut.subset, "h": h},
        hypothesis_checked=checked,
        status=status,
        details={"C": C, "n": n, "K": K, "alpha": alpha, "mu_max": consts.mu_max, "cheeger_method": cut.method,
                 "cheeger_approximate": cut.approximate, "k_lower": kmin, "margin_over_lambda1": margin / lam1,
                 "cheeger_lower": low.to_dict()},
    )


# ---------------------------------------------------------------------- lemmas

def _lemma_c(n, K, alpha, t0):
    if not 0 < alpha < 1:
        raise DomainError("alpha must lie in (0, 1)")
    if K < 0:
        raise DomainError("K must be >= 0")
    return n / (2 * (1 - alpha)) + K * n * t0 / alpha


def _grid(t_grid, t0):
    t = np.atleast_1d(np.asarray(t_grid, dtype=float))
    if np.any(t <= 0) or np.any(t > t0 * (1 + 1e-12)):
        raise DomainError("need 0 < t <= t0")
    return t


def check_infnorm_lemma(G, mu, f, n, K, alpha, t_grid, t0, curvature=None, check_hypothesis=False):
    f = np.asarray(f, dtype=float)
    if np.any(f <= 0):
        raise DomainError("f must be positive")
    t = _grid(t_grid, t0)
    c = _lemma_c(n, K, alpha, t0)
    P = HeatPropagator(G, mu)
    U = P.apply(f, t)
    lhs = _gam(G, mu, U, U).max(axis=1)
    rhs = 12 * c / ((1 - alpha) * t) * np.max(np.abs(f)) ** 2
    m = rhs - lhs
    j = int(np.argmin(m))
    checked, ok, kmin = _cde_hypothesis(G, mu, n, K, curvature, check_hypothesis)
    status = "hypothesis-unverified" if not ok else ("pass" if m[j] >= -TOL else "fail")
    return BoundReport("infnorm_lemma", float(lhs[j]), float(rhs[j]), float(m[j]), {"t": float(t[j])},
                       checked, status, {"c": c, "t0": t0, "margins": m})


def check_l1_lemma(G, mu, f, n, K, alpha, t, t0, curvature=None, check_hypothesis=False):
    """f may be nonnegative (indicators are the intended use)."""
    f = np.asarray(f, dtype=float)
    if np.any(f < 0):
        raise DomainError("f must be nonnegative")
    t = _grid(t, t0)
    c = _lemma_c(n, K, alpha, t0)
    U = HeatPropagator(G, mu).apply(f, t)
    lhs = np.abs(f[None, :] - U) @ mu.values
    grad1 = float(np.sqrt(_gam(G, mu, f, f)[0]) @ mu.values)
    rhs = 8 * math.sqrt(3 * c / (1 - alpha)) * grad1 * np.sqrt(t)
    m = rhs - lhs
    j = int(np.argmin(m))
    checked, ok, kmin = _cde_hypothesis(G, mu, n, K, curvature, check_hypothesis)
    status = "hypothesis-unverified" if not ok else ("pass" if m[j] >= -TOL else "fail")
    return BoundReport("l1_lemma", float(lhs[j]), float(rhs[j]), float(m[j]), {"t": float(t[j])},
                       checked, status, {"c": c, "t0": t0, "grad_l1": grad1, "margins": m})


def heat_kernel(G, mu, t, propagator=None):
    """P_t(x, y) with u(x, t) = sum_y P_t(x, y) mu(y) u0(y)."""
    P = HeatPropagator(G, mu) if propagator is None else propagator
    return P.matrix(t) / mu.values[None, :]


def heat_operator_norms(G, mu, t):
    """Operator norms of Delta P_t on l^inf and on mu-weighted l^1."""
    L = generator_matrix(G, mu)
    A = L @ HeatPropagator(G, mu).matrix(t)
    w = mu.values
    inf_inf = float(np.abs(A).sum(axis=1).max())
    one_one = float(((w[:, None] * np.abs(A)).sum(axis=0) / w).max())
    return {"inf_to_inf": inf_inf, "one_to_one": one_one}


# ----------------------------------------------------------- heat-kernel bounds

@dataclass
class HeatKernelBoundConstants:
    C_lower: float
    C_prime: float
    C_upper: float
    n: float

    def __post_init__(self):
        if not (self.C_lower > 0 and self.C_prime > 0 and self.C_upper > 0):
            raise DomainError("heat-kernel constants must be positive")

    def to_dict(self):
        return {"C_lower": self.C_lower, "C_prime": self.C_prime, "C_upper": self.C_upper, "n": self.n}


FIT_GRID = (0.25, 0.5, 1.0, 2.0, 4.0)
SAFETY = 2.0


def _samples(G, mu, pairs, t_grid, prop):
    """Rows (x, y, t, d, P_t(x,y), vol(B(x, sqrt t))) with d <= t."""
    D = G.distance_matrix()
    out = []
    for t in t_grid:
        Pt = heat_kernel(G, mu, t, prop)
        rad = math.floor(math.sqrt(t) + 1e-12)
        vol = (np.where(D <= rad, 1.0, 0.0) @ mu.values)
        for x, y in pairs:
            d = D[x, y]
            if d <= t:
                out.append((x, y, t, d, Pt[x, y], vol[x]))
    return np.array(out, dtype=float).reshape(-1, 6)


def _check_samples(S, mu, k):
    x, y, t, d, P, vol = S.T
    y = y.astype(np.int64)
    lower = k.C_lower * t ** (-k.n) * np.exp(-k.C_prime * d * d / (t - 1))
    upper = k.C_upper * mu.values[y] / vol
    m = np.minimum(np.log(P) - np.log(lower), np.log(upper) - np.log(P))
    return m


def _fit(S, mu, n, grid, safety):
    x, y, t, d, P, vol = S.T
    y = y.astype(np.int64)
    C_upper = safety * float(np.max(P * vol / mu.values[y]))
    table = {}
    for Cp in grid:
        table[Cp] = float(np.min(P * t ** n * np.exp(Cp * d * d / (t - 1)))) / safety
    Cp = min(grid)
    return HeatKernelBoundConstants(table[Cp], Cp, C_upper, n), table


def polynomial_growth_report(G, mu, constants, t_grid):
    """vol(B(x, sqrt t)) <= (C''/C) t^n mu(x) at every vertex and t."""
    D = G.distance_matrix()
    worst = (math.inf, None, None)
    for t in t_grid:
        rad = math.floor(math.sqrt(t) + 1e-12)
        vol = np.where(D <= rad, 1.0, 0.0) @ mu.values
        rhs = constants.C_upper / constants.C_lower * t ** constants.n * mu.values
        m = np.log(rhs) - np.log(vol)
        j = int(np.argmin(m))
        if m[j] < worst[0]:
            worst = (float(m[j]), j, float(t))
    return BoundReport("polynomial_growth", None, None, worst[0], {"vertex": worst[1], "t": worst[2]},
                       status="pass" if worst[0] >= -TOL else "fail", details={"log_margin": True})


def verify_heat_kernel_bounds(G, mu, n, constants=None, pairs=None, t_grid=None, seed=0, fit_grid=FIT_GRID,
                              safety=SAFETY, holdout=0.5, curvature=None, check_hypothesis=False):
    """Two-sided on-diagonal/off-diagonal bound; fit mode when ``constants`` is None.

    Fit mode splits the pairs into disjoint fit and re-check halves, fits
    C'' (smallest), C (largest for the smallest C' on the grid) with a
    safety factor, then re-verifies on the held-out half.  Margins are in
    log space.
    """
    t_grid = np.arange(2.0, 11.0) if t_grid is None else np.asarray(t_grid, dtype=float)
    if np.any(t_grid <= 1):
        raise DomainError("lower bound needs t > 1")
    if pairs is None:
        pairs = [(x, y) for x in range(G.n) for y in range(G.n)]
    pairs = [(int(a), int(b)) for a, b in pairs]
    prop = HeatPropagator(G, mu)
    checked, ok, kmin = _cde_hypothesis(G, mu, n, 0.0, curvature, check_hypothesis)
    details = {"t_grid": t_grid, "k_lower": kmin}
    if constants is None:
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, 11])))
        perm = rng.permutation(len(pairs))
        cut = int(round(len(pairs) * (1 - holdout)))
        fit_pairs = [pairs[i] for i in sorted(perm[:cut])]
        test_pairs = [pairs[i] for i in sorted(perm[cut:])]
        Sf = _samples(G, mu, fit_pairs, t_grid, prop)
        constants, table = _fit(Sf, mu, n, fit_grid, safety)
        S = _samples(G, mu, test_pairs, t_grid, prop)
        details.update({"mode": "fit", "fit_table": table, "safety": safety, "fit_pairs": len(fit_pairs),
                        "recheck_pairs": len(test_pairs), "fit_samples": len(Sf)})
    else:
        S = _samples(G, mu, pairs, t_grid, prop)
        details["mode"] = "check"
    m = _check_samples(S, mu, constants)
    j = int(np.argmin(m))
    x, y, t, d, P, vol = S[j]
    growth = polynomial_growth_report(G, mu, constants, t_grid)
    details.update({"constants": constants.to_dict(), "samples": len(S), "polynomial_growth": growth.to_dict()})
    passed = m[j] >= -TOL and growth.status == "pass"
    status = "hypothesis-unverified" if not ok else ("pass" if passed else "fail")
    return BoundReport("heat_kernel_bounds", None, None, float(m[j]),
                       {"x": int(x), "y": int(y), "t": float(t), "d": float(d), "P": float(P)},
                       checked, status, details)


# ------------------------------------------------------------------- VD and P

def volume_doubling_constant(G, mu, r_grid):
    D = G.distance_matrix()
    best = (0.0, None, None)
    for r in r_grid:
        if r <= 0:
            raise DomainError("radii must be positive")
        v1 = np.where(D <= r, 1.0, 0.0) @ mu.values
        v2 = np.where(D <= 2 * r, 1.0, 0.0) @ mu.values
        q = v2 / v1
        j = int(np.argmax(q))
        if q[j] > best[0]:
            best = (float(q[j]), j, r)
    return best[0]


def _poincare_forms(G, mu, x0, r):
    big = G.ball(x0, 2 * r)
    small = G.ball(x0, r)
    if len(small) == 0:
        raise DomainError("empty ball")
    pos = {int(v): i for i, v in enumerate(big)}
    m = len(big)
    idx = np.array([pos[int(v)] for v in small])
    w = mu.values[small]
    # centred mu-quadratic form on the small ball
    E = np.zeros((len(small), m))
    E[np.arange(len(small)), idx] = 1.0
    P = E - np.outer(np.ones(len(small)), (w / w.sum()) @ E)
    A = P.T @ (w[:, None] * P)
    # ordered-pair Dirichlet form on the big ball
    H, order = G.subgraph(big)
    Q = np.zeros((m, m))
    r_, c_, w_ = H.edges()
    np.add.at(Q, (r_, r_), w_)
    np.add.at(Q, (c_, c_), w_)
    np.add.at(Q, (r_, c_), -w_)
    np.add.at(Q, (c_, r_), -w_)
    perm = np.array([pos[int(v)] for v in order])
    Qb = np.zeros_like(Q)
    Qb[np.ix_(perm, perm)] = Q
    return A, Qb, big


def poincare_constant(G, mu, x0, r):
    """Smallest C with sum_B mu (f - f_B)^2 <= C r^2 sum_{x,y in 2B} w_xy (f_y - f_x)^2."""
    _need_symmetric(G, "poincare_constant")
    if r <= 0:
        raise DomainError("r must be positive")
    A, Q, big = _poincare_forms(G, mu, x0, r)
    m = len(big)
    if m == 1:
        return 0.0
    basis = sla.null_space(np.ones((1, m)))
    lam = sla.eigh(basis.T @ A @ basis, basis.T @ Q @ basis, eigvals_only=True)
    return float(lam[-1]) / (r * r)


def poincare_quotient(G, mu, x0, r, f):
    """Rayleigh quotient of one test function (sampling oracle)."""
    A, Q, big = _poincare_forms(G, mu, x0, r)
    f = np.asarray(f, dtype=float)
    return float(f @ A @ f) / (r * r * float(f @ Q @ f))
