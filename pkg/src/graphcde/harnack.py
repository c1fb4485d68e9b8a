"""Discrete Agmon distance, Harnack inequalities and the H property."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import CapExceededError, DomainError, UnreachableError
from .graph import graph_constants
from .heat import HeatPropagator, Potential
from .liyau import li_yau_field, theorem_bound
from .reports import BoundReport

LOG_TOL = 1e-9


@dataclass
class AgmonQuery:
    x: int
    y: int
    T1: float
    T2: float
    x0: int | None = None
    R: float = math.inf
    alpha: float = 0.0
    q: Potential | None = None
    max_path_length: int | None = None

    def __post_init__(self):
        if not self.T1 < self.T2:
            raise DomainError("need T1 < T2")
        if not 0 <= self.alpha < 1:
            raise DomainError("alpha must lie in [0, 1)")
        if self.max_path_length is not None and self.max_path_length < 0:
            raise DomainError("max_path_length must be >= 0")

    def to_dict(self):
        return {"x": self.x, "y": self.y, "T1": self.T1, "T2": self.T2, "x0": self.x0, "R": self.R,
                "alpha": self.alpha, "q": None if self.q is None else self.q.to_dict(),
                "max_path_length": self.max_path_length}


@dataclass
class HarnackConstants:
    c1: float
    c2: float = 0.0

    def __post_init__(self):
        if self.c1 < 0 or self.c2 < 0:
            raise DomainError("Harnack constants must be nonnegative")

    @classmethod
    def from_gradient(cls, theorem, n, **kw):
        """Read c1, c2 off a gradient estimate of the form c1/t + c2."""
        b1 = float(theorem_bound(theorem, 1.0, n, **kw))
        b2 = float(theorem_bound(theorem, 2.0, n, **kw))
        c1 = 2 * (b1 - b2)
        return cls(c1, max(b1 - c1, 0.0))

    def to_dict(self):
        return {"c1": self.c1, "c2": self.c2}


@dataclass
class AgmonResult:
    value: float
    path: list
    length: int
    kinetic: float
    potential_part: float
    certified: bool
    method: str
    details: dict = field(default_factory=dict)

    def to_dict(self):
        return {"value": self.value, "path": self.path, "length": self.length, "kinetic": self.kinetic,
                "potential_part": self.potential_part, "certified": self.certified, "method": self.method,
                "details": self.details}


def _ball_mask(G, query):
    if query.x0 is None or math.isinf(query.R):
        return np.ones(G.n, bool)
    d = G.distances(query.x0)
    return d <= query.R


def _ball_distance(G, mask, x, y):
    """Hop distance from x to y using only vertices in mask."""
    if not (mask[x] and mask[y]):
        return math.inf
    verts = np.flatnonzero(mask)
    H, order = G.subgraph(verts)
    pos = {int(v): i for i, v in enumerate(order)}
    return float(H.distances(pos[x])[pos[y]])


def _kinetic(mu_max, w_min, alpha, dT, k):
    return 2.0 * mu_max * k * k / (w_min * (1.0 - alpha) * dT)


def _segment_integrals(q, lo, hi):
    """(int_lo^hi q(., t) dt, int_lo^hi (t - lo)^2 q(., t) dt) per vertex.

    q is linear between its grid points, so Simpson on every piece
    between consecutive breakpoints is exact.
    """
    if q.constant_in_time:
        h = hi - lo
        v = q.values[0]
        return v * h, v * h ** 3 / 3.0
    tq = q.times
    br = np.concatenate([[lo], tq[(tq > lo) & (tq < hi)], [hi]])
    a, b = br[:-1], br[1:]
    m = 0.5 * (a + b)
    qa, qm, qb = (np.array([q.at(t) for t in pts]) for pts in (a, m, b))
    w = ((b - a) / 6.0)[:, None]
    i0 = (w * (qa + 4 * qm + qb)).sum(axis=0)
    ra, rm, rb = ((pts - lo) ** 2 for pts in (a, m, b))
    i2 = (w * (ra[:, None] * qa + 4 * rm[:, None] * qm + rb[:, None] * qb)).sum(axis=0)
    return i0, i2


def _q_range(q, mask, T1, T2):
    if q.constant_in_time:
        v = q.values[0][mask]
    else:
        tq = q.times
        pts = np.concatenate([[T1, T2], tq[(tq > T1) & (tq < T2)]])
        v = np.array([q.at(t)[mask] for t in pts])
    return float(v.min()), float(v.max())


def _dp_length(G, mask, query, k, r, c):
    """Best walk of exactly k steps inside the ball; returns (potential sum, path) or (inf, None)."""
    q, T1, dT = query.q, query.T1, query.T2 - query.T1
    n = G.n
    h = dT / k
    s = k / dT ** 2
    V = np.full(n, np.inf)
    V[query.x] = 0.0
    back = np.empty((k, n), dtype=np.int64)
    inball = mask[r] & mask[c]
    r, c = r[inball], c[inball]
    for i in range(k):
        lo = T1 + i * h
        hi = T1 + (i + 1) * h if i < k - 1 else query.T2
        i0, i2 = _segment_integrals(q, lo, hi)
        W = V + i0 + s * i2
        cand = W[r]
        best = np.full(n, np.inf)
        np.minimum.at(best, c, cand)
        # deterministic argmin: smallest source among ties
        arg = np.full(n, n, dtype=np.int64)
        hit = cand == best[c]
        np.minimum.at(arg, c[hit], r[hit])
        back[i] = arg
        V = np.where(mask, best - s * i2, np.inf)
    if not np.isfinite(V[query.y]):
        return math.inf, None
    path = [query.y]
    for i in range(k - 1, -1, -1):
        path.append(int(back[i, path[-1]]))
    return float(V[query.y]), path[::-1]


def agmon_search(G, mu, query):
    """Minimise the Agmon functional over walks and even time subdivisions."""
    x, y = G.check_vertex(query.x), G.check_vertex(query.y)
    mask = _ball_mask(G, query)
    consts = graph_constants(G, mu)
    mu_max, w_min = consts.mu_max, consts.w_min
    dT = query.T2 - query.T1
    dR = _ball_distance(G, mask, x, y)
    if math.isinf(dR):
        raise UnreachableError(f"{x} and {y} are not connected inside the ball")
    if query.max_path_length is not None and query.max_path_length < dR:
        raise CapExceededError(f"cap {query.max_path_length} below ball distance {dR}", best=None)
    if query.q is None:
        kin = _kinetic(mu_max, w_min, query.alpha, dT, dR)
        path = _shortest_path(G, mask, x, y)
        return AgmonResult(kin, path, int(dR), kin, 0.0, True, "closed_form", {"d_R": dR})

    cap = int(max(4 * dR, 16)) if query.max_path_length is None else int(query.max_path_length)
    r, c, _ = G.edges()
    best = (math.inf, None, None, 0.0)
    if x == y:
        i0, _ = _segment_integrals(query.q, query.T1, query.T2)
        best = (float(i0[x]), [x], 0, float(i0[x]))
    for k in range(max(int(dR), 1), cap + 1):
        kin = _kinetic(mu_max, w_min, query.alpha, dT, k)
        pot, path = _dp_length(G, mask, query, k, r, c)
        if path is not None and kin + pot < best[0]:
            best = (kin + pot, path, k, pot)
    qmin, qmax = _q_range(query.q, mask, query.T1, query.T2)
    nxt = cap + 1
    lower = _kinetic(mu_max, w_min, query.alpha, dT, nxt) + qmin * dT - (qmax - qmin) * dT / (3 * nxt)
    value, path, k, pot = best
    res = AgmonResult(value, path, k, value - pot, pot, bool(lower >= value), "path_dp",
                      {"cap": cap, "tail_lower_bound": lower, "d_R": dR})
    if not res.certified:
        raise CapExceededError(f"paths longer than {cap} may be shorter in the Agmon functional", best=res)
    return res


def _shortest_path(G, mask, x, y):
    prev = {x: None}
    frontier = [x]
    while frontier and y not in prev:
        nxt = []
        for v in frontier:
            for u in G.neighbors(v).tolist():
                if mask[u] and u not in prev:
                    prev[u] = v
                    nxt.append(u)
        frontier = sorted(nxt)
    path = [y]
    while prev[path[-1]] is not None:
        path.append(prev[path[-1]])
    return path[::-1]


def agmon_distance(G, mu, query):
    return agmon_search(G, mu, query).value


def agmon_closed_form(G, mu, x, y, T1, T2, alpha=0.0):
    """2 mu_max d(x,y)^2 / ((1 - alpha)(T2 - T1) w_min)."""
    consts = graph_constants(G, mu)
    d = G.distance(x, y)
    return _kinetic(consts.mu_max, consts.w_min, alpha, T2 - T1, d)


def _harnack_hypothesis(sol, constants, query, form, mask):
    """Sweep the per-point gradient inequality the theorem assumes."""
    q = sol.potential
    F = li_yau_field(sol, query.alpha, q)
    T = sol.times
    c1, c2 = constants.c1, constants.c2
    if form == "corollary":
        c1 = c1 / 2.0
    ok = T > 0
    bound = c1 / T[ok, None] + c2
    vals = F[np.ix_(ok, mask)]
    with np.errstate(invalid="ignore"):
        gap = bound - vals
    gap = np.where(np.isfinite(vals), gap, np.inf)
    return float(gap.min()) if gap.size else math.inf


def verify_harnack(G, mu, sol, constants, query, form="sqrt", check_hypothesis=True):
    """Log-margin of the Harnack inequality for one (x, y, T1, T2).

    ``form="sqrt"`` applies the theorem to f = sqrt(u) (potential q/2);
    ``form="corollary"`` compares u itself with the exponent
    4 D d(x,y)^2 / (T2 - T1) for unweighted graphs with mu = deg.
    """
    if form not in ("sqrt", "corollary"):
        raise DomainError(f"unknown form {form!r}")
    j1, j2 = sol.time_index(query.T1), sol.time_index(query.T2)
    if query.T1 <= 0:
        raise DomainError("T1 must be positive")
    x, y = G.check_vertex(query.x), G.check_vertex(query.y)
    u1, u2 = sol.values[j1, x], sol.values[j2, y]
    if not (u1 > 0 and u2 > 0):
        raise DomainError("u must be positive at both space-time points")
    mask = _ball_mask(G, query) & sol.support
    notes = []
    hyp_ok = True
    if form == "corollary":
        unweighted = np.all(G.weights == 1.0)
        deg_mu = np.allclose(mu.values, G.degree, rtol=1e-12, atol=0)
        if not (unweighted and deg_mu):
            hyp_ok = False
            notes.append("corollary needs an unweighted graph with mu = deg")
        if sol.potential is not None:
            hyp_ok = False
            notes.append("corollary is for the heat equation")
        D = float(np.max(np.diff(G.indptr)))
        rho = 4.0 * D * G.distance(x, y) ** 2 / (query.T2 - query.T1)
        lhs = math.log(u1) - math.log(u2)
        rhs = constants.c1 * math.log(query.T2 / query.T1) + constants.c2 * (query.T2 - query.T1) + rho
        agmon = {"value": rho, "method": "corollary_exponent"}
    else:
        half = None if sol.potential is None else sol.potential.scaled(0.5)
        qq = AgmonQuery(x, y, query.T1, query.T2, query.x0, query.R, query.alpha, half, query.max_path_length)
        res = agmon_search(G, mu, qq)
        rho = res.value
        lhs = 0.5 * (math.log(u1) - math.log(u2))
        rhs = constants.c1 * math.log(query.T2 / query.T1) + constants.c2 * (query.T2 - query.T1) + rho
        agmon = res.to_dict()
    hmargin = None
    if check_hypothesis:
        hmargin = _harnack_hypothesis(sol, constants, query, form, mask)
        if hmargin < -LOG_TOL:
            hyp_ok = False
            notes.append("gradient inequality with (c1, c2) fails on the grid")
    margin = rhs - lhs
    if not hyp_ok:
        status = "hypothesis-unverified"
    else:
        status = "pass" if margin >= -LOG_TOL else "fail"
    return BoundReport(
        name=f"harnack_{form}",
        lhs=lhs,
        rhs=rhs,
        margin=margin,
        witness={"x": x, "y": y, "T1": query.T1, "T2": query.T2, "u_x_T1": u1, "u_y_T2": u2},
        hypothesis_checked=bool(check_hypothesis),
        status=status,
        details={"constants": constants.to_dict(), "agmon": agmon, "hypothesis_margin": hmargin,
                 "notes": notes},
    )


def check_averaging_lemma(psi, q1, q2, c, T1, T2):
    """Minimised left side versus the averaged bound, all on one uniform grid."""
    psi, q1, q2 = (np.asarray(a, dtype=float) for a in (psi, q1, q2))
    if not (psi.shape == q1.shape == q2.shape and psi.ndim == 1):
        raise DomainError("psi, q1, q2 must be samples on the same grid")
    if len(psi) < 64:
        raise DomainError("need at least 64 samples")
    if not c > 0 or not T1 < T2:
        raise DomainError("need c > 0 and T1 < T2")
    t = np.linspace(T1, T2, len(psi))
    cum = lambda f: integrate.cumulative_simpson(f, x=t, initial=0.0)
    P2 = cum(psi ** 2)
    Q1 = cum(q1)
    Q2 = cum(q2)
    L = psi - (P2[-1] - P2) / c + Q1 + (Q2[-1] - Q2)
    j = int(np.argmin(L))
    lhs = float(L[j])
    dT = T2 - T1
    rhs = c / dT + float(integrate.simpson(q1, x=t)) + float(integrate.simpson((t - T1) ** 2 * (q2 - q1), x=t)) / dT ** 2
    margin = rhs - lhs
    return BoundReport(
        name="averaging_lemma",
        lhs=lhs,
        rhs=rhs,
        margin=margin,
        witness={"s": float(t[j])},
        status="pass" if margin >= -1e-6 else "fail",
        details={"c": c, "T1": T1, "T2": T2, "samples": len(t)},
    )


def verify_H_property(G, mu, theta, R, x0, s=0.0, trials=50, seed=0, samples=9, data="random"):
    """Empirical C0: max over trials of sup_{Q-} u / inf_{Q+} u.

    Solutions live on the induced subgraph of B(x0, 2R) with its own
    Laplacian and the restricted measure.  The equation is autonomous,
    so the start time s only shifts the windows.
    """
    th = [float(v) for v in theta]
    if len(th) != 4 or not (0 < th[0] < th[1] < th[2] < th[3]):
        raise DomainError("need 0 < theta1 < theta2 < theta3 < theta4")
    if R <= 0:
        raise DomainError("R must be positive")
    big = G.ball(x0, 2 * R)
    H, order = G.subgraph(big)
    muH = mu.restrict(order)
    pos = {int(v): i for i, v in enumerate(order)}
    inner = np.array([pos[int(v)] for v in G.ball(x0, R)])
    R2 = R * R
    tm = np.linspace(th[0] * R2, th[1] * R2, samples)
    tp = np.linspace(th[2] * R2, th[3] * R2, samples)
    prop = HeatPropagator(H, muH)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, x0])))
    ratios = []
    for k in range(trials):
        if data == "constant":
            u0 = np.ones(H.n)
        elif data == "point":
            u0 = np.full(H.n, 1e-3)
            u0[pos[int(x0)]] = 1.0
        else:
            u0 = np.exp(rng.normal(0.0, 1.5, H.n))
        vm = prop.apply(u0, tm)[:, inner]
        vp = prop.apply(u0, tp)[:, inner]
        lo = float(vp.min())
        if not lo > 0:
            raise DomainError("degenerate solution: inf over Q+ is not positive")
        ratios.append(float(vm.max()) / lo)
    j = int(np.argmax(ratios))
    C0 = ratios[j]
    rep = BoundReport(
        name="H_property",
        lhs=C0,
        rhs=math.inf,
        margin=math.inf,
        witness={"trial": j, "ratio": C0},
        status="pass" if math.isfinite(C0) else "fail",
        details={"theta": th, "R": R, "x0": x0, "s": s, "trials": trials, "data": data,
                 "ball_size": int(H.n), "dynamics": "induced_subgraph", "ratios": ratios},
    )
    return C0, rep
