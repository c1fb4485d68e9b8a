"""Li-Yau quantity and verification of the gradient estimates."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .curvature import INF, inv_dim, n_label, normalize_n, optimal_cde_k
from .cutoff import CutoffFunction, verify_strong_cutoff
from .errors import DomainError
from .graph import _gam, graph_constants

THEOREMS = ("finite_n0", "finite_nK", "potential", "ball_weak", "ball_strong")
TOL = 1e-9


def li_yau_field(sol, alpha=0.0, q=None):
    """(1-a) Gamma(sqrt u)/u - d_t(sqrt u)/sqrt u - q/2 at every (t, x).

    d_t sqrt u is taken from the equation, (Delta u - q u) / (2 sqrt u).
    NaN where u is unknown on the closed neighbourhood.
    """
    qq = sol.q_grid() if q is None else _q_grid(sol, q)
    u = sol.values
    with np.errstate(invalid="ignore", divide="ignore"):
        su = np.sqrt(u)
        gam = _gam(sol.graph, sol.mu, su, su)
        lap = sol.laplacian()
        dt_sqrt = (lap - qq * u) / (2.0 * su)
        F = (1.0 - alpha) * gam / u - dt_sqrt / su - qq / 2.0
    return F


def _q_grid(sol, q):
    if hasattr(q, "on_grid"):
        return q.on_grid(sol.times)
    q = np.asarray(q, dtype=float)
    return np.broadcast_to(q, sol.values.shape)


def li_yau_F(G, mu, sol, x, t, alpha=0.0, q=None):
    x = G.check_vertex(x)
    j = sol.time_index(t)
    nb = np.append(G.neighbors(x), x)
    u = sol.values[j, nb]
    if not np.all(np.isfinite(u)):
        raise DomainError("solution undefined near x")
    if np.any(u <= 0):
        raise DomainError("u must be positive at (x, t) and its neighbours")
    return float(li_yau_field(sol, alpha, q)[j, x])


@dataclass
class StrongBoundConstants:
    alpha: float
    epsilon: float
    n: float
    K: float
    theta: float
    eta: float
    d_mu: float
    d_w: float

    def __post_init__(self):
        if not (0 < self.alpha < 1 and 0 < self.epsilon < 1):
            raise DomainError("alpha and epsilon must lie in (0, 1)")

    @property
    def value(self):
        a, e, n, K = self.alpha, self.epsilon, self.n, self.K
        t1 = n / (1 - a) * self.theta
        t2 = K * K * n * n / ((1 - e) * a * a)
        t3 = (n * (1 + a * self.d_w) * self.eta / ((1 - a) * math.sqrt(a) * e ** 0.25)) ** (4.0 / 3.0)
        return math.sqrt(t1 + t2 + t3)

    def bound(self, t, c, R):
        a, n = self.alpha, self.n
        cut = self.d_mu * c * n / (2 * (1 - a) * R * R) * (
            1 + R * math.sqrt(self.K) + n * (self.d_w + 1) ** 2 / (4 * a * (1 - a)))
        return n / (2 * (1 - a) * t) + cut + 0.5 * self.value

    def to_dict(self):
        return {"alpha": self.alpha, "epsilon": self.epsilon, "n": self.n, "K": self.K, "theta": self.theta,
                "eta": self.eta, "d_mu": self.d_mu, "d_w": self.d_w, "value": self.value}


def potential_constant(n, K, alpha, theta, eta, d_mu, d_w):
    """The constant C(alpha, n, K, theta, eta) shared by the potential and weak-ball bounds."""
    s1 = math.sqrt(2 * d_mu * (d_w + 1))
    s3 = math.sqrt(2 * d_mu * (d_w ** 3 + 1))
    inner = K * K * n * n / (alpha * alpha) + n / (1 - alpha) * (theta + eta * ((1 - alpha) * s1 + alpha * s3))
    return math.sqrt(inner)


def theorem_bound(theorem, t, n, K=0.0, alpha=0.0, theta=0.0, eta=0.0, d_mu=1.0, d_w=1.0, R=None, c=None,
                  epsilon=0.5):
    """Right-hand side of the chosen gradient estimate at time t (vectorised in t)."""
    t = np.asarray(t, dtype=float)
    if theorem == "finite_n0":
        return n / (2 * t)
    if theorem == "finite_nK":
        return n / ((1 - alpha) * 2 * t) + K * n / alpha
    if theorem == "potential":
        if K == 0 and alpha == 0:
            return n / (2 * t) + 0.5 * math.sqrt(n * (theta + eta * math.sqrt(2 * d_mu * (d_w + 1))))
        return n / (2 * (1 - alpha) * t) + 0.5 * potential_constant(n, K, alpha, theta, eta, d_mu, d_w)
    if theorem == "ball_weak":
        if K == 0 and alpha == 0 and theta == 0 and eta == 0:
            return n / (2 * t) + n * (1 + d_w) * d_mu / R
        return (n / ((1 - alpha) * 2 * t) + n * (2 + d_w) * d_mu / ((1 - alpha) * R)
                + 0.5 * potential_constant(n, K, alpha, theta, eta, d_mu, d_w))
    if theorem == "ball_strong":
        sc = StrongBoundConstants(alpha, epsilon, n, K, theta, eta, d_mu, d_w)
        return sc.bound(t, c, R)
    raise DomainError(f"unknown theorem {theorem!r}")


@dataclass
class LiYauReport:
    theorem: str
    alpha: float
    params: dict
    min_margin: float
    worst: dict
    per_time: list
    hypothesis_checked: bool
    status: str
    extras: dict = field(default_factory=dict)
    region: np.ndarray | None = None
    F: np.ndarray | None = None  # (T, |region|), NaN at t = 0
    bound: np.ndarray | None = None

    @property
    def margin(self):
        return self.min_margin

    def to_dict(self):
        return {"theorem": self.theorem, "alpha": self.alpha, "params": self.params,
                "min_margin": self.min_margin, "worst": self.worst, "per_time": self.per_time,
                "hypothesis_checked": self.hypothesis_checked, "status": self.status, "extras": self.extras}


def _curvature_hypothesis(G, mu, n, K, vertices, curvature, check):
    """(checked, ok, info).  ``curvature`` may be a number (certified lower bound) or reports."""
    need = -K
    if curvature is not None:
        if isinstance(curvature, (int, float)):
            kmin = float(curvature)
        else:
            kmin = min(r.optimal_k for r in curvature)
        return True, kmin >= need - 1e-6, {"k_lower": kmin, "source": "supplied"}
    if not check:
        return False, True, {}
    kmin = min(optimal_cde_k(G, mu, int(x), n).optimal_k for x in vertices)
    return True, kmin >= need - 1e-6, {"k_lower": kmin, "source": "solver"}


def verify_gradient_estimate(G, mu, sol, theorem, n, K=0.0, alpha=None, q=None, R=None, x0=None,
                             cutoff=None, c=None, epsilon=0.5, curvature=None, check_hypothesis=False,
                             tol=TOL):
    """Sweep F against the theorem's bound over the required (x, t); t = 0 is skipped.

    Hypotheses checked here: positivity of u on the sweep region, the
    ball/support containment, the potential bounds, the strong cut-off
    test, and (on request or when ``curvature`` is passed) CDE(n, -K).
    """
    if theorem not in THEOREMS:
        raise DomainError(f"unknown theorem {theorem!r}")
    n = float(normalize_n(n)) if normalize_n(n) is not INF else None
    if n is None:
        raise DomainError("gradient estimates need finite n")
    consts = graph_constants(G, mu)
    pot = q if q is not None else sol.potential
    theta = pot.theta if pot is not None else 0.0
    eta = pot.eta if pot is not None else 0.0
    notes = []
    hyp_ok = True

    two_part = theorem in ("potential", "ball_weak")
    if theorem == "finite_n0" or (two_part and K == 0 and alpha in (None, 0, 0.0)):
        a = 0.0
        if K:
            raise DomainError("finite_n0 is the K = 0 estimate")
    else:
        a = 0.5 if alpha is None else float(alpha)
        if not 0 < a < 1:
            raise DomainError("alpha must lie in (0, 1)")
        if theorem == "finite_nK" and not K > 0:
            raise DomainError("finite_nK needs K > 0")
    if pot is not None and (theorem in ("finite_n0", "finite_nK") or (theorem == "ball_weak" and a == 0.0)):
        raise DomainError(f"{theorem} (this form) is stated without a potential")

    F = li_yau_field(sol, a, pot)
    T = sol.times
    tmask = T > 0
    if theorem in ("finite_n0", "finite_nK", "potential"):
        if sol.domain is not None and not sol.domain.all():
            hyp_ok = False
            notes.append("solution is not global")
        region = np.arange(G.n)
    elif theorem == "ball_weak":
        if R is None or x0 is None:
            raise DomainError("ball_weak needs R and x0")
        need = G.ball(x0, 2 * R)
        if not np.all(sol.support[need]):
            hyp_ok = False
            notes.append("solution domain does not contain B(x0, 2R)")
        inner = G.ball(x0, R)
        interior = set(sol.interior(2).tolist())
        region = np.array([v for v in inner if v in interior], dtype=np.int64)
    else:
        if cutoff is None:
            raise DomainError("ball_strong needs a cut-off function")
        x0 = cutoff.center if x0 is None else int(x0)
        R = cutoff.radius if R is None else R
        c = cutoff.c if c is None else c
        S = cutoff.support
        if not np.all(sol.support[S]):
            hyp_ok = False
            notes.append("solution domain does not contain the cut-off support")
        cr = verify_strong_cutoff(G, mu, cutoff, c, R, K)
        if cr.status != "pass":
            hyp_ok = False
            notes.append("cut-off is not a strong cut-off")
        region = np.array([x0], dtype=np.int64)

    u = sol.values[np.ix_(tmask, region)]
    if not (np.all(np.isfinite(u)) and np.all(u > 0)):
        hyp_ok = False
        notes.append("u is not positive on the sweep region")

    checked, cok, cinfo = _curvature_hypothesis(G, mu, n, K, region, curvature, check_hypothesis)
    hyp_ok &= cok
    if checked and not cok:
        notes.append("CDE(n, -K) not certified")

    bounds = np.array([theorem_bound(theorem, t, n, K, a, theta, eta, consts.d_mu, consts.d_w, R, c, epsilon)
                       if t > 0 else np.inf for t in T])
    Fr = F[:, region]
    with np.errstate(invalid="ignore"):
        M = bounds[:, None] - Fr
    M = np.where(tmask[:, None] & np.isfinite(Fr), M, np.inf)
    flat = int(np.argmin(M))
    jt, jx = np.unravel_index(flat, M.shape)
    minm = float(M[jt, jx])
    worst = {"vertex": int(region[jx]), "t": float(T[jt]), "F": float(Fr[jt, jx]), "bound": float(bounds[jt]),
             "margin": minm}
    per_time = [{"t": float(T[j]), "max_F": float(np.nanmax(Fr[j])), "bound": float(bounds[j]),
                 "margin": float(np.min(M[j]))} for j in np.flatnonzero(tmask)]
    extras = {"notes": notes, "curvature": cinfo}
    if theorem == "ball_weak" and a == 0.0:
        proof_b = n / (2 * T[tmask]) + 2 * n * consts.d_w * consts.d_mu / R
        pm = float(np.min(proof_b[:, None] - np.where(np.isfinite(Fr[tmask]), Fr[tmask], -np.inf)))
        extras["proof_constant_margin"] = pm
        extras["proof_constant_holds"] = bool(pm >= -tol)
    if theorem == "ball_strong":
        extras["strong_constants"] = StrongBoundConstants(a, epsilon, n, K, theta, eta, consts.d_mu,
                                                          consts.d_w).to_dict()
    if not hyp_ok:
        status = "hypothesis-unverified"
    else:
        status = "pass" if minm >= -tol else "fail"
    params = {"n": n_label(n), "K": K, "alpha": a, "theta": theta, "eta": eta, "R": R, "x0": x0, "c": c,
              "epsilon": epsilon if theorem == "ball_strong" else None, "d_mu": consts.d_mu, "d_w": consts.d_w}
    Fs = np.where(tmask[:, None], Fr, np.nan)
    return LiYauReport(theorem, a, params, minm, worst, per_time, checked, status, extras, region, Fs, bounds)
