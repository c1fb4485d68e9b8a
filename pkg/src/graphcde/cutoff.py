"""Cut-off functions and the strong cut-off test."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, PreconditionError
from .generators import make_torus, torus_coords
from .graph import graph_constants
from .reports import BoundReport


@dataclass
class CutoffFunction:
    phi: np.ndarray
    center: int
    radius: float
    kind: str
    c: float | None = None

    def __post_init__(self):
        self.phi = np.asarray(self.phi, dtype=float)
        if np.any(self.phi < 0) or np.any(self.phi > 1):
            raise DomainError("cut-off values must lie in [0, 1]")

    @property
    def support(self):
        return np.flatnonzero(self.phi > 0)

    def to_dict(self):
        return {"center": self.center, "radius": self.radius, "kind": self.kind, "c": self.c,
                "support_size": int(len(self.support)), "phi": self.phi}


def make_distance_cutoff(G, x0, R):
    """1 on B(x0, R), (2R - d)/R on the annulus, 0 beyond 2R."""
    if R < 1:
        raise DomainError("R must be >= 1")
    d = G.distances(x0)
    phi = np.clip((2 * R - d) / R, 0.0, 1.0)
    phi[~np.isfinite(d)] = 0.0
    return CutoffFunction(phi, int(x0), float(R), "distance")


def zd_strong_phi(coords, R):
    r2 = (np.asarray(coords, dtype=float) ** 2).sum(axis=-1)
    return np.maximum(0.0, (R * R - r2) / (R * R)) ** 2


def make_zd_strong_cutoff(d, R, torus_m):
    """((R^2 - |x|^2)_+ / R^2)^2 on (Z_m)^d, centred at vertex 0.

    Coordinates are taken in (-m/2, m/2]; ``torus_m`` must exceed 2R + 2 so
    the support and its neighbourhood do not wrap.
    """
    if not torus_m > 2 * R + 2:
        raise DomainError(f"torus_m={torus_m} wraps the support; need m > 2R + 2")
    C = torus_coords(d, torus_m)
    C = np.where(C > torus_m // 2, C - torus_m, C)
    return CutoffFunction(zd_strong_phi(C, R), 0, float(R), "zd_strong", 100.0)


def zd_torus_with_cutoff(d, R, m=None, measure_kind="unit"):
    m = int(2 * R + 3) if m is None else m
    G, mu, S = make_torus(d, m, measure_kind=measure_kind)
    return G, mu, make_zd_strong_cutoff(d, R, m)


def strong_cutoff_quantities(G, mu, phi):
    """phi^2 Delta(1/phi) and phi^3 Gamma(1/phi) where phi > 0 on the closed neighbourhood."""
    p = np.asarray(phi, dtype=float)
    r, c, w = G.edges()
    pos = p > 0
    ok = pos.copy()
    np.logical_and.at(ok, r, pos[c])
    inv = np.where(pos, 1.0 / np.where(pos, p, 1.0), 0.0)
    diff = inv[c] - inv[r]
    lap = np.bincount(r, w * diff, minlength=G.n) / mu.values
    gam = np.bincount(r, w * diff * diff, minlength=G.n) / (2 * mu.values)
    q1 = np.where(ok, p * p * lap, np.nan)
    q2 = np.where(ok, p ** 3 * gam, np.nan)
    return q1, q2, ok


def verify_strong_cutoff(G, mu, phi, c, R, K=0.0):
    """Dichotomy test at every support vertex; margin > 0 means the clause holds strictly."""
    cf = phi if isinstance(phi, CutoffFunction) else None
    p = cf.phi if cf is not None else np.asarray(phi, dtype=float)
    x0 = cf.center if cf is not None else int(np.argmax(p))
    if p[x0] != 1.0:
        raise PreconditionError("cut-off must equal 1 at its centre")
    dmu = graph_constants(G, mu).d_mu
    k = math.sqrt(max(K, 0.0))
    thr1 = c * (1 + R * k) / (2 * R * R)
    thr2a = dmu * c * (1 + R * k) / (R * R)
    thr2b = dmu * c / (R * R)
    q1, q2, ok = strong_cutoff_quantities(G, mu, p)
    S = np.flatnonzero(p > 0)
    m1 = thr1 - p[S]
    m2 = np.where(ok[S], np.minimum(thr2a - q1[S], thr2b - q2[S]), -np.inf)
    margin = np.maximum(m1, m2)
    j = int(np.argmin(margin))
    x = int(S[j])
    worst = {"vertex": x, "phi": p[x], "clause1_margin": m1[j], "clause2_margin": m2[j],
             "phi2_lap_inv": q1[x], "phi3_gamma_inv": q2[x]}
    passed = bool(np.all(margin > 0))
    return BoundReport(
        name="strong_cutoff",
        lhs=float(-margin[j]),
        rhs=0.0,
        margin=float(margin[j]),
        witness=worst,
        hypothesis_checked=True,
        status="pass" if passed else "fail",
        details={"c": c, "R": R, "K": K, "d_mu": dmu, "support_size": int(len(S)),
                 "thresholds": [thr1, thr2a, thr2b],
                 "clause1_count": int(np.sum(m1 > 0)), "clause2_count": int(np.sum(m2 > 0))},
    )
