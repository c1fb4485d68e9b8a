"""Heat semigroup, heat equation with potential, and solution containers."""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.integrate import solve_ivp

from . import _config
from .errors import DomainError, IntegrationError, PositivityError
from .graph import _gam, _lap
from .reports import dumps

POS_TOL = 1e-12
MASS_TOL = 1e-8


def generator_matrix(G, mu):
    """Dense matrix of Delta: (L f)(x) = (1/mu(x)) sum_y w_xy (f(y) - f(x))."""
    n = G.n
    r, c, w = G.edges()
    L = np.zeros((n, n))
    np.add.at(L, (r, c), w)
    L[np.arange(n), np.arange(n)] -= G.degree
    return L / mu.values[:, None]


def _times(times):
    t = np.asarray(times, dtype=float).ravel()
    if len(t) == 0 or t[0] < 0 or np.any(np.diff(t) <= 0) or not np.all(np.isfinite(t)):
        raise DomainError("times must be finite, strictly increasing and start at >= 0")
    return t


def _u0(G, u0):
    u0 = np.asarray(u0, dtype=float)
    if u0.shape[-1] != G.n:
        raise DomainError(f"u0 has {u0.shape[-1]} values for {G.n} vertices")
    if not np.all(np.isfinite(u0)):
        raise DomainError("u0 contains NaN or Inf")
    return u0


class Potential:
    """q(x, t) with verified bounds Delta q <= theta and Gamma(q) <= eta^2.

    ``values`` is either shape (n,) (time independent) or (T, n) on the
    grid ``times``; in between grid points q is linear in t.  ``fn`` may
    supply exact values q(t) for the integrator.  Declared bounds smaller
    than the measured ones are rejected.
    """

    def __init__(self, G, mu, values, times=None, theta=None, eta=None, fn=None, tol=1e-12):
        v = np.asarray(values, dtype=float)
        if v.ndim == 1:
            v = v[None, :]
            times = np.array([0.0]) if times is None else _times(times)[:1]
        else:
            times = _times(times)
            if len(times) != v.shape[0]:
                raise DomainError("potential grid and values disagree")
        if v.shape[1] != G.n or not np.all(np.isfinite(v)):
            raise DomainError("potential must be finite on every vertex")
        self.graph, self.mu = G, mu
        self.values = v
        self.times = times
        self.fn = fn
        lq = _lap(G, mu, v)
        gq = _gam(G, mu, v, v)
        self.theta_measured = float(max(0.0, lq.max()))
        self.eta_measured = float(np.sqrt(max(0.0, gq.max())))
        self.theta = self.theta_measured if theta is None else float(theta)
        self.eta = self.eta_measured if eta is None else float(eta)
        if self.theta < self.theta_measured - tol * max(1.0, abs(self.theta_measured)):
            raise DomainError(f"declared theta {self.theta} < measured max Delta q {self.theta_measured}")
        if self.eta < self.eta_measured - tol * max(1.0, self.eta_measured):
            raise DomainError(f"declared eta {self.eta} < measured sqrt(max Gamma q) {self.eta_measured}")

    @property
    def constant_in_time(self):
        return self.values.shape[0] == 1 and self.fn is None

    def at(self, t):
        if self.fn is not None:
            return np.asarray(self.fn(t), dtype=float)
        if self.values.shape[0] == 1:
            return self.values[0]
        T = self.times
        j = int(np.clip(np.searchsorted(T, t) - 1, 0, len(T) - 2))
        lam = np.clip((t - T[j]) / (T[j + 1] - T[j]), 0.0, 1.0)
        return (1 - lam) * self.values[j] + lam * self.values[j + 1]

    def on_grid(self, times):
        return np.array([self.at(t) for t in times])

    def scaled(self, c):
        fn = None if self.fn is None else (lambda t, f=self.fn: c * np.asarray(f(t)))
        v = self.values[0] if self.values.shape[0] == 1 else self.values
        return Potential(self.graph, self.mu, c * v, None if self.values.shape[0] == 1 else self.times,
                         fn=fn)

    def to_dict(self):
        return {"theta": self.theta, "eta": self.eta, "theta_measured": self.theta_measured,
                "eta_measured": self.eta_measured, "time_dependent": not self.constant_in_time}


@dataclass
class HeatSolution:
    graph: object
    mu: object
    times: np.ndarray
    values: np.ndarray  # (T, n); NaN off the domain
    provenance: str
    domain: np.ndarray | None = None  # bool mask of vertices where u is a solution
    potential: Potential | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def positive(self):
        v = self.values[np.isfinite(self.values)]
        return bool(np.all(v > 0))

    @property
    def support(self):
        return np.ones(self.graph.n, bool) if self.domain is None else self.domain

    def time_index(self, t):
        j = int(np.argmin(np.abs(self.times - t)))
        if not np.isclose(self.times[j], t, rtol=1e-12, atol=1e-14):
            raise DomainError(f"t={t} is not on the solution grid")
        return j

    def q_grid(self):
        if self.potential is None:
            return np.zeros_like(self.values)
        return self.potential.on_grid(self.times)

    def laplacian(self):
        """Delta u at every grid time (meaningful where the 1-ball is in the domain)."""
        return _lap(self.graph, self.mu, self.values)

    def dt(self):
        """du/dt from the equation: Delta u - q u."""
        return self.laplacian() - self.q_grid() * self.values

    def restrict(self, vertices):
        """Same u, but declared a solution only on ``vertices``.

        Values are kept on the vertices and their neighbours (needed for
        Delta u at the edge of the set) and dropped elsewhere.
        """
        mask = np.zeros(self.graph.n, bool)
        mask[np.asarray(vertices, dtype=np.int64)] = True
        if self.domain is not None:
            mask &= self.domain
        r, c, _ = self.graph.edges()
        keep = mask.copy()
        keep[c[mask[r]]] = True
        vals = np.where(keep[None, :], self.values, np.nan)
        return HeatSolution(self.graph, self.mu, self.times, vals, self.provenance, mask, self.potential,
                            dict(self.diagnostics, restricted=True))

    def interior(self, hops=1):
        """Vertices whose hop-ball of the given radius lies in the domain."""
        dom = self.support
        if dom.all():
            return np.arange(self.graph.n)
        D = self.graph.distance_matrix()
        return np.flatnonzero(np.all((D > hops) | dom[None, :], axis=1) & dom)

    def header(self):
        return {
            "n": self.graph.n,
            "times": self.times,
            "provenance": self.provenance,
            "domain": None if self.domain is None else np.flatnonzero(self.domain),
            "potential": None if self.potential is None else self.potential.to_dict(),
            "diagnostics": self.diagnostics,
        }

    def to_csv(self):
        buf = io.StringIO()
        buf.write("t,vertex,u\n")
        for j, t in enumerate(self.times):
            for x in np.flatnonzero(self.support):
                buf.write(f"{float(t)!r},{x},{float(self.values[j, x])!r}\n")
        return buf.getvalue()

    def to_dict(self):
        d = self.header()
        d["values"] = np.where(np.isfinite(self.values), self.values, np.nan)
        return d

    def to_json(self):
        return dumps(self)


class HeatPropagator:
    """Caches the spectral factorisation of Delta - q (q constant in time)."""

    def __init__(self, G, mu, q=None):
        self.graph, self.mu = G, mu
        self.L = generator_matrix(G, mu)
        if q is not None:
            self.L = self.L - np.diag(np.asarray(q, dtype=float))
        self.symmetric = G.symmetric
        if self.symmetric:
            s = np.sqrt(mu.values)
            A = s[:, None] * self.L / s[None, :]
            A = 0.5 * (A + A.T)
            self.lam, self.V = np.linalg.eigh(A)
            self._s = s
            self.provenance = "matrix_exponential"
        else:
            self.provenance = "matrix_exponential"

    def matrix(self, t):
        if self.symmetric:
            s = self._s
            M = (self.V * np.exp(t * self.lam)) @ self.V.T
            return M * (s[None, :] / s[:, None])
        return sla.expm(t * self.L)

    def apply(self, u0, times):
        """u0 of shape (n,) or (B, n) -> values of shape (T, n) or (B, T, n)."""
        U = np.atleast_2d(u0)
        if self.symmetric:
            C = (U * self._s) @ self.V  # (B, k)
            E = np.exp(np.outer(times, self.lam))  # (T, k)
            out = np.einsum("bk,tk,nk->btn", C, E, self.V) / self._s
        else:
            out = np.stack([U @ self.matrix(t).T for t in times], axis=1)
        return out[0] if np.ndim(u0) == 1 else out


def _check_positive(vals, u0, where=None):
    if np.all(u0 >= 0):
        v = vals if where is None else vals[..., where]
        scale = max(1.0, float(np.max(np.abs(u0))))
        lo = float(np.nanmin(v))
        if lo < -POS_TOL * scale:
            raise PositivityError(f"solution left positive cone (min {lo:.3e})")


def _balanced(G):
    # sum_x w_xy == deg(y): necessary and sufficient for mass conservation with mu
    r, c, w = G.edges()
    into = np.bincount(c, w, minlength=G.n)
    return bool(np.allclose(into, G.degree, rtol=1e-14, atol=0))


def _mass_diag(G, mu, times, vals, check):
    mass = vals @ mu.values
    drift = float(np.max(np.abs(mass - mass[0])) / max(abs(mass[0]), 1e-300))
    if check and drift > MASS_TOL:
        raise IntegrationError(f"mass drift {drift:.3e} exceeds {MASS_TOL}", {"mass": mass.tolist()})
    return {"mass_initial": float(mass[0]), "mass_drift": drift}


def _ode(G, mu, u0, times, qfun, method, rtol, atol):
    A = G.csr.multiply(1.0 / mu.values[:, None]).tocsr()
    dg = G.degree / mu.values

    def rhs(t, u):
        out = A @ u - dg * u
        if qfun is not None:
            out -= qfun(t) * u
        return out

    sol = solve_ivp(rhs, (times[0], times[-1]), u0, method=method, t_eval=times, rtol=rtol, atol=atol,
                    dense_output=False)
    if not sol.success:
        raise IntegrationError(f"integration failed: {sol.message}",
                               {"nfev": int(sol.nfev), "t_reached": float(sol.t[-1]) if len(sol.t) else None})
    return sol.y.T, {"nfev": int(sol.nfev), "method": method}


def heat_semigroup(G, mu, u0, times, method="auto", propagator=None):
    """u(t) = P_t u0 on the grid.  Dense spectral/expm route up to the threshold."""
    times = _times(times)
    u0 = _u0(G, u0)
    if u0.ndim != 1:
        raise DomainError("u0 must be a single function; use HeatPropagator.apply for batches")
    if method == "auto":
        method = "dense" if G.n <= _config.DENSE_THRESHOLD else "ode"
    if method == "dense":
        P = propagator or HeatPropagator(G, mu)
        vals = P.apply(u0, times)
        prov, diag = "matrix_exponential", {}
    elif method == "ode":
        scale = max(float(np.max(np.abs(u0))), 1e-300)
        vals, diag = _ode(G, mu, u0, times, None, "RK45", 1e-9, 1e-12 * scale)
        prov = "ode_integration"
    else:
        raise DomainError(f"unknown method {method!r}")
    _check_positive(vals, u0)
    diag.update(_mass_diag(G, mu, times, vals, check=_balanced(G)))
    return HeatSolution(G, mu, times, vals, prov, None, None, diag)


def heat_with_potential(G, mu, u0, q, times, method="auto"):
    """Solve du/dt = Delta u - q u."""
    times = _times(times)
    u0 = _u0(G, u0)
    if np.any(u0 <= 0):
        raise DomainError("heat_with_potential needs u0 > 0")
    if method == "auto":
        method = "dense" if (q.constant_in_time and G.n <= _config.DENSE_THRESHOLD) else "ode"
    if method == "dense":
        if not q.constant_in_time:
            raise DomainError("dense route needs a time-independent potential")
        vals = HeatPropagator(G, mu, q.values[0]).apply(u0, times)
        prov, diag = "matrix_exponential", {}
    else:
        scale = float(np.max(np.abs(u0)))
        vals, diag = _ode(G, mu, u0, times, q.at, "DOP853", 1e-12, 1e-14 * scale)
        prov = "ode_integration"
    _check_positive(vals, u0)
    mass = vals @ mu.values
    diag.update({"mass_initial": float(mass[0]), "mass_final": float(mass[-1])})
    return HeatSolution(G, mu, times, vals, prov, None, q, diag)


def heat_on_ball(G, mu, u0, times, vertices, q=None):
    """Solve on the given vertex set with the outside held at its initial values.

    Rows of the generator outside the set are zeroed, so exterior values
    stay fixed (positive data gives a positive solution).  The returned
    solution has ``domain`` = the set.
    """
    times = _times(times)
    u0 = _u0(G, u0)
    inside = np.zeros(G.n, bool)
    inside[np.asarray(vertices, dtype=np.int64)] = True
    L = generator_matrix(G, mu)
    if q is not None:
        L = L - np.diag(np.asarray(q, dtype=float))
    L[~inside] = 0.0
    vals = np.stack([sla.expm(t * L) @ u0 for t in times])
    _check_positive(vals, u0)
    return HeatSolution(G, mu, times, vals, "matrix_exponential", inside,
                        None if q is None else Potential(G, mu, q), {"exterior": "frozen"})
