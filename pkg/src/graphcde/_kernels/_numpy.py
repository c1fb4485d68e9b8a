"""Pure-numpy reference implementations of the hot kernels."""

import numpy as np


def laplacian_batch(indptr, indices, weights, mu, F):
    F = np.atleast_2d(F)
    n = F.shape[1]
    rows = np.repeat(np.arange(n), np.diff(indptr))
    diff = F[:, indices] - F[:, rows]
    out = np.zeros_like(F, dtype=float)
    np.add.at(out.T, rows, (weights * diff).T)
    return out / mu


def gamma_batch(indptr, indices, weights, mu, F, G):
    F = np.atleast_2d(F)
    G = np.atleast_2d(G)
    n = F.shape[1]
    rows = np.repeat(np.arange(n), np.diff(indptr))
    prod = (F[:, indices] - F[:, rows]) * (G[:, indices] - G[:, rows])
    out = np.zeros(np.broadcast_shapes(F.shape, G.shape), dtype=float)
    np.add.at(out.T, rows, (weights * prod).T)
    return out / (2.0 * mu)


def reduced_objective(S, p, cx, pk, pkk, pc, zk, zc, zptr, inv_n, mode):
    """Ratio (Gt2 - dim term) / Gamma at x in log coordinates, f(x) = 1.

    Distance-2 values are eliminated at their exact optimum.  Returns
    (ratio, grad wrt S, Delta, Gamma).
    """
    S = np.atleast_2d(S)
    B, D = S.shape
    f = np.exp(S)
    d = np.expm1(S)
    P = p.sum()
    delta = d @ p
    gx = 0.5 * (d * d) @ p
    val = np.zeros(B)
    g = np.zeros((B, D))

    # z = x
    val += ((1.0 / f + 2.0) * d * d) @ cx
    g += cx * (-d * d / (f * f) + 2.0 * (1.0 / f + 2.0) * d)

    # z in N(x)
    if len(pk):
        fk = f[:, pk]
        dk = d[:, pk]
        e = d[:, pkk] - dk
        val += ((e * e / fk - 2.0 * dk * e) * pc).sum(axis=1)
        gk = pc * (-e * e / (fk * fk) - 2.0 * e / fk - 2.0 * e + 2.0 * dk)
        gkk = pc * (2.0 * e / fk - 2.0 * dk)
        np.add.at(g.T, pk, gk.T)
        np.add.at(g.T, pkk, gkk.T)

    # z at distance two, optimum plugged in
    if len(zk):
        nz = len(zptr) - 1
        zid = np.repeat(np.arange(nz), np.diff(zptr))
        fk = f[:, zk]
        dk = d[:, zk]
        ay = zc / fk
        r = fk * fk
        A = np.zeros((B, nz))
        Ar = np.zeros((B, nz))
        np.add.at(A.T, zid, ay.T)
        np.add.at(Ar.T, zid, (ay * r).T)
        rbar = (Ar / A)[:, zid]
        dev = r - rbar
        val += (ay * dev * dev).sum(axis=1) - (zc * dk * dk * fk).sum(axis=1)
        gk = dev * dev * (-zc / (fk * fk)) + 2.0 * ay * dev * 2.0 * fk
        gk -= zc * (2.0 * dk * fk + dk * dk)
        np.add.at(g.T, zk, gk.T)

    val += -0.5 * P * gx + 0.5 * delta * (delta + gx)
    pd = p * d
    g += -0.5 * P * pd + np.outer(delta, p) + 0.5 * (np.outer(gx, p) + delta[:, None] * pd)

    if mode == 0:
        val -= inv_n * delta * delta
        g -= 2.0 * inv_n * np.outer(delta, p)
        gs = g * f
    else:
        L = S @ p
        val -= inv_n * L * L
        gs = g * f - 2.0 * inv_n * np.outer(L, p)

    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = val / gx
        gr = (gs - ratio[:, None] * pd * f) / gx[:, None]
    return ratio, gr, delta, gx


def cut_enumerate(indptr, indices, weights, mu, chunk=1 << 15):
    """Exhaustive Cheeger ratio over all nonempty S with mu(S) <= mu(V)/2."""
    n = mu.shape[0]
    rows = np.repeat(np.arange(n), np.diff(indptr))
    cols, w = indices, weights
    half = mu.sum() / 2.0
    best = np.inf
    best_mask = 0
    total = 1 << n
    bits = np.arange(n, dtype=np.int64)
    for start in range(1, total, chunk):
        ids = np.arange(start, min(start + chunk, total), dtype=np.int64)
        X = ((ids[:, None] >> bits) & 1).astype(float)
        vol = X @ mu
        ok = vol <= half * (1 + 1e-12)
        if not ok.any():
            continue
        X = X[ok]
        ids = ids[ok]
        bnd = (X[:, rows] * (1.0 - X[:, cols])) @ w
        ratio = bnd / vol[ok]
        j = int(np.argmin(ratio))
        if ratio[j] < best - 1e-15:
            best = float(ratio[j])
            best_mask = int(ids[j])
    return best, best_mask


def _stage_fun(args, beta, P):
    p = args[0]
    mode = args[-1]

    def fun(S):
        r, g, delta, gx = reduced_objective(S, *args)
        feas = (gx > 0) & np.isfinite(r)
        if mode == 0:
            feas &= delta < 0
            with np.errstate(divide="ignore", invalid="ignore"):
                J = r - beta * np.log(-delta / P)
                g = g - beta * (p * np.exp(S)) / delta[:, None]
        else:
            J = r
        return np.where(feas, J, np.inf), np.where(feas[:, None], g, 0.0)

    return fun


def _bfgs(fun, S, iters, lo, hi, gtol=1e-11):
    """Batched projected BFGS, one row per start (same rules as the numba loop)."""
    S = np.array(S, dtype=float)
    B, D = S.shape
    J, g = fun(S)
    eye = np.eye(D)
    H = np.repeat(eye[None], B, axis=0)
    active = np.isfinite(J)
    stall = np.zeros(B, dtype=np.int64)
    tprev = np.ones(B)
    for _ in range(iters):
        idx = np.flatnonzero(active)
        if not len(idx):
            break
        s0, J0, g0 = S[idx], J[idx], g[idx]
        free = ~(((s0 <= lo) & (g0 > 0)) | ((s0 >= hi) & (g0 < 0)))
        pg = np.where(free, g0, 0.0)
        done = np.max(np.abs(pg), axis=1) < gtol
        p = -np.einsum("bij,bj->bi", H[idx], pg) * free
        slope = (p * pg).sum(axis=1)
        bad = ~(slope < 0)
        if bad.any():
            H[idx[bad]] = eye
            p[bad] = -pg[bad]
        p *= np.minimum(1.0, 2.0 / np.maximum(np.abs(p).max(axis=1), 1e-300))[:, None]
        t = np.minimum(1.0, 4.0 * tprev[idx])
        s1, J1, g1 = s0.copy(), J0.copy(), g0.copy()
        acc = np.zeros(len(idx), dtype=bool)
        pend = np.flatnonzero(~done)
        for _ls in range(30):
            if not len(pend):
                break
            trial = np.clip(s0[pend] + t[pend, None] * p[pend], lo, hi)
            Jt, gt = fun(trial)
            armijo = J0[pend] + 1e-4 * (g0[pend] * (trial - s0[pend])).sum(axis=1) + 4e-16 * np.abs(J0[pend])
            ok = np.isfinite(Jt) & (Jt <= armijo)
            a = pend[ok]
            s1[a], J1[a], g1[a] = trial[ok], Jt[ok], gt[ok]
            acc[a] = True
            pend = pend[~ok]
            t[pend] *= 0.5
        tprev[idx] = np.where(acc, t, tprev[idx])
        sk = s1 - s0
        yk = g1 - g0
        sy = (sk * yk).sum(axis=1)
        upd = acc & (sy > 1e-14 * np.sqrt((sk * sk).sum(axis=1) * (yk * yk).sum(axis=1)) + 1e-300)
        if upd.any():
            u = np.flatnonzero(upd)
            rho = 1.0 / sy[u]
            V = eye[None] - rho[:, None, None] * np.einsum("bi,bj->bij", sk[u], yk[u])
            Hu = np.einsum("bij,bjk,blk->bil", V, H[idx[u]], V)
            H[idx[u]] = Hu + rho[:, None, None] * np.einsum("bi,bj->bij", sk[u], sk[u])
        small = acc & (np.abs(J1 - J0) <= 1e-15 * (1.0 + np.abs(J0)))
        stall[idx] = np.where(small, stall[idx] + 1, 0)
        S[idx], J[idx], g[idx] = s1, J1, g1
        active[idx[done | ~acc | (stall[idx] >= 3)]] = False
    return S


def cde_multistart(S0, betas, iters, lo, hi, *args):
    """Barrier continuation; returns the iterate after every stage, shape (stages, B, D)."""
    P = float(args[0].sum())
    S = np.array(S0, dtype=float)
    hist = np.empty((len(betas),) + S.shape)
    for i, beta in enumerate(betas):
        S = _bfgs(_stage_fun(args, beta, P), S, iters, lo, hi)
        hist[i] = S
    return hist
