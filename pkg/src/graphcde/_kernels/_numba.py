"""numba versions of the kernels in _numpy.py (same signatures)."""

import numpy as np
import numba as nb


@nb.njit(cache=True)
def laplacian_batch(indptr, indices, weights, mu, F):
    B, n = F.shape
    out = np.zeros((B, n))
    for s in range(B):
        for x in range(n):
            acc = 0.0
            fx = F[s, x]
            for j in range(indptr[x], indptr[x + 1]):
                acc += weights[j] * (F[s, indices[j]] - fx)
            out[s, x] = acc / mu[x]
    return out


@nb.njit(cache=True)
def gamma_batch(indptr, indices, weights, mu, F, G):
    B, n = F.shape
    out = np.zeros((B, n))
    for s in range(B):
        for x in range(n):
            acc = 0.0
            fx = F[s, x]
            gx = G[s, x]
            for j in range(indptr[x], indptr[x + 1]):
                y = indices[j]
                acc += weights[j] * (F[s, y] - fx) * (G[s, y] - gx)
            out[s, x] = acc / (2.0 * mu[x])
    return out


@nb.njit(cache=True)
def reduced_objective(S, p, cx, pk, pkk, pc, zk, zc, zptr, inv_n, mode):
    B, D = S.shape
    nz = zptr.shape[0] - 1
    P = 0.0
    for k in range(D):
        P += p[k]
    ratio = np.empty(B)
    grad = np.zeros((B, D))
    deltas = np.empty(B)
    gammas = np.empty(B)
    f = np.empty(D)
    d = np.empty(D)
    g = np.empty(D)
    for s in range(B):
        delta = 0.0
        gx = 0.0
        L = 0.0
        for k in range(D):
            f[k] = np.exp(S[s, k])
            d[k] = np.expm1(S[s, k])
            delta += p[k] * d[k]
            gx += 0.5 * p[k] * d[k] * d[k]
            L += p[k] * S[s, k]
            g[k] = 0.0
        val = 0.0
        for k in range(D):
            c = cx[k]
            if c != 0.0:
                q = 1.0 / f[k] + 2.0
                val += c * q * d[k] * d[k]
                g[k] += c * (-d[k] * d[k] / (f[k] * f[k]) + 2.0 * q * d[k])
        for i in range(pk.shape[0]):
            k = pk[i]
            kk = pkk[i]
            c = pc[i]
            e = d[kk] - d[k]
            val += c * (e * e / f[k] - 2.0 * d[k] * e)
            g[k] += c * (-e * e / (f[k] * f[k]) - 2.0 * e / f[k] - 2.0 * e + 2.0 * d[k])
            g[kk] += c * (2.0 * e / f[k] - 2.0 * d[k])
        for z in range(nz):
            A = 0.0
            Ar = 0.0
            for i in range(zptr[z], zptr[z + 1]):
                k = zk[i]
                ay = zc[i] / f[k]
                A += ay
                Ar += ay * f[k] * f[k]
            rbar = Ar / A
            for i in range(zptr[z], zptr[z + 1]):
                k = zk[i]
                c = zc[i]
                ay = c / f[k]
                dev = f[k] * f[k] - rbar
                val += ay * dev * dev - c * d[k] * d[k] * f[k]
                g[k] += -dev * dev * c / (f[k] * f[k]) + 4.0 * ay * dev * f[k]
                g[k] -= c * (2.0 * d[k] * f[k] + d[k] * d[k])
        val += -0.5 * P * gx + 0.5 * delta * (delta + gx)
        for k in range(D):
            pd = p[k] * d[k]
            g[k] += -0.5 * P * pd + delta * p[k] + 0.5 * (p[k] * gx + delta * pd)
        if mode == 0:
            val -= inv_n * delta * delta
            for k in range(D):
                g[k] = (g[k] - 2.0 * inv_n * delta * p[k]) * f[k]
        else:
            val -= inv_n * L * L
            for k in range(D):
                g[k] = g[k] * f[k] - 2.0 * inv_n * L * p[k]
        if gx > 0.0:
            r = val / gx
            for k in range(D):
                grad[s, k] = (g[k] - r * p[k] * d[k] * f[k]) / gx
        else:
            r = np.nan
            for k in range(D):
                grad[s, k] = np.nan
        ratio[s] = r
        deltas[s] = delta
        gammas[s] = gx
    return ratio, grad, deltas, gammas


@nb.njit(cache=True)
def _cut_gray(n, indptr, indices, weights, rweights, mu):
    half = 0.0
    for i in range(n):
        half += mu[i]
    half *= 0.5 * (1 + 1e-12)
    inset = np.zeros(n, dtype=np.bool_)
    vol = 0.0
    bnd = 0.0
    best = np.inf
    best_mask = 0
    mask = 0
    total = 1 << n
    for it in range(1, total):
        # bit that flips between gray(it-1) and gray(it)
        b = 0
        t = it
        while (t & 1) == 0:
            t >>= 1
            b += 1
        if inset[b]:
            inset[b] = False
            vol -= mu[b]
            for j in range(indptr[b], indptr[b + 1]):
                y = indices[j]
                if inset[y]:
                    bnd += rweights[j]
                else:
                    bnd -= weights[j]
            mask ^= 1 << b
        else:
            inset[b] = True
            vol += mu[b]
            for j in range(indptr[b], indptr[b + 1]):
                y = indices[j]
                if inset[y]:
                    bnd -= rweights[j]
                else:
                    bnd += weights[j]
            mask ^= 1 << b
        if mask != 0 and vol <= half:
            r = bnd / vol
            if r < best - 1e-15:
                best = r
                best_mask = mask
    return best, best_mask


def cut_enumerate(indptr, indices, weights, mu):
    # rweights[j] is the weight of the reverse edge y -> x of edge j = (x, y)
    n = mu.shape[0]
    rows = np.repeat(np.arange(n), np.diff(indptr))
    lookup = {(int(a), int(b)): w for a, b, w in zip(rows, indices, weights)}
    rweights = np.array([lookup.get((int(b), int(a)), 0.0) for a, b in zip(rows, indices)], dtype=float)
    return _cut_gray(n, indptr, indices, weights, rweights, mu)


@nb.njit(cache=True)
def _reduced_one(s, p, cx, pk, pkk, pc, zk, zc, zptr, inv_n, mode, f, d, g):
    """Single-vector version of reduced_objective; gradient written to g."""
    S2 = s.reshape(1, s.shape[0])
    r, gr, dl, gx = reduced_objective(S2, p, cx, pk, pkk, pc, zk, zc, zptr, inv_n, mode)
    for k in range(s.shape[0]):
        g[k] = gr[0, k]
    return r[0], dl[0], gx[0]


@nb.njit(cache=True)
def _stage_obj(s, beta, P, p, cx, pk, pkk, pc, zk, zc, zptr, inv_n, mode, f, d, g):
    r, dl, gx = _reduced_one(s, p, cx, pk, pkk, pc, zk, zc, zptr, inv_n, mode, f, d, g)
    D = s.shape[0]
    if not (gx > 0.0) or not np.isfinite(r):
        return np.inf
    if mode == 0:
        if not (dl < 0.0):
            return np.inf
        for k in range(D):
            g[k] -= beta * p[k] * np.exp(s[k]) / dl
        return r - beta * np.log(-dl / P)
    return r


@nb.njit(cache=True)
def cde_multistart(S0, betas, iters, lo, hi, p, cx, pk, pkk, pc, zk, zc, zptr, inv_n, mode):
    B, D = S0.shape
    ns = betas.shape[0]
    hist = np.empty((ns, B, D))
    P = 0.0
    for k in range(D):
        P += p[k]
    f = np.empty(D)
    d = np.empty(D)
    g = np.empty(D)
    g1 = np.empty(D)
    pg = np.empty(D)
    freev = np.empty(D, dtype=np.bool_)
    dirn = np.empty(D)
    s1 = np.empty(D)
    H = np.empty((D, D))
    Hy = np.empty(D)
    for b in range(B):
        s = S0[b].copy()
        for st in range(ns):
            beta = betas[st]
            for i in range(D):
                for j in range(D):
                    H[i, j] = 1.0 if i == j else 0.0
            J = _stage_obj(s, beta, P, p, cx, pk, pkk, pc, zk, zc, zptr, inv_n, mode, f, d, g)
            tprev = 1.0
            stall = 0
            if np.isfinite(J):
                for it in range(iters):
                    gmax = 0.0
                    for k in range(D):
                        free = not ((s[k] <= lo and g[k] > 0.0) or (s[k] >= hi and g[k] < 0.0))
                        freev[k] = free
                        pg[k] = g[k] if free else 0.0
                        gmax = max(gmax, abs(pg[k]))
                    if gmax < 1e-11:
                        break
                    slope = 0.0
                    pmax = 0.0
                    for i in range(D):
                        acc = 0.0
                        for j in range(D):
                            acc += H[i, j] * pg[j]
                        dirn[i] = -acc if freev[i] else 0.0
                        slope += dirn[i] * pg[i]
                    if not (slope < 0.0):
                        for i in range(D):
                            for j in range(D):
                                H[i, j] = 1.0 if i == j else 0.0
                        slope = 0.0
                        for i in range(D):
                            dirn[i] = -pg[i]
                            slope -= pg[i] * pg[i]
                    for i in range(D):
                        pmax = max(pmax, abs(dirn[i]))
                    cap = min(1.0, 2.0 / max(pmax, 1e-300))
                    for i in range(D):
                        dirn[i] *= cap
                    t = min(1.0, 4.0 * tprev)
                    accepted = False
                    J1 = np.inf
                    for ls in range(30):
                        lin = 0.0
                        for k in range(D):
                            v = s[k] + t * dirn[k]
                            v = min(max(v, lo), hi)
                            s1[k] = v
                            lin += g[k] * (v - s[k])
                        J1 = _stage_obj(s1, beta, P, p, cx, pk, pkk, pc, zk, zc, zptr, inv_n, mode, f, d, g1)
                        if np.isfinite(J1) and J1 <= J + 1e-4 * lin + 4e-16 * abs(J):
                            accepted = True
                            break
                        t *= 0.5
                    if not accepted:
                        break
                    tprev = t
                    sy = 0.0
                    ss = 0.0
                    yy = 0.0
                    for k in range(D):
                        sk = s1[k] - s[k]
                        yk = g1[k] - g[k]
                        sy += sk * yk
                        ss += sk * sk
                        yy += yk * yk
                    if sy > 1e-14 * np.sqrt(ss * yy) + 1e-300:
                        rho = 1.0 / sy
                        # H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T
                        yHy = 0.0
                        for i in range(D):
                            acc = 0.0
                            for j in range(D):
                                acc += H[i, j] * (g1[j] - g[j])
                            Hy[i] = acc
                            yHy += (g1[i] - g[i]) * acc
                        for i in range(D):
                            si = s1[i] - s[i]
                            for j in range(D):
                                sj = s1[j] - s[j]
                                H[i, j] += (-rho * (si * Hy[j] + Hy[i] * sj)
                                            + (rho * rho * yHy + rho) * si * sj)
                    small = abs(J1 - J) <= 1e-15 * (1.0 + abs(J))
                    stall = stall + 1 if small else 0
                    for k in range(D):
                        s[k] = s1[k]
                        g[k] = g1[k]
                    J = J1
                    if stall >= 3:
                        break
            for k in range(D):
                hist[st, b, k] = s[k]
    return hist
