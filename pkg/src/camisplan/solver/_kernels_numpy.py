"""Pure-numpy node-update kernels.

Same contract as the compiled kernels. Candidate sets for one node are
evaluated as arrays, and the golden-section search runs on all pairs at once.
Candidate order matches the compiled loops so ties resolve identically.
"""
import math

import numpy as np

from ._kernels_numba import (
    CONSIDERED, EPS_TOL, FAR, FRONT, GOLDEN, INNER, NB_A, NB_B, XI_TOL,
    P_CISO, P_GX, P_GY, P_Q1, P_Q3, P_Q4, P_Q5, P_UPS,
)

NB = np.stack([NB_A, NB_B], axis=1)


def _in_bounds(idx, shape):
    return (idx[:, 0] >= 0) & (idx[:, 0] < shape[0]) & (idx[:, 1] >= 0) & (idx[:, 1] < shape[1])


def _gauge(row, flip, vx, vy):
    c = row[P_GX] * vx + row[P_GY] * vy
    s = row[P_GX] * vy - row[P_GY] * vx
    if flip:
        c = -c
        s = -s
    lin = row[P_Q4] * c + row[P_Q5] * s
    quad = row[P_Q1] * c * c + row[P_Q3] * s * s
    return 0.5 * (-lin + np.sqrt(lin * lin - 4.0 * quad))


def _golden_pairs(row, flip, yx, yy, zx, zy, wx, wy, tz, tw):
    def f(eps):
        fx = eps * zx + (1.0 - eps) * wx
        fy = eps * zy + (1.0 - eps) * wy
        return _gauge(row, flip, yx - fx, yy - fy) + eps * tz + (1.0 - eps) * tw

    n = zx.shape[0]
    a = np.zeros(n)
    b = np.ones(n)
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc = f(c)
    fd = f(d)
    live = b - a > EPS_TOL
    while live.any():
        left = live & (fc < fd)
        right = live & ~(fc < fd)
        b = np.where(left, d, b)
        a = np.where(right, c, a)
        nc = np.where(left, b - GOLDEN * (b - a), d)
        nd = np.where(right, a + GOLDEN * (b - a), c)
        fnew = f(np.where(left, nc, nd))
        fc, fd = np.where(left, fnew, np.where(right, fd, fc)), np.where(right, fnew, np.where(left, fc, fd))
        c = np.where(live, nc, c)
        d = np.where(live, nd, d)
        live = b - a > EPS_TOL
    eps = 0.5 * (a + b)
    val = f(eps)
    for end in (0.0, 1.0):
        fe = f(np.full(n, end))
        better = fe < val
        val = np.where(better, fe, val)
        eps = np.where(better, end, eps)
    return val, eps


def _evaluate(y, cand, T, px, py, par, h, flip):
    """Values, unit directions and regimes for candidate rows (za, zb, wa, wb);
    wa < 0 marks a single-node update."""
    ya, yb = y
    row = par[ya, yb]
    yx, yy = px[ya, yb], py[ya, yb]
    zx, zy = px[cand[:, 0], cand[:, 1]], py[cand[:, 0], cand[:, 1]]
    tz = T[cand[:, 0], cand[:, 1]]
    single = cand[:, 2] < 0
    wi = np.where(single[:, None], cand[:, :2], cand[:, 2:])
    wx, wy = px[wi[:, 0], wi[:, 1]], py[wi[:, 0], wi[:, 1]]
    tw = T[wi[:, 0], wi[:, 1]]

    val = np.full(len(cand), math.inf)
    dx = np.zeros(len(cand))
    dy = np.zeros(len(cand))
    reg = np.full(len(cand), 2)

    vx, vy = yx - zx[single], yy - zy[single]
    n = np.hypot(vx, vy)
    if row[P_UPS] == 1.0:
        val[single] = tz[single] + row[P_CISO] * n
    else:
        val[single] = tz[single] + _gauge(row, flip, vx, vy)
    dx[single], dy[single] = vx / n, vy / n

    pair = ~single
    if not pair.any():
        return val, dx, dy, reg
    zx, zy, wx, wy, tz, tw = (arr[pair] for arr in (zx, zy, wx, wy, tz, tw))
    if row[P_UPS] == 1.0:
        reg[pair] = 1
        cost = row[P_CISO]
        dt = tz - tw
        with np.errstate(invalid="ignore", divide="ignore"):
            pv = 0.5 * (tz + tw) + 0.5 * np.sqrt(3.0 * (h * cost) * (h * cost) - 3.0 * dt * dt)
            ok = (np.abs(dt) <= 0.5 * h * cost) & (pv > np.minimum(tz, tw))
            m00, m01 = yx - zx, yy - zy
            m10, m11 = yx - wx, yy - wy
            det = m00 * m11 - m01 * m10
            r0, r1 = pv - tz, pv - tw
            gx = (r0 * m11 - m01 * r1) / det
            gy = (m00 * r1 - m10 * r0) / det
            gn = np.hypot(gx, gy)
        val[pair] = np.where(ok, pv, math.inf)
        dx[pair], dy[pair] = gx / gn, gy / gn
    else:
        reg[pair] = 0
        pv, eps = _golden_pairs(row, flip, yx, yy, zx, zy, wx, wy, tz, tw)
        vx = yx - (eps * zx + (1.0 - eps) * wx)
        vy = yy - (eps * zy + (1.0 - eps) * wy)
        n = np.hypot(vx, vy)
        val[pair] = pv
        dx[pair], dy[pair] = vx / n, vy / n
    return val, dx, dy, reg


def _within(y, idx, px, py, xi):
    return np.hypot(px[y] - px[idx[:, 0], idx[:, 1]], py[y] - py[idx[:, 0], idx[:, 1]]) <= xi


def _front(idx, state):
    ok = _in_bounds(idx, state.shape)
    out = np.zeros(len(idx), dtype=bool)
    out[ok] = state[idx[ok, 0], idx[ok, 1]] == FRONT
    return out


def relax(ya, yb, xa, xb, full, state, T, psi, px, py, par, offs, orad, h, flip, counts):
    y = (ya, yb)
    xi = h * par[ya, yb, P_UPS] * (1.0 + XI_TOL)
    if full:
        z = offs[orad * h <= xi] + np.array([ya, yb])
        z = z[_front(z, state)]
        nsplit = 4
        w = z[:, None, :] + NB[None, :3, :]
    else:
        if state[xa, xb] != FRONT:
            return False
        z = np.array([[xa, xb]])
        nsplit = 7
        w = z[:, None, :] + NB[None, :, :]
    if len(z) == 0:
        return False
    cand = np.full((len(z), nsplit, 4), -1, dtype=np.int64)
    cand[:, :, :2] = z[:, None, :]
    cand[:, 1:, 2:] = w
    cand = cand.reshape(-1, 4)
    single = cand[:, 2] < 0
    keep = single.copy()
    wi = cand[~single, 2:]
    ok = _front(wi, state)
    ok[ok] = _within(y, wi[ok], px, py, xi)
    keep[~single] = ok
    cand = cand[keep]
    val, dx, dy, reg = _evaluate(y, cand, T, px, py, par, h, flip)
    k = int(np.argmin(val))
    if not val[k] < T[ya, yb]:
        return False
    T[ya, yb] = val[k]
    psi[ya, yb, 0] = dx[k]
    psi[ya, yb, 1] = dy[k]
    counts[reg[k]] += 1
    return True


def update_neighbours(xa, xb, state, T, psi, valid, px, py, par, offs, orad, rmax, h, flip,
                      counts, out):
    shape = state.shape
    x = np.array([xa, xb])
    around = np.vstack([x[None, :], x + NB])
    around = around[_front(around, state)]
    for za, zb in around:
        w = np.array([za, zb]) + NB
        w = w[_in_bounds(w, shape)]
        w = w[valid[w[:, 0], w[:, 1]]]
        if np.all(state[w[:, 0], w[:, 1]] >= FRONT):
            state[za, zb] = INNER

    n = 0
    nbrs = x + NB
    nbrs = nbrs[_in_bounds(nbrs, shape)]
    nbrs = nbrs[valid[nbrs[:, 0], nbrs[:, 1]] & (state[nbrs[:, 0], nbrs[:, 1]] == FAR)]
    for ya, yb in nbrs:
        state[ya, yb] = CONSIDERED
        if relax(ya, yb, xa, xb, True, state, T, psi, px, py, par, offs, orad, h, flip, counts):
            out[n] = ya, yb
            n += 1
    if state[xa, xb] != FRONT:
        return n

    y = offs[orad <= rmax] + x
    y = y[_in_bounds(y, shape)]
    y = y[state[y[:, 0], y[:, 1]] == CONSIDERED]
    if len(nbrs):
        fresh = (y[:, None, :] == nbrs[None, :, :]).all(axis=2).any(axis=1)
        y = y[~fresh]
    xi = h * par[y[:, 0], y[:, 1], P_UPS] * (1.0 + XI_TOL)
    d = np.hypot(px[y[:, 0], y[:, 1]] - px[xa, xb], py[y[:, 0], y[:, 1]] - py[xa, xb])
    for ya, yb in y[d <= xi]:
        if relax(ya, yb, xa, xb, False, state, T, psi, px, py, par, offs, orad, h, flip, counts):
            out[n] = ya, yb
            n += 1
    return n
