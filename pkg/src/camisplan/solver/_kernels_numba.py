"""Compiled node-update kernels (scalar loops, numba)."""
import math

import numpy as np

from .._backend import njit

FAR, CONSIDERED, FRONT, INNER = 0, 1, 2, 3
NB_A = np.array([1, 0, -1, -1, 0, 1], dtype=np.int64)
NB_B = np.array([0, 1, 1, 0, -1, -1], dtype=np.int64)
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
EPS_TOL = 1e-6
XI_TOL = 1e-9

# per-node parameter columns
P_Q1, P_Q3, P_Q4, P_Q5, P_GX, P_GY, P_UPS, P_CISO = range(8)


@njit(cache=True)
def _gauge(par, ya, yb, flip, vx, vy):
    gx = par[ya, yb, P_GX]
    gy = par[ya, yb, P_GY]
    c = gx * vx + gy * vy
    s = gx * vy - gy * vx
    if flip:
        c = -c
        s = -s
    lin = par[ya, yb, P_Q4] * c + par[ya, yb, P_Q5] * s
    quad = par[ya, yb, P_Q1] * c * c + par[ya, yb, P_Q3] * s * s
    return 0.5 * (-lin + math.sqrt(lin * lin - 4.0 * quad))


@njit(cache=True)
def _sl_value(eps, par, ya, yb, flip, yx, yy, zx, zy, wx, wy, tz, tw):
    fx = eps * zx + (1.0 - eps) * wx
    fy = eps * zy + (1.0 - eps) * wy
    return _gauge(par, ya, yb, flip, yx - fx, yy - fy) + eps * tz + (1.0 - eps) * tw


@njit(cache=True)
def _golden_pair(par, ya, yb, flip, yx, yy, zx, zy, wx, wy, tz, tw):
    a = 0.0
    b = 1.0
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc = _sl_value(c, par, ya, yb, flip, yx, yy, zx, zy, wx, wy, tz, tw)
    fd = _sl_value(d, par, ya, yb, flip, yx, yy, zx, zy, wx, wy, tz, tw)
    while b - a > EPS_TOL:
        if fc < fd:
            b = d
            d = c
            fd = fc
            c = b - GOLDEN * (b - a)
            fc = _sl_value(c, par, ya, yb, flip, yx, yy, zx, zy, wx, wy, tz, tw)
        else:
            a = c
            c = d
            fc = fd
            d = a + GOLDEN * (b - a)
            fd = _sl_value(d, par, ya, yb, flip, yx, yy, zx, zy, wx, wy, tz, tw)
    eps = 0.5 * (a + b)
    val = _sl_value(eps, par, ya, yb, flip, yx, yy, zx, zy, wx, wy, tz, tw)
    f0 = _sl_value(0.0, par, ya, yb, flip, yx, yy, zx, zy, wx, wy, tz, tw)
    if f0 < val:
        val = f0
        eps = 0.0
    f1 = _sl_value(1.0, par, ya, yb, flip, yx, yy, zx, zy, wx, wy, tz, tw)
    if f1 < val:
        val = f1
        eps = 1.0
    return val, eps


@njit(cache=True)
def _pair_candidate(ya, yb, za, zb, wa, wb, T, px, py, par, h, flip):
    """(value, psi_x, psi_y, regime) for the front pair (z, w); value inf
    when the pair offers nothing."""
    yx = px[ya, yb]
    yy = py[ya, yb]
    zx = px[za, zb]
    zy = py[za, zb]
    wx = px[wa, wb]
    wy = py[wa, wb]
    tz = T[za, zb]
    tw = T[wa, wb]
    if par[ya, yb, P_UPS] == 1.0:
        cost = par[ya, yb, P_CISO]
        dt = tz - tw
        if abs(dt) > 0.5 * h * cost:
            return math.inf, 0.0, 0.0, 1
        val = 0.5 * (tz + tw) + 0.5 * math.sqrt(3.0 * (h * cost) * (h * cost) - 3.0 * dt * dt)
        if not val > min(tz, tw):
            return math.inf, 0.0, 0.0, 1
        m00 = yx - zx
        m01 = yy - zy
        m10 = yx - wx
        m11 = yy - wy
        det = m00 * m11 - m01 * m10
        r0 = val - tz
        r1 = val - tw
        gx = (r0 * m11 - m01 * r1) / det
        gy = (m00 * r1 - m10 * r0) / det
        n = math.hypot(gx, gy)
        return val, gx / n, gy / n, 1
    val, eps = _golden_pair(par, ya, yb, flip, yx, yy, zx, zy, wx, wy, tz, tw)
    vx = yx - (eps * zx + (1.0 - eps) * wx)
    vy = yy - (eps * zy + (1.0 - eps) * wy)
    n = math.hypot(vx, vy)
    return val, vx / n, vy / n, 0


@njit(cache=True)
def _single_candidate(ya, yb, za, zb, T, px, py, par, flip):
    vx = px[ya, yb] - px[za, zb]
    vy = py[ya, yb] - py[za, zb]
    n = math.hypot(vx, vy)
    if par[ya, yb, P_UPS] == 1.0:
        val = T[za, zb] + par[ya, yb, P_CISO] * n
    else:
        val = T[za, zb] + _gauge(par, ya, yb, flip, vx, vy)
    return val, vx / n, vy / n


@njit(cache=True)
def _within(ya, yb, za, zb, px, py, xi):
    return math.hypot(px[ya, yb] - px[za, zb], py[ya, yb] - py[za, zb]) <= xi


@njit(cache=True)
def relax(ya, yb, xa, xb, full, state, T, psi, px, py, par, offs, orad, h, flip, counts):
    """Re-estimate T at Considered node y. ``full`` scans every front pair
    within reach; otherwise only pairs containing the new front node x."""
    ni, nj = state.shape
    xi = h * par[ya, yb, P_UPS] * (1.0 + XI_TOL)
    best = T[ya, yb]
    bpx = 0.0
    bpy = 0.0
    breg = -1
    if full:
        for k in range(offs.shape[0]):
            if orad[k] * h > xi:
                break
            za = ya + offs[k, 0]
            zb = yb + offs[k, 1]
            if za < 0 or za >= ni or zb < 0 or zb >= nj or state[za, zb] != FRONT:
                continue
            val, ex, ey = _single_candidate(ya, yb, za, zb, T, px, py, par, flip)
            if val < best:
                best, bpx, bpy, breg = val, ex, ey, 2
            for m in range(3):
                wa = za + NB_A[m]
                wb = zb + NB_B[m]
                if wa < 0 or wa >= ni or wb < 0 or wb >= nj or state[wa, wb] != FRONT:
                    continue
                if not _within(ya, yb, wa, wb, px, py, xi):
                    continue
                val, ex, ey, reg = _pair_candidate(ya, yb, za, zb, wa, wb, T, px, py, par, h, flip)
                if val < best:
                    best, bpx, bpy, breg = val, ex, ey, reg
    else:
        if state[xa, xb] != FRONT:
            return False
        val, ex, ey = _single_candidate(ya, yb, xa, xb, T, px, py, par, flip)
        if val < best:
            best, bpx, bpy, breg = val, ex, ey, 2
        for m in range(6):
            wa = xa + NB_A[m]
            wb = xb + NB_B[m]
            if wa < 0 or wa >= ni or wb < 0 or wb >= nj or state[wa, wb] != FRONT:
                continue
            if not _within(ya, yb, wa, wb, px, py, xi):
                continue
            val, ex, ey, reg = _pair_candidate(ya, yb, xa, xb, wa, wb, T, px, py, par, h, flip)
            if val < best:
                best, bpx, bpy, breg = val, ex, ey, reg
    if breg < 0:
        return False
    T[ya, yb] = best
    psi[ya, yb, 0] = bpx
    psi[ya, yb, 1] = bpy
    counts[breg] += 1
    return True


@njit(cache=True)
def update_neighbours(xa, xb, state, T, psi, valid, px, py, par, offs, orad, rmax, h, flip,
                      counts, out):
    """Post-acceptance bookkeeping for node x; writes improved nodes into
    ``out`` and returns how many."""
    ni, nj = state.shape
    # (1) front nodes with every neighbour accepted become inner
    for m in range(-1, 6):
        if m < 0:
            za = xa
            zb = xb
        else:
            za = xa + NB_A[m]
            zb = xb + NB_B[m]
        if za < 0 or za >= ni or zb < 0 or zb >= nj or state[za, zb] != FRONT:
            continue
        inner = True
        for q in range(6):
            wa = za + NB_A[q]
            wb = zb + NB_B[q]
            if wa < 0 or wa >= ni or wb < 0 or wb >= nj or not valid[wa, wb]:
                continue
            if state[wa, wb] < FRONT:
                inner = False
                break
        if inner:
            state[za, zb] = INNER
    n = 0
    # (2) far neighbours join the considered set with a full estimate
    new_a = np.empty(6, dtype=np.int64)
    new_b = np.empty(6, dtype=np.int64)
    nnew = 0
    for m in range(6):
        ya = xa + NB_A[m]
        yb = xb + NB_B[m]
        if ya < 0 or ya >= ni or yb < 0 or yb >= nj or not valid[ya, yb]:
            continue
        if state[ya, yb] != FAR:
            continue
        state[ya, yb] = CONSIDERED
        new_a[nnew] = ya
        new_b[nnew] = yb
        nnew += 1
        if relax(ya, yb, xa, xb, True, state, T, psi, px, py, par, offs, orad, h, flip, counts):
            out[n, 0] = ya
            out[n, 1] = yb
            n += 1
    if state[xa, xb] != FRONT:
        return n
    # (3) considered nodes that have x inside their anisotropic reach
    for k in range(offs.shape[0]):
        if orad[k] > rmax:
            break
        ya = xa + offs[k, 0]
        yb = xb + offs[k, 1]
        if ya < 0 or ya >= ni or yb < 0 or yb >= nj or state[ya, yb] != CONSIDERED:
            continue
        fresh = False
        for q in range(nnew):
            if new_a[q] == ya and new_b[q] == yb:
                fresh = True
        if fresh:
            continue
        xi = h * par[ya, yb, P_UPS] * (1.0 + XI_TOL)
        if not _within(ya, yb, xa, xb, px, py, xi):
            continue
        if relax(ya, yb, xa, xb, False, state, T, psi, px, py, par, offs, orad, h, flip, counts):
            out[n, 0] = ya
            out[n, 1] = yb
            n += 1
    return n
