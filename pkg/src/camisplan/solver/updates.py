"""Scalar node-update rules of the ordered upwind method.

These are the readable reference versions; the compiled kernels in
``_kernels_numba`` and the vectorised ones in ``_kernels_numpy`` inline the
same arithmetic.
"""
import math

import numpy as np

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
EPS_TOL = 1e-6

REGIME_SEMI_LAGRANGIAN = 0
REGIME_EULERIAN = 1
REGIME_DIJKSTRA = 2


def upwind_condition(t_candidate, t1, t2):
    return t_candidate > min(t1, t2)


def eulerian_hex(t1, t2, h, c):
    """Plane-wave value at the apex of the equilateral triangle whose base
    nodes carry ``t1`` and ``t2``. NaN when the radicand is negative."""
    rad = 3.0 * (h * c) ** 2 - 3.0 * (t1 - t2) ** 2
    if rad < 0.0:
        return math.nan
    return 0.5 * (t1 + t2) + 0.5 * math.sqrt(rad)


def eulerian_is_causal(t1, t2, h, c):
    """True when the plane-wave characteristic enters through the base
    segment, i.e. the Eulerian value is also the constrained minimum."""
    return abs(t1 - t2) <= 0.5 * h * c


def golden_section(f, lo=0.0, hi=1.0, tol=EPS_TOL):
    """Minimise a unimodal ``f`` on [lo, hi]; endpoints are always tried."""
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    xm = 0.5 * (a + b)
    best = (xm, f(xm))
    for x in (lo, hi):
        fx = f(x)
        if fx < best[1]:
            best = (x, fx)
    return best


def semi_lagrangian(x, x1, x2, t1, t2, gauge):
    """min over eps of gauge(x - foot) + eps*t1 + (1-eps)*t2 with
    foot = eps*x1 + (1-eps)*x2. ``gauge(v)`` is the cost of moving along the
    displacement v (cost per metre times length).

    Returns (value, eps).
    """
    x, x1, x2 = (np.asarray(p, dtype=float) for p in (x, x1, x2))

    def f(eps):
        foot = eps * x1 + (1.0 - eps) * x2
        return gauge(x - foot) + eps * t1 + (1.0 - eps) * t2

    eps, val = golden_section(f)
    return val, eps


def _unit(v):
    n = math.hypot(v[0], v[1])
    return np.array([v[0] / n, v[1] / n])


def update_psi(x, regime, x1, x2=None, t=None, t1=None, t2=None, eps=None):
    """Characteristic direction at ``x`` (pointing away from the source)."""
    x = np.asarray(x, dtype=float)
    x1 = np.asarray(x1, dtype=float)
    if regime == REGIME_SEMI_LAGRANGIAN:
        x2 = np.asarray(x2, dtype=float)
        return _unit(x - (eps * x1 + (1.0 - eps) * x2))
    if regime == REGIME_EULERIAN:
        x2 = np.asarray(x2, dtype=float)
        m = np.array([x - x1, x - x2])
        det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        if abs(det) > 1e-12 * (np.abs(m).max() ** 2):
            g = np.linalg.solve(m, np.array([t - t1, t - t2]))
            if np.hypot(*g) > 0:
                return _unit(g)
        regime = REGIME_DIJKSTRA
        if t2 is not None and t2 < t1:
            x1 = x2
    return _unit(x - x1)


def update_T(x, pairs, singles, gauge, upsilon, h, cost=None):
    """Best tentative value at ``x`` from accepted front data.

    ``pairs`` holds ((p1, t1), (p2, t2)) adjacent front pairs, ``singles``
    holds (p, t) front nodes. For an isotropic node (``upsilon == 1``)
    ``cost`` is its scalar cost and pairs use the hex Eulerian form.

    Returns (T, psi, regime); T is inf when nothing is available.
    """
    x = np.asarray(x, dtype=float)
    best = (math.inf, None, None)
    for p, t in singles:
        p = np.asarray(p, dtype=float)
        val = t + (cost * math.hypot(*(x - p)) if upsilon == 1.0 else gauge(x - p))
        if val < best[0]:
            best = (val, _unit(x - p), REGIME_DIJKSTRA)
    for (p1, t1), (p2, t2) in pairs:
        if upsilon == 1.0:
            if not eulerian_is_causal(t1, t2, h, cost):
                continue
            val = eulerian_hex(t1, t2, h, cost)
            if math.isnan(val) or not upwind_condition(val, t1, t2):
                continue
            if val < best[0]:
                psi = update_psi(x, REGIME_EULERIAN, p1, p2, t=val, t1=t1, t2=t2)
                best = (val, psi, REGIME_EULERIAN)
        else:
            val, eps = semi_lagrangian(x, p1, p2, t1, t2, gauge)
            if val < best[0]:
                best = (val, update_psi(x, REGIME_SEMI_LAGRANGIAN, p1, p2, eps=eps),
                        REGIME_SEMI_LAGRANGIAN)
    return best
