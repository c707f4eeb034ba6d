"""Brute-force references for testing the planner.

Nothing here is fast. Each routine recomputes its answer from the cost model
and the lattice geometry without touching the solver's kernels or tables.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .camis import InvalidEllipseError, SlipSingularityError, anisotropy, isotropic_equivalent
from .terrain import NEIGHBOR_OFFSETS, HexIndex, hex_position

RING2_OFFSETS = ((2, 0), (1, 1), (0, 2), (-1, 2), (-2, 2), (-2, 1),
                 (-2, 0), (-1, -1), (0, -2), (1, -2), (2, -2), (2, -1))


class OracleUnreachable(RuntimeError):
    pass


def _node_costs(terrain, model, mode):
    """Per-node callables heading (cos, sin) in world frame -> cost per metre."""
    fns = {}
    for a, b in zip(*np.nonzero(terrain.valid)):
        alpha = float(terrain.alpha[a, b])
        try:
            e = model.ellipse(alpha)
        except (SlipSingularityError, InvalidEllipseError):
            continue
        if mode == "isotropic-equivalent":
            c = e.anchors.descent if anisotropy(e) == 1.0 else isotropic_equivalent(e)
            fns[(a, b)] = (lambda c: lambda ux, uy: c)(c)
        else:
            gx, gy = terrain.gamma[a, b]
            fns[(a, b)] = (lambda e, gx, gy: lambda ux, uy: float(
                e.cost_cs(gx * ux + gy * uy, gx * uy - gy * ux)))(e, gx, gy)
    return fns


@dataclass
class DiscreteGraph:
    """Directed graph over valid hex nodes with ring-1 and ring-2 edges.

    An edge's weight is its length times the mean of the two endpoint costs
    at the edge heading.
    """

    terrain: object
    matrix: csr_matrix
    nodes: list
    numbering: dict

    @classmethod
    def build(cls, terrain, model, mode="anisotropic"):
        fns = _node_costs(terrain, model, mode)
        nodes = sorted(fns)
        number = {n: k for k, n in enumerate(nodes)}
        rows, cols, weights = [], [], []
        h = terrain.h
        for (a, b) in nodes:
            for di, dj in NEIGHBOR_OFFSETS + RING2_OFFSETS:
                other = (a + di, b + dj)
                if other not in number:
                    continue
                dx, dy = hex_position((di, dj), h)
                length = math.hypot(dx, dy)
                ux, uy = dx / length, dy / length
                w = length * 0.5 * (fns[(a, b)](ux, uy) + fns[other](ux, uy))
                rows.append(number[(a, b)])
                cols.append(number[other])
                weights.append(w)
        n = len(nodes)
        matrix = csr_matrix((weights, (rows, cols)), shape=(n, n))
        return cls(terrain=terrain, matrix=matrix, nodes=nodes, numbering=number)

    def number(self, idx):
        slot = tuple(int(v) for v in self.terrain.slot(idx))
        try:
            return self.numbering[slot]
        except KeyError:
            raise KeyError(f"{tuple(idx)} is not a graph node") from None

    def shortest_path(self, start, goal):
        """(cost, [HexIndex, ...]) of the cheapest edge chain."""
        s, g = self.number(start), self.number(goal)
        dist, pred = dijkstra(self.matrix, directed=True, indices=s, return_predecessors=True)
        if not np.isfinite(dist[g]):
            raise OracleUnreachable(f"{tuple(goal)} unreachable from {tuple(start)}")
        chain = [g]
        while chain[-1] != s:
            chain.append(int(pred[chain[-1]]))
        i0, j0 = self.terrain.i0, self.terrain.j0
        return float(dist[g]), [HexIndex(self.nodes[k][0] + i0, self.nodes[k][1] + j0)
                                for k in reversed(chain)]


def lower_bound(terrain, model, start, goal):
    """Straight-line distance times the smallest directional cost anywhere."""
    cmin = math.inf
    for alpha in np.unique(terrain.alpha[terrain.valid]):
        try:
            e = model.ellipse(float(alpha))
        except (SlipSingularityError, InvalidEllipseError):
            continue
        cmin = min(cmin, sampled_extremes(e)[0])
    d = math.hypot(*(terrain.world_position(start) - terrain.world_position(goal)))
    return d * cmin


def sampled_extremes(cost, n=36000):
    """(min, max) of a heading -> cost function, by dense sampling followed
    by a bounded polish around each sampled extreme."""
    grid = np.linspace(-math.pi, math.pi, n, endpoint=False)
    vals = np.asarray(cost(grid), dtype=float)
    step = 2.0 * math.pi / n
    out = []
    for sign, k in ((1.0, int(np.argmin(vals))), (-1.0, int(np.argmax(vals)))):
        res = minimize_scalar(lambda b: sign * float(cost(b)),
                              bounds=(grid[k] - step, grid[k] + step), method="bounded",
                              options={"xatol": 1e-12})
        out.append(sign * min(sign * vals[k], res.fun))
    return out[0], out[1]


def sampled_anisotropy(cost, n=36000):
    lo, hi = sampled_extremes(cost, n)
    return hi / lo


def sl_minimum_dense(x, x1, x2, t1, t2, gauge, n=20001):
    """Semi-Lagrangian minimum by a dense eps grid plus a bounded polish."""
    x, x1, x2 = (np.asarray(p, dtype=float) for p in (x, x1, x2))

    def f(eps):
        foot = eps * x1 + (1.0 - eps) * x2
        return gauge(x - foot) + eps * t1 + (1.0 - eps) * t2

    eps = np.linspace(0.0, 1.0, n)
    vals = np.array([f(e) for e in eps])
    k = int(np.argmin(vals))
    lo, hi = eps[max(k - 1, 0)], eps[min(k + 1, n - 1)]
    res = minimize_scalar(f, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    if res.fun < vals[k]:
        return float(res.fun), float(res.x)
    return float(vals[k]), float(eps[k])


def eikonal_hex(terrain, cost, source):
    """Isotropic hex fast marching: Dijkstra ordering with the plane-wave
    update over adjacent accepted neighbour pairs.

    ``cost`` is a per-node array (NaN or non-positive marks a blocked node).
    Returns the value field; unreached nodes hold inf.
    """
    ni, nj = terrain.shape
    h = terrain.h
    ok = terrain.valid & np.isfinite(cost) & (cost > 0)
    T = np.full((ni, nj), np.inf)
    done = np.zeros((ni, nj), dtype=bool)
    sa, sb = terrain.slot(source)
    T[sa, sb] = 0.0
    heap = [(0.0, sa, sb)]
    offsets = NEIGHBOR_OFFSETS
    while heap:
        t, a, b = heapq.heappop(heap)
        if done[a, b] or t != T[a, b]:
            continue
        done[a, b] = True
        for di, dj in offsets:
            ya, yb = a + di, b + dj
            if not (0 <= ya < ni and 0 <= yb < nj) or not ok[ya, yb] or done[ya, yb]:
                continue
            c = cost[ya, yb]
            best = T[ya, yb]
            for k, (ei, ej) in enumerate(offsets):
                za, zb = ya + ei, yb + ej
                if not (0 <= za < ni and 0 <= zb < nj) or not done[za, zb]:
                    continue
                best = min(best, T[za, zb] + c * h)
                fi, fj = offsets[(k + 1) % 6]
                wa, wb = ya + fi, yb + fj
                if not (0 <= wa < ni and 0 <= wb < nj) or not done[wa, wb]:
                    continue
                t1, t2 = T[za, zb], T[wa, wb]
                if abs(t1 - t2) > 0.5 * h * c:
                    continue
                val = 0.5 * (t1 + t2) + 0.5 * math.sqrt(3.0 * (h * c) ** 2 - 3.0 * (t1 - t2) ** 2)
                if val > min(t1, t2):
                    best = min(best, val)
            if best < T[ya, yb]:
                T[ya, yb] = best
                heapq.heappush(heap, (best, ya, yb))
    return T
