"""Bi-directional ordered upwind method on a hexagonal lattice."""
from __future__ import annotations

import heapq
import logging
import math
import time
import warnings
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .. import _backend
from ..camis import InvalidEllipseError, SlipSingularityError, anisotropy, isotropic_equivalent
from ..terrain import HexIndex
from . import _kernels_numba, _kernels_numpy
from ._kernels_numba import NB_A, NB_B, P_GX, P_UPS

log = logging.getLogger(__name__)

UPSILON_CAP = 10.0
MODES = ("anisotropic", "isotropic-equivalent")
FROM_START = "FromStart"
FROM_GOAL = "FromGoal"


class NodeState(IntEnum):
    FAR = 0
    CONSIDERED = 1
    ACCEPTED_FRONT = 2
    ACCEPTED_INNER = 3


class UnreachableError(RuntimeError):
    """The frontier emptied before the two wavefronts met."""


class AnisotropyClampWarning(UserWarning):
    pass


class SlipClampWarning(UserWarning):
    pass


@dataclass
class NodeTables:
    """Per-node cost parameters in the layout the kernels expect."""

    par: np.ndarray
    valid: np.ndarray
    px: np.ndarray
    py: np.ndarray
    h: float
    mode: str
    clamped: int = 0
    dropped: int = 0

    @property
    def upsilon(self):
        return self.par[..., P_UPS]

    @property
    def upsilon_max(self):
        ups = self.par[..., P_UPS][self.valid]
        return float(ups.max()) if ups.size else 1.0


def node_tables(terrain, model, mode="anisotropic", upsilon_cap=UPSILON_CAP):
    """Evaluate the cost model at every valid node.

    Nodes whose steepness drives a slip curve into its clamp, or whose
    anchors do not form a valid ellipse, are dropped from the valid set.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    valid = terrain.valid.copy()
    par = np.zeros(terrain.shape + (8,))
    par[..., P_UPS] = 1.0
    par[..., P_GX] = 1.0
    clamped = 0
    dropped = 0
    per_alpha = {}
    for a, b in zip(*np.nonzero(valid)):
        alpha = float(terrain.alpha[a, b])
        if alpha not in per_alpha:
            try:
                e = model.ellipse(alpha)
                per_alpha[alpha] = (e, anisotropy(e))
            except (SlipSingularityError, InvalidEllipseError) as exc:
                per_alpha[alpha] = exc
        entry = per_alpha[alpha]
        if isinstance(entry, Exception):
            valid[a, b] = False
            dropped += 1
            continue
        e, ups = entry
        g = terrain.gamma[a, b]
        if mode == "isotropic-equivalent" or ups == 1.0:
            c = e.anchors.descent if ups == 1.0 else isotropic_equivalent(e)
            par[a, b, :] = (-c * c, -c * c, 0.0, 0.0, 1.0, 0.0, 1.0, c)
            continue
        if ups > upsilon_cap:
            clamped += 1
            ups = upsilon_cap
        par[a, b, :] = (e.q1, e.q3, e.q4, e.q5, g[0], g[1], ups, math.nan)
    if dropped:
        warnings.warn(f"{dropped} nodes beyond the slip clamp were marked invalid",
                      SlipClampWarning, stacklevel=2)
    if clamped:
        warnings.warn(f"anisotropy clamped at {upsilon_cap:g} on {clamped} nodes",
                      AnisotropyClampWarning, stacklevel=2)
    px, py = terrain.relative_positions()
    return NodeTables(par=par, valid=valid, px=px, py=py, h=terrain.h, mode=mode,
                      clamped=clamped, dropped=dropped)


def offsets_table(radius):
    """Axial offsets within ``radius`` lattice spacings, sorted by length
    then index. Returns (offsets (K, 2) int64, lengths in units of h)."""
    r = int(math.ceil(radius)) + 1
    di, dj = np.meshgrid(np.arange(-2 * r, 2 * r + 1), np.arange(-2 * r, 2 * r + 1), indexing="ij")
    di, dj = di.ravel(), dj.ravel()
    length = np.hypot(di + 0.5 * dj, (math.sqrt(3.0) / 2.0) * dj)
    keep = (length <= radius + 1e-9) & ((di != 0) | (dj != 0))
    di, dj, length = di[keep], dj[keep], length[keep]
    order = np.lexsort((dj, di, np.round(length, 12)))
    return np.stack([di[order], dj[order]], axis=1).astype(np.int64), length[order]


def _kernels(backend):
    return _kernels_numba if _backend.resolve(backend) == "numba" else _kernels_numpy


class SolverSide:
    """Value field, characteristic directions and frontier of one wavefront."""

    def __init__(self, label, terrain, tables, backend=None):
        if label not in (FROM_START, FROM_GOAL):
            raise ValueError(f"unknown side label {label!r}")
        self.label = label
        self.terrain = terrain
        self.tables = tables
        self.flip = label == FROM_GOAL
        self.backend = _backend.resolve(backend)
        self._k = _kernels(self.backend)
        shape = terrain.shape
        self.T = np.full(shape, np.inf)
        self.psi = np.full(shape + (2,), np.nan)
        self.state = np.zeros(shape, dtype=np.int8)
        self.heap = []
        self.counts = np.zeros(3, dtype=np.int64)
        self.accepted = 0
        self.last_accepted = -math.inf
        self.monotone_violation = 0.0
        self.rmax = tables.upsilon_max * (1.0 + 1e-9)
        self.offs, self.orad = offsets_table(tables.upsilon_max)
        self._out = np.zeros((6 + len(self.offs), 2), dtype=np.int64)

    def slot(self, idx):
        return self.terrain.slot(idx)

    def index(self, a, b):
        return HexIndex(int(a) + self.terrain.i0, int(b) + self.terrain.j0)

    def seed(self, idx):
        """Make ``idx`` a source: T = 0, undefined heading, accepted front."""
        a, b = self.slot(idx)
        if not (self.terrain.in_bounds(idx) and self.tables.valid[a, b]):
            raise ValueError(f"source {tuple(idx)} is not a valid node")
        self.T[a, b] = 0.0
        self.state[a, b] = NodeState.ACCEPTED_FRONT
        self.accepted += 1
        self.last_accepted = 0.0
        self.update_neighbours(idx)

    def push(self, a, b):
        heapq.heappush(self.heap, (float(self.T[a, b]), int(a) + self.terrain.i0,
                                   int(b) + self.terrain.j0))

    def get_next_node(self):
        """Pop the cheapest considered node and accept it onto the front."""
        while self.heap:
            t, i, j = heapq.heappop(self.heap)
            a, b = i - self.terrain.i0, j - self.terrain.j0
            if self.state[a, b] != NodeState.CONSIDERED or self.T[a, b] != t:
                continue
            self.state[a, b] = NodeState.ACCEPTED_FRONT
            self.accepted += 1
            if t < self.last_accepted:
                self.monotone_violation = max(self.monotone_violation, self.last_accepted - t)
            self.last_accepted = max(self.last_accepted, t)
            return HexIndex(i, j)
        raise UnreachableError(f"{self.label} frontier exhausted")

    def update_neighbours(self, idx):
        a, b = self.slot(idx)
        tb = self.tables
        n = self._k.update_neighbours(
            a, b, self.state, self.T, self.psi, tb.valid, tb.px, tb.py, tb.par,
            self.offs, self.orad, self.rmax, tb.h, self.flip, self.counts, self._out)
        for k in range(n):
            self.push(self._out[k, 0], self._out[k, 1])

    def step(self):
        x = self.get_next_node()
        self.update_neighbours(x)
        return x

    def is_accepted(self, idx):
        return self.state[self.slot(idx)] >= NodeState.ACCEPTED_FRONT

    def value(self, idx):
        return float(self.T[self.slot(idx)])

    def heading(self, idx):
        """Reported heading angle at ``idx`` (NaN at the source)."""
        v = self.psi[self.slot(idx)]
        ang = math.atan2(v[1], v[0])
        if self.flip:
            ang = math.atan2(-v[1], -v[0])
        return ang

    def heading_field(self):
        """Reported unit headings; the goal side points toward the goal."""
        return -self.psi if self.flip else self.psi.copy()


def accepted_front_within(side, idx, upsilon):
    """Grid-adjacent accepted-front pairs with both members within h*upsilon
    of ``idx``, in the order the update kernels visit them."""
    a, b = side.slot(idx)
    tb = side.tables
    ni, nj = side.state.shape
    xi = tb.h * upsilon * (1.0 + 1e-9)
    offs, orad = offsets_table(upsilon)

    def front(p, q):
        return 0 <= p < ni and 0 <= q < nj and side.state[p, q] == NodeState.ACCEPTED_FRONT

    def near(p, q):
        return math.hypot(tb.px[p, q] - tb.px[a, b], tb.py[p, q] - tb.py[a, b]) <= xi

    pairs = []
    for (da, db), r in zip(offs, orad):
        za, zb = a + da, b + db
        if r * tb.h > xi or not front(za, zb):
            continue
        for m in range(3):
            wa, wb = za + NB_A[m], zb + NB_B[m]
            if front(wa, wb) and near(wa, wb):
                pairs.append((side.index(za, zb), side.index(wa, wb)))
    return pairs


def check_fin_condition(s0, sg, idx):
    return s0.is_accepted(idx) and sg.is_accepted(idx)


@dataclass
class PlanResult:
    start_side: SolverSide
    goal_side: SolverSide
    start: HexIndex
    goal: HexIndex
    meeting: HexIndex
    total_cost: float
    path: np.ndarray = None
    headings: np.ndarray = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def path_length(self):
        if self.path is None or len(self.path) < 2:
            return 0.0
        return float(np.hypot(*np.diff(self.path, axis=0).T).sum())


def _cheapest_junction(s0, sg, fallback):
    total = s0.T + sg.T
    k = int(np.argmin(total))
    if not np.isfinite(total.flat[k]) or total.flat[k] >= s0.value(fallback) + sg.value(fallback):
        return fallback
    a, b = np.unravel_index(k, total.shape)
    return s0.index(a, b)


def _check_endpoints(terrain, tables, start, goal):
    start, goal = HexIndex(*start), HexIndex(*goal)
    if start == goal:
        raise ValueError("start and goal must differ")
    for name, idx in (("start", start), ("goal", goal)):
        if not terrain.in_bounds(idx) or not tables.valid[terrain.slot(idx)]:
            raise ValueError(f"{name} {tuple(idx)} is not a valid node")
    return start, goal


def plan(start, goal, terrain, model, mode="anisotropic", *, tables=None, backend=None,
         goal_first=True, best_meeting=True, step=None, extract=True):
    """Plan from ``start`` to ``goal`` (hex indices) by growing one wavefront
    from each end, one acceptance per side in turn, until a node is accepted
    by both.

    With ``best_meeting`` the junction is then moved to the node minimising
    T0 + Tg over everything both sides have reached; otherwise it is the
    first node accepted by both."""
    from .path import extract_path

    t0 = time.perf_counter()
    if tables is None:
        tables = node_tables(terrain, model, mode)
    start, goal = _check_endpoints(terrain, tables, start, goal)
    s0 = SolverSide(FROM_START, terrain, tables, backend)
    sg = SolverSide(FROM_GOAL, terrain, tables, backend)
    s0.seed(start)
    sg.seed(goal)
    order = (sg, s0) if goal_first else (s0, sg)
    meeting = None
    while meeting is None:
        for side in order:
            x = side.get_next_node()
            if check_fin_condition(s0, sg, x):
                meeting = x
                break
            side.update_neighbours(x)
    first_common = meeting
    if best_meeting:
        meeting = _cheapest_junction(s0, sg, meeting)
    total = s0.value(meeting) + sg.value(meeting)
    t_solve = time.perf_counter() - t0
    result = PlanResult(s0, sg, start, goal, meeting, total)
    if extract:
        result.path = extract_path(result, step=step)
        result.headings = path_headings(result.path)
    result.diagnostics = {
        "backend": s0.backend,
        "mode": tables.mode,
        "nodes_expanded": {FROM_START: s0.accepted, FROM_GOAL: sg.accepted},
        "regime_counts": {
            "semi_lagrangian": int(s0.counts[0] + sg.counts[0]),
            "eulerian": int(s0.counts[1] + sg.counts[1]),
            "dijkstra": int(s0.counts[2] + sg.counts[2]),
        },
        "first_common_node": list(first_common),
        "monotone_violation": max(s0.monotone_violation, sg.monotone_violation),
        "upsilon_max": tables.upsilon_max,
        "upsilon_clamped_nodes": tables.clamped,
        "slip_dropped_nodes": tables.dropped,
        "solve_time_s": t_solve,
        "wall_time_s": time.perf_counter() - t0,
    }
    return result


def solve_from(source, terrain, model, mode="anisotropic", *, tables=None, backend=None,
               until=None, label=FROM_START):
    """Single-wavefront solve from ``source``; stops once ``until`` is
    accepted, or runs to exhaustion when ``until`` is None."""
    if tables is None:
        tables = node_tables(terrain, model, mode)
    side = SolverSide(label, terrain, tables, backend)
    side.seed(HexIndex(*source))
    while True:
        try:
            x = side.step()
        except UnreachableError:
            if until is not None:
                raise
            break
        if until is not None and x == tuple(until):
            break
    return side


def path_headings(path):
    """Heading angles of a polyline: central differences, one-sided at ends."""
    path = np.asarray(path, dtype=float)
    if len(path) < 2:
        return np.full(len(path), np.nan)
    d = np.gradient(path, axis=0)
    return np.arctan2(d[:, 1], d[:, 0])
