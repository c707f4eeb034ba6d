import math

import numpy as np
import pytest

from camisplan import oracle, scenarios
from camisplan.camis import NO_SLIP, TRACK_SLIP, CamisModel, PhysicalParams
from camisplan.solver import (
    FROM_GOAL, FROM_START, AnisotropyClampWarning, NodeState, PathDivergenceError, SolverSide,
    UnreachableError, accepted_front_within, check_fin_condition, extract_path, node_tables,
    plan, solve_from,
)
from camisplan.solver.path import trace_to_source
from camisplan.terrain import NEIGHBOR_OFFSETS, HexIndex, process_dem

UNIT = PhysicalParams(mass=1.0, gravity=1.0, speed=1.0)  # cost per metre = rho on flat ground


@pytest.fixture(scope="module")
def flat10():
    return process_dem(scenarios.flat(10.0), 0.5)


@pytest.fixture(scope="module")
def unit_model():
    return CamisModel(params=UNIT, slip=NO_SLIP)


@pytest.fixture(scope="module")
def hills_case():
    sc = scenarios.hills_scenario(h=0.5, seed=1)
    return sc, sc.terrain()


def centre(terrain):
    return terrain.nearest_node(5.0, 5.0)


def offset(idx, di, dj):
    return HexIndex(idx[0] + di, idx[1] + dj)


def fresh_side(terrain, model, label=FROM_START, mode="anisotropic"):
    return SolverSide(label, terrain, node_tables(terrain, model, mode))


# --- frontier ---------------------------------------------------------------------

def _consider(side, idx, t):
    a, b = side.slot(idx)
    side.state[a, b] = NodeState.CONSIDERED
    side.T[a, b] = t
    side.push(a, b)


def test_get_next_node_lowest(flat10, unit_model):
    side = fresh_side(flat10, unit_model)
    x = centre(flat10)
    a, b = offset(x, 0, 1), offset(x, 0, 2)
    _consider(side, a, 3.0)
    _consider(side, b, 2.0)
    assert side.get_next_node() == b
    assert side.state[side.slot(b)] == NodeState.ACCEPTED_FRONT
    assert all((i, j) != tuple(b) for _, i, j in side.heap)
    assert side.get_next_node() == a


def test_get_next_node_tie_break(flat10, unit_model):
    side = fresh_side(flat10, unit_model)
    x = centre(flat10)
    b, a = offset(x, 0, 2), offset(x, 0, 1)
    _consider(side, b, 2.0)
    _consider(side, a, 2.0)
    assert side.get_next_node() == a


def test_get_next_node_skips_stale(flat10, unit_model):
    side = fresh_side(flat10, unit_model)
    a = offset(centre(flat10), 1, 0)
    _consider(side, a, 5.0)
    side.T[side.slot(a)] = 1.0
    side.push(*side.slot(a))
    assert side.get_next_node() == a
    assert side.value(a) == 1.0
    with pytest.raises(UnreachableError):
        side.get_next_node()


def test_empty_frontier(flat10, unit_model):
    with pytest.raises(UnreachableError):
        fresh_side(flat10, unit_model).get_next_node()


# --- neighbour updates ----------------------------------------------------------

def test_seed_makes_six_considered(flat10, unit_model):
    side = fresh_side(flat10, unit_model)
    x = centre(flat10)
    side.seed(x)
    assert side.value(x) == 0.0
    assert math.isnan(side.heading(x))
    considered = np.argwhere(side.state == NodeState.CONSIDERED)
    assert len(considered) == 6
    for di, dj in NEIGHBOR_OFFSETS:
        y = offset(x, di, dj)
        assert side.state[side.slot(y)] == NodeState.CONSIDERED
        assert side.value(y) == pytest.approx(0.45 * 0.5)


def test_inner_transition(flat10, unit_model):
    side = fresh_side(flat10, unit_model)
    x = centre(flat10)
    side.seed(x)
    for _ in range(6):
        side.step()
    assert side.state[side.slot(x)] == NodeState.ACCEPTED_INNER
    for di, dj in NEIGHBOR_OFFSETS:
        assert side.state[side.slot(offset(x, di, dj))] == NodeState.ACCEPTED_FRONT


def test_state_transitions_forward_only(hills_case):
    sc, terrain = hills_case
    side = fresh_side(terrain, sc.model)
    side.seed(terrain.nearest_node(10.0, 10.0))
    prev = side.state.copy()
    prevT = side.T.copy()
    for _ in range(300):
        side.step()
        assert np.all(side.state >= prev)
        frozen = prev >= NodeState.ACCEPTED_FRONT
        assert np.array_equal(side.T[frozen], prevT[frozen])
        # re-updates only lower tentative values
        assert np.all(side.T <= prevT)
        prev, prevT = side.state.copy(), side.T.copy()


def test_monotone_acceptance(hills_case):
    sc, terrain = hills_case
    side = fresh_side(terrain, sc.model)
    side.seed(terrain.nearest_node(*sc.start))
    last = 0.0
    for _ in range(1500):
        x = side.step()
        t = side.value(x)
        assert t >= last - 1e-12
        last = t
    assert side.monotone_violation == 0.0


# --- stencil ------------------------------------------------------------------------

def _seeded_front(terrain, model, x, ring_nodes):
    side = fresh_side(terrain, model)
    for idx in ring_nodes:
        side.state[side.slot(idx)] = NodeState.ACCEPTED_FRONT
        side.T[side.slot(idx)] = 1.0
    return side


def _dist(terrain, p, q):
    return float(np.hypot(*(terrain.world_position(p) - terrain.world_position(q))))


def test_front_within_upsilon_one(flat10, unit_model):
    x = centre(flat10)
    ring1 = [offset(x, di, dj) for di, dj in NEIGHBOR_OFFSETS]
    side = _seeded_front(flat10, unit_model, x, ring1)
    pairs = accepted_front_within(side, x, 1.0)
    assert len(pairs) == 6
    for p, q in pairs:
        assert p in ring1 and q in ring1
        assert _dist(flat10, p, q) == pytest.approx(0.5)


def test_front_within_upsilon_two(flat10, unit_model):
    x = centre(flat10)
    # a straight front row two rings below x plus the ring-1 row
    row2 = [offset(x, k, -2) for k in range(-1, 4)]
    row1 = [offset(x, k, -1) for k in range(0, 3)]
    side = _seeded_front(flat10, unit_model, x, row2 + row1)
    near = accepted_front_within(side, x, 1.0)
    assert near and all(_dist(flat10, x, p) <= 0.5 + 1e-9 for pq in near for p in pq)
    pairs2 = accepted_front_within(side, x, 2.0)
    members = {p for pq in pairs2 for p in pq}
    assert any(_dist(flat10, x, p) > 0.5 + 1e-9 for p in members)
    # geometric enumeration: every adjacent front pair within 2h, and nothing else
    front = row2 + row1
    expected = {frozenset((p, q)) for p in front for q in front
                if p != q and _dist(flat10, p, q) == pytest.approx(0.5)
                and _dist(flat10, x, p) <= 1.0 + 1e-9 and _dist(flat10, x, q) <= 1.0 + 1e-9}
    assert {frozenset(pq) for pq in pairs2} == expected


def test_front_within_empty(flat10, unit_model):
    side = fresh_side(flat10, unit_model)
    assert accepted_front_within(side, centre(flat10), 3.0) == []


# --- finish condition -------------------------------------------------------------

def test_fin_condition(flat10, unit_model):
    tables = node_tables(flat10, unit_model)
    s0 = SolverSide(FROM_START, flat10, tables)
    sg = SolverSide(FROM_GOAL, flat10, tables)
    x = centre(flat10)
    s0.seed(x)
    assert not check_fin_condition(s0, sg, x)
    sg.seed(x)
    assert check_fin_condition(s0, sg, x)


def test_adjacent_endpoints_terminate_fast(flat10, unit_model):
    x = centre(flat10)
    y = offset(x, 1, 0)
    res = plan(x, y, flat10, unit_model)
    assert sum(res.diagnostics["nodes_expanded"].values()) <= 2 + 2 * 2
    assert res.meeting in (x, y)
    assert res.total_cost <= 0.45 * 0.5 * 1.01


# --- plans --------------------------------------------------------------------------

def test_flat_optimality(unit_model):
    terrain = process_dem(scenarios.flat(20.0), 0.5)
    rng = np.random.default_rng(11)
    for _ in range(5):
        s = terrain.nearest_node(*rng.uniform(2, 18, 2))
        g = terrain.nearest_node(*rng.uniform(2, 18, 2))
        d = _dist(terrain, s, g)
        if d < 5.0:  # grid error dominates very short pairs
            continue
        res = plan(s, g, terrain, unit_model)
        assert 0.45 * d * (1 - 1e-12) <= res.total_cost <= 1.05 * 0.45 * d
        assert res.total_cost == pytest.approx(res.start_side.value(res.meeting)
                                               + res.goal_side.value(res.meeting))


def test_flat_path_near_segment(unit_model):
    terrain = process_dem(scenarios.flat(20.0), 0.5)
    s, g = terrain.nearest_node(3.0, 4.0), terrain.nearest_node(16.0, 13.0)
    res = plan(s, g, terrain, unit_model)
    p0, p1 = terrain.world_position(s), terrain.world_position(g)
    u = (p1 - p0) / np.linalg.norm(p1 - p0)
    rel = res.path - p0
    dev = np.abs(rel[:, 0] * u[1] - rel[:, 1] * u[0])
    assert dev.max() < terrain.h
    assert res.path_length >= np.linalg.norm(p1 - p0) - 1e-12
    assert np.allclose(res.path[0], p0) and np.allclose(res.path[-1], p1)


def test_isotropic_symmetry(flat10, unit_model):
    a, b = flat10.nearest_node(2.0, 3.0), flat10.nearest_node(8.0, 7.5)
    r1 = plan(a, b, flat10, unit_model)
    r2 = plan(b, a, flat10, unit_model)
    assert r1.total_cost == pytest.approx(r2.total_cost, rel=1e-6)
    n = min(len(r1.path), len(r2.path))
    p1 = r1.path[::-1]
    assert np.max(np.abs(p1[:n] - r2.path[:n])) < flat10.h


def test_goal_side_headings_reversed(hills_case):
    sc, terrain = hills_case
    res = plan(terrain.nearest_node(*sc.start), terrain.nearest_node(*sc.goal), terrain, sc.model)
    sg = res.goal_side
    mask = ~np.isnan(sg.psi[..., 0])
    a, b = np.argwhere(mask)[0]
    idx = sg.index(a, b)
    stored = math.atan2(sg.psi[a, b, 1], sg.psi[a, b, 0])
    diff = (sg.heading(idx) - stored) % (2 * math.pi)
    assert diff == pytest.approx(math.pi)
    assert np.allclose(sg.heading_field()[mask], -sg.psi[mask])


def test_determinism(hills_case):
    sc, terrain = hills_case
    s, g = terrain.nearest_node(*sc.start), terrain.nearest_node(*sc.goal)
    r1 = plan(s, g, terrain, sc.model)
    r2 = plan(s, g, terrain, sc.model)
    assert np.array_equal(r1.start_side.T, r2.start_side.T)
    assert np.array_equal(r1.goal_side.T, r2.goal_side.T)
    assert np.array_equal(r1.path, r2.path)
    assert r1.total_cost == r2.total_cost


def test_isotropic_reduction_matches_eikonal(hills_case):
    sc, terrain = hills_case
    tables = node_tables(terrain, sc.model, "isotropic-equivalent")
    src = terrain.nearest_node(10.0, 10.0)
    side = solve_from(src, terrain, sc.model, "isotropic-equivalent", tables=tables)
    assert side.counts[0] == 0
    cost = np.where(tables.valid, tables.par[..., 7], np.nan)
    ref = oracle.eikonal_hex(terrain, cost, src)
    finite = np.isfinite(ref)
    assert np.array_equal(finite, np.isfinite(side.T))
    assert np.max(np.abs(side.T[finite] - ref[finite]) / np.maximum(ref[finite], 1.0)) < 1e-9


def test_single_direction_close_on_ramp():
    sc = scenarios.ramp_scenario(h=0.5)
    terrain = sc.terrain()
    s, g = terrain.nearest_node(*sc.start), terrain.nearest_node(*sc.goal)
    res = plan(s, g, terrain, sc.model)
    side = solve_from(s, terrain, sc.model, until=g)
    assert res.total_cost == pytest.approx(side.value(g), rel=0.01)


def test_goal_first_policy_same_cost_on_ramp():
    sc = scenarios.ramp_scenario(h=0.5)
    terrain = sc.terrain()
    s, g = terrain.nearest_node(*sc.start), terrain.nearest_node(*sc.goal)
    a = plan(s, g, terrain, sc.model, goal_first=True)
    b = plan(s, g, terrain, sc.model, goal_first=False)
    assert a.total_cost == pytest.approx(b.total_cost, rel=0.01)


def test_regime_counts_reported(hills_case):
    sc, terrain = hills_case
    res = plan(terrain.nearest_node(*sc.start), terrain.nearest_node(*sc.goal), terrain, sc.model)
    rc = res.diagnostics["regime_counts"]
    assert rc["semi_lagrangian"] > 0
    iso = plan(res.start, res.goal, terrain, sc.model, "isotropic-equivalent")
    assert iso.diagnostics["regime_counts"]["semi_lagrangian"] == 0
    assert iso.diagnostics["regime_counts"]["eulerian"] > 0


# --- failure modes ------------------------------------------------------------------

def test_anisotropy_clamp_warns():
    model = CamisModel(params=PhysicalParams(rho=0.45, alpha_margin=math.radians(5.0)),
                       slip=NO_SLIP)
    terrain = process_dem(scenarios.ramp(math.degrees(math.atan(0.45)), size=6.0), 0.5)
    with pytest.warns(AnisotropyClampWarning):
        tables = node_tables(terrain, model)
    assert tables.upsilon_max == 10.0 and tables.clamped > 0
    res = plan(terrain.nearest_node(1.0, 1.0), terrain.nearest_node(5.0, 5.0), terrain, model,
               tables=tables)
    assert math.isfinite(res.total_cost)


def test_unreachable():
    grid = scenarios.flat(10.0)
    vals = grid.values.copy()
    cols = np.arange(grid.n_cols) * grid.cell_size
    vals[:, (cols > 4.6) & (cols < 5.4)] = grid.nodata
    grid.values = vals
    terrain = process_dem(grid, 0.5)
    s, g = terrain.nearest_node(2.0, 5.0), terrain.nearest_node(8.0, 5.0)
    with pytest.raises(UnreachableError):
        plan(s, g, terrain, CamisModel(params=UNIT))


def test_invalid_endpoints(flat10, unit_model):
    x = centre(flat10)
    with pytest.raises(ValueError):
        plan(x, x, flat10, unit_model)
    with pytest.raises(ValueError):
        plan(x, HexIndex(1000, 1000), flat10, unit_model)


def test_step_out_of_range(flat10, unit_model):
    res = plan(centre(flat10), offset(centre(flat10), 4, 0), flat10, unit_model, extract=False)
    for bad in (0.0, -0.1, 0.6):
        with pytest.raises(ValueError):
            extract_path(res, step=bad)


def test_divergence_names_position(flat10):
    psi = np.zeros(flat10.shape + (2,))
    psi[..., 0] = 1.0  # walking against it leads away from the target
    origin = flat10.world_position(centre(flat10))
    target = origin + np.array([3.0, 0.0])
    with pytest.raises(PathDivergenceError) as err:
        trace_to_source(flat10, psi, origin, target, 0.25)
    assert err.value.position is not None


def test_track_slip_plan_runs(hills_case):
    sc, terrain = hills_case
    model = CamisModel(slip=TRACK_SLIP)
    res = plan(terrain.nearest_node(*sc.start), terrain.nearest_node(*sc.goal), terrain, model)
    lb = oracle.lower_bound(terrain, model, res.start, res.goal)
    assert res.total_cost >= lb
