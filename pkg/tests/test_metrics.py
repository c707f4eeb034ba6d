import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from camisplan import scenarios
from camisplan.camis import NO_SLIP, CamisModel, PhysicalParams
from camisplan.metrics import (
    PROFILE_COLUMNS, PathProfile, ProfileError, compare, energy, profile, resample,
    roll_exceedance,
)
from camisplan.solver import node_tables, plan
from camisplan.terrain import process_dem

UNIT = CamisModel(params=PhysicalParams(mass=1.0, gravity=1.0, speed=1.0), slip=NO_SLIP)
A15 = math.radians(15)


@pytest.fixture(scope="module")
def ramp15():
    return process_dem(scenarios.ramp(15.0, aspect_deg=0.0), 0.5)


@pytest.fixture(scope="module")
def flat20():
    return process_dem(scenarios.flat(20.0), 0.5)


def line(p0, p1, n=41):
    t = np.linspace(0.0, 1.0, n)[:, None]
    return np.asarray(p0) * (1 - t) + np.asarray(p1) * t


def test_lateral_traverse(ramp15):
    prof = profile(line((10, 3), (10, 17)), ramp15, UNIT)
    inner = slice(1, -1)
    assert np.allclose(prof.pitch[inner], 0.0, atol=1e-6)
    assert np.allclose(np.abs(prof.roll[inner]), A15, atol=1e-6)
    assert np.allclose(prof.alpha, A15, atol=1e-9)


def test_straight_descent(ramp15):
    # the ramp falls towards +x
    prof = profile(line((3, 10), (17, 10)), ramp15, UNIT)
    assert np.allclose(np.abs(prof.pitch), A15, atol=1e-6)
    assert np.allclose(prof.roll, 0.0, atol=1e-6)
    assert np.allclose(prof.beta, 0.0, atol=1e-9)
    assert prof.z[-1] < prof.z[0]


def test_flat_cumulative_cost(flat20):
    prof = profile(line((2, 3), (17, 15), 97), flat20, UNIT)
    d = math.hypot(15, 12)
    assert prof.total_cost == pytest.approx(0.45 * d, abs=1e-9)
    assert prof.length == pytest.approx(d, abs=1e-12)


def test_profile_invariants(ramp15):
    path = np.array([[2.0, 2.0], [6.0, 9.0], [9.0, 11.0], [15.0, 12.0], [18.0, 18.0]])
    prof = profile(path, ramp15, UNIT, step=0.25)
    assert np.all(np.diff(prof.s) > 0)
    assert np.all(np.diff(prof.cum_cost) >= 0)
    assert prof.total_cost == pytest.approx(np.trapezoid(prof.cost, prof.s), abs=1e-9)
    assert len(prof.columns()) == len(PROFILE_COLUMNS)


def test_profile_outside_names_index(ramp15):
    with pytest.raises(ProfileError) as err:
        profile(np.array([[5.0, 5.0], [10.0, 10.0], [40.0, 10.0]]), ramp15, UNIT)
    assert err.value.index == 2


def test_profile_needs_two_points(ramp15):
    with pytest.raises(ProfileError):
        profile(np.array([[5.0, 5.0]]), ramp15, UNIT)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.5, 30.0), st.floats(0.05, 1.0))
def test_resample_count(length, step):
    path = np.array([[0.0, 0.0], [length, 0.0]])
    pts = resample(path, step)
    assert len(pts) == math.ceil(length / step - 1e-9) + 1
    assert np.allclose(pts[0], path[0]) and np.allclose(pts[-1], path[-1])


def _synthetic_profile(roll_deg):
    roll = np.radians(np.asarray(roll_deg, dtype=float))
    n = len(roll)
    z = np.zeros(n)
    return PathProfile(s=np.arange(n, dtype=float), x=z, y=z, z=z, heading=z, alpha=z, beta=z,
                       pitch=z, roll=roll, cost=z, cum_cost=z)


def test_roll_exceedance_examples():
    prof = _synthetic_profile([0, 0, 10, 10, 0])
    d = roll_exceedance(prof, [0.0, math.radians(5), math.radians(20)])
    # zero-roll stretch [0, 1] excluded, ramps count fully at threshold 0
    assert d[0] == pytest.approx(3.0)
    assert d[1] == pytest.approx(2.0)
    assert d[2] == 0.0


@settings(max_examples=50)
@given(st.lists(st.floats(-30, 30), min_size=2, max_size=30),
       st.lists(st.floats(0, 0.6), min_size=1, max_size=8))
def test_roll_exceedance_monotone(rolls, thr):
    prof = _synthetic_profile(rolls)
    d = roll_exceedance(prof, sorted(thr))
    assert all(a >= b - 1e-12 for a, b in zip(d, d[1:]))
    assert all(0.0 <= v <= prof.length + 1e-12 for v in d)


def test_roll_exceedance_rejects_bad_thresholds():
    prof = _synthetic_profile([1, 2, 3])
    with pytest.raises(ValueError):
        roll_exceedance(prof, [0.2, 0.1])
    with pytest.raises(ValueError):
        roll_exceedance(prof, [-0.1])


def test_energy_ignores_roll_weight(ramp15):
    path = line((10, 3), (10, 17))
    heavy = UNIT.with_roll_k(6.0)
    prof = profile(path, ramp15, heavy)
    assert energy(prof, ramp15, heavy) == pytest.approx(profile(path, ramp15, UNIT).total_cost)
    assert prof.total_cost > energy(prof, ramp15, heavy)


def _pair(terrain, model, start, goal):
    s, g = terrain.nearest_node(*start), terrain.nearest_node(*goal)
    return (plan(s, g, terrain, model), plan(s, g, terrain, model, "isotropic-equivalent"))


def test_compare_isotropic_terrain_zero_saving(flat20):
    a, i = _pair(flat20, UNIT, (3, 4), (16, 13))
    rep = compare(a, i, flat20, UNIT)
    assert rep["saving_percent"] == pytest.approx(0.0, abs=1e-9)
    assert len(rep["anisotropic_roll_exceedance_m"]) == len(rep["roll_thresholds_deg"])


def test_compare_ramp_anisotropic_not_worse():
    sc = scenarios.ramp_scenario()
    terrain = sc.terrain()
    a, i = _pair(terrain, sc.model, (3, 4), (16, 15))
    rep = compare(a, i, terrain, sc.model)
    assert rep["anisotropic_path_cost"] <= rep["isotropic_path_cost_under_anisotropic_model"] + 1e-6


def test_compare_high_slip_positive():
    sc = scenarios.high_slip_scenario()
    terrain = sc.terrain()
    a, i = _pair(terrain, sc.model, sc.start, sc.goal)
    rep = compare(a, i, terrain, sc.model)
    assert rep["saving_percent"] > 0.0
    assert rep["anisotropic_path_cost"] <= rep["isotropic_path_cost_under_anisotropic_model"] + 1e-6


def test_compare_mismatched_endpoints(flat20):
    a, _ = _pair(flat20, UNIT, (3, 4), (16, 13))
    _, i = _pair(flat20, UNIT, (3, 5), (16, 13))
    with pytest.raises(ValueError):
        compare(a, i, flat20, UNIT)


def test_roll_weight_reduces_max_roll():
    out = []
    for k in (0.0, 6.0):
        sc = scenarios.two_level_scenario(roll_k=k)
        terrain = sc.terrain()
        s, g = terrain.nearest_node(*sc.start), terrain.nearest_node(*sc.goal)
        res = plan(s, g, terrain, sc.model, tables=node_tables(terrain, sc.model))
        out.append(profile(res.path, terrain, sc.model, 0.25))
    assert out[1].max_abs_roll < out[0].max_abs_roll
    thr = np.radians(np.arange(0, 21, 2))
    d0, d6 = roll_exceedance(out[0], thr), roll_exceedance(out[1], thr)
    # the detour is longer, so at small thresholds it logs more distance
    assert d6[0] > d0[0] and d6[0] == pytest.approx(out[1].length)
    high = thr >= math.radians(8)
    assert all(b <= a + 1e-9 for a, b, hi in zip(d0, d6, high) if hi)
