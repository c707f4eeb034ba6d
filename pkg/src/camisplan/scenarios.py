"""Synthetic terrains and ready-made planning setups."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .camis import NO_SLIP, TRACK_SLIP, WHEEL_SLIP, CamisModel, PhysicalParams
from .terrain import ElevationGrid, process_dem


def grid_from_function(fn, size, cell=0.25):
    """Square raster whose cell centres span [0, size] in both axes."""
    n = int(round(size / cell)) + 1
    c = np.arange(n) * cell
    X, Y = np.meshgrid(c, c[::-1])
    return ElevationGrid(n, n, cell, -0.5 * cell, -0.5 * cell, np.asarray(fn(X, Y), dtype=float))


def flat(size=40.0, cell=0.25):
    return grid_from_function(lambda X, Y: np.zeros_like(X), size, cell)


def ramp(slope_deg, aspect_deg=0.0, size=20.0, cell=0.25):
    """Plane falling along ``aspect_deg`` (0 = towards +x)."""
    t = math.tan(math.radians(slope_deg))
    ux, uy = math.cos(math.radians(aspect_deg)), math.sin(math.radians(aspect_deg))
    return grid_from_function(lambda X, Y: -t * (ux * X + uy * Y), size, cell)


def hills(seed, size=20.0, cell=0.25, n_hills=5, max_slope_deg=15.0):
    """Sum of random Gaussian bumps rescaled so the steepest analytic slope
    equals ``max_slope_deg``."""
    rng = np.random.default_rng(seed)
    cx = rng.uniform(0.0, size, n_hills)
    cy = rng.uniform(0.0, size, n_hills)
    amp = rng.uniform(-1.0, 1.0, n_hills)
    sig = rng.uniform(0.12, 0.25, n_hills) * size

    def surface(X, Y):
        z = np.zeros_like(X)
        gx = np.zeros_like(X)
        gy = np.zeros_like(X)
        for k in range(n_hills):
            g = amp[k] * np.exp(-((X - cx[k]) ** 2 + (Y - cy[k]) ** 2) / (2.0 * sig[k] ** 2))
            z += g
            gx -= g * (X - cx[k]) / sig[k] ** 2
            gy -= g * (Y - cy[k]) / sig[k] ** 2
        return z, np.hypot(gx, gy)

    n = int(round(size / cell)) + 1
    c = np.arange(n) * cell
    _, grad = surface(*np.meshgrid(c, c[::-1]))
    scale = math.tan(math.radians(max_slope_deg)) / grad.max()
    return grid_from_function(lambda X, Y: scale * surface(X, Y)[0], size, cell)


def two_level_slope(gentle_deg=5.0, steep_deg=20.0, break_y=10.0, blend=1.0, size=20.0,
                    cell=0.25):
    """Slope rising towards +y that steepens from ``gentle_deg`` to
    ``steep_deg`` across a smooth break at ``break_y``."""
    t1 = math.tan(math.radians(gentle_deg))
    t2 = math.tan(math.radians(steep_deg))
    return grid_from_function(
        lambda X, Y: t1 * Y + (t2 - t1) * blend * np.logaddexp(0.0, (Y - break_y) / blend),
        size, cell)


def hill(height=2.5, sigma=4.0, base_slope_deg=0.0, size=20.0, cell=0.25):
    """Gaussian hill in the middle of a plane rising towards +y."""
    t = math.tan(math.radians(base_slope_deg))
    c = 0.5 * size
    return grid_from_function(
        lambda X, Y: t * Y + height * np.exp(-((X - c) ** 2 + (Y - c) ** 2) / (2.0 * sigma ** 2)),
        size, cell)


@dataclass
class Scenario:
    name: str
    grid: ElevationGrid
    h: float
    start: tuple
    goal: tuple
    model: CamisModel = field(default_factory=CamisModel)

    def terrain(self):
        return process_dem(self.grid, self.h)


def flat_scenario(h=0.5, seed=0):
    rng = np.random.default_rng(seed)
    start, goal = rng.uniform(2.0, 38.0, (2, 2))
    return Scenario("flat", flat(40.0), h, tuple(start), tuple(goal))


def ramp_scenario(h=0.5, seed=0):
    return Scenario("ramp", ramp(15.0, aspect_deg=-90.0), h, (2.0, 10.0), (18.0, 10.0),
                    CamisModel(slip=TRACK_SLIP))


def hills_scenario(h=0.5, seed=0):
    return Scenario(f"hills-{seed}", hills(seed), h, (2.0, 2.0), (18.0, 18.0),
                    CamisModel(slip=TRACK_SLIP))


def two_level_scenario(h=0.5, seed=0, roll_k=0.0):
    model = CamisModel(params=PhysicalParams(rho=0.3), slip=NO_SLIP).with_roll_k(roll_k)
    return Scenario("two-level", two_level_slope(), h, (2.0, 14.0), (18.0, 14.0), model)


def high_slip_scenario(h=0.5, seed=0):
    return Scenario("high-slip", hill(), h, (10.0, 1.5), (10.0, 18.5),
                    CamisModel(params=PhysicalParams(rho=0.3), slip=WHEEL_SLIP))


SCENARIOS = {
    "flat": flat_scenario,
    "ramp": ramp_scenario,
    "hills": hills_scenario,
    "two-level": two_level_scenario,
    "high-slip": high_slip_scenario,
}


def make(name, h=0.5, seed=0):
    try:
        factory = SCENARIOS[name]
    except KeyError:
        raise ValueError(f"unknown synthetic terrain {name!r}; choose from {sorted(SCENARIOS)}") from None
    return factory(h=h, seed=seed)
