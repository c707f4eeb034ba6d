"""Evaluation of planned paths: orientation and cost profiles, roll
exceedance, and anisotropic versus isotropic comparison."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .camis import InvalidEllipseError, SlipSingularityError, pitch, roll

PROFILE_COLUMNS = ("s", "x", "y", "z", "heading_rad", "alpha_rad", "beta_rad", "pitch_rad",
                   "roll_rad", "cost_per_m", "cum_cost")
DEFAULT_ROLL_THRESHOLDS_DEG = tuple(range(0, 31, 2))


class ProfileError(ValueError):
    def __init__(self, message, index=None):
        self.index = index
        super().__init__(message if index is None else f"waypoint {index}: {message}")


@dataclass
class PathProfile:
    s: np.ndarray
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    heading: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    pitch: np.ndarray
    roll: np.ndarray
    cost: np.ndarray
    cum_cost: np.ndarray

    @property
    def length(self):
        return float(self.s[-1])

    @property
    def total_cost(self):
        return float(self.cum_cost[-1])

    @property
    def max_abs_roll(self):
        return float(np.max(np.abs(self.roll)))

    def columns(self):
        """Arrays in the order of PROFILE_COLUMNS."""
        return (self.s, self.x, self.y, self.z, self.heading, self.alpha, self.beta,
                self.pitch, self.roll, self.cost, self.cum_cost)


def resample(path, step):
    """Points at uniform arc-length spacing (ceil(L/step) + 1 of them),
    keeping both endpoints."""
    path = np.asarray(path, dtype=float)
    seg = np.hypot(*np.diff(path, axis=0).T)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    keep = np.concatenate([[True], seg > 0])
    path, s = path[keep], s[keep]
    n = max(int(math.ceil(s[-1] / step - 1e-9)), 1) + 1
    t = np.linspace(0.0, s[-1], n)
    return np.column_stack([np.interp(t, s, path[:, 0]), np.interp(t, s, path[:, 1])])


def profile(path, terrain, model, step=None):
    """Per-waypoint orientation and cost along a polyline (world metres).

    With ``step`` the polyline is first resampled uniformly by arc length.
    Headings use central differences inside and one-sided ones at the ends.
    """
    path = np.asarray(path, dtype=float)
    if path.ndim != 2 or path.shape[1] != 2 or len(path) < 2:
        raise ProfileError("need at least two (x, y) waypoints")
    if step is not None:
        path = resample(path, step)
    seg = np.hypot(*np.diff(path, axis=0).T)
    if np.any(seg <= 0):
        raise ProfileError("repeated waypoint", int(np.argmin(seg)) + 1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    d = np.gradient(path, s, axis=0)
    heading = np.arctan2(d[:, 1], d[:, 0])

    tan_a = np.tan(terrain.alpha)
    slope_vec = terrain.gamma * tan_a[..., None]
    n = len(path)
    z = np.empty(n)
    alpha = np.empty(n)
    beta = np.empty(n)
    cost = np.empty(n)
    for k, (px, py) in enumerate(path):
        v = terrain.interpolate(slope_vec, px, py)
        zk = terrain.interpolate(terrain.elevation, px, py)
        if v is None or zk is None:
            raise ProfileError(f"({px:.6f}, {py:.6f}) is outside the valid terrain", k)
        mag = math.hypot(v[0], v[1])
        gx, gy = (v[0] / mag, v[1] / mag) if mag > 0 else (1.0, 0.0)
        ux, uy = math.cos(heading[k]), math.sin(heading[k])
        alpha[k] = math.atan(mag)
        beta[k] = math.atan2(gx * uy - gy * ux, gx * ux + gy * uy)
        z[k] = zk
        try:
            cost[k] = model.cost(alpha[k], beta[k])
        except (SlipSingularityError, InvalidEllipseError) as exc:
            raise ProfileError(str(exc), k) from exc
    return PathProfile(s=s, x=path[:, 0].copy(), y=path[:, 1].copy(), z=z, heading=heading,
                       alpha=alpha, beta=beta, pitch=pitch(alpha, beta), roll=roll(alpha, beta),
                       cost=cost, cum_cost=cumulative_trapezoid(cost, s, initial=0.0))


def roll_exceedance(prof, thresholds):
    """Arc length over which |roll| exceeds each threshold, with |roll|
    taken piecewise linear between waypoints."""
    thresholds = np.asarray(thresholds, dtype=float)
    if np.any(thresholds < 0):
        raise ValueError("thresholds must be non-negative")
    if np.any(np.diff(thresholds) < 0):
        raise ValueError("thresholds must be sorted")
    f0 = np.abs(prof.roll[:-1])
    f1 = np.abs(prof.roll[1:])
    ds = np.diff(prof.s)
    lo = np.minimum(f0, f1)
    hi = np.maximum(f0, f1)
    out = []
    for t in thresholds:
        with np.errstate(invalid="ignore", divide="ignore"):
            frac = np.where(hi > lo, (hi - t) / (hi - lo), 0.0)
        frac = np.where(lo > t, 1.0, np.where(hi <= t, 0.0, np.clip(frac, 0.0, 1.0)))
        out.append(float(np.sum(frac * ds)))
    return out


def energy(prof, terrain, model):
    """Cumulative cost of the same geometry with the roll weight switched off."""
    p = profile(np.column_stack([prof.x, prof.y]), terrain, model.with_roll_k(0.0))
    return p.total_cost


def compare(aniso, iso, terrain, model, step=None, thresholds_deg=DEFAULT_ROLL_THRESHOLDS_DEG):
    """Report on an anisotropic plan against its isotropic-equivalent twin.

    Both paths are profiled under the anisotropic model, so the saving
    measures what the anisotropic plan buys on the real vehicle.
    """
    if aniso.start != iso.start or aniso.goal != iso.goal:
        raise ValueError("plans must share start and goal")
    step = step if step is not None else 0.5 * terrain.h
    pa = profile(aniso.path, terrain, model, step)
    pi = profile(iso.path, terrain, model, step)
    thr = [math.radians(t) for t in thresholds_deg]
    saving = 100.0 * (pi.total_cost - pa.total_cost) / pi.total_cost
    return {
        "anisotropic_total_cost": aniso.total_cost,
        "isotropic_total_cost": iso.total_cost,
        "anisotropic_path_cost": pa.total_cost,
        "isotropic_path_cost_under_anisotropic_model": pi.total_cost,
        "saving_percent": saving,
        "anisotropic_wall_time_s": aniso.diagnostics.get("wall_time_s"),
        "isotropic_wall_time_s": iso.diagnostics.get("wall_time_s"),
        "roll_thresholds_deg": list(thresholds_deg),
        "anisotropic_roll_exceedance_m": roll_exceedance(pa, thr),
        "isotropic_roll_exceedance_m": roll_exceedance(pi, thr),
    }
