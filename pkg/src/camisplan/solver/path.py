"""Path extraction by integrating the characteristic-direction fields."""
import math

import numpy as np


class PathDivergenceError(RuntimeError):
    def __init__(self, position, steps):
        self.position = tuple(float(v) for v in position)
        self.steps = steps
        super().__init__(f"path integration did not converge after {steps} steps; "
                         f"last position ({self.position[0]:.6f}, {self.position[1]:.6f})")


def interpolate_direction(terrain, field, x, y):
    """Barycentric blend of unit vectors over the triangle holding (x, y),
    renormalised. Vertices without a defined direction are skipped; returns
    None when nothing usable remains."""
    verts, weights = terrain.triangle(x, y)
    acc_x = 0.0
    acc_y = 0.0
    for v, w in zip(verts, weights):
        if w <= 0.0 or not terrain.in_bounds(v):
            continue
        d = field[terrain.slot(v)]
        if not (math.isfinite(d[0]) and math.isfinite(d[1])):
            continue
        acc_x += w * d[0]
        acc_y += w * d[1]
    n = math.hypot(acc_x, acc_y)
    if n < 1e-12:
        return None
    return acc_x / n, acc_y / n


def trace_to_source(terrain, psi, origin, target, step):
    """Walk from ``origin`` against the stored directions (which point away
    from the source) until within one lattice spacing of ``target``."""
    h = terrain.h
    p = np.asarray(origin, dtype=float).copy()
    target = np.asarray(target, dtype=float)
    budget = int(math.ceil(10.0 * math.hypot(*(target - p)) / step)) + 1
    pts = [p.copy()]
    steps = 0
    while math.hypot(*(target - p)) > h:
        if steps >= budget:
            raise PathDivergenceError(p, steps)
        d = interpolate_direction(terrain, psi, p[0], p[1])
        if d is None:
            gap = target - p
            d = gap / math.hypot(*gap)
            p = p + step * d
        else:
            p = p - step * np.asarray(d)
        pts.append(p.copy())
        steps += 1
    if math.hypot(*(target - pts[-1])) > 0.0:
        pts.append(target.copy())
    return np.array(pts)


def extract_path(result, step=None):
    """Polyline from start to goal through the meeting node, in world
    coordinates."""
    s0, sg = result.start_side, result.goal_side
    terrain = s0.terrain
    h = terrain.h
    if step is None:
        step = 0.5 * h
    if not 0.0 < step <= h:
        raise ValueError(f"step must lie in (0, h], got {step}")
    mid = terrain.world_position(result.meeting)
    to_start = trace_to_source(terrain, s0.psi, mid, terrain.world_position(result.start), step)
    to_goal = trace_to_source(terrain, sg.psi, mid, terrain.world_position(result.goal), step)
    return np.vstack([to_start[::-1], to_goal[1:]])
