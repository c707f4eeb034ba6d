"""CAMIS directional cost model.

The reciprocal of the cost, as a function of the heading relative to the
downhill aspect, is a displaced ellipse fixed by four anchor costs (descent,
ascent and the two laterals). The anchors come from a drawbar-pull model with
slip, a Bezier patch around the free-rolling steepness, and a roll weight.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize_scalar

HALF_PI = 0.5 * math.pi

# (cos, sin) of the four anchor headings; exact zeros avoid cos(pi/2) noise.
AXIS_HEADINGS = {
    "descent": (1.0, 0.0),
    "ascent": (-1.0, 0.0),
    "lateral1": (0.0, 1.0),
    "lateral2": (0.0, -1.0),
}


class SlipSingularityError(ValueError):
    """A slip curve reached its clamp, where the cost model is singular."""

    def __init__(self, curve, alpha):
        self.curve = curve
        self.alpha = alpha
        super().__init__(f"slip {curve} clamps at steepness {math.degrees(alpha):.4f} deg")


class InvalidEllipseError(ValueError):
    pass


@dataclass(frozen=True)
class PhysicalParams:
    rho: float = 0.45
    mass: float = 2.43
    gravity: float = 9.8
    speed: float = 0.5
    alpha_margin: float = math.radians(15.0)

    def __post_init__(self):
        if not 0.0 < self.rho < 1.0:
            raise ValueError(f"rho must lie in (0, 1), got {self.rho}")
        for name in ("mass", "gravity", "speed"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 < self.alpha_margin < math.atan(self.rho) + math.pi / 4:
            raise ValueError("alpha_margin must lie in (0, atan(rho) + pi/4)")

    @property
    def scale(self):
        """m*g/v: converts the dimensionless model into cost per metre."""
        return self.mass * self.gravity / self.speed

    @property
    def band(self):
        """Open steepness interval where the Bezier braking patch applies."""
        a1 = math.atan(self.rho)
        return a1 - self.alpha_margin, a1 + self.alpha_margin


@dataclass(frozen=True)
class SlipModel:
    """Steepness-dependent slip ratio and slip angle, clamped short of their
    singular values (ratio 1, angle pi/2) by ``epsilon``."""

    family: str = "none"
    c_r: float = 0.0
    c_a: float = 0.0
    epsilon: float = 0.05

    def __post_init__(self):
        if self.family not in ("none", "linear", "exponential"):
            raise ValueError(f"unknown slip family {self.family!r}")
        if self.c_r < 0 or self.c_a < 0:
            raise ValueError("slip coefficients must be non-negative")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("slip epsilon must lie in (0, 1)")

    @property
    def ratio_cap(self):
        return 1.0 - self.epsilon

    @property
    def angle_cap(self):
        return HALF_PI - self.epsilon

    def ratio(self, alpha):
        if self.family == "linear":
            return min(self.c_r * math.tan(alpha), self.ratio_cap)
        if self.family == "exponential":
            return min(math.expm1(self.c_r * alpha), self.ratio_cap)
        return 0.0

    def angle(self, alpha):
        if self.family == "linear":
            return min(self.c_a * alpha, self.angle_cap)
        if self.family == "exponential":
            return min(math.expm1(self.c_a * alpha), self.angle_cap)
        return 0.0

    def clamp_alpha(self):
        """Smallest steepness at which either curve hits its clamp."""
        out = math.inf
        if self.family == "linear":
            if self.c_r > 0:
                out = min(out, math.atan(self.ratio_cap / self.c_r))
            if self.c_a > 0:
                out = min(out, self.angle_cap / self.c_a)
        elif self.family == "exponential":
            if self.c_r > 0:
                out = min(out, math.log1p(self.ratio_cap) / self.c_r)
            if self.c_a > 0:
                out = min(out, math.log1p(self.angle_cap) / self.c_a)
        return out


# Parametric stand-ins for a wheel (fast-growing slip) and a track mechanism.
WHEEL_SLIP = SlipModel("exponential", c_r=1.3, c_a=1.5)
TRACK_SLIP = SlipModel("linear", c_r=0.5, c_a=0.3)
NO_SLIP = SlipModel()


@dataclass(frozen=True)
class RollWeight:
    k: float = 0.0

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("roll weight gain must be >= 0")

    def __call__(self, alpha):
        return 1.0 + self.k * math.tan(alpha)


def beta(psi, gamma):
    """Signed angle from the aspect ``gamma`` to the heading ``psi``."""
    px, py = float(psi[0]), float(psi[1])
    gx, gy = float(gamma[0]), float(gamma[1])
    for name, n in (("heading", math.hypot(px, py)), ("aspect", math.hypot(gx, gy))):
        if abs(n - 1.0) > 1e-6:
            raise ValueError(f"{name} must be a unit vector (norm {n})")
    return math.atan2(gx * py - gy * px, gx * px + gy * py)


def pitch(alpha, b):
    """Pitch angle; positive when heading downhill."""
    return np.arctan(np.cos(b) * np.tan(alpha))


def roll(alpha, b):
    return np.arctan(np.sin(b) * np.tan(alpha))


def rowe_resistance(alpha, theta, p):
    """Drawbar-pull resistance projected on the ground plane."""
    return p.mass * p.gravity * (p.rho * math.cos(alpha) / math.cos(theta) - math.tan(theta))


def bezier_braking(alpha, p):
    """Quadratic Bezier replacement of |rho - tan(alpha)| around atan(rho).

    Control points (a0, rho - tan a0), (atan rho, 0), (a2, tan a2 - rho) with
    a0 = max(0, atan rho - margin), a2 = atan rho + margin.
    """
    a1 = math.atan(p.rho)
    a0 = max(0.0, a1 - p.alpha_margin)
    a2 = a1 + p.alpha_margin
    tol = 1e-12
    if not (a0 - tol <= alpha <= a2 + tol):
        raise ValueError(f"steepness {alpha} outside the braking band [{a0}, {a2}]")
    y0 = p.rho - math.tan(a0)
    y2 = math.tan(a2) - p.rho
    # alpha(t) = qa t^2 + qb t + a0
    qa = a0 - 2.0 * a1 + a2
    qb = 2.0 * (a1 - a0)
    qc = a0 - alpha
    if abs(qa) <= 1e-14 * max(1.0, abs(qb)):
        t = -qc / qb
    else:
        disc = qb * qb - 4.0 * qa * qc
        if disc <= 0.0:
            t = 0.5
        else:
            sq = math.sqrt(disc)
            q = -0.5 * (qb + math.copysign(sq, qb))
            roots = [q / qa, qc / q] if q != 0.0 else [-qb / (2 * qa)]
            inside = [r for r in roots if -1e-9 <= r <= 1.0 + 1e-9]
            t = inside[0] if inside else 0.5
    t = min(max(t, 0.0), 1.0)
    return (1.0 - t) ** 2 * y0 + t * t * y2


@dataclass(frozen=True)
class DirectionalCosts:
    descent: float
    ascent: float
    lateral1: float
    lateral2: float

    def __post_init__(self):
        for name in ("descent", "ascent", "lateral1", "lateral2"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise InvalidEllipseError(f"{name} anchor must be positive and finite, got {v}")

    def as_tuple(self):
        return (self.descent, self.ascent, self.lateral1, self.lateral2)


@dataclass(frozen=True)
class CostEllipse:
    """Conic ``q1 X^2 + q3 Y^2 + q4 X + q5 Y + 1 = 0`` in the (1/C) plane,
    with X along the descent direction. ``a``/``b`` are the true semi-axes
    and ``center`` the displacement of the centre from the origin."""

    q1: float
    q3: float
    q4: float
    q5: float
    anchors: DirectionalCosts
    a: float
    b: float
    center: tuple
    q2: float = 0.0

    @property
    def is_circle_at_origin(self):
        d = self.anchors
        return d.descent == d.ascent == d.lateral1 == d.lateral2

    def cost_cs(self, c, s):
        """Cost for heading (cos beta, sin beta); vectorised."""
        if self.is_circle_at_origin:
            # exact, independent of cos^2 + sin^2 rounding
            c0 = self.anchors.descent
            return c0 if np.ndim(c) == 0 else np.full(np.shape(c), c0)
        lin = self.q4 * c + self.q5 * s
        quad = self.q1 * c * c + self.q3 * s * s
        disc = lin * lin - 4.0 * quad
        if np.any(disc < 0):
            raise InvalidEllipseError("origin outside the cost ellipse")
        return 0.5 * (-lin + np.sqrt(disc))

    def __call__(self, b):
        return self.cost_cs(np.cos(b), np.sin(b))


def ellipse_from_anchors(d):
    """Displaced ellipse through the four anchor radii 1/C."""
    if not isinstance(d, DirectionalCosts):
        d = DirectionalCosts(*d)
    c0, cpi, cl1, cl2 = d.as_tuple()
    q1 = -cpi * c0
    q3 = -cl2 * cl1
    q4 = cpi - c0
    q5 = cl2 - cl1
    # complete the square of (-q1) X^2 + (-q3) Y^2 - q4 X - q5 Y = 1
    ka, kc = -q1, -q3
    xc = q4 / (2.0 * ka)
    yc = q5 / (2.0 * kc)
    k = 1.0 + q4 * q4 / (4.0 * ka) + q5 * q5 / (4.0 * kc)
    return CostEllipse(q1=q1, q3=q3, q4=q4, q5=q5, anchors=d,
                       a=math.sqrt(k / ka), b=math.sqrt(k / kc), center=(xc, yc))


def eval_cost(e, b):
    return e(b)


def _radius_extremes_axis(e):
    """Min/max distance from the origin to the ellipse when the centre lies
    on the descent-ascent axis (q5 == 0)."""
    xc = e.center[0]
    A, B = e.a, e.b
    us = [-1.0, 1.0]
    if A != B:
        u_star = -xc * A / (A * A - B * B)
        if -1.0 < u_star < 1.0:
            us.append(u_star)
    d2 = [(xc + A * u) ** 2 + B * B * (1.0 - u * u) for u in us]
    return math.sqrt(min(d2)), math.sqrt(max(d2))


def _sampled_extremes(e):
    grid = np.radians(np.arange(-180.0, 180.0, 1.0))
    vals = e(grid)
    step = math.radians(1.0)
    out = []
    for sign, k in ((1.0, int(np.argmin(vals))), (-1.0, int(np.argmax(vals)))):
        b0 = grid[k]
        res = minimize_scalar(lambda x: sign * float(e(x)), bounds=(b0 - step, b0 + step),
                              method="bounded", options={"xatol": 1e-10})
        out.append(min(float(vals[k]) * sign, float(res.fun)) * sign)
    return out[0], out[1]


def anisotropy(e):
    """max over headings of the cost divided by its min."""
    if e.is_circle_at_origin:
        return 1.0
    if e.q5 == 0.0:
        rmin, rmax = _radius_extremes_axis(e)
        return rmax / rmin
    cmin, cmax = _sampled_extremes(e)
    return cmax / cmin


def cost_extremes(e):
    """(min cost, max cost) over all headings."""
    if e.is_circle_at_origin:
        c = e.anchors.descent
        return c, c
    if e.q5 == 0.0:
        rmin, rmax = _radius_extremes_axis(e)
        return 1.0 / rmax, 1.0 / rmin
    return _sampled_extremes(e)


def isotropic_equivalent(e):
    """Cost whose circular speed profile encloses the ellipse's area."""
    if e.is_circle_at_origin:
        return e.anchors.descent
    return 1.0 / math.sqrt(e.a * e.b)


@dataclass(frozen=True)
class CamisModel:
    params: PhysicalParams = field(default_factory=PhysicalParams)
    slip: SlipModel = NO_SLIP
    roll_weight: RollWeight = field(default_factory=RollWeight)
    compat_rho_squared: bool = False

    def with_roll_k(self, k):
        return replace(self, roll_weight=RollWeight(k))

    def in_band(self, alpha):
        lo, hi = self.params.band
        return lo < alpha < hi

    def cost_cs(self, alpha, c, s):
        """Closed-form model cost at heading (cos beta, sin beta).

        Raises SlipSingularityError where a slip curve has clamped.
        """
        p = self.params
        sr = self.slip.ratio(alpha)
        sa = self.slip.angle(alpha)
        if sr >= self.slip.ratio_cap:
            raise SlipSingularityError("ratio", alpha)
        if sa >= self.slip.angle_cap:
            raise SlipSingularityError("angle", alpha)
        ta = math.tan(alpha)
        lat = p.rho * math.cos(alpha) * self.roll_weight(alpha) * s / math.cos(sa)
        if self.in_band(alpha):
            rb = bezier_braking(alpha, p)
            lon = (p.rho + ta + rb) * c / (2.0 * (1.0 - sr))
            shift = 0.5 * (p.rho + ta - rb) * c
        else:
            r = p.rho * p.rho if self.compat_rho_squared else p.rho
            lon = r * c / (1.0 - sr)
            shift = ta * c
        return abs(math.hypot(lon, lat) - shift) * p.scale

    def direct_cost(self, alpha, b):
        return self.cost_cs(alpha, math.cos(b), math.sin(b))

    def directional_costs(self, alpha):
        return DirectionalCosts(*(self.cost_cs(alpha, c, s) for c, s in AXIS_HEADINGS.values()))

    def ellipse(self, alpha):
        return _ellipse_cached(self, float(alpha))

    def cost(self, alpha, b):
        return float(self.ellipse(alpha)(b))

    def anisotropy(self, alpha):
        return anisotropy(self.ellipse(alpha))

    def isotropic_cost(self, alpha):
        return isotropic_equivalent(self.ellipse(alpha))


@lru_cache(maxsize=65536)
def _ellipse_cached(model, alpha):
    return ellipse_from_anchors(model.directional_costs(alpha))


PRESET_SLIP = {"wheel": WHEEL_SLIP, "track": TRACK_SLIP, "none": NO_SLIP}
