"""Outer-loop guidance: the acceleration input for tracking and paths.

Two modes.  Trajectory tracking is a saturated PD law around a moving
reference.  Path following steers the heading direction h = v/|v| onto
a circular path: a speed term along h, plus a turning term built from
the path's curvature feedforward and a proportional correction toward
the blended tangent/cross-track target heading.

The acceleration input is always norm-capped below gravity so the
acceleration demand passed to the frame construction can never vanish.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DegenerateAxisError
from .geom import cross, norm, project_perp, unit

# Headings are undefined below this ground speed; the last one is held.
HEADING_SPEED_FLOOR = 0.1


@dataclass(frozen=True)
class GuidanceGains:
    k_p: float = 1.0        # position [1/s^2]
    k_v: float = 1.8        # velocity [1/s]
    k_s: float = 0.8        # speed convergence [1/s]
    k_h: float = 1.0        # heading alignment [1/s]
    k_c: float = 0.6        # cross-track blend weight
    d_sat: float = 5.0      # cross-track saturation distance [m]
    xi_max: float = 0.7 * 9.81  # acceleration-input cap [m/s^2]

    def __post_init__(self):
        for name in ("k_p", "k_v", "k_s", "k_h", "k_c", "d_sat", "xi_max"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class CirclePath:
    """Circle of given radius about center, in the plane orthogonal to
    normal; the normal orients the direction of travel (right-hand
    rule)."""

    center: np.ndarray
    normal: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        object.__setattr__(self, "normal", unit(np.asarray(self.normal, dtype=float)))
        if self.radius <= 0.0:
            raise ValueError("radius must be positive")

    def closest_point(self, p: np.ndarray):
        """Closest circle point, travel tangent there, and the offset p - q.

        Ill-defined on the circle axis (raises DegenerateAxisError via
        the radial normalization).
        """
        radial = project_perp(self.normal, p - self.center)
        r_hat = unit(radial, floor=1e-9)
        q = self.center + self.radius * r_hat
        tangent = cross(self.normal, r_hat)
        return q, tangent, p - q


@dataclass(frozen=True)
class SpeedRamp:
    v_start: float
    v_end: float
    ramp_rate: float

    def __post_init__(self):
        if self.v_start <= 0.0 or self.v_end <= 0.0:
            raise ValueError("ramp speeds must be positive")
        if self.ramp_rate <= 0.0:
            raise ValueError("ramp_rate must be positive")


def speed_ref(t: float, ramp: SpeedRamp) -> float:
    """Reference speed at time t: linear ramp clamped to its endpoints."""
    lo, hi = min(ramp.v_start, ramp.v_end), max(ramp.v_start, ramp.v_end)
    return min(hi, max(lo, ramp.v_start + ramp.ramp_rate * t))


def _cap(v: np.ndarray, limit: float) -> np.ndarray:
    n = norm(v)
    if n > limit:
        return v * (limit / n)
    return v


def xi_trajectory(
    p: np.ndarray,
    v: np.ndarray,
    p_ref: np.ndarray,
    v_ref: np.ndarray,
    a_ref: np.ndarray,
    gains: GuidanceGains,
) -> np.ndarray:
    """Saturated PD acceleration input around a moving reference."""
    raw = a_ref - gains.k_p * (p - p_ref) - gains.k_v * (v - v_ref)
    return _cap(raw, gains.xi_max)


def heading_direction(v: np.ndarray, previous: Optional[np.ndarray] = None) -> np.ndarray:
    """Unit heading v/|v|; holds the previous value below the speed floor."""
    n = norm(v)
    if n > HEADING_SPEED_FLOOR:
        return v / n
    if previous is not None:
        return previous
    return np.array([1.0, 0.0, 0.0])


@dataclass
class PathFollowInfo:
    """Diagnostics from one path-following evaluation."""

    cross_track: float
    tangent: np.ndarray
    closest: np.ndarray
    heading_target: np.ndarray = None


def xi_pathfollow(
    p: np.ndarray,
    v: np.ndarray,
    path: CirclePath,
    v_star: float,
    gains: GuidanceGains,
    prev_tangent: Optional[np.ndarray] = None,
) -> tuple[np.ndarray, PathFollowInfo]:
    """Acceleration input steering onto a circular path at speed v_star.

    The target heading blends the closest-point tangent with a
    norm-saturated pull toward the path; the heading is turned at the
    path's own curvature rate plus a proportional alignment term.  On
    the circle axis the closest point is undefined and the previous
    tangent is held.
    """
    speed = norm(v)
    h = heading_direction(v, prev_tangent)
    try:
        q, tangent, offset = path.closest_point(p)
    except DegenerateAxisError:
        if prev_tangent is None:
            raise
        q, tangent, offset = p, prev_tangent, np.zeros(3)
    err = -offset  # pull from p toward the path

    correction = err / gains.d_sat
    cn = norm(correction)
    if cn > 1.0:
        correction = correction / cn
    h_star = unit(tangent + gains.k_c * correction)

    # Curvature feedforward only makes sense near the path; far away it
    # would curl the approach into a drifting spiral, so fade it out.
    dist = norm(offset)
    ff = max(0.0, 1.0 - dist / (4.0 * gains.d_sat))
    omega_h = (ff * speed / path.radius) * path.normal + gains.k_h * cross(h, h_star)
    xi = -gains.k_s * (speed - v_star) * h + speed * cross(omega_h, h)
    return _cap(xi, gains.xi_max), PathFollowInfo(
        cross_track=dist, tangent=tangent, closest=q, heading_target=h_star
    )
