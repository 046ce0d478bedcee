"""Rigid-body plant: wind field, Newton-Euler dynamics, RK4 stepping.

Conventions: inertial frame has its third axis pointing down, so gravity
is +g0 along axis 3 and altitude is -p[2].  The attitude matrix R maps
body coordinates to inertial ones (columns are the body axes).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .airframe import AircraftParams, aero_force_body
from .errors import DivergenceError
from .geom import cross, reorthonormalize, skew, vec3

# Cosine ramp length applied to each gust edge so the wind stays C^1.
GUST_RAMP = 0.2


@dataclass
class RigidState:
    """Pose and twist: position/velocity inertial, attitude, body rate."""

    p: np.ndarray
    v: np.ndarray
    R: np.ndarray
    omega: np.ndarray

    @classmethod
    def at_rest(cls, p=(0.0, 0.0, 0.0)) -> "RigidState":
        return cls(
            p=np.asarray(p, dtype=float).copy(),
            v=np.zeros(3),
            R=np.eye(3),
            omega=np.zeros(3),
        )

    def copy(self) -> "RigidState":
        return RigidState(self.p.copy(), self.v.copy(), self.R.copy(), self.omega.copy())


@dataclass(frozen=True)
class WindProfile:
    """Steady wind plus periodic gusts with smoothed edges."""

    steady: np.ndarray = field(default_factory=lambda: np.zeros(3))
    gust_magnitude: float = 0.0
    gust_duration: float = 0.0
    gust_period: float = 10.0
    gust_direction: np.ndarray = field(default_factory=lambda: vec3(1.0, 0.0, 0.0))

    def __post_init__(self):
        object.__setattr__(self, "steady", np.asarray(self.steady, dtype=float))
        object.__setattr__(self, "gust_direction", np.asarray(self.gust_direction, dtype=float))
        if self.gust_magnitude < 0.0:
            raise ValueError("gust_magnitude must be >= 0")
        if self.gust_duration < 0.0 or self.gust_duration > self.gust_period:
            raise ValueError("need 0 <= gust_duration <= gust_period")
        n = float(np.linalg.norm(self.gust_direction))
        if self.gust_magnitude > 0.0 and abs(n - 1.0) > 1e-9:
            raise ValueError("gust_direction must be a unit vector")

    @classmethod
    def calm(cls) -> "WindProfile":
        return cls()


@dataclass(frozen=True)
class PlantInput:
    """Thrust magnitude, thrust tilt, and body torque driving the plant."""

    thrust: float
    tilt: float
    torque: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "torque", np.asarray(self.torque, dtype=float))
        if self.thrust < 0.0:
            raise ValueError("thrust must be >= 0")


def _gust_envelope(tau: float, duration: float) -> float:
    """0..1 gust shape over one window, cosine-ramped at both edges."""
    if tau < 0.0 or tau >= duration:
        return 0.0
    ramp = min(GUST_RAMP, 0.5 * duration)
    if tau < ramp:
        return 0.5 * (1.0 - math.cos(math.pi * tau / ramp))
    if tau > duration - ramp:
        return 0.5 * (1.0 - math.cos(math.pi * (duration - tau) / ramp))
    return 1.0


def wind_at(t: float, profile: WindProfile) -> np.ndarray:
    """Inertial wind velocity at time t >= 0.

    Gusts occupy the first gust_duration seconds of each gust_period
    window starting at t = 0.
    """
    if profile.gust_magnitude == 0.0 or profile.gust_duration == 0.0:
        return profile.steady.copy()
    tau = math.fmod(t, profile.gust_period)
    env = _gust_envelope(tau, profile.gust_duration)
    if env == 0.0:
        return profile.steady.copy()
    return profile.steady + (profile.gust_magnitude * env) * profile.gust_direction


def derivatives(
    state: RigidState,
    u: PlantInput,
    v_wind: np.ndarray,
    params: AircraftParams,
):
    """Time derivatives (dp, dv, dR, domega) of the rigid-body state.

    Translational: m dv = m g + R F_a(v_a) + T (sin(tilt) i - cos(tilt) k).
    Rotational:    J domega = -omega x J omega + torque.
    """
    R = state.R
    v_a_body = R.T @ (state.v - v_wind)
    f_body = aero_force_body(v_a_body, params)
    st = math.sin(u.tilt)
    ct = math.cos(u.tilt)
    f_body = np.array(
        [
            f_body[0] + u.thrust * st,
            f_body[1],
            f_body[2] - u.thrust * ct,
        ]
    )
    dv = R @ f_body / params.mass
    dv[2] += params.g0

    jw = params.inertia @ state.omega
    domega = params.inertia_inv @ (u.torque - cross(state.omega, jw))
    dR = R @ skew(state.omega)
    return state.v, dv, dR, domega


def step(
    state: RigidState,
    u: PlantInput,
    t: float,
    dt: float,
    profile: WindProfile,
    params: AircraftParams,
) -> RigidState:
    """One classical RK4 step with the input held constant over dt.

    dt must lie in (0, 0.02].  The attitude is re-orthonormalized after
    the step; non-finite results raise DivergenceError naming the first
    offending field.
    """
    if not 0.0 < dt <= 0.02:
        raise ValueError("dt must be in (0, 0.02]")

    def f(s: RigidState, tau: float):
        return derivatives(s, u, wind_at(tau, profile), params)

    k1 = f(state, t)
    h = 0.5 * dt
    s2 = RigidState(state.p + h * k1[0], state.v + h * k1[1], state.R + h * k1[2], state.omega + h * k1[3])
    k2 = f(s2, t + h)
    s3 = RigidState(state.p + h * k2[0], state.v + h * k2[1], state.R + h * k2[2], state.omega + h * k2[3])
    k3 = f(s3, t + h)
    s4 = RigidState(state.p + dt * k3[0], state.v + dt * k3[1], state.R + dt * k3[2], state.omega + dt * k3[3])
    k4 = f(s4, t + dt)

    w = dt / 6.0
    out = RigidState(
        p=state.p + w * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        v=state.v + w * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        R=state.R + w * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]),
        omega=state.omega + w * (k1[3] + 2.0 * k2[3] + 2.0 * k3[3] + k4[3]),
    )
    for name in ("p", "v", "omega"):
        arr = getattr(out, name)
        if not (math.isfinite(arr[0]) and math.isfinite(arr[1]) and math.isfinite(arr[2])):
            raise DivergenceError(f"state field '{name}' became non-finite at t={t:.4f}")
    out.R = reorthonormalize(out.R)
    return out


def mechanical_energy(state: RigidState, params: AircraftParams) -> float:
    """Kinetic plus gravitational potential energy (down-positive axis)."""
    ke = 0.5 * params.mass * float(np.dot(state.v, state.v))
    ke += 0.5 * float(state.omega @ (params.inertia @ state.omega))
    return ke - params.mass * params.g0 * state.p[2]
