"""Actuator allocation for the tri-tilt-rotor layout.

The vehicle has two front rotors on independent tilt mounts (speeds w1,
w2, tilts tilt1, tilt2), one fixed vertical rear rotor (w3), and two
elevon surfaces (delta1, delta2).  Torque is produced by the surfaces at
high airspeed and by the rotors at low airspeed, blended by a smooth
speed-indexed split; with only two surfaces there is no aerodynamic yaw
authority, so the yaw component always stays with the rotors.

The rotor subproblem inverts a 5x5 linear map.  Writing the per-rotor
thrust components
    u = [f1 cos(t1), f2 cos(t2), f1 sin(t1), f2 sin(t2), f3]
with f1 = mu12 w1^2, f2 = mu12 w2^2, f3 = mu3 w3^2, the demanded wrench
is D u = [T sin(tilt), T cos(tilt), torque_m], where D encodes the rotor
arms (r1, r2, r3) and the drag-torque couplings (nu12, nu3).  Solving
X = D^-1 wrench gives rotor speeds and tilt angles back via
    f1 = hypot(X1, X3), tilt1 = atan2(X3, X1)   (and likewise for 2),
    f3 = X5.
Saturation is applied channel-wise at the end, flagged, with no
redistribution; the achieved wrench is recomputed through the forward
map so callers can see the mismatch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .airframe import AircraftParams
from .errors import AllocationError
from .frames import smoothstep_down

# Surface deflections divide by airspeed^2; below this floor the divisor
# is frozen so the map stays total (the torque split routes essentially
# nothing to the surfaces down there anyway).
SURFACE_SPEED_FLOOR = 3.0


@dataclass(frozen=True)
class TorqueSplit:
    """Partition of the torque demand between surfaces and rotors."""

    gamma_a: np.ndarray
    gamma_m: np.ndarray
    lambda_bar: float


@dataclass(frozen=True)
class ActuatorSet:
    """Rotor speeds, rotor tilts, surface deflections, saturation flags."""

    w1: float
    w2: float
    w3: float
    tilt1: float
    tilt2: float
    delta1: float = 0.0
    delta2: float = 0.0
    saturated: tuple = ()

    @property
    def any_saturated(self) -> bool:
        return bool(self.saturated)


@dataclass(frozen=True)
class AllocationResult:
    actuators: ActuatorSet
    split: TorqueSplit
    achieved_thrust: float
    achieved_tilt: float
    achieved_torque: np.ndarray


def mixing_matrix(params: AircraftParams) -> np.ndarray:
    """5x5 map from rotor thrust components to (T sin, T cos, torque)."""
    r1, r2, r3 = params.r1, params.r2, params.r3
    n12, n3 = params.nu12, params.nu3
    return np.array(
        [
            [0.0, 0.0, 1.0, 1.0, 0.0],
            [1.0, 1.0, 0.0, 0.0, 1.0],
            [-r2, r2, n12, -n12, 0.0],
            [r1, r1, 0.0, 0.0, -r3],
            [-n12, n12, -r2, r2, -n3],
        ]
    )


class Mixer:
    """Precomputed allocation operator for one parameter set."""

    def __init__(self, params: AircraftParams):
        self.params = params
        self.d = mixing_matrix(params)
        det = np.linalg.det(self.d)
        if abs(det) <= 1e-9:
            raise AllocationError(f"mixing matrix is singular (det = {det:.3e})")
        self.d_inv = np.linalg.inv(self.d)
        # Right inverse of the surface map: torque produced per unit
        # deflection at unit dynamic scale.
        self.surface_inv = np.linalg.pinv(params.surface_gain)
        if np.abs(params.surface_gain @ self.surface_inv - np.eye(2)).max() > 1e-9:
            raise AllocationError("surface_gain matrix is rank deficient")

    # -- rotor subproblem --------------------------------------------------

    def rotor_solve(self, thrust: float, tilt: float, gamma_m: np.ndarray) -> ActuatorSet:
        """Invert the 5x5 rotor system; clamp and flag saturations.

        Raises AllocationError when the rear rotor would need negative
        thrust (X5 < 0) or a front tilt would leave (-pi/2, pi/2)
        (X1 < 0 or X2 < 0).
        """
        if thrust < 0.0:
            raise ValueError("thrust must be >= 0")
        p = self.params
        b = np.array(
            [thrust * math.sin(tilt), thrust * math.cos(tilt), gamma_m[0], gamma_m[1], gamma_m[2]]
        )
        x = self.d_inv @ b
        # roundoff-scale negatives are legitimate boundary solutions
        tol = 1e-9 * max(1.0, float(np.abs(x).max()))
        if x[4] < -tol:
            raise AllocationError(f"rear rotor demands negative thrust ({x[4]:.4g} N)")
        if x[0] < -tol or x[1] < -tol:
            raise AllocationError("front tilt demand leaves (-pi/2, pi/2)")
        x0, x1, x4 = max(x[0], 0.0), max(x[1], 0.0), max(x[4], 0.0)

        f1 = math.hypot(x0, x[2])
        f2 = math.hypot(x1, x[3])
        w1 = math.sqrt(f1 / p.mu12)
        w2 = math.sqrt(f2 / p.mu12)
        w3 = math.sqrt(x4 / p.mu3)
        t1 = math.atan2(x[2], x0)
        t2 = math.atan2(x[3], x1)

        flags = []
        w1, w2, w3 = (
            _clamp(w1, p.w_min, p.w_max, "w1", flags),
            _clamp(w2, p.w_min, p.w_max, "w2", flags),
            _clamp(w3, p.w_min, p.w_max, "w3", flags),
        )
        t1 = _clamp(t1, p.tilt_min, p.tilt_max, "tilt1", flags)
        t2 = _clamp(t2, p.tilt_min, p.tilt_max, "tilt2", flags)
        return ActuatorSet(w1=w1, w2=w2, w3=w3, tilt1=t1, tilt2=t2, saturated=tuple(flags))

    def rotor_forward(self, act: ActuatorSet) -> tuple[float, float, np.ndarray]:
        """Wrench actually produced by the rotor settings."""
        p = self.params
        f1 = p.mu12 * act.w1 * act.w1
        f2 = p.mu12 * act.w2 * act.w2
        u = np.array(
            [
                f1 * math.cos(act.tilt1),
                f2 * math.cos(act.tilt2),
                f1 * math.sin(act.tilt1),
                f2 * math.sin(act.tilt2),
                p.mu3 * act.w3 * act.w3,
            ]
        )
        b = self.d @ u
        return math.hypot(b[0], b[1]), math.atan2(b[0], b[1]), b[2:5].copy()

    # -- surfaces ------------------------------------------------------------

    def surface_deflections(self, gamma_a: np.ndarray, airspeed: float) -> tuple[float, float, list]:
        p = self.params
        v_eff = max(airspeed, SURFACE_SPEED_FLOOR)
        delta = (p.surface_gain @ gamma_a) / (v_eff * v_eff)
        flags = []
        d1 = _clamp(float(delta[0]), -p.surface_max, p.surface_max, "delta1", flags)
        d2 = _clamp(float(delta[1]), -p.surface_max, p.surface_max, "delta2", flags)
        return d1, d2, flags

    def surface_torque(self, delta1: float, delta2: float, airspeed: float) -> np.ndarray:
        v_eff = max(airspeed, SURFACE_SPEED_FLOOR)
        return (v_eff * v_eff) * (self.surface_inv @ np.array([delta1, delta2]))

    # -- composition -----------------------------------------------------------

    def allocate(
        self,
        thrust: float,
        tilt: float,
        gamma: np.ndarray,
        airspeed: float,
        delta_star: float = 7.0,
        width: float = 2.0,
    ) -> AllocationResult:
        """Full actuator solution plus the achieved (post-clamp) wrench."""
        split = split_torque(gamma, airspeed, delta_star, width)
        d1, d2, sflags = self.surface_deflections(split.gamma_a, airspeed)
        rot = self.rotor_solve(thrust, tilt, split.gamma_m)
        act = ActuatorSet(
            w1=rot.w1,
            w2=rot.w2,
            w3=rot.w3,
            tilt1=rot.tilt1,
            tilt2=rot.tilt2,
            delta1=d1,
            delta2=d2,
            saturated=tuple(sorted(set(rot.saturated) | set(sflags))),
        )
        t_ach, tilt_ach, gm_ach = self.rotor_forward(act)
        torque_ach = gm_ach + self.surface_torque(d1, d2, airspeed)
        return AllocationResult(
            actuators=act,
            split=split,
            achieved_thrust=t_ach,
            achieved_tilt=tilt_ach,
            achieved_torque=torque_ach,
        )


def _clamp(value: float, lo: float, hi: float, name: str, flags: list) -> float:
    if value < lo:
        flags.append(name)
        return lo
    if value > hi:
        flags.append(name)
        return hi
    return value


def split_torque(
    gamma: np.ndarray, airspeed: float, delta_star: float = 7.0, width: float = 2.0
) -> TorqueSplit:
    """Blend the torque demand between surfaces and rotors by airspeed.

    Rotors carry everything up to delta_star, surfaces take over the
    roll/pitch share across [delta_star, delta_star + width].  Yaw
    always stays with the rotors.  gamma_a + gamma_m == gamma exactly.
    """
    if delta_star <= 0.0 or width <= 0.0:
        raise ValueError("delta_star and width must be positive")
    lam = smoothstep_down(airspeed, delta_star, delta_star + width)
    gamma = np.asarray(gamma, dtype=float)
    gamma_a = np.array([(1.0 - lam) * gamma[0], (1.0 - lam) * gamma[1], 0.0])
    return TorqueSplit(gamma_a=gamma_a, gamma_m=gamma - gamma_a, lambda_bar=lam)


def surface_deflections(
    gamma_a: np.ndarray, airspeed: float, params: AircraftParams
) -> tuple[float, float]:
    """Surface deflections for an aerodynamic torque demand (clamped)."""
    d1, d2, _ = Mixer(params).surface_deflections(gamma_a, airspeed)
    return d1, d2


def rotor_solve(
    thrust: float,
    tilt: float,
    gamma_m: np.ndarray,
    params: AircraftParams,
    mixer: Optional[Mixer] = None,
) -> ActuatorSet:
    """Convenience wrapper around Mixer.rotor_solve."""
    return (mixer or Mixer(params)).rotor_solve(thrust, tilt, gamma_m)


def allocate(
    thrust: float,
    tilt: float,
    gamma: np.ndarray,
    airspeed: float,
    params: AircraftParams,
    mixer: Optional[Mixer] = None,
    delta_star: float = 7.0,
    width: float = 2.0,
) -> AllocationResult:
    """Convenience wrapper around Mixer.allocate."""
    return (mixer or Mixer(params)).allocate(thrust, tilt, gamma, airspeed, delta_star, width)
