"""Vehicle parameters and the bare aerodynamic force model.

The force model treats the airframe as a zero-lift plane spanned by the
body x/y axes: airflow along body x produces longitudinal drag (c0),
airflow along body z produces the normal force that doubles as lift
(cbar0), and lateral flow is damped by a simple bounded term (c_lat).
All three scale with |v_a| times the respective component, so the force
is quadratic in airspeed.

The bundled ``eflite_like()`` parameter set is synthetic: it is shaped
like a small tri-tilt-rotor convertible (two tilting front rotors, one
fixed rear rotor, two elevon surfaces) but the numbers are plausible
placeholders, not measurements of any real airframe.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields

import numpy as np

from .errors import ConfigError

TILT_MIN = -math.pi / 15.0
TILT_MAX = math.pi / 2.0

# Below this airspeed the flow angles are reported as undefined.
SPEED_FLOOR = 1e-6


@dataclass(frozen=True)
class AircraftParams:
    """Physical constants of the vehicle and its actuators.

    Units: SI throughout (kg, m, s, N, rad).  ``surface_gain`` maps
    aerodynamic roll/pitch torque to surface deflections, scaled by
    1/airspeed^2 at use time.
    """

    mass: float = 1.0
    inertia: np.ndarray = field(default_factory=lambda: np.diag([0.02, 0.03, 0.04]))
    g0: float = 9.81
    c0: float = 0.05        # longitudinal drag coefficient [N s^2/m^2]
    cbar0: float = 0.5      # normal-force coefficient [N s^2/m^2]
    c_lat: float = 0.2      # lateral damping coefficient [N s^2/m^2]
    mu12: float = 1e-5      # front rotor thrust constant [N s^2]
    mu3: float = 1e-5       # rear rotor thrust constant [N s^2]
    r1: float = 0.2         # front rotor longitudinal arm [m]
    r2: float = 0.2         # front rotor lateral arm [m]
    r3: float = 0.4         # rear rotor longitudinal arm [m]
    nu12: float = 0.02      # front rotor drag-torque coupling [m]
    nu3: float = 0.02       # rear rotor drag-torque coupling [m]
    surface_gain: np.ndarray = field(
        default_factory=lambda: np.array([[0.5, 0.0, 0.0], [0.0, 0.5, 0.0]])
    )
    w_min: float = 50.0     # rotor speed limits [rad/s]
    w_max: float = 1200.0
    tilt_min: float = TILT_MIN
    tilt_max: float = TILT_MAX
    surface_max: float = 0.5  # elevon deflection limit [rad]

    def __post_init__(self):
        object.__setattr__(self, "inertia", np.asarray(self.inertia, dtype=float))
        object.__setattr__(self, "surface_gain", np.asarray(self.surface_gain, dtype=float))
        if self.mass <= 0.0:
            raise ValueError("mass must be positive")
        j = self.inertia
        if j.shape != (3, 3) or np.abs(j - j.T).max() > 1e-12:
            raise ValueError("inertia must be a symmetric 3x3 matrix")
        if np.linalg.eigvalsh(j).min() <= 0.0:
            raise ValueError("inertia must be positive definite")
        for name in ("c0", "cbar0", "c_lat", "mu12", "mu3", "r1", "r2", "r3", "nu12", "nu3"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        if self.surface_gain.shape != (2, 3):
            raise ValueError("surface_gain must be 2x3")
        if not (0.0 < self.w_min < self.w_max):
            raise ValueError("rotor speed limits must satisfy 0 < w_min < w_max")
        if self.surface_max <= 0.0:
            raise ValueError("surface_max must be positive")

    @property
    def inertia_inv(self) -> np.ndarray:
        return np.linalg.inv(self.inertia)

    @property
    def weight(self) -> float:
        return self.mass * self.g0


def eflite_like() -> AircraftParams:
    """Default synthetic tri-tilt-rotor parameter set."""
    return AircraftParams()


@dataclass(frozen=True)
class AirflowAngles:
    """Angle of attack / sideslip decomposition of a body-frame airflow."""

    alpha: float
    beta: float
    speed: float
    defined: bool = True


def aero_force_body(v_a: np.ndarray, params: AircraftParams) -> np.ndarray:
    """Aerodynamic force in body coordinates for body-frame airflow v_a.

    F = -|v_a| * (c0*v_a1, c_lat*v_a2, cbar0*v_a3).  Dissipative:
    F . v_a <= 0, and 2-homogeneous in |v_a|.
    """
    s = math.sqrt(v_a[0] * v_a[0] + v_a[1] * v_a[1] + v_a[2] * v_a[2])
    return np.array(
        [
            -params.c0 * v_a[0] * s,
            -params.c_lat * v_a[1] * s,
            -params.cbar0 * v_a[2] * s,
        ]
    )


def thrust_direction(tilt: float) -> np.ndarray:
    """Unit thrust direction in body coordinates for a given tilt angle.

    tilt = 0 points along -z (straight up for a level vehicle),
    tilt = pi/2 along +x (full forward).
    """
    return np.array([math.sin(tilt), 0.0, -math.cos(tilt)])


def airflow_angles(v_a: np.ndarray) -> AirflowAngles:
    """Angle of attack and sideslip of a body-frame airflow.

    alpha = asin(v_a3/|v_a|), beta = atan(v_a2/|v_a1|).  Below the
    1e-6 m/s speed floor both angles are undefined and flagged.
    """
    speed = math.sqrt(v_a[0] * v_a[0] + v_a[1] * v_a[1] + v_a[2] * v_a[2])
    if speed < SPEED_FLOOR:
        return AirflowAngles(alpha=0.0, beta=0.0, speed=speed, defined=False)
    alpha = math.asin(min(1.0, max(-1.0, v_a[2] / speed)))
    beta = math.atan2(v_a[1], abs(v_a[0]))
    return AirflowAngles(alpha=alpha, beta=beta, speed=speed)


# --- parameter file I/O ----------------------------------------------------

_ARRAY_FIELDS = {"inertia": (3, 3), "surface_gain": (2, 3)}


def params_to_dict(params: AircraftParams) -> dict:
    """Flat key/value form of a parameter set (arrays as nested lists)."""
    out = {}
    for f in fields(AircraftParams):
        v = getattr(params, f.name)
        out[f.name] = v.tolist() if isinstance(v, np.ndarray) else v
    return out


def params_from_dict(raw: dict) -> AircraftParams:
    """Build AircraftParams from a flat dict; unknown keys are rejected."""
    known = {f.name for f in fields(AircraftParams)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown aircraft parameter keys: {sorted(unknown)}")
    kwargs = {}
    for key, val in raw.items():
        if key in _ARRAY_FIELDS:
            arr = np.asarray(val, dtype=float)
            if arr.shape != _ARRAY_FIELDS[key]:
                raise ConfigError(f"{key} must have shape {_ARRAY_FIELDS[key]}")
            kwargs[key] = arr
        else:
            if not isinstance(val, (int, float)) or isinstance(val, bool):
                raise ConfigError(f"{key} must be a number")
            kwargs[key] = float(val)
    try:
        return AircraftParams(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_params(path: str) -> AircraftParams:
    """Load AircraftParams from a flat JSON document."""
    with open(path) as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise ConfigError("aircraft parameter file must contain a JSON object")
    return params_from_dict(raw)


def save_params(params: AircraftParams, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(params_to_dict(params), fh, indent=2, sort_keys=True)
        fh.write("\n")
