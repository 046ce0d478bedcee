"""Scenario configuration: JSON documents in, Scenario objects out.

A config has four sections -- aircraft, wind, mission, controller --
plus top-level run settings.  Unknown keys are rejected at every level
so typos fail loudly instead of silently falling back to defaults.  The
aircraft section is either an inline flat object or a string path to a
flat parameter file (resolved relative to the config file).
"""

from __future__ import annotations

import json
import math
import os
import numpy as np

from .airframe import AircraftParams, load_params, params_from_dict
from .airspeed import EstimatorConfig
from .attitude import RateGains
from .dynamics import WindProfile
from .errors import ConfigError
from .frames import FrameConfig
from .guidance import CirclePath, GuidanceGains, SpeedRamp
from .simulation import (
    CircuitMission,
    ControllerConfig,
    CruiseMission,
    HoverMission,
    Scenario,
)

_TOP_KEYS = {
    "aircraft", "wind", "mission", "controller",
    "duration", "seed", "dt_plant", "pitot_noise", "disturbance_torque",
    "plant_mismatch",
}
_WIND_KEYS = {"steady", "gust_magnitude", "gust_duration", "gust_period", "gust_direction"}
_MISSION_KEYS = {
    "hover": {"kind", "hold_point"},
    "cruise": {"kind", "speed", "heading_deg", "altitude"},
    "circuit": {
        "kind", "takeoff_duration", "climb_height",
        "circle_center", "circle_radius", "circle_inclination_deg", "circle_normal",
        "speed_start", "speed_end", "ramp_rate",
    },
}
_CTRL_KEYS = {
    "policy", "tilt_table", "sigma_m", "sigma_M", "sigma_low", "eps_jd", "theta_d",
    "regime_hysteresis", "id_filter_tau",
    "k_i", "k_j", "k_k", "k_gamma",
    "k_p", "k_v", "k_s", "k_h", "k_c", "d_sat", "xi_max",
    "pitot_on", "pitot_off", "k_va2",
    "torque_mode", "delta_star", "split_width", "dt",
}


def _check_keys(section: dict, allowed: set, where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")


def _vec(raw, where: str) -> np.ndarray:
    arr = np.asarray(raw, dtype=float)
    if arr.shape != (3,):
        raise ConfigError(f"{where} must be a 3-vector")
    return arr


def _num(section: dict, key: str, default: float) -> float:
    v = section.get(key, default)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{key} must be a number")
    return float(v)


def _wind_from_dict(raw: dict) -> WindProfile:
    _check_keys(raw, _WIND_KEYS, "wind")
    try:
        return WindProfile(
            steady=_vec(raw.get("steady", [0.0, 0.0, 0.0]), "wind.steady"),
            gust_magnitude=_num(raw, "gust_magnitude", 0.0),
            gust_duration=_num(raw, "gust_duration", 0.0),
            gust_period=_num(raw, "gust_period", 10.0),
            gust_direction=_vec(raw.get("gust_direction", [1.0, 0.0, 0.0]), "wind.gust_direction"),
        )
    except ValueError as exc:
        raise ConfigError(f"wind: {exc}") from exc


def circle_from_inclination(center, radius: float, inclination_deg: float) -> CirclePath:
    """Circle tilted about the inertial y-axis by the given inclination.

    The normal's sign is chosen so that a vehicle entering at the point
    nearest the origin travels in the +x direction.
    """
    inc = math.radians(inclination_deg)
    normal = np.array([-math.sin(inc), 0.0, math.cos(inc)])
    return CirclePath(center=np.asarray(center, dtype=float), normal=normal, radius=radius)


def _mission_from_dict(raw: dict):
    kind = raw.get("kind")
    if kind not in _MISSION_KEYS:
        raise ConfigError(f"mission.kind must be one of {sorted(_MISSION_KEYS)}")
    _check_keys(raw, _MISSION_KEYS[kind], f"mission ({kind})")
    try:
        if kind == "hover":
            return HoverMission(hold_point=_vec(raw.get("hold_point", [0, 0, -10]), "hold_point"))
        if kind == "cruise":
            return CruiseMission(
                speed=_num(raw, "speed", 10.0),
                heading_deg=_num(raw, "heading_deg", 0.0),
                altitude=_num(raw, "altitude", 20.0),
            )
        if "circle_normal" in raw:
            circle = CirclePath(
                center=_vec(raw.get("circle_center", [0, 0, -30]), "circle_center"),
                normal=_vec(raw["circle_normal"], "circle_normal"),
                radius=_num(raw, "circle_radius", 40.0),
            )
        else:
            circle = circle_from_inclination(
                raw.get("circle_center", [0.0, 0.0, -30.0]),
                _num(raw, "circle_radius", 40.0),
                _num(raw, "circle_inclination_deg", 10.0),
            )
        ramp = SpeedRamp(
            v_start=_num(raw, "speed_start", 3.0),
            v_end=_num(raw, "speed_end", 9.0),
            ramp_rate=_num(raw, "ramp_rate", 0.1),
        )
        return CircuitMission(
            circle=circle,
            ramp=ramp,
            takeoff_duration=_num(raw, "takeoff_duration", 10.0),
            climb_height=_num(raw, "climb_height", 10.0),
        )
    except ValueError as exc:
        raise ConfigError(f"mission: {exc}") from exc


def _controller_from_dict(raw: dict) -> ControllerConfig:
    _check_keys(raw, _CTRL_KEYS, "controller")
    try:
        frame = FrameConfig(
            policy=raw.get("policy", "min_thrust"),
            tilt_table=tuple(tuple(p) for p in raw.get("tilt_table", ())),
            sigma_m=_num(raw, "sigma_m", 3.0),
            sigma_M=_num(raw, "sigma_M", 9.0),
            sigma_low=_num(raw, "sigma_low", 1.0),
            eps_jd=_num(raw, "eps_jd", 0.1),
            theta_d=_num(raw, "theta_d", 0.0),
            regime_hysteresis=_num(raw, "regime_hysteresis", 0.25),
            id_filter_tau=_num(raw, "id_filter_tau", 0.25),
        )
        gains = RateGains(
            k_i=_num(raw, "k_i", 4.0),
            k_j=_num(raw, "k_j", 4.0),
            k_k=_num(raw, "k_k", 4.0),
            k_gamma=np.asarray(raw.get("k_gamma", [20.0, 20.0, 15.0]), dtype=float),
        )
        guidance = GuidanceGains(
            k_p=_num(raw, "k_p", 1.0),
            k_v=_num(raw, "k_v", 1.8),
            k_s=_num(raw, "k_s", 0.8),
            k_h=_num(raw, "k_h", 1.0),
            k_c=_num(raw, "k_c", 0.6),
            d_sat=_num(raw, "d_sat", 5.0),
            xi_max=_num(raw, "xi_max", 0.7 * 9.81),
        )
        estimator = EstimatorConfig(
            pitot_on=_num(raw, "pitot_on", 2.0),
            pitot_off=_num(raw, "pitot_off", 1.5),
            k_va2=_num(raw, "k_va2", 1.0),
        )
        return ControllerConfig(
            frame=frame,
            gains=gains,
            guidance=guidance,
            estimator=estimator,
            torque_mode=raw.get("torque_mode", "simple"),
            delta_star=_num(raw, "delta_star", 7.0),
            split_width=_num(raw, "split_width", 2.0),
            dt=_num(raw, "dt", 0.004),
        )
    except ValueError as exc:
        raise ConfigError(f"controller: {exc}") from exc


def scenario_from_dict(raw: dict, base_dir: str = ".") -> Scenario:
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    _check_keys(raw, _TOP_KEYS, "config")
    if "mission" not in raw:
        raise ConfigError("config needs a mission section")

    aircraft_raw = raw.get("aircraft", {})
    if isinstance(aircraft_raw, str):
        aircraft = load_params(os.path.join(base_dir, aircraft_raw))
    elif isinstance(aircraft_raw, dict):
        aircraft = params_from_dict(aircraft_raw) if aircraft_raw else AircraftParams()
    else:
        raise ConfigError("aircraft must be an object or a file path")

    mismatch = raw.get("plant_mismatch", {})
    if not isinstance(mismatch, dict):
        raise ConfigError("plant_mismatch must be an object of multipliers")
    try:
        return Scenario(
            aircraft=aircraft,
            wind=_wind_from_dict(raw.get("wind", {})),
            mission=_mission_from_dict(raw["mission"]),
            controller=_controller_from_dict(raw.get("controller", {})),
            duration=_num(raw, "duration", 30.0),
            seed=int(_num(raw, "seed", 0)),
            dt_plant=_num(raw, "dt_plant", 0.001),
            pitot_noise=_num(raw, "pitot_noise", 0.0),
            disturbance_torque=_num(raw, "disturbance_torque", 0.0),
            plant_mismatch={k: float(v) for k, v in mismatch.items()},
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_scenario(path: str) -> Scenario:
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return scenario_from_dict(raw, base_dir=os.path.dirname(os.path.abspath(path)))


# -- canned scenarios --------------------------------------------------------


def hover_config(duration: float = 30.0) -> dict:
    return {
        "mission": {"kind": "hover", "hold_point": [0.0, 0.0, -10.0]},
        "wind": {},
        "duration": duration,
    }


def cruise_config(duration: float = 12.0, wind: float = 3.0, speed: float = 10.0) -> dict:
    return {
        "mission": {"kind": "cruise", "speed": speed, "altitude": 20.0},
        "wind": {"steady": [wind, 0.0, 0.0]},
        "duration": duration,
    }


def mission_config(duration: float = 110.0) -> dict:
    """The reference flight: inclined circle, 3->9 m/s ramp, gusty wind."""
    return {
        "mission": {
            "kind": "circuit",
            "takeoff_duration": 10.0,
            "climb_height": 10.0,
            "circle_center": [0.0, 40.0, -20.0],
            "circle_radius": 40.0,
            "circle_inclination_deg": 10.0,
            "speed_start": 3.0,
            "speed_end": 9.0,
            "ramp_rate": 0.1,
        },
        "wind": {
            "steady": [3.0, 0.0, 0.0],
            "gust_magnitude": 2.0,
            "gust_duration": 2.0,
            "gust_period": 10.0,
            "gust_direction": [1.0, 0.0, 0.0],
        },
        "duration": duration,
    }


def write_config(cfg: dict, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(cfg, fh, indent=2, sort_keys=True)
        fh.write("\n")
