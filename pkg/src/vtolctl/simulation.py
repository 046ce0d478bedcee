"""Closed-loop scenario runner, cycle logging, and mission metrics.

One scenario is one sequential pipeline: guidance produces the
acceleration input, the pitot estimator reconstructs the air velocity,
the frame selector turns both into a desired frame and thrust command,
the rate law and torque law close the attitude loop, allocation maps
the wrench onto actuators, and the plant integrates the achieved
(post-saturation) wrench between control samples.  Everything is
deterministic for a given seed.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Optional, Union

import numpy as np

from .airframe import AircraftParams, eflite_like
from .airspeed import AirspeedEstimator, AirVelEstimate, EstimatorConfig
from .allocation import ActuatorSet, Mixer
from .attitude import FrameRateEstimator, RateGains, omega_star_high, omega_star_low, torque
from .dynamics import PlantInput, RigidState, WindProfile, step, wind_at
from .errors import AllocationError, DegenerateAxisError, DivergenceError, FrameSingularityError
from .frames import LOW, FrameConfig, FrameSelector
from .geom import norm, vec3
from .guidance import CirclePath, GuidanceGains, SpeedRamp, speed_ref, xi_pathfollow, xi_trajectory

LOG_VERSION = 1

LOG_COLUMNS = (
    "t", "px", "py", "pz", "vx", "vy", "vz",
    "qw", "qx", "qy", "qz", "wx", "wy", "wz",
    "vat_x", "vat_y", "vat_z", "vah_x", "vah_y", "vah_z",
    "pitot_valid", "regime", "phase", "lambda_val", "alpha",
    "thrust", "tilt", "tilt1", "tilt2", "w1n", "w2n", "w3n",
    "delta1", "delta2", "cross_track", "speed_err", "sat_flags",
)

_SAT_CHANNELS = ("w1", "w2", "w3", "tilt1", "tilt2", "delta1", "delta2")


@dataclass(frozen=True)
class ControllerConfig:
    """Everything the control stack needs besides the airframe."""

    frame: FrameConfig = field(default_factory=FrameConfig)
    gains: RateGains = field(default_factory=RateGains)
    guidance: GuidanceGains = field(default_factory=GuidanceGains)
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    torque_mode: str = "simple"
    delta_star: float = 7.0        # surface/rotor torque handover [m/s]
    split_width: float = 2.0
    dt: float = 0.004              # controller sample time (250 Hz)


@dataclass(frozen=True)
class HoverMission:
    hold_point: np.ndarray = field(default_factory=lambda: vec3(0.0, 0.0, -10.0))
    kind: str = "hover"

    def __post_init__(self):
        object.__setattr__(self, "hold_point", np.asarray(self.hold_point, dtype=float))


@dataclass(frozen=True)
class CruiseMission:
    """Straight, level, constant-speed reference track."""

    speed: float = 10.0
    heading_deg: float = 0.0
    altitude: float = 20.0
    kind: str = "cruise"

    def velocity_ref(self) -> np.ndarray:
        h = math.radians(self.heading_deg)
        return vec3(self.speed * math.cos(h), self.speed * math.sin(h), 0.0)


@dataclass(frozen=True)
class CircuitMission:
    """Vertical takeoff, then an inclined circle with a speed ramp."""

    circle: CirclePath
    ramp: SpeedRamp
    takeoff_duration: float = 10.0
    climb_height: float = 10.0
    kind: str = "circuit"


Mission = Union[HoverMission, CruiseMission, CircuitMission]


@dataclass(frozen=True)
class Scenario:
    aircraft: AircraftParams = field(default_factory=eflite_like)
    wind: WindProfile = field(default_factory=WindProfile)
    mission: Mission = field(default_factory=HoverMission)
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    duration: float = 30.0
    seed: int = 0
    dt_plant: float = 0.001
    pitot_noise: float = 0.0           # std-dev of pitot noise [m/s], 0 = off
    disturbance_torque: float = 0.0    # plant torque disturbance bound [N m]
    plant_mismatch: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.duration < 0.0:
            raise ValueError("duration must be >= 0")
        bad = set(self.plant_mismatch) - {"c0", "cbar0", "c_lat", "mass"}
        if bad:
            raise ValueError(f"unknown plant_mismatch keys: {sorted(bad)}")

    def plant_params(self) -> AircraftParams:
        """Plant-side parameters: controller view times mismatch factors."""
        if not self.plant_mismatch:
            return self.aircraft
        changes = {k: getattr(self.aircraft, k) * v for k, v in self.plant_mismatch.items()}
        return replace(self.aircraft, **changes)

    def initial_state(self) -> RigidState:
        m = self.mission
        if m.kind == "hover":
            return RigidState.at_rest(m.hold_point)
        if m.kind == "cruise":
            s = RigidState.at_rest(vec3(0.0, 0.0, -m.altitude))
            s.v = m.velocity_ref()
            return s
        return RigidState.at_rest(vec3(0.0, 0.0, 0.0))


@dataclass
class LogRecord:
    """One controller cycle of the full telemetry channel set."""

    t: float
    state: RigidState
    v_a_true: np.ndarray
    v_a_hat: np.ndarray
    pitot_valid: bool
    regime: str
    phase: str
    lambda_val: float
    alpha: float
    thrust: float
    tilt: float
    actuators: Optional[ActuatorSet]
    cross_track: float
    speed_err: float
    w_max: float

    def sat_mask(self) -> int:
        if self.actuators is None:
            return 0
        mask = 0
        for i, ch in enumerate(_SAT_CHANNELS):
            if ch in self.actuators.saturated:
                mask |= 1 << i
        return mask

    def to_row(self) -> str:
        s = self.state
        q = rotation_to_quat(s.R)
        act = self.actuators
        if act is None:
            act = ActuatorSet(w1=0.0, w2=0.0, w3=0.0, tilt1=0.0, tilt2=0.0)
        vals = [
            self.t, s.p[0], s.p[1], s.p[2], s.v[0], s.v[1], s.v[2],
            q[0], q[1], q[2], q[3], s.omega[0], s.omega[1], s.omega[2],
            self.v_a_true[0], self.v_a_true[1], self.v_a_true[2],
            self.v_a_hat[0], self.v_a_hat[1], self.v_a_hat[2],
            int(self.pitot_valid), self.regime, self.phase,
            self.lambda_val, self.alpha, self.thrust, self.tilt,
            act.tilt1, act.tilt2,
            act.w1 / self.w_max, act.w2 / self.w_max, act.w3 / self.w_max,
            act.delta1, act.delta2, self.cross_track, self.speed_err,
            self.sat_mask(),
        ]
        return ",".join(_fmt(v) for v in vals)


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{v:.9g}"


def rotation_to_quat(r: np.ndarray) -> np.ndarray:
    """Unit quaternion (w, x, y, z) of a rotation matrix, w >= 0."""
    tr = r[0, 0] + r[1, 1] + r[2, 2]
    if tr > 0.0:
        s = math.sqrt(tr + 1.0) * 2.0
        q = np.array(
            [0.25 * s, (r[2, 1] - r[1, 2]) / s, (r[0, 2] - r[2, 0]) / s, (r[1, 0] - r[0, 1]) / s]
        )
    elif r[0, 0] > r[1, 1] and r[0, 0] > r[2, 2]:
        s = math.sqrt(1.0 + r[0, 0] - r[1, 1] - r[2, 2]) * 2.0
        q = np.array(
            [(r[2, 1] - r[1, 2]) / s, 0.25 * s, (r[0, 1] + r[1, 0]) / s, (r[0, 2] + r[2, 0]) / s]
        )
    elif r[1, 1] > r[2, 2]:
        s = math.sqrt(1.0 + r[1, 1] - r[0, 0] - r[2, 2]) * 2.0
        q = np.array(
            [(r[0, 2] - r[2, 0]) / s, (r[0, 1] + r[1, 0]) / s, 0.25 * s, (r[1, 2] + r[2, 1]) / s]
        )
    else:
        s = math.sqrt(1.0 + r[2, 2] - r[0, 0] - r[1, 1]) * 2.0
        q = np.array(
            [(r[1, 0] - r[0, 1]) / s, (r[0, 2] + r[2, 0]) / s, (r[1, 2] + r[2, 1]) / s, 0.25 * s]
        )
    if q[0] < 0.0:
        q = -q
    return q / np.linalg.norm(q)


class ControllerStack:
    """Sequential control pipeline for one vehicle."""

    def __init__(self, scenario: Scenario, rng: np.random.Generator):
        cc = scenario.controller
        self.params = scenario.aircraft
        self.cfg = cc
        self.mission = scenario.mission
        self.mixer = Mixer(self.params)
        self.estimator = AirspeedEstimator(cc.estimator)
        self.selector = FrameSelector(self.params, cc.frame, dt=cc.dt)
        self.rate_est = FrameRateEstimator()
        self.rng = rng
        self.pitot_noise = scenario.pitot_noise
        self.events: Counter = Counter()
        self._prev_omega_star: Optional[np.ndarray] = None
        self._prev_frame_tt = None
        self._prev_tangent: Optional[np.ndarray] = None

    # -- guidance ----------------------------------------------------------

    def _guidance(self, t: float, state: RigidState):
        """Returns (xi, phase, cross_track, speed_err, heading_ref)."""
        m = self.mission
        g = self.cfg.guidance
        nan = math.nan
        if m.kind == "hover":
            xi = xi_trajectory(state.p, state.v, m.hold_point, np.zeros(3), np.zeros(3), g)
            return xi, "hover", nan, nan, None
        if m.kind == "cruise":
            v_ref = m.velocity_ref()
            p_ref = vec3(0.0, 0.0, -m.altitude) + v_ref * t
            xi = xi_trajectory(state.p, state.v, p_ref, v_ref, np.zeros(3), g)
            return xi, "cruise", nan, norm(state.v) - m.speed, v_ref / m.speed
        # circuit
        if t < m.takeoff_duration:
            rate = m.climb_height / m.takeoff_duration
            z = -min(m.climb_height, rate * t)
            v_ref = vec3(0.0, 0.0, -rate) if rate * t < m.climb_height else np.zeros(3)
            xi = xi_trajectory(state.p, state.v, vec3(0.0, 0.0, z), v_ref, np.zeros(3), g)
            return xi, "takeoff", nan, nan, None
        v_star = speed_ref(t - m.takeoff_duration, m.ramp)
        xi, info = xi_pathfollow(state.p, state.v, m.circle, v_star, g, self._prev_tangent)
        self._prev_tangent = info.tangent
        return xi, "path", info.cross_track, norm(state.v) - v_star, info.heading_target

    # -- one control cycle ---------------------------------------------------

    def update(self, t: float, state: RigidState, v_w: np.ndarray):
        cc = self.cfg
        R = state.R
        v_a_true = R.T @ (state.v - v_w)
        pitot = float(v_a_true[0])
        if self.pitot_noise > 0.0:
            pitot += self.pitot_noise * self.rng.standard_normal()
        try:
            est = self.estimator.update(state.v, R, state.omega, pitot, cc.dt)
        except FrameSingularityError:
            self.events["estimator_singular"] += 1
            est = AirVelEstimate(v_a_hat=np.zeros(3), pitot_valid=False, v_a2_state=0.0)

        xi, phase, cross_track, speed_err, heading_ref = self._guidance(t, state)

        try:
            frame, tt = self.selector.select(xi, est.v_a_hat, R, heading_ref)
            self._prev_frame_tt = (frame, tt)
        except (FrameSingularityError, DegenerateAxisError):
            if self._prev_frame_tt is None:
                raise
            self.events["frame_held"] += 1
            frame, tt = self._prev_frame_tt

        rate = self.rate_est.update(frame, cc.dt)
        if frame.regime == LOW:
            om_star = omega_star_low(frame.j_raw, frame.k_bar, R, rate, cc.gains)
            if heading_ref is not None:
                # Desk plant has no aerodynamic weathervane torque, and
                # with a dead pitot the lateral target carries no yaw
                # authority either; steer the nose onto the commanded
                # track about the vertical axis so the pitot can come
                # alive with forward flight.
                k_ax = R[:, 2]
                yaw_rate = cc.gains.k_i * float(
                    np.dot(np.cross(R[:, 0], frame.i_d), k_ax)
                )
                om_star = om_star + yaw_rate * (R.T @ k_ax)
        else:
            om_star = omega_star_high(frame, R, rate, cc.gains)
        gamma = torque(
            state.omega, om_star, self._prev_omega_star, cc.dt, self.params, cc.gains,
            mode=cc.torque_mode,
        )
        self._prev_omega_star = om_star

        airspeed_est = norm(est.v_a_hat)
        try:
            alloc = self.mixer.allocate(
                tt.thrust, tt.tilt, gamma, airspeed_est, cc.delta_star, cc.split_width
            )
            actuators = alloc.actuators
            cmd = PlantInput(
                thrust=alloc.achieved_thrust, tilt=alloc.achieved_tilt,
                torque=alloc.achieved_torque,
            )
            if actuators.any_saturated:
                self.events["saturated_cycles"] += 1
        except AllocationError:
            # Infeasible mix: drive the plant with the raw wrench so the
            # run can continue, and flag the cycle.
            self.events["allocation_infeasible"] += 1
            actuators = None
            cmd = PlantInput(thrust=max(tt.thrust, 0.0), tilt=tt.tilt, torque=gamma)

        record = LogRecord(
            t=t, state=state.copy(), v_a_true=v_a_true, v_a_hat=est.v_a_hat,
            pitot_valid=est.pitot_valid, regime=frame.regime, phase=phase,
            lambda_val=frame.lambda_val, alpha=frame.alpha,
            thrust=tt.thrust, tilt=tt.tilt, actuators=actuators,
            cross_track=cross_track, speed_err=speed_err, w_max=self.params.w_max,
        )
        return cmd, record


@dataclass
class SimResult:
    records: list
    metrics: dict

    @property
    def success(self) -> bool:
        return bool(self.metrics.get("success", False))


def run(scenario: Scenario) -> SimResult:
    """Execute one scenario; deterministic for a given seed.

    On plant divergence the run aborts with the log collected so far
    flushed into the result and success = False.
    """
    rng = np.random.default_rng(scenario.seed)
    cc = scenario.controller
    plant_params = scenario.plant_params()
    stack = ControllerStack(scenario, rng)
    state = scenario.initial_state()
    records: list[LogRecord] = []
    n_cycles = int(round(scenario.duration / cc.dt))
    sub = max(1, int(round(cc.dt / scenario.dt_plant)))
    dt_p = cc.dt / sub
    ok, reason = True, ""
    for i in range(n_cycles):
        t = i * cc.dt
        v_w = wind_at(t, scenario.wind)
        cmd, rec = stack.update(t, state, v_w)
        if scenario.disturbance_torque > 0.0:
            d = scenario.disturbance_torque
            cmd = PlantInput(cmd.thrust, cmd.tilt, cmd.torque + rng.uniform(-d, d, 3))
        records.append(rec)
        try:
            for k in range(sub):
                state = step(state, cmd, t + k * dt_p, dt_p, scenario.wind, plant_params)
        except DivergenceError as exc:
            ok, reason = False, str(exc)
            break
    if records:
        mets = metrics(records)
    else:
        mets = {"n_records": 0, "duration": 0.0}
    mets["success"] = ok
    if reason:
        mets["failure"] = reason
    mets["events"] = dict(stack.events)
    mets["frame_fallbacks"] = stack.selector.fallback_count
    return SimResult(records=records, metrics=mets)


def metrics(records: list) -> dict:
    """Mission summary statistics from a cycle log.

    Raises ValueError on an empty log.  Cross-track and speed statistics
    cover the path/cruise phase samples where they are defined.
    """
    if not records:
        raise ValueError("empty log")
    dt = records[1].t - records[0].t if len(records) > 1 else 0.0
    ct = np.array([r.cross_track for r in records])
    se = np.array([r.speed_err for r in records])
    ct = ct[np.isfinite(ct)]
    se = se[np.isfinite(se)]

    tilt1 = np.array([r.actuators.tilt1 if r.actuators else 0.0 for r in records])
    tilt2 = np.array([r.actuators.tilt2 if r.actuators else 0.0 for r in records])
    tiltv = np.array([r.tilt for r in records])

    def max_rate(x):
        if len(x) < 2 or dt <= 0.0:
            return 0.0
        return float(np.abs(np.diff(x)).max() / dt)

    duty: dict = {}
    for i, ch in enumerate(_SAT_CHANNELS):
        duty[ch] = float(np.mean([(r.sat_mask() >> i) & 1 for r in records]))

    valid = [r for r in records if r.pitot_valid]
    if valid:
        err = np.array([r.v_a_hat - r.v_a_true for r in valid])
        est_rms = list(np.sqrt(np.mean(err * err, axis=0)))
    else:
        est_rms = [math.nan] * 3

    out = {
        "n_records": len(records),
        "duration": records[-1].t + dt,
        "cross_track_rms": float(np.sqrt(np.mean(ct * ct))) if len(ct) else math.nan,
        "cross_track_max": float(np.abs(ct).max()) if len(ct) else math.nan,
        "speed_rms": float(np.sqrt(np.mean(se * se))) if len(se) else math.nan,
        "tilt_rate_max": {
            "tilt1": max_rate(tilt1),
            "tilt2": max_rate(tilt2),
            "thrust_tilt": max_rate(tiltv),
        },
        "thrust_tilt_max": float(tiltv.max()),
        "saturation_duty": duty,
        "estimator_rms": [float(x) for x in est_rms],
        "pitot_valid_frac": float(np.mean([r.pitot_valid for r in records])),
    }
    return out


def write_csv(records: list, path: str) -> None:
    """Write a cycle log as CSV (versioned header, 9 significant digits)."""
    with open(path, "w") as fh:
        fh.write(f"# vtolctl-log v{LOG_VERSION}\n")
        fh.write(",".join(LOG_COLUMNS) + "\n")
        for r in records:
            fh.write(r.to_row() + "\n")


def read_csv(path: str) -> dict:
    """Read a cycle-log CSV back into a dict of numpy arrays.

    String columns (regime, phase) come back as lists of str.
    """
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines or not lines[0].startswith("# vtolctl-log"):
        raise ValueError(f"{path}: not a vtolctl log file")
    header = lines[1].split(",")
    if tuple(header) != LOG_COLUMNS:
        raise ValueError(f"{path}: unexpected log columns (version mismatch?)")
    rows = [ln.split(",") for ln in lines[2:]]
    out: dict = {}
    for j, name in enumerate(header):
        col = [row[j] for row in rows]
        if name in ("regime", "phase"):
            out[name] = col
        elif name in ("pitot_valid", "sat_flags"):
            out[name] = np.array([int(c) for c in col])
        else:
            out[name] = np.array([float(c) for c in col])
    return out
