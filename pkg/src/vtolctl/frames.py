"""Desired body frame, angle of attack, and thrust tilt/magnitude.

This is the core of the control method.  The translational objective is
encoded by an acceleration demand; together with the air velocity it
fixes one body axis family up to a rotation about the lateral axis.  At
meaningful airspeed that remaining freedom is spent on a secondary
objective (thrust minimization or a tilt schedule) through the angle of
attack.  Near hover the construction degenerates, so a surrogate frame
built from a desired pitch angle takes over, and a smooth speed-indexed
blend joins the two regimes.

Everything here works in inertial coordinates; body-frame quantities
are produced by the caller applying R^T at the boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .airframe import AircraftParams
from .errors import DegenerateAxisError, FrameSingularityError
from .geom import cross, norm, project_perp, unit, vec3

LOW = "low"
TRANSITION = "transition"
HIGH = "high"

_K0 = vec3(0.0, 0.0, 1.0)  # inertial down axis


def smoothstep_down(x: float, lo: float, hi: float) -> float:
    """C^1 non-increasing weight: 1 for x <= lo, 0 for x >= hi."""
    if lo >= hi:
        raise ValueError("smoothstep_down needs lo < hi")
    if x <= lo:
        return 1.0
    if x >= hi:
        return 0.0
    s = (x - lo) / (hi - lo)
    return 1.0 - s * s * (3.0 - 2.0 * s)


@dataclass(frozen=True)
class AccelTriple:
    """Acceleration demand and its drag-shifted companions (inertial, N).

    d - a and e - a are the same |v_a| v_a vector scaled by the
    longitudinal and normal force coefficients respectively.
    """

    a: np.ndarray
    d: np.ndarray
    e: np.ndarray


@dataclass
class DesiredFrame:
    """Target body axes plus the regime bookkeeping that produced them.

    In the low-speed regime the triad may be degenerate: ``i_bar`` then
    holds the pitch-reference axis and ``j_bar`` is zero until there is
    enough airflow to promote a full orthonormal frame.  ``j_raw`` is
    the unnormalized lateral target used by the low-speed rate law; its
    magnitude fades to zero with the airflow on purpose.
    """

    i_bar: np.ndarray
    j_bar: np.ndarray
    k_bar: np.ndarray
    alpha: float
    regime: str
    lambda_val: float
    theta_d: float = 0.0
    j_raw: Optional[np.ndarray] = None
    i_d: Optional[np.ndarray] = None

    def axes_matrix(self) -> np.ndarray:
        """Rotation matrix with the frame axes as columns."""
        return np.column_stack([self.i_bar, self.j_bar, self.k_bar])


@dataclass(frozen=True)
class TiltThrust:
    """Thrust-vector command: tilt angle [rad] and magnitude [N]."""

    tilt: float
    thrust: float

    def __post_init__(self):
        if self.thrust < 0.0:
            raise ValueError("thrust must be >= 0")


def accel_triple(xi: np.ndarray, v_a: np.ndarray, params: AircraftParams) -> AccelTriple:
    """Acceleration demand a = m(xi - g) and its companions d, e.

    v_a is the inertial air velocity.
    """
    a = params.mass * (xi - params.g0 * _K0)
    drag = norm(v_a) * v_a
    return AccelTriple(a=a, d=a + params.c0 * drag, e=a + params.cbar0 * drag)


def jbar_highspeed(a: np.ndarray, v_a: np.ndarray, eps_rel: float = 1e-3) -> np.ndarray:
    """Lateral axis orthogonal to the demand and the airflow.

    Undefined (raises FrameSingularityError) when v_a and a are aligned
    or either is zero: the guard is |v_a x a| > eps_rel * |v_a| * |a|.
    """
    c = cross(v_a, a)
    cn = norm(c)
    if cn <= eps_rel * norm(v_a) * norm(a) or cn == 0.0:
        raise FrameSingularityError("air velocity aligned with acceleration demand")
    return c / cn


def alpha_min_thrust(a: np.ndarray, v_a: np.ndarray, params: AircraftParams) -> float:
    """Angle of attack minimizing the thrust magnitude for (a, v_a)."""
    s3 = norm(v_a) ** 3
    return 0.5 * math.atan2(
        norm(cross(v_a, a)),
        float(np.dot(a, v_a)) + 0.5 * (params.c0 + params.cbar0) * s3,
    )


def alpha_from_tilt(tilt: float, a: np.ndarray, v_a: np.ndarray, params: AircraftParams) -> float:
    """Angle of attack consistent with a prescribed thrust tilt.

    The arctangent is wrapped into (-pi/2, pi/2]: the half-turn twin
    solution corresponds to the flipped frame (nose out of the airflow)
    and is never the wanted one.
    """
    c = norm(cross(v_a, a))
    av = float(np.dot(a, v_a))
    s3 = norm(v_a) ** 3
    st, ct = math.sin(tilt), math.cos(tilt)
    num = st * c - ct * (av + params.c0 * s3)
    den = ct * c + st * (av + params.cbar0 * s3)
    if abs(num) < 1e-12 and abs(den) < 1e-12:
        raise FrameSingularityError("angle of attack indeterminate for this tilt")
    alpha = math.atan2(num, den)
    if alpha > math.pi / 2:
        alpha -= math.pi
    elif alpha <= -math.pi / 2:
        alpha += math.pi
    return alpha


def frame_highspeed(a: np.ndarray, v_a: np.ndarray, alpha: float) -> DesiredFrame:
    """Orthonormal desired frame for meaningful airspeed.

    The longitudinal axis sits at angle-of-attack alpha from the airflow
    inside the plane orthogonal to the lateral axis.
    """
    j_bar = jbar_highspeed(a, v_a)
    v_hat = unit(v_a)
    w = cross(j_bar, v_hat)
    ca, sa = math.cos(alpha), math.sin(alpha)
    i_bar = ca * v_hat + sa * w
    k_bar = sa * v_hat - ca * w
    return DesiredFrame(
        i_bar=i_bar,
        j_bar=j_bar,
        k_bar=k_bar,
        alpha=alpha,
        regime=HIGH,
        lambda_val=0.0,
        j_raw=j_bar,
    )


def lowspeed_heading_axis(theta_d: float, i_current: np.ndarray) -> np.ndarray:
    """Pitch-reference axis: current heading pitched up by theta_d.

    Raises if the current longitudinal axis is vertical (heading
    undefined).
    """
    horiz = project_perp(_K0, i_current)
    n = norm(horiz)
    if n <= 1e-6:
        raise DegenerateAxisError("heading undefined: longitudinal axis is vertical")
    return math.cos(theta_d) * (horiz / n) - math.sin(theta_d) * _K0


def frame_lowspeed(
    theta_d: float,
    i_current: np.ndarray,
    a: np.ndarray,
    v_a: np.ndarray,
    eps: float = 0.1,
    sigma: float = 1.0,
    i_d: Optional[np.ndarray] = None,
) -> DesiredFrame:
    """Surrogate desired frame for hover and low airspeed.

    The vertical axis opposes the demand component orthogonal to the
    pitch-reference axis; the lateral target ``j_raw`` is regularized by
    eps so it fades smoothly to zero with the airflow instead of being
    undefined.  With airspeed at least sigma the triad is promoted to a
    full right-handed orthonormal frame and the angle of attack is read
    from the airflow.

    ``i_d`` overrides the internally computed pitch-reference axis; the
    caller uses this to supply a low-pass filtered version.
    """
    if i_d is None:
        i_d = lowspeed_heading_axis(theta_d, i_current)
    perp = project_perp(i_d, a)
    pn = norm(perp)
    if pn <= 1e-6:
        raise FrameSingularityError("acceleration demand parallel to pitch axis")
    k_bar = -perp / pn
    kxv = cross(k_bar, v_a)
    j_raw = kxv / (eps + norm(kxv))
    jn = norm(j_raw)
    speed = norm(v_a)
    if speed >= sigma and jn > 1e-9:
        j_bar = j_raw / jn
        i_bar = cross(j_bar, k_bar)
        alpha = math.asin(min(1.0, max(-1.0, float(np.dot(v_a / speed, k_bar)))))
    else:
        j_bar = np.zeros(3)
        i_bar = i_d
        alpha = 0.0
    return DesiredFrame(
        i_bar=i_bar,
        j_bar=j_bar,
        k_bar=k_bar,
        alpha=alpha,
        regime=LOW,
        lambda_val=1.0,
        theta_d=theta_d,
        j_raw=j_raw,
        i_d=i_d,
    )


def blend_alpha(
    speed: float, alpha_l: float, alpha_h: float, sigma_m: float, sigma_M: float
) -> tuple[float, float]:
    """Blend low/high angle of attack over the transition speed band.

    Returns (alpha, lambda) with lambda = 1 at/below sigma_m and 0
    at/above sigma_M, C^1 in between.
    """
    if not 0.0 < sigma_m < sigma_M:
        raise ValueError("need 0 < sigma_m < sigma_M")
    lam = smoothstep_down(speed, sigma_m, sigma_M)
    return lam * alpha_l + (1.0 - lam) * alpha_h, lam


def tilt_thrust(d: np.ndarray, e: np.ndarray, i_star: np.ndarray, k_bar: np.ndarray) -> TiltThrust:
    """Thrust tilt and magnitude realizing the demand along (i_star, k_bar).

    Defined by T sin(tilt) = d . i_star and T cos(tilt) = -e . k_bar;
    the atan2 branch keeps T >= 0.  Raises when both projections vanish.
    """
    s = float(np.dot(d, i_star))
    c = -float(np.dot(e, k_bar))
    if abs(s) < 1e-12 and abs(c) < 1e-12:
        raise FrameSingularityError("thrust indeterminate: both projections vanish")
    tilt = math.atan2(s, c)
    thrust = math.sin(tilt) * s - math.cos(tilt) * float(np.dot(e, k_bar))
    return TiltThrust(tilt=tilt, thrust=thrust)


@dataclass
class FrameConfig:
    """Tuning of the frame selection and transition logic."""

    policy: str = "min_thrust"            # or "tilt_schedule"
    tilt_table: tuple = ()                # ((speed, tilt), ...) for tilt_schedule
    sigma_m: float = 3.0                  # transition band [m/s]
    sigma_M: float = 9.0
    sigma_low: float = 1.0                # low-speed frame promotion threshold
    eps_jd: float = 0.1                   # lateral-target regularizer [m/s]
    theta_d: float = 0.0                  # desired low-speed pitch [rad]
    regime_hysteresis: float = 0.25       # [m/s] around sigma_m
    id_filter_tau: float = 0.25           # pitch-axis low-pass [s]

    def __post_init__(self):
        if self.policy not in ("min_thrust", "tilt_schedule"):
            raise ValueError(f"unknown secondary-objective policy {self.policy!r}")
        if self.policy == "tilt_schedule" and len(self.tilt_table) < 1:
            raise ValueError("tilt_schedule policy needs a non-empty tilt_table")
        if not 0.0 < self.sigma_m < self.sigma_M:
            raise ValueError("need 0 < sigma_m < sigma_M")
        if not 0.0 <= self.theta_d < math.pi / 4:
            raise ValueError("theta_d must lie in [0, pi/4)")


def scheduled_tilt(speed: float, table) -> float:
    """Piecewise-linear tilt schedule lookup, clamped at the table ends."""
    pts = sorted(table)
    if speed <= pts[0][0]:
        return pts[0][1]
    if speed >= pts[-1][0]:
        return pts[-1][1]
    for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
        if x0 <= speed <= x1:
            return y0 + (y1 - y0) * (speed - x0) / (x1 - x0)
    return pts[-1][1]  # unreachable


@dataclass
class FrameSelector:
    """Stateful regime selection: hysteresis plus the pitch-axis filter.

    One instance per controller; calls must be sequential in time.
    """

    params: AircraftParams
    config: FrameConfig = field(default_factory=FrameConfig)
    dt: float = 0.004

    def __post_init__(self):
        self._low_regime = True
        self._i_d_filt: Optional[np.ndarray] = None
        self.fallback_count = 0  # high-speed singularities handled per run

    def _filtered_i_d(self, i_current: np.ndarray, heading_ref) -> np.ndarray:
        source = i_current if heading_ref is None else heading_ref
        raw = lowspeed_heading_axis(self.config.theta_d, source)
        if self._i_d_filt is None:
            self._i_d_filt = raw
        else:
            gain = min(1.0, self.dt / self.config.id_filter_tau)
            y = self._i_d_filt + gain * (raw - self._i_d_filt)
            self._i_d_filt = unit(y)
        return self._i_d_filt

    def _update_regime(self, speed: float) -> bool:
        h = self.config.regime_hysteresis
        if self._low_regime and speed > self.config.sigma_m + h:
            self._low_regime = False
        elif not self._low_regime and speed < self.config.sigma_m - h:
            self._low_regime = True
        return self._low_regime

    def select(
        self,
        xi: np.ndarray,
        v_a_body: np.ndarray,
        R: np.ndarray,
        heading_ref: Optional[np.ndarray] = None,
    ) -> tuple[DesiredFrame, TiltThrust]:
        """Desired frame and thrust command for one control cycle.

        v_a_body is the (estimated) air velocity in body coordinates;
        xi is the inertial acceleration input.  heading_ref, when given,
        anchors the low-speed pitch-reference axis to a commanded track
        direction instead of the current (free-floating) body heading.
        """
        cfg = self.config
        v_a = R @ v_a_body
        speed = norm(v_a)
        triple = accel_triple(xi, v_a, self.params)
        i_d = self._filtered_i_d(R[:, 0], heading_ref)
        low = frame_lowspeed(
            cfg.theta_d, R[:, 0], triple.a, v_a, eps=cfg.eps_jd, sigma=cfg.sigma_low, i_d=i_d
        )

        if self._update_regime(speed):
            tt = tilt_thrust(triple.d, triple.e, low.i_d, low.k_bar)
            return low, tt

        alpha_l = low.alpha
        if cfg.policy == "min_thrust":
            alpha_h = alpha_min_thrust(triple.a, v_a, self.params)
        else:
            alpha_h = alpha_from_tilt(
                scheduled_tilt(speed, cfg.tilt_table), triple.a, v_a, self.params
            )
        alpha, lam = blend_alpha(speed, alpha_l, alpha_h, cfg.sigma_m, cfg.sigma_M)
        try:
            frame = frame_highspeed(triple.a, v_a, alpha)
        except FrameSingularityError:
            # Airflow momentarily aligned with the demand: hold the
            # low-speed frame for this cycle.
            self.fallback_count += 1
            tt = tilt_thrust(triple.d, triple.e, low.i_d, low.k_bar)
            return low, tt
        frame.regime = TRANSITION if lam > 0.0 else HIGH
        frame.lambda_val = lam
        tt = tilt_thrust(triple.d, triple.e, frame.i_bar, frame.k_bar)
        return frame, tt
