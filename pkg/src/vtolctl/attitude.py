"""Desired angular velocity and the torque law.

The attitude loop steers the body axes onto the desired frame with
cross-product error terms plus the feed-forward rate of the desired
frame itself.  Error terms are formed in inertial coordinates and
mapped to body coordinates at the end, so the expressions never mix
frames.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .airframe import AircraftParams
from .frames import LOW, DesiredFrame
from .geom import cross, norm

# Lower bound on every stabilizing gain.
GAIN_FLOOR = 0.05


@dataclass(frozen=True)
class RateGains:
    """Axis-alignment gains [1/s] and the torque-loop gain diagonal."""

    k_i: float = 4.0
    k_j: float = 4.0
    k_k: float = 4.0
    k_gamma: np.ndarray = field(default_factory=lambda: np.array([20.0, 20.0, 15.0]))

    def __post_init__(self):
        object.__setattr__(self, "k_gamma", np.asarray(self.k_gamma, dtype=float))
        if min(self.k_i, self.k_j, self.k_k) <= GAIN_FLOOR:
            raise ValueError(f"axis gains must exceed {GAIN_FLOOR}")
        if self.k_gamma.shape != (3,) or self.k_gamma.min() <= GAIN_FLOOR:
            raise ValueError(f"k_gamma must be 3 positive entries > {GAIN_FLOOR}")


@dataclass(frozen=True)
class FrameRate:
    """Angular velocity of the desired frame, inertial coordinates."""

    omega_bar: np.ndarray
    valid: bool


class FrameRateEstimator:
    """Filtered finite-difference estimate of the desired-frame rate.

    The axis derivatives are differenced between successive samples and
    first-order low-passed (tau = 0.05 s by default), then composed into
    a frame rate: the vertical-axis rate plus the spin component about
    it taken from the longitudinal axis (high speed) or the lateral axis
    (low speed).  A regime change between samples invalidates one cycle
    and resets the filters.
    """

    def __init__(self, tau: float = 0.05):
        self.tau = tau
        self._prev: Optional[DesiredFrame] = None
        self._d_first = np.zeros(3)  # filtered derivative of i_bar or j_bar
        self._d_k = np.zeros(3)

    def reset(self) -> None:
        self._prev = None
        self._d_first[:] = 0.0
        self._d_k[:] = 0.0

    def update(self, frame: DesiredFrame, dt: float) -> FrameRate:
        if dt <= 0.0:
            raise ValueError("dt must be positive")
        prev = self._prev
        self._prev = frame
        if prev is None or prev.regime != frame.regime:
            self._d_first[:] = 0.0
            self._d_k[:] = 0.0
            return FrameRate(omega_bar=np.zeros(3), valid=False)

        gain = min(1.0, dt / self.tau)
        low = frame.regime == LOW
        if low:
            first_now, first_prev = frame.j_bar, prev.j_bar
        else:
            first_now, first_prev = frame.i_bar, prev.i_bar
        self._d_first += gain * ((first_now - first_prev) / dt - self._d_first)
        self._d_k += gain * ((frame.k_bar - prev.k_bar) / dt - self._d_k)

        omega_k = cross(frame.k_bar, self._d_k)
        if low and norm(frame.j_bar) < 1e-9:
            # No airflow: only the vertical axis is meaningful.
            omega_bar = omega_k
        else:
            omega_first = cross(first_now, self._d_first)
            omega_bar = omega_k + float(np.dot(frame.k_bar, omega_first)) * frame.k_bar
        return FrameRate(omega_bar=omega_bar, valid=True)


def _rate_or_zero(rate: Optional[FrameRate]) -> np.ndarray:
    if rate is None or not rate.valid:
        return np.zeros(3)
    return rate.omega_bar


def omega_star_high(
    frame: DesiredFrame, R: np.ndarray, rate: Optional[FrameRate], gains: RateGains
) -> np.ndarray:
    """Desired body angular velocity, full three-axis alignment law."""
    w = _rate_or_zero(rate)
    w = (
        w
        + gains.k_i * cross(R[:, 0], frame.i_bar)
        + gains.k_j * cross(R[:, 1], frame.j_bar)
        + gains.k_k * cross(R[:, 2], frame.k_bar)
    )
    return R.T @ w


def omega_star_low(
    j_d: np.ndarray,
    k_bar: np.ndarray,
    R: np.ndarray,
    rate: Optional[FrameRate],
    gains: RateGains,
) -> np.ndarray:
    """Desired body angular velocity for hover / low airspeed.

    j_d is used unnormalized: its magnitude fades with the airflow, so
    the lateral alignment term fades with it and only the vertical axis
    is enforced at zero airspeed.
    """
    w = _rate_or_zero(rate)
    w = w + gains.k_j * cross(R[:, 1], j_d) + gains.k_k * cross(R[:, 2], k_bar)
    return R.T @ w


def torque(
    omega: np.ndarray,
    omega_star: np.ndarray,
    omega_star_prev: Optional[np.ndarray],
    dt: float,
    params: AircraftParams,
    gains: RateGains,
    mode: str = "simple",
) -> np.ndarray:
    """Body torque command driving omega to omega_star.

    mode "simple" is the plain high-gain law; mode "full" adds the
    gyroscopic cross term and a finite-difference feed-forward of the
    rate-command derivative.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    j = params.inertia
    out = -gains.k_gamma * (j @ (omega - omega_star))
    if mode == "full":
        out = out + cross(omega, j @ omega_star)
        if omega_star_prev is not None:
            out = out + j @ ((omega_star - omega_star_prev) / dt)
    elif mode != "simple":
        raise ValueError(f"unknown torque mode {mode!r}")
    return out
