"""Air-velocity estimation from a single longitudinal pitot measurement.

Small airframes carry one pitot tube at best, so only the body-x
component of the air velocity is measured.  Assuming the wind blows
essentially horizontally, the vertical component follows geometrically
from the inertial velocity and the attitude; the lateral component is
reconstructed by a scalar observer that mimics the lateral force
balance with a stabilizing leak term in place of the (unknown) lateral
damping.  Below the pitot validity threshold the whole estimate is
reported as the null vector and the caller is expected to fall back to
the hover control law.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FrameSingularityError


@dataclass(frozen=True)
class EstimatorConfig:
    pitot_on: float = 2.0        # validity threshold, rising [m/s]
    pitot_off: float = 1.5       # validity threshold, falling [m/s]
    k_va2: float = 1.0           # lateral observer gain [1/s]
    g0: float = 9.81
    min_vertical_cos: float = 0.05  # |k0 . k| floor for the vertical formula

    def __post_init__(self):
        if self.pitot_off > self.pitot_on:
            raise ValueError("pitot_off must not exceed pitot_on")
        if self.k_va2 <= 0.0:
            raise ValueError("k_va2 must be positive")


@dataclass(frozen=True)
class AirVelEstimate:
    """Body-frame air velocity estimate and validity flag."""

    v_a_hat: np.ndarray
    pitot_valid: bool
    v_a2_state: float


def estimate_va3(v: np.ndarray, R: np.ndarray, v_a1: float, min_cos: float = 0.05) -> float:
    """Vertical air-velocity component under the horizontal-wind assumption.

    v is the inertial velocity; v_a1 the measured longitudinal airflow.
    Singular (raises) when the body vertical axis is nearly horizontal.
    """
    kk = R[2, 2]
    if abs(kk) <= min_cos:
        raise FrameSingularityError("attitude too close to vertical for airflow estimate")
    return (v[2] - v_a1 * R[2, 0]) / kk


def step_va2(
    state: float,
    v_a1: float,
    va3_hat: float,
    omega: np.ndarray,
    R: np.ndarray,
    g0: float,
    k_gain: float,
    dt: float,
) -> float:
    """One forward-Euler step of the lateral airflow observer."""
    if dt <= 0.0 or k_gain <= 0.0:
        raise ValueError("dt and k_gain must be positive")
    g_j = g0 * R[2, 1]
    rate = g_j + (va3_hat * omega[0] - v_a1 * omega[2]) - k_gain * state
    return state + dt * rate


class AirspeedEstimator:
    """Sequential pitot-based air velocity estimator (one per vehicle)."""

    def __init__(self, config: EstimatorConfig | None = None):
        self.config = config or EstimatorConfig()
        self._valid = False
        self._va2 = 0.0

    @property
    def valid(self) -> bool:
        return self._valid

    def reset(self) -> None:
        self._valid = False
        self._va2 = 0.0

    def update(
        self, v: np.ndarray, R: np.ndarray, omega: np.ndarray, pitot: float, dt: float
    ) -> AirVelEstimate:
        """Advance the estimator one sample.

        Validity switches with hysteresis (on at pitot >= pitot_on, off
        below pitot_off) to avoid chattering.  While invalid the
        estimate is exactly zero and the lateral state is reset.
        """
        cfg = self.config
        if self._valid:
            self._valid = pitot >= cfg.pitot_off
        else:
            self._valid = pitot >= cfg.pitot_on
        if not self._valid:
            self._va2 = 0.0
            return AirVelEstimate(v_a_hat=np.zeros(3), pitot_valid=False, v_a2_state=0.0)

        va3 = estimate_va3(v, R, pitot, cfg.min_vertical_cos)
        self._va2 = step_va2(self._va2, pitot, va3, omega, R, cfg.g0, cfg.k_va2, dt)
        return AirVelEstimate(
            v_a_hat=np.array([pitot, self._va2, va3]),
            pitot_valid=True,
            v_a2_state=self._va2,
        )
