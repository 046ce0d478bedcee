import math

import numpy as np
import pytest

from vtolctl.attitude import (
    FrameRate,
    FrameRateEstimator,
    RateGains,
    omega_star_high,
    omega_star_low,
    torque,
)
from vtolctl.frames import HIGH, DesiredFrame
from vtolctl.geom import cross, rotation_about, vec3
from vtolctl.stability import haar_rotation, identity_frame


def spinning_frame(t, rate):
    rot = rotation_about(vec3(0, 0, 1), rate * t)
    return DesiredFrame(
        i_bar=rot @ vec3(1, 0, 0),
        j_bar=rot @ vec3(0, 1, 0),
        k_bar=vec3(0, 0, 1),
        alpha=0.0,
        regime=HIGH,
        lambda_val=0.0,
    )


def low_frame(j_raw):
    f = identity_frame()
    f.j_raw = np.asarray(j_raw, dtype=float)
    return f


class TestRateGains:
    def test_floor_enforced(self):
        with pytest.raises(ValueError):
            RateGains(k_j=0.01)
        with pytest.raises(ValueError):
            RateGains(k_gamma=[10.0, 0.0, 10.0])

    def test_defaults(self):
        g = RateGains()
        assert g.k_i == g.k_j == g.k_k == 4.0
        assert np.allclose(g.k_gamma, [20.0, 20.0, 15.0])


class TestFrameRateEstimator:
    def test_constant_frame_gives_zero(self):
        est = FrameRateEstimator()
        f = identity_frame()
        est.update(f, 0.004)
        for _ in range(100):
            rate = est.update(f, 0.004)
        assert rate.valid
        assert np.abs(rate.omega_bar).max() < 1e-12

    def test_rotating_frame_rate_recovered(self):
        # frame spinning at 0.1 rad/s about the vertical axis
        est = FrameRateEstimator()
        dt = 0.004
        rate = None
        for i in range(500):  # 2 s, well past the 0.05 s filter
            rate = est.update(spinning_frame(i * dt, 0.1), dt)
        assert rate.valid
        assert abs(np.linalg.norm(rate.omega_bar) - 0.1) < 0.005
        assert abs(rate.omega_bar[2] - 0.1) < 0.005

    def test_regime_change_invalidates(self):
        est = FrameRateEstimator()
        f_high = identity_frame()
        f_high.regime = HIGH
        f_low = identity_frame()
        est.update(f_high, 0.004)
        rate = est.update(f_high, 0.004)
        assert rate.valid
        rate = est.update(f_low, 0.004)
        assert not rate.valid
        assert np.array_equal(rate.omega_bar, np.zeros(3))

    def test_first_sample_invalid(self):
        est = FrameRateEstimator()
        rate = est.update(identity_frame(), 0.004)
        assert not rate.valid


class TestOmegaStarHigh:
    def test_aligned_zero(self):
        f = identity_frame()
        out = omega_star_high(f, np.eye(3), None, RateGains())
        assert np.allclose(out, 0.0)

    def test_quarter_turn_about_k(self):
        # body rotated +90 deg about k_bar: the two planar error terms each
        # contribute one unit about -k
        f = identity_frame()
        R = rotation_about(vec3(0, 0, 1), math.pi / 2)
        g = RateGains(k_i=1.0, k_j=1.0, k_k=7.0)
        out = omega_star_high(f, R, None, g)
        out_inertial = R @ out
        assert np.allclose(out_inertial, [0.0, 0.0, -2.0], atol=1e-12)

    def test_tracking_gives_feedforward(self):
        f = identity_frame()
        rate = FrameRate(omega_bar=vec3(0.0, 0.0, 0.3), valid=True)
        out = omega_star_high(f, np.eye(3), rate, RateGains())
        assert np.allclose(out, [0.0, 0.0, 0.3])

    def test_equivariance(self, rng):
        # rotating frame and body together rotates the inertial command
        g = RateGains()
        f = identity_frame()
        R = haar_rotation(rng)
        q = haar_rotation(rng)
        out1 = omega_star_high(f, R, None, g)
        f2 = DesiredFrame(
            i_bar=q @ f.i_bar, j_bar=q @ f.j_bar, k_bar=q @ f.k_bar,
            alpha=0.0, regime=HIGH, lambda_val=0.0,
        )
        out2 = omega_star_high(f2, q @ R, None, g)
        assert np.allclose((q @ R) @ out2, q @ (R @ out1), atol=1e-12)


class TestOmegaStarLow:
    def test_hover_no_airflow(self):
        f = low_frame([0.0, 0.0, 0.0])
        out = omega_star_low(f.j_raw, f.k_bar, np.eye(3), None, RateGains())
        assert np.allclose(out, 0.0)

    def test_antipodal_k_is_equilibrium(self):
        # k exactly opposite k_bar: the cross product vanishes; with no
        # lateral target the command is pure feedforward (zero here)
        R = rotation_about(vec3(1, 0, 0), math.pi)
        out = omega_star_low(np.zeros(3), vec3(0, 0, 1), R, None, RateGains())
        assert np.allclose(out, 0.0, atol=1e-12)

    def test_perpendicular_k_correction(self):
        R = rotation_about(vec3(1, 0, 0), math.pi / 2)
        g = RateGains(k_j=1.0, k_k=2.0)
        out = omega_star_low(np.zeros(3), vec3(0, 0, 1), R, None, g)
        k_body = R[:, 2]
        expected_inertial = 2.0 * cross(k_body, vec3(0, 0, 1))
        assert np.allclose(R @ out, expected_inertial, atol=1e-12)
        assert abs(np.linalg.norm(out) - 2.0) < 1e-12

    def test_unnormalized_lateral_target_scales(self):
        R = rotation_about(vec3(0, 0, 1), 0.3)
        g = RateGains(k_j=3.0, k_k=4.0)
        full = omega_star_low(vec3(0, 1, 0), vec3(0, 0, 1), R, None, g)
        half = omega_star_low(vec3(0, 0.5, 0), vec3(0, 0, 1), R, None, g)
        assert np.allclose(half, 0.5 * full, atol=1e-12)

    def test_high_law_reduces_to_low(self, rng):
        # with k_i -> 0 (structurally removed) and unit lateral target the
        # two laws agree term by term
        R = haar_rotation(rng)
        f = identity_frame()
        g = RateGains(k_i=0.0501, k_j=2.0, k_k=3.0)
        high = omega_star_high(f, R, None, g)
        low = omega_star_low(f.j_bar, f.k_bar, R, None, g)
        diff_inertial = R @ (high - low)
        assert np.allclose(diff_inertial, 0.0501 * cross(R[:, 0], f.i_bar), atol=1e-12)


class TestTorque:
    def test_zero_error_simple(self, params):
        w = vec3(0.1, -0.2, 0.05)
        out = torque(w, w, None, 0.004, params, RateGains(), mode="simple")
        assert np.allclose(out, 0.0)

    def test_scalar_evaluation(self, params):
        g = RateGains(k_gamma=[10.0, 10.0, 10.0])
        out = torque(vec3(1, 0, 0), np.zeros(3), None, 0.004, params, g, mode="simple")
        assert np.allclose(out, [-10.0 * 0.02, 0.0, 0.0])

    def test_full_mode_gyroscopic(self, params):
        w_star = vec3(0.3, -0.1, 0.2)
        out = torque(w_star, w_star, w_star, 0.004, params, RateGains(), mode="full")
        expected = cross(w_star, params.inertia @ w_star)
        assert np.allclose(out, expected, atol=1e-15)

    def test_full_mode_feedforward(self, params):
        w_star = vec3(0.1, 0.0, 0.0)
        prev = vec3(0.0, 0.0, 0.0)
        out = torque(w_star, w_star, prev, 0.01, params, RateGains(), mode="full")
        ff = params.inertia @ ((w_star - prev) / 0.01)
        assert np.allclose(out - cross(w_star, params.inertia @ w_star), ff, atol=1e-15)

    def test_unknown_mode(self, params):
        with pytest.raises(ValueError):
            torque(np.zeros(3), np.zeros(3), None, 0.004, params, RateGains(), mode="fancy")
