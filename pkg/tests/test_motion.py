import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from overhead_mot import (
    CENTER6,
    FULLBOX10,
    Detection,
    KalmanState,
    MotionNoise,
    OrientedBox3D,
    SingularInnovationError,
    ema_smooth,
    kf_init,
    kf_predict,
    kf_update,
    yaw_residual,
)
from overhead_mot.motion import transition_matrix


def det(cx=0.0, cy=0.0, cz=0.0, dx=0.8, dy=0.6, dz=1.7, yaw=0.0):
    return Detection(OrientedBox3D(cx, cy, cz, dx, dy, dz, yaw))


@pytest.mark.parametrize(
    "pred, meas, expected",
    [(0.0, math.pi, 0.0), (0.1, -0.1, -0.2), (3.0, -3.0, 2 * math.pi - 6.0), (0.0, 1.0, 1.0)],
)
def test_yaw_residual_examples(pred, meas, expected):
    assert yaw_residual(pred, meas) == pytest.approx(expected, abs=1e-12)


@given(st.floats(-10, 10), st.floats(-10, 10))
def test_yaw_residual_range(a, b):
    assert abs(yaw_residual(a, b)) <= math.pi / 2 + 1e-12


def test_init_center6():
    s = kf_init(det(1, 2, -2), CENTER6)
    np.testing.assert_array_equal(s.mean, [1, 2, -2, 0, 0, 0])
    np.testing.assert_array_equal(np.diag(s.covariance), [1, 1, 1, 10, 10, 10])


def test_init_fullbox10():
    s = kf_init(det(1, 2, -2, yaw=0.5), FULLBOX10)
    np.testing.assert_allclose(s.mean, [1, 2, -2, 0.8, 0.6, 1.7, 0.5, 0, 0, 0])
    assert s.covariance.shape == (10, 10)


def test_scalar_gain_half():
    # prior 0 with variance 1, measurement 1 with variance 1 -> posterior 0.5
    noise = MotionNoise(r_pos=1.0, p0_measured=1.0)
    s = kf_update(kf_init(det(), CENTER6, noise), det(cx=1.0), noise)
    assert s.mean[0] == pytest.approx(0.5)
    assert s.covariance[0, 0] == pytest.approx(0.5)


def test_predict_moves_by_velocity():
    s = kf_init(det(), CENTER6)
    s = KalmanState(CENTER6, np.array([0, 0, 0, 0.3, -0.1, 0.0]), s.covariance)
    out = kf_predict(s, 2.0)
    np.testing.assert_allclose(out.position, [0.6, -0.2, 0])
    with pytest.raises(ValueError):
        kf_predict(s, 0.0)


def test_transition_matrix_blocks():
    F = transition_matrix(FULLBOX10, 1.5)
    assert F[0, 7] == F[1, 8] == F[2, 9] == 1.5
    assert F[6, 6] == 1.0 and np.count_nonzero(F) == 13


def test_flipped_measurement_keeps_heading():
    s = kf_init(det(yaw=0.0), FULLBOX10)
    out = kf_update(s, det(yaw=math.pi))
    assert out.mean[6] == pytest.approx(0.0, abs=1e-12)


def test_yaw_stays_wrapped_near_pi():
    s = kf_init(det(yaw=3.1), FULLBOX10)
    out = kf_update(s, det(yaw=-3.1))
    assert -math.pi <= out.mean[6] < math.pi
    assert abs(abs(out.mean[6]) - math.pi) < 0.1


def test_singular_innovation_raises():
    noise = MotionNoise(r_pos=0.0)
    s = KalmanState(CENTER6, np.zeros(6), np.zeros((6, 6)))
    with pytest.raises(SingularInnovationError):
        kf_update(s, det(), noise)


def test_ema_alpha_one_copies_detection():
    track = OrientedBox3D(1, 1, 0, 1.0, 1.0, 2.0, 0.2)
    d = OrientedBox3D(5, 5, 0, 0.7, 0.5, 1.6, -0.4)
    out = ema_smooth(track, d, 1.0)
    assert (out.dx, out.dy, out.dz, out.yaw) == (0.7, 0.5, 1.6, -0.4)
    assert (out.cx, out.cy) == (1, 1)


def test_ema_half_blend_and_flip():
    track = OrientedBox3D(0, 0, 0, 1.0, 1.0, 2.0, 0.0)
    out = ema_smooth(track, OrientedBox3D(0, 0, 0, 0.6, 0.8, 1.0, 0.4), 0.5)
    assert (out.dx, out.dy, out.dz) == pytest.approx((0.8, 0.9, 1.5))
    assert out.yaw == pytest.approx(0.2)
    flipped = ema_smooth(track, OrientedBox3D(0, 0, 0, 1, 1, 2, math.pi - 0.2), 0.5)
    assert flipped.yaw == pytest.approx(-0.1)
    with pytest.raises(ValueError):
        ema_smooth(track, track, 0.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([CENTER6, FULLBOX10]))
def test_covariance_stays_psd(seed, layout):
    rng = np.random.default_rng(seed)
    s = kf_init(det(), layout)
    for _ in range(50):
        s = kf_predict(s)
        if rng.random() < 0.7:
            c = rng.normal(0, 3, 3)
            s = kf_update(s, det(*c, yaw=rng.uniform(-4, 4)))
        P = s.covariance
        assert np.array_equal(P, P.T)
        assert np.linalg.eigvalsh(P).min() >= -1e-9
