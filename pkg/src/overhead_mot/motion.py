"""Constant-velocity Kalman filters for the two tracker variants.

``CENTER6`` tracks ``[cx, cy, cz, vx, vy, vz]`` and is measured by the box
center only; box size and yaw are smoothed outside the filter (see
:func:`ema_smooth`). ``FULLBOX10`` tracks
``[cx, cy, cz, dx, dy, dz, yaw, vx, vy, vz]`` and is measured by the full box.
Velocities are in meters per frame.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .core import Detection, OrientedBox3D, normalize_yaw


class StateLayout(enum.Enum):
    CENTER6 = 6
    FULLBOX10 = 10

    @property
    def dim_z(self) -> int:
        return 3 if self is StateLayout.CENTER6 else 7

    @property
    def velocity_slice(self) -> slice:
        return slice(3, 6) if self is StateLayout.CENTER6 else slice(7, 10)


CENTER6 = StateLayout.CENTER6
FULLBOX10 = StateLayout.FULLBOX10

YAW_INDEX = 6


class SingularInnovationError(np.linalg.LinAlgError):
    """Innovation covariance cannot be inverted; the noise model is misconfigured."""


@dataclass(frozen=True)
class MotionNoise:
    q_pos: float = 0.01
    q_vel: float = 0.01
    q_size: float = 1e-4
    q_yaw: float = 1e-4
    r_pos: float = 0.01
    r_size: float = 0.01
    r_yaw: float = 0.04
    p0_measured: float = 1.0
    p0_velocity: float = 10.0

    def process(self, layout: StateLayout) -> np.ndarray:
        if layout is CENTER6:
            diag = [self.q_pos] * 3 + [self.q_vel] * 3
        else:
            diag = [self.q_pos] * 3 + [self.q_size] * 3 + [self.q_yaw] + [self.q_vel] * 3
        return np.diag(diag)

    def measurement(self, layout: StateLayout) -> np.ndarray:
        if layout is CENTER6:
            diag = [self.r_pos] * 3
        else:
            diag = [self.r_pos] * 3 + [self.r_size] * 3 + [self.r_yaw]
        return np.diag(diag)

    def initial(self, layout: StateLayout) -> np.ndarray:
        n_meas = layout.dim_z
        diag = [self.p0_measured] * n_meas + [self.p0_velocity] * 3
        return np.diag(diag)


DEFAULT_NOISE = MotionNoise()


@lru_cache(maxsize=None)
def _measurement_matrix(layout: StateLayout) -> np.ndarray:
    H = np.zeros((layout.dim_z, layout.value))
    H[:, : layout.dim_z] = np.eye(layout.dim_z)
    H.setflags(write=False)
    return H


def transition_matrix(layout: StateLayout, dt: float = 1.0) -> np.ndarray:
    F = np.eye(layout.value)
    vel = layout.velocity_slice
    F[0:3, vel] = dt * np.eye(3)
    return F


@dataclass(frozen=True)
class KalmanState:
    layout: StateLayout
    mean: np.ndarray
    covariance: np.ndarray

    @property
    def variant(self) -> StateLayout:
        return self.layout

    @property
    def position(self) -> np.ndarray:
        return self.mean[0:3]

    @property
    def velocity(self) -> np.ndarray:
        return self.mean[self.layout.velocity_slice]

    def measurement_mean(self) -> np.ndarray:
        return self.mean[: self.layout.dim_z]

    def innovation_covariance(self, noise: MotionNoise = DEFAULT_NOISE) -> np.ndarray:
        H = _measurement_matrix(self.layout)
        return H @ self.covariance @ H.T + noise.measurement(self.layout)

    def to_box(self, template: OrientedBox3D) -> OrientedBox3D:
        """Box at the filtered center; FULLBOX10 also supplies size and yaw."""
        if self.layout is CENTER6:
            return template.with_center(self.position)
        m = self.mean
        return OrientedBox3D(m[0], m[1], m[2], max(m[3], 1e-6), max(m[4], 1e-6), max(m[5], 1e-6), m[6])


def _symmetrize(P: np.ndarray) -> np.ndarray:
    return 0.5 * (P + P.T)


def kf_init(det: Detection, layout: StateLayout, noise: MotionNoise = DEFAULT_NOISE) -> KalmanState:
    box = det.box
    mean = np.zeros(layout.value)
    if layout is CENTER6:
        mean[0:3] = box.center
    else:
        mean[0:7] = box.as_array()
    return KalmanState(layout, mean, noise.initial(layout))


def kf_predict(s: KalmanState, dt: float = 1.0, noise: MotionNoise = DEFAULT_NOISE) -> KalmanState:
    if not dt > 0:
        raise ValueError("dt must be positive")
    F = transition_matrix(s.layout, dt)
    mean = F @ s.mean
    if s.layout is FULLBOX10:
        mean[YAW_INDEX] = normalize_yaw(mean[YAW_INDEX])
    cov = _symmetrize(F @ s.covariance @ F.T + noise.process(s.layout))
    return KalmanState(s.layout, mean, cov)


def yaw_residual(predicted_yaw: float, measured_yaw: float) -> float:
    """Yaw innovation in [-pi/2, pi/2], treating a flipped box as the same heading."""
    r = normalize_yaw(measured_yaw - predicted_yaw)
    if abs(r) > math.pi / 2:
        r = normalize_yaw(measured_yaw + math.pi - predicted_yaw)
    return r


def innovation(s: KalmanState, det: Detection) -> np.ndarray:
    if s.layout is CENTER6:
        return det.box.center - s.position
    nu = det.box.as_array() - s.mean[0:7]
    nu[YAW_INDEX] = yaw_residual(s.mean[YAW_INDEX], det.box.yaw)
    return nu


def kf_update(s: KalmanState, det: Detection, noise: MotionNoise = DEFAULT_NOISE) -> KalmanState:
    H = _measurement_matrix(s.layout)
    R = noise.measurement(s.layout)
    P = s.covariance
    S = H @ P @ H.T + R
    try:
        if not np.all(np.isfinite(S)):
            raise np.linalg.LinAlgError
        L = np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        raise SingularInnovationError("innovation covariance is singular; check the noise model") from None
    if np.min(np.diag(L)) <= 1e-12 * np.max(np.diag(L)):
        raise SingularInnovationError("innovation covariance is numerically singular")
    K = np.linalg.solve(S, H @ P).T
    mean = s.mean + K @ innovation(s, det)
    if s.layout is FULLBOX10:
        mean[YAW_INDEX] = normalize_yaw(mean[YAW_INDEX])
    # Joseph form keeps the posterior symmetric PSD
    I_KH = np.eye(s.layout.value) - K @ H
    cov = _symmetrize(I_KH @ P @ I_KH.T + K @ R @ K.T)
    return KalmanState(s.layout, mean, cov)


def ema_smooth(track_box: OrientedBox3D, det_box: OrientedBox3D, alpha: float) -> OrientedBox3D:
    """Blend extents and yaw toward the detection; the center is left to the filter."""
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must be in (0, 1]")
    if alpha == 1.0:
        return replace(track_box, dx=det_box.dx, dy=det_box.dy, dz=det_box.dz, yaw=det_box.yaw)
    ext = alpha * det_box.extents + (1.0 - alpha) * track_box.extents
    yaw = track_box.yaw + alpha * yaw_residual(track_box.yaw, det_box.yaw)
    return replace(track_box, dx=ext[0], dy=ext[1], dz=ext[2], yaw=yaw)
