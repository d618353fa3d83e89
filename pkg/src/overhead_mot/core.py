"""Shared domain types, configuration and sensor geometry."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, fields, replace
from typing import Any, List, Tuple

import numpy as np

TWO_PI = 2.0 * math.pi


def normalize_yaw(angle: float) -> float:
    """Wrap an angle into [-pi, pi)."""
    angle = float(angle)
    if not math.isfinite(angle):
        raise ValueError(f"yaw must be finite, got {angle!r}")
    if -math.pi <= angle < math.pi:
        return angle  # exact: no round trip through the modulo
    out = (angle + math.pi) % TWO_PI - math.pi
    # float modulo can land exactly on the excluded upper bound
    if out >= math.pi:
        out -= TWO_PI
    return out


class Variant(str, enum.Enum):
    AB3DMOT_STYLE = "AB3DMOT_STYLE"
    SIMPLETRACK_STYLE = "SIMPLETRACK_STYLE"

    @classmethod
    def parse(cls, value: "Variant | str") -> "Variant":
        if isinstance(value, cls):
            return value
        key = str(value).strip().upper()
        aliases = {"AB3DMOT": cls.AB3DMOT_STYLE, "SIMPLETRACK": cls.SIMPLETRACK_STYLE}
        if key in aliases:
            return aliases[key]
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown tracker variant {value!r}") from None


class ClassId(str, enum.Enum):
    PERSON = "person"


class TrackStatus(enum.Enum):
    TENTATIVE = "tentative"
    CONFIRMED = "confirmed"
    DEAD = "dead"


@dataclass(frozen=True)
class OrientedBox3D:
    """3D box in the LiDAR frame.

    ``dx`` is the extent along the yaw heading, ``dy`` the lateral extent and
    ``dz`` the vertical extent. Yaw is measured about +z from +x and is stored
    wrapped to [-pi, pi).
    """

    cx: float
    cy: float
    cz: float
    dx: float
    dy: float
    dz: float
    yaw: float = 0.0

    def __post_init__(self):
        for name in ("cx", "cy", "cz", "dx", "dy", "dz", "yaw"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)
        for name in ("dx", "dy", "dz"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)!r}")
        object.__setattr__(self, "yaw", normalize_yaw(self.yaw))

    @property
    def center(self) -> np.ndarray:
        return np.array([self.cx, self.cy, self.cz])

    @property
    def extents(self) -> np.ndarray:
        return np.array([self.dx, self.dy, self.dz])

    def as_array(self) -> np.ndarray:
        """``[cx, cy, cz, dx, dy, dz, yaw]``"""
        return np.array([self.cx, self.cy, self.cz, self.dx, self.dy, self.dz, self.yaw])

    @classmethod
    def from_array(cls, values) -> "OrientedBox3D":
        v = [float(x) for x in values]
        if len(v) != 7:
            raise ValueError(f"expected 7 box parameters, got {len(v)}")
        return cls(*v)

    def with_center(self, center) -> "OrientedBox3D":
        cx, cy, cz = (float(c) for c in center)
        return replace(self, cx=cx, cy=cy, cz=cz)


@dataclass(frozen=True)
class Detection:
    box: OrientedBox3D
    score: float = 1.0
    class_id: ClassId = ClassId.PERSON

    def __post_init__(self):
        score = float(self.score)
        if not (0.0 <= score <= 1.0):
            raise ValueError(f"score must be in [0, 1], got {score!r}")
        object.__setattr__(self, "score", score)
        if not isinstance(self.class_id, ClassId):
            object.__setattr__(self, "class_id", ClassId(str(self.class_id).lower()))


@dataclass
class Track:
    """Mutable per-identity tracker record."""

    id: int
    kf_state: Any  # motion.KalmanState; kept untyped to avoid an import cycle
    box: OrientedBox3D
    hits: int = 1
    consecutive_misses: int = 0
    status: TrackStatus = TrackStatus.TENTATIVE
    last_score: float = 1.0
    class_id: ClassId = ClassId.PERSON


@dataclass(frozen=True)
class FrameDetections:
    frame_index: int
    timestamp: float = 0.0
    detections: Tuple[Detection, ...] = ()

    def __post_init__(self):
        if int(self.frame_index) < 0:
            raise ValueError("frame_index must be non-negative")
        object.__setattr__(self, "frame_index", int(self.frame_index))
        object.__setattr__(self, "timestamp", float(self.timestamp))
        object.__setattr__(self, "detections", tuple(self.detections))

    def __len__(self) -> int:
        return len(self.detections)

    def with_detections(self, detections) -> "FrameDetections":
        return replace(self, detections=tuple(detections))


@dataclass(frozen=True)
class SequenceClip:
    clip_id: str
    frames: Tuple[FrameDetections, ...] = ()
    rate_hz: float = 3.0

    def __post_init__(self):
        frames = tuple(self.frames)
        object.__setattr__(self, "frames", frames)
        if not self.rate_hz > 0:
            raise ValueError("rate_hz must be positive")
        for prev, cur in zip(frames, frames[1:]):
            if cur.frame_index <= prev.frame_index:
                raise ValueError(
                    f"frame indices must be strictly increasing "
                    f"({prev.frame_index} then {cur.frame_index})"
                )
            if cur.timestamp < prev.timestamp:
                raise ValueError("timestamps must be monotone within a clip")

    def __len__(self) -> int:
        return len(self.frames)

    @classmethod
    def from_boxes(
        cls,
        per_frame: List[List[Detection]],
        clip_id: str = "clip",
        rate_hz: float = 3.0,
    ) -> "SequenceClip":
        """Build a clip with frame indices 0..n-1 and timestamps ``i / rate_hz``."""
        frames = [
            FrameDetections(i, i / rate_hz, tuple(dets)) for i, dets in enumerate(per_frame)
        ]
        return cls(clip_id, tuple(frames), rate_hz)

    def timestamps_consistent(self, tol: float = 1e-3) -> bool:
        if not self.frames:
            return True
        t0 = self.frames[0].timestamp
        i0 = self.frames[0].frame_index
        return all(
            abs(f.timestamp - t0 - (f.frame_index - i0) / self.rate_hz) <= tol for f in self.frames
        )


@dataclass(frozen=True)
class SensorGeometry:
    mount_height: float = 2.94
    default_person_extent: Tuple[float, float, float] = (0.8, 0.6, 1.73)

    def __post_init__(self):
        if not self.mount_height > 0:
            raise ValueError("mount_height must be positive")

    def person_box(self, cx: float, cy: float, yaw: float = 0.0) -> OrientedBox3D:
        """A default-sized person standing on the floor, in sensor coordinates."""
        dx, dy, dz = self.default_person_extent
        return OrientedBox3D(cx, cy, dz / 2.0 - self.mount_height, dx, dy, dz, yaw)


CHI2_95_3DOF = 9.4877


@dataclass(frozen=True)
class TrackerConfig:
    variant: Variant = Variant.AB3DMOT_STYLE
    score_threshold: float = 0.45
    nms_iou_threshold: float = 0.30
    roi_radius: float = 4.5
    min_hits: int = 2
    max_age: int = 3
    ema_alpha: float = 0.5
    mahalanobis_gate: float = CHI2_95_3DOF
    association_iou_min: float = 0.01
    emit_coasted: bool = False
    # Kalman noise model; see motion.MotionNoise
    q_pos: float = 0.01
    q_vel: float = 0.01
    q_size: float = 1e-4
    q_yaw: float = 1e-4
    r_pos: float = 0.01
    r_size: float = 0.01
    r_yaw: float = 0.04
    p0_measured: float = 1.0
    p0_velocity: float = 10.0

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant.parse(self.variant))
        if not 0.0 <= self.score_threshold <= 1.0:
            raise ValueError("score_threshold must be in [0, 1]")
        if not 0.0 < self.nms_iou_threshold <= 1.0:
            raise ValueError("nms_iou_threshold must be in (0, 1]")
        if not self.roi_radius > 0:
            raise ValueError("roi_radius must be positive")
        if int(self.min_hits) < 1 or int(self.max_age) < 0:
            raise ValueError("min_hits must be >= 1 and max_age >= 0")
        if not 0.0 < self.ema_alpha <= 1.0:
            raise ValueError("ema_alpha must be in (0, 1]")
        if not self.mahalanobis_gate > 0:
            raise ValueError("mahalanobis_gate must be positive")
        if not 0.0 <= self.association_iou_min <= 1.0:
            raise ValueError("association_iou_min must be in [0, 1]")
        for name in ("q_pos", "q_vel", "q_size", "q_yaw", "r_pos", "r_size", "r_yaw"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if not (self.p0_measured > 0 and self.p0_velocity > 0):
            raise ValueError("initial covariance terms must be positive")

    def motion_noise(self):
        from .motion import MotionNoise

        return MotionNoise(
            q_pos=self.q_pos,
            q_vel=self.q_vel,
            q_size=self.q_size,
            q_yaw=self.q_yaw,
            r_pos=self.r_pos,
            r_size=self.r_size,
            r_yaw=self.r_yaw,
            p0_measured=self.p0_measured,
            p0_velocity=self.p0_velocity,
        )

    def to_text(self) -> str:
        return _dump_key_values(self)

    @classmethod
    def from_text(cls, text: str) -> "TrackerConfig":
        values = _parse_key_values(text, cls)
        base = default_config(values.get("variant", Variant.AB3DMOT_STYLE))
        return replace(base, **values)


@dataclass(frozen=True)
class EvalConfig:
    tp_iou_min: float = 0.10
    radii: Tuple[float, ...] = (1.0, 2.0, 3.0, 4.0, 5.0)
    mot_iou_thresholds: Tuple[float, ...] = (0.3, 0.1)

    def __post_init__(self):
        radii = tuple(float(r) for r in self.radii)
        thresholds = tuple(float(t) for t in self.mot_iou_thresholds)
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "mot_iou_thresholds", thresholds)
        if not radii or any(b <= a for a, b in zip(radii, radii[1:])):
            raise ValueError("radii must be non-empty and strictly increasing")
        for t in thresholds + (self.tp_iou_min,):
            if not 0.0 < t <= 1.0:
                raise ValueError(f"IoU threshold {t} outside (0, 1]")

    def to_text(self) -> str:
        return _dump_key_values(self)

    @classmethod
    def from_text(cls, text: str) -> "EvalConfig":
        return cls(**_parse_key_values(text, cls))


def default_config(variant: "Variant | str" = Variant.AB3DMOT_STYLE) -> TrackerConfig:
    """Documented defaults; the association threshold depends on the variant."""
    variant = Variant.parse(variant)
    if variant is Variant.SIMPLETRACK_STYLE:
        return TrackerConfig(variant=variant, association_iou_min=0.10)
    return TrackerConfig(variant=variant, association_iou_min=0.01)


# -- key = value config files ----------------------------------------------


def _format_value(value) -> str:
    if isinstance(value, enum.Enum):
        return str(value.value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(_format_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _dump_key_values(obj) -> str:
    return "".join(f"{f.name} = {_format_value(getattr(obj, f.name))}\n" for f in fields(obj))


def _coerce(raw: str, default):
    if isinstance(default, enum.Enum):
        return raw
    if isinstance(default, bool):
        low = raw.lower()
        if low in ("true", "1", "yes", "on"):
            return True
        if low in ("false", "0", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    if isinstance(default, tuple):
        return tuple(float(p) for p in raw.split(",") if p.strip())
    return raw


def _parse_key_values(text: str, cls) -> dict:
    defaults = {f.name: getattr(cls(), f.name) for f in fields(cls)}
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value'")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in defaults:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        try:
            out[key] = _coerce(raw, defaults[key])
        except ValueError as exc:
            raise ValueError(f"line {lineno}: bad value for {key}: {exc}") from None
    return out
