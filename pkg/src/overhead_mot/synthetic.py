"""Synthetic overhead scenes: people crossing the ROI on straight constant-velocity walks."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .core import Detection, SensorGeometry, SequenceClip
from .tracker import TrackOutput


_LINGER = 6


@dataclass(frozen=True)
class WalkerScene:
    detections: SequenceClip
    ground_truth: List[TrackOutput]
    labels: SequenceClip


@dataclass
class _Walker:
    person_id: int
    start_frame: int
    origin: np.ndarray  # position at start_frame
    velocity: np.ndarray  # meters per frame
    end_frame: int  # last frame inside the walk disk

    def position(self, frame: int) -> np.ndarray:
        return self.origin + self.velocity * (frame - self.start_frame)

    @property
    def yaw(self) -> float:
        return math.atan2(self.velocity[1], self.velocity[0])


def _exit_frame(origin: np.ndarray, velocity: np.ndarray, radius: float, start: int) -> int:
    # largest t >= 0 with |origin + v t| <= radius
    a = velocity @ velocity
    b = 2 * origin @ velocity
    c = origin @ origin - radius * radius
    t_out = (-b + math.sqrt(max(b * b - 4 * a * c, 0.0))) / (2 * a)
    return start + int(math.floor(t_out + 1e-9))


def _min_distance(a: _Walker, b: _Walker, linger: int = 0) -> float:
    # ``b`` is extrapolated ``linger`` frames past its exit, like a coasting track
    lo, hi = max(a.start_frame, b.start_frame), min(a.end_frame, b.end_frame + linger)
    if lo > hi:
        return math.inf
    d0 = a.position(lo) - b.position(lo)
    dv = a.velocity - b.velocity
    denom = dv @ dv
    t = 0.0 if denom == 0 else min(max(-(d0 @ dv) / denom, 0.0), float(hi - lo))
    return float(np.linalg.norm(d0 + dv * t))


def simulate_walkers(
    n_persons: int = 5,
    n_frames: int = 100,
    max_speed: float = 0.4,
    min_speed: float = 0.1,
    roi_radius: float = 4.5,
    center_noise: float = 0.05,
    drop_rate: float = 0.10,
    spurious_rate: float = 0.05,
    min_separation: float = 1.0,
    seed: int = 0,
    geometry: SensorGeometry = SensorGeometry(),
) -> WalkerScene:
    """Simulate ``n_persons`` people present in the ROI at every frame.

    Each person walks a straight line at constant velocity (meters per frame)
    and leaves when the line exits the ROI; a new person with a fresh id then
    enters from the boundary. Trajectories are rejection-sampled so no two
    people come closer than ``min_separation``. Detections get Gaussian center
    noise, a fraction ``drop_rate`` of true boxes is removed, and
    ``Binomial(n_persons, spurious_rate)`` false boxes with passing scores are
    added per frame.
    """
    rng = np.random.default_rng(seed)
    # margin keeps noisy detections inside the ROI filter
    walk_radius = roi_radius - 4 * center_noise - 0.05
    walkers: List[_Walker] = []
    next_id = 1

    def sample(frame: int, entering: bool) -> Optional[_Walker]:
        speed = rng.uniform(min_speed, max_speed)
        if entering:
            a = rng.uniform(-math.pi, math.pi)
            origin = 0.999 * walk_radius * np.array([math.cos(a), math.sin(a)])
            heading = a + math.pi + rng.uniform(-math.pi / 3, math.pi / 3)
        else:
            r = walk_radius * math.sqrt(rng.random())
            a = rng.uniform(-math.pi, math.pi)
            origin = r * np.array([math.cos(a), math.sin(a)])
            heading = rng.uniform(-math.pi, math.pi)
        velocity = speed * np.array([math.cos(heading), math.sin(heading)])
        w = _Walker(next_id, frame, origin, velocity, _exit_frame(origin, velocity, walk_radius, frame))
        return w if w.end_frame > frame else None

    for frame in range(n_frames):
        active = [w for w in walkers if w.start_frame <= frame <= w.end_frame]
        for _ in range(n_persons - len(active)):
            for _attempt in range(2000):
                cand = sample(frame, entering=frame > 0)
                if cand is None:
                    continue
                others = [w for w in walkers if w.end_frame + _LINGER >= frame]
                if all(_min_distance(cand, w, _LINGER) >= min_separation for w in others):
                    walkers.append(cand)
                    next_id += 1
                    break
            else:
                raise ValueError("could not place a walker; relax min_separation or n_persons")

    per_frame_dets: List[List[Detection]] = []
    per_frame_labels: List[List[Detection]] = []
    gt: List[TrackOutput] = []
    for frame in range(n_frames):
        dets, labels = [], []
        for w in walkers:
            if not w.start_frame <= frame <= w.end_frame:
                continue
            p = w.position(frame)
            box = geometry.person_box(p[0], p[1], w.yaw)
            gt.append(TrackOutput(frame, w.person_id, box, 1.0))
            labels.append(Detection(box, 1.0))
            if rng.random() < drop_rate:
                continue
            noisy = box.with_center(box.center + np.r_[rng.normal(0.0, center_noise, 2), 0.0])
            dets.append(Detection(noisy, float(rng.uniform(0.6, 1.0))))
        for _ in range(rng.binomial(n_persons, spurious_rate)):
            r = walk_radius * math.sqrt(rng.random())
            a = rng.uniform(-math.pi, math.pi)
            box = geometry.person_box(r * math.cos(a), r * math.sin(a), rng.uniform(-math.pi, math.pi))
            dets.append(Detection(box, float(rng.uniform(0.45, 0.9))))
        order = rng.permutation(len(dets))
        per_frame_dets.append([dets[i] for i in order])
        per_frame_labels.append(labels)

    return WalkerScene(
        SequenceClip.from_boxes(per_frame_dets, "synthetic-detections"),
        gt,
        SequenceClip.from_boxes(per_frame_labels, "synthetic-labels"),
    )
