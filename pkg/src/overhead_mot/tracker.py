"""Tracking-by-detection runtime for the AB3DMOT-style and SimpleTrack-style pipelines."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Dict, List, Optional

from .association import (
    Assignment,
    gate,
    hungarian_solve,
    iou_cost,
    mahalanobis_cost,
    prune_infeasible,
)
from .core import (
    ClassId,
    Detection,
    FrameDetections,
    OrientedBox3D,
    SequenceClip,
    Track,
    TrackerConfig,
    TrackStatus,
    Variant,
    default_config,
)
from .geometry import horizontal_radius, nms_rotated
from .motion import CENTER6, FULLBOX10, ema_smooth, kf_init, kf_predict, kf_update


@dataclass(frozen=True)
class TrackOutput:
    frame_index: int
    track_id: int
    box: OrientedBox3D
    score: float = 1.0
    class_id: ClassId = ClassId.PERSON


def filter_detections(frame: FrameDetections, cfg: TrackerConfig) -> FrameDetections:
    """Score threshold, ROI disk, then rotated NMS. Output is score-descending."""
    kept = [
        d
        for d in frame.detections
        if d.score >= cfg.score_threshold and horizontal_radius(d.box) <= cfg.roi_radius
    ]
    return frame.with_detections(nms_rotated(kept, cfg.nms_iou_threshold))


class TrackerRuntime:
    """Per-clip tracker state. Steps must be applied in frame order."""

    def __init__(self, cfg: Optional[TrackerConfig] = None):
        self.cfg = cfg if cfg is not None else default_config()
        self.live_tracks: List[Track] = []
        self.next_id = 1
        self.frame_counter = 0
        self.last_frame_index: Optional[int] = None
        # track id -> index of the detection it consumed in the latest frame
        self.last_sources: Dict[int, int] = {}
        self._noise = self.cfg.motion_noise()
        self._layout = CENTER6 if self.cfg.variant is Variant.AB3DMOT_STYLE else FULLBOX10

    # -- lifecycle helpers ---------------------------------------------------

    def _spawn(self, det: Detection) -> Track:
        track = Track(
            id=self.next_id,
            kf_state=kf_init(det, self._layout, self._noise),
            box=det.box,
            hits=1,
            consecutive_misses=0,
            status=TrackStatus.TENTATIVE,
            last_score=det.score,
            class_id=det.class_id,
        )
        self.next_id += 1
        return track

    def _predicted_box(self, track: Track) -> OrientedBox3D:
        return track.kf_state.to_box(track.box)

    def _associate_subset(self, rows: List[int], cols: List[int], dets) -> Assignment:
        """Assign ``live_tracks[rows]`` to ``dets[cols]``; indices in the result are global."""
        cfg = self.cfg
        tracks = [self.live_tracks[i] for i in rows]
        sub_dets = [dets[j] for j in cols]
        boxes = [t.box for t in tracks]
        if cfg.variant is Variant.AB3DMOT_STYLE:
            costs = mahalanobis_cost([t.kf_state for t in tracks], sub_dets, self._noise)
            masked = prune_infeasible(costs, boxes, sub_dets, cfg)
            local = gate(hungarian_solve(masked), boxes, sub_dets, cfg, costs)
        else:
            costs = iou_cost(boxes, sub_dets, cfg.association_iou_min)
            local = gate(hungarian_solve(costs), boxes, sub_dets, cfg)
        return Assignment(
            tuple((rows[i], cols[j], c) for i, j, c in local.matches),
            tuple(rows[i] for i in local.unmatched_tracks),
            tuple(cols[j] for j in local.unmatched_detections),
        )

    def _associate(self, dets) -> Assignment:
        all_rows = list(range(len(self.live_tracks)))
        all_cols = list(range(len(dets)))
        if self.cfg.variant is not Variant.AB3DMOT_STYLE:
            return self._associate_subset(all_rows, all_cols, dets)
        # A newborn track's covariance is wide, which makes its Mahalanobis cost
        # to any nearby detection small; confirmed tracks therefore pick first.
        confirmed = [i for i in all_rows if self.live_tracks[i].status is TrackStatus.CONFIRMED]
        tentative = [i for i in all_rows if self.live_tracks[i].status is not TrackStatus.CONFIRMED]
        first = self._associate_subset(confirmed, all_cols, dets)
        second = self._associate_subset(tentative, list(first.unmatched_detections), dets)
        return Assignment(
            tuple(sorted(first.matches + second.matches)),
            tuple(sorted(first.unmatched_tracks + second.unmatched_tracks)),
            tuple(sorted(second.unmatched_detections)),
        )

    # -- main loop -------------------------------------------------------------

    def step(self, frame: FrameDetections) -> List[TrackOutput]:
        if self.last_frame_index is not None and frame.frame_index <= self.last_frame_index:
            raise ValueError(
                f"frame {frame.frame_index} presented after frame {self.last_frame_index}"
            )
        self.last_frame_index = frame.frame_index
        self.frame_counter += 1
        cfg = self.cfg
        dets = list(frame.detections)

        for t in self.live_tracks:
            t.kf_state = kf_predict(t.kf_state, 1.0, self._noise)
            t.box = self._predicted_box(t)

        assignment = self._associate(dets)

        sources: Dict[int, int] = {}
        for i, j, _ in assignment.matches:
            t, det = self.live_tracks[i], dets[j]
            t.kf_state = kf_update(t.kf_state, det, self._noise)
            if cfg.variant is Variant.AB3DMOT_STYLE:
                t.box = ema_smooth(t.box, det.box, cfg.ema_alpha).with_center(t.kf_state.position)
            else:
                t.box = self._predicted_box(t)
            t.hits += 1
            t.consecutive_misses = 0
            t.last_score = det.score
            sources[t.id] = j

        for i in assignment.unmatched_tracks:
            t = self.live_tracks[i]
            t.consecutive_misses += 1
            if t.consecutive_misses > cfg.max_age:
                t.status = TrackStatus.DEAD

        for j in assignment.unmatched_detections:
            t = self._spawn(dets[j])
            self.live_tracks.append(t)
            sources[t.id] = j
        self.last_sources = sources

        self.live_tracks = [t for t in self.live_tracks if t.status is not TrackStatus.DEAD]
        outputs = []
        for t in self.live_tracks:
            if t.status is TrackStatus.TENTATIVE and t.hits >= cfg.min_hits:
                t.status = TrackStatus.CONFIRMED
            if t.status is not TrackStatus.CONFIRMED:
                continue
            if t.id in sources or cfg.emit_coasted:
                outputs.append(
                    TrackOutput(frame.frame_index, t.id, t.box, t.last_score, t.class_id)
                )
        outputs.sort(key=lambda o: o.track_id)
        return outputs


def step(rt: TrackerRuntime, frame: FrameDetections) -> List[TrackOutput]:
    return rt.step(frame)


def run_clip(cfg: TrackerConfig, clip: SequenceClip) -> List[TrackOutput]:
    rt = TrackerRuntime(cfg)
    outputs: List[TrackOutput] = []
    for frame in clip.frames:
        outputs.extend(rt.step(filter_detections(frame, cfg)))
    return outputs


def pseudo_gt_config(variant=Variant.AB3DMOT_STYLE) -> TrackerConfig:
    """Tracker settings under which every labeled box receives an id on its first frame."""
    return replace(
        default_config(variant),
        score_threshold=0.0,
        min_hits=1,
        max_age=3,
        roi_radius=math.inf,
        nms_iou_threshold=1.0,
    )


def generate_pseudo_gt(labels: SequenceClip, variant=Variant.AB3DMOT_STYLE) -> List[TrackOutput]:
    """Attach tracker ids to labeled boxes.

    Every label is kept unfiltered and reported with its own box (not the
    smoothed track box) under the id of the track that consumed it.
    """
    rt = TrackerRuntime(pseudo_gt_config(variant))
    outputs: List[TrackOutput] = []
    for frame in labels.frames:
        emitted = rt.step(frame)
        for o in emitted:
            det = frame.detections[rt.last_sources[o.track_id]]
            outputs.append(replace(o, box=det.box, score=det.score, class_id=det.class_id))
    return outputs


def outputs_to_clip(outputs: List[TrackOutput], clip_id: str = "tracks", rate_hz: float = 3.0,
                    n_frames: Optional[int] = None) -> SequenceClip:
    """Re-express tracker outputs as a detection clip (scores become 1.0)."""
    last = max((o.frame_index for o in outputs), default=-1)
    n = max(last + 1, n_frames or 0)
    per_frame: List[List[Detection]] = [[] for _ in range(n)]
    for o in outputs:
        per_frame[o.frame_index].append(Detection(o.box, 1.0, o.class_id))
    return SequenceClip.from_boxes(per_frame, clip_id, rate_hz)
