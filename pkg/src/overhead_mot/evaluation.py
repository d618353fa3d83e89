"""Distance-sliced detection metrics, CLEAR-MOT, IDF1 and latency percentiles."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np

from .association import CostMatrix, hungarian_solve
from .core import Detection, EvalConfig, FrameDetections, OrientedBox3D
from .geometry import horizontal_radius, rotated_bev_iou


# -- detection -------------------------------------------------------------


@dataclass(frozen=True)
class FrameMatch:
    matches: Tuple[Tuple[int, int, float], ...]
    unmatched_preds: Tuple[int, ...]
    unmatched_gts: Tuple[int, ...]


def match_detections(
    preds: Sequence[Detection], gts: Sequence[OrientedBox3D], iou_min: float = 0.10
) -> FrameMatch:
    """Greedy one-to-one matching in descending score order.

    Each prediction claims the unmatched ground-truth box with the highest IoU,
    provided that IoU is at least ``iou_min``. Returns ``(pred, gt, iou)``
    index triples plus the leftovers on both sides.
    """
    order = sorted(range(len(preds)), key=lambda i: -preds[i].score)
    taken = [False] * len(gts)
    matches = []
    unmatched_preds = []
    for p in order:
        best_j, best_iou = -1, -1.0
        for j, g in enumerate(gts):
            if taken[j]:
                continue
            iou = rotated_bev_iou(preds[p].box, g)
            if iou > best_iou:
                best_j, best_iou = j, iou
        if best_j >= 0 and best_iou >= iou_min and best_iou > 0.0:
            taken[best_j] = True
            matches.append((p, best_j, best_iou))
        else:
            unmatched_preds.append(p)
    return FrameMatch(
        tuple(matches),
        tuple(sorted(unmatched_preds)),
        tuple(j for j in range(len(gts)) if not taken[j]),
    )


def precision_recall_curve(
    scored_flags: Sequence[Tuple[float, bool]], gt_count: int
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(scores, precision, recall) after a stable descending sort by score."""
    order = sorted(range(len(scored_flags)), key=lambda i: -scored_flags[i][0])
    scores = np.array([scored_flags[i][0] for i in order], dtype=float)
    tp = np.cumsum([1 if scored_flags[i][1] else 0 for i in order], dtype=float)
    fp = np.arange(1, len(order) + 1, dtype=float) - tp
    precision = tp / np.maximum(tp + fp, 1.0)
    recall = tp / gt_count if gt_count > 0 else np.zeros_like(tp)
    return scores, precision, recall


def average_precision(scored_flags: Sequence[Tuple[float, bool]], gt_count: int) -> float:
    """All-point interpolated AP: area under the monotone precision envelope."""
    if gt_count < 0:
        raise ValueError("gt_count must be non-negative")
    if gt_count == 0:
        return 1.0 if len(scored_flags) == 0 else 0.0
    if not scored_flags:
        return 0.0
    _, precision, recall = precision_recall_curve(scored_flags, gt_count)
    mrec = np.concatenate([[0.0], recall, [recall[-1]]])
    mpre = np.concatenate([[0.0], precision, [0.0]])
    mpre = np.maximum.accumulate(mpre[::-1])[::-1]
    steps = np.nonzero(mrec[1:] != mrec[:-1])[0]
    return float(np.sum((mrec[steps + 1] - mrec[steps]) * mpre[steps + 1]))


@dataclass(frozen=True)
class DetectionMetricsRow:
    radius: float
    precision: float
    recall: float
    f1: float
    ap: float
    miou: float
    tp: int
    fp: int
    fn: int

    @property
    def gt_count(self) -> int:
        return self.tp + self.fn

    @property
    def pred_count(self) -> int:
        return self.tp + self.fp


def _ratio(num: int, den: int, empty: float) -> float:
    return num / den if den > 0 else empty


def detection_metrics_from_counts(
    radius: float, tp: int, fp: int, fn: int, flags, ious
) -> DetectionMetricsRow:
    # an empty slice (nothing predicted, nothing to find) scores as perfect
    vacuous = tp + fp + fn == 0
    p = _ratio(tp, tp + fp, 1.0 if vacuous else 0.0)
    r = _ratio(tp, tp + fn, 1.0 if vacuous else 0.0)
    f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return DetectionMetricsRow(
        radius=radius,
        precision=p,
        recall=r,
        f1=f1,
        ap=average_precision(flags, tp + fn),
        miou=float(np.mean(ious)) if ious else 0.0,
        tp=tp,
        fp=fp,
        fn=fn,
    )


def _gt_boxes(frame: FrameDetections) -> List[OrientedBox3D]:
    return [d.box for d in frame.detections]


def detection_metrics_sliced(
    pred_frames: Sequence[FrameDetections],
    gt_frames: Sequence[FrameDetections],
    cfg: EvalConfig = EvalConfig(),
    curves: Dict[float, tuple] | None = None,
) -> List[DetectionMetricsRow]:
    """Cumulative metrics within each radius of ``cfg.radii``.

    Predictions and ground truth are each filtered by their own horizontal
    radius, then matched per frame. AP pools the scored flags of every frame in
    the slice. If ``curves`` is given it receives the PR curve of each radius.
    """
    if len(pred_frames) != len(gt_frames):
        raise ValueError(f"{len(pred_frames)} prediction frames vs {len(gt_frames)} label frames")
    for p, g in zip(pred_frames, gt_frames):
        if p.frame_index != g.frame_index:
            raise ValueError(f"frame mismatch: prediction {p.frame_index} vs label {g.frame_index}")

    rows = []
    for radius in cfg.radii:
        tp = fp = fn = 0
        flags: List[Tuple[float, bool]] = []
        ious: List[float] = []
        for pf, gf in zip(pred_frames, gt_frames):
            preds = [d for d in pf.detections if horizontal_radius(d.box) <= radius]
            gts = [b for b in _gt_boxes(gf) if horizontal_radius(b) <= radius]
            m = match_detections(preds, gts, cfg.tp_iou_min)
            tp += len(m.matches)
            fp += len(m.unmatched_preds)
            fn += len(m.unmatched_gts)
            matched = {p for p, _, _ in m.matches}
            flags.extend((preds[i].score, i in matched) for i in range(len(preds)))
            ious.extend(iou for _, _, iou in m.matches)
        rows.append(detection_metrics_from_counts(radius, tp, fp, fn, flags, ious))
        if curves is not None:
            curves[radius] = precision_recall_curve(flags, tp + fn)
    return rows


# -- tracking --------------------------------------------------------------


@dataclass(frozen=True)
class MotMetrics:
    iou_threshold: float
    mota: float
    motp: float
    idf1: float
    fp: int
    fn: int
    idsw: int
    gt_count: int
    matches: int = 0


def _by_frame(outputs) -> Dict[int, list]:
    frames: Dict[int, list] = defaultdict(list)
    for o in outputs:
        frames[o.frame_index].append(o)
    return frames


def _max_iou_matching(ious: np.ndarray, threshold: float) -> List[Tuple[int, int]]:
    if ious.size == 0:
        return []
    cost = np.where(ious >= threshold, 1.0 - ious, np.inf)
    return hungarian_solve(CostMatrix(cost)).pairs()


def clear_mot(pred, gt, iou_threshold: float = 0.3) -> MotMetrics:
    """CLEAR-MOT counts with MOTP expressed as mean matched BEV IoU.

    ``pred`` and ``gt`` are iterables of objects with ``frame_index``,
    ``track_id`` and ``box`` (e.g. :class:`~overhead_mot.tracker.TrackOutput`).
    Correspondences from the previous frame are kept while still valid; the
    rest is matched by maximum IoU.
    """
    pred, gt = list(pred), list(gt)
    pred_frames = _by_frame(pred)
    gt_frames = _by_frame(gt)
    fp = fn = idsw = gt_count = 0
    iou_sum, n_match = 0.0, 0
    last_match: Dict[int, int] = {}  # gt id -> pred id of its most recent match
    prev_pairs: Dict[int, int] = {}  # gt id -> pred id in the previous frame

    for f in sorted(set(pred_frames) | set(gt_frames)):
        gts = sorted(gt_frames.get(f, []), key=lambda o: o.track_id)
        preds = sorted(pred_frames.get(f, []), key=lambda o: o.track_id)
        gt_count += len(gts)
        ious = np.array([[rotated_bev_iou(p.box, g.box) for p in preds] for g in gts]).reshape(
            len(gts), len(preds)
        )
        pred_index = {p.track_id: j for j, p in enumerate(preds)}
        pairs: List[Tuple[int, int]] = []
        used_g, used_p = set(), set()
        for i, g in enumerate(gts):
            pid = prev_pairs.get(g.track_id)
            j = pred_index.get(pid) if pid is not None else None
            if j is not None and j not in used_p and ious[i, j] >= iou_threshold:
                pairs.append((i, j))
                used_g.add(i)
                used_p.add(j)
        free_g = [i for i in range(len(gts)) if i not in used_g]
        free_p = [j for j in range(len(preds)) if j not in used_p]
        sub = ious[np.ix_(free_g, free_p)] if free_g and free_p else np.zeros((0, 0))
        pairs.extend((free_g[a], free_p[b]) for a, b in _max_iou_matching(sub, iou_threshold))

        prev_pairs = {}
        for i, j in pairs:
            gid, pid = gts[i].track_id, preds[j].track_id
            if gid in last_match and last_match[gid] != pid:
                idsw += 1
            last_match[gid] = pid
            prev_pairs[gid] = pid
            iou_sum += ious[i, j]
        n_match += len(pairs)
        fp += len(preds) - len(pairs)
        fn += len(gts) - len(pairs)

    mota = 1.0 - (fn + fp + idsw) / gt_count if gt_count > 0 else (1.0 if fp == 0 else -math.inf)
    motp = iou_sum / n_match if n_match else 0.0
    return MotMetrics(
        iou_threshold=iou_threshold,
        mota=mota,
        motp=motp,
        idf1=idf1(pred, gt, iou_threshold),
        fp=fp,
        fn=fn,
        idsw=idsw,
        gt_count=gt_count,
        matches=n_match,
    )


def idf1(pred, gt, iou_threshold: float = 0.3) -> float:
    """Identity F1 under the best global one-to-one GT-id to prediction-id mapping."""
    pred = list(pred)
    gt = list(gt)
    if not pred and not gt:
        return 1.0
    if not pred or not gt:
        return 0.0
    gt_ids = sorted({o.track_id for o in gt})
    pred_ids = sorted({o.track_id for o in pred})
    gi = {k: i for i, k in enumerate(gt_ids)}
    pj = {k: j for j, k in enumerate(pred_ids)}
    overlap = np.zeros((len(gt_ids), len(pred_ids)))
    pred_frames = _by_frame(pred)
    for f, gts in _by_frame(gt).items():
        for g in gts:
            for p in pred_frames.get(f, []):
                if rotated_bev_iou(p.box, g.box) >= iou_threshold:
                    overlap[gi[g.track_id], pj[p.track_id]] += 1
    # zero-overlap pairs stay feasible: a forced pairing must never cost identity hits
    idtp = -hungarian_solve(CostMatrix(-overlap)).total_cost
    idfp = len(pred) - idtp
    idfn = len(gt) - idtp
    return 2 * idtp / (2 * idtp + idfp + idfn)


def mot_metrics(pred, gt, thresholds: Iterable[float] = (0.3, 0.1)) -> List[MotMetrics]:
    pred, gt = list(pred), list(gt)
    return [clear_mot(pred, gt, t) for t in thresholds]


# -- latency ---------------------------------------------------------------


@dataclass(frozen=True)
class LatencyReport:
    p50_ms: float
    p90_ms: float
    sample_count: int
    label: str = ""


def nearest_rank(sorted_samples: Sequence[float], q: float) -> float:
    n = len(sorted_samples)
    rank = max(1, math.ceil(q * n - 1e-12))
    return float(sorted_samples[min(rank, n) - 1])


def latency_percentiles(samples_ms: Sequence[float], label: str = "") -> LatencyReport:
    if len(samples_ms) == 0:
        raise ValueError("latency_percentiles needs at least one sample")
    s = sorted(float(x) for x in samples_ms)
    return LatencyReport(nearest_rank(s, 0.5), nearest_rank(s, 0.9), len(s), label)
