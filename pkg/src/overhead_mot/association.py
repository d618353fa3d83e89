"""Association costs, optimal assignment and post-assignment gating."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import Detection, OrientedBox3D, TrackerConfig, Variant
from .geometry import rotated_bev_iou
from .motion import DEFAULT_NOISE, KalmanState, MotionNoise, SingularInnovationError

INFEASIBLE = math.inf


class CostKind(enum.Enum):
    MAHALANOBIS = "mahalanobis"
    ONE_MINUS_IOU = "one_minus_iou"
    GENERIC = "generic"


@dataclass(frozen=True)
class CostMatrix:
    """Track-by-detection costs; ``INFEASIBLE`` (inf) entries are never matched."""

    values: np.ndarray
    kind: CostKind = CostKind.GENERIC

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim == 1 and v.size == 0:
            v = v.reshape(0, 0)
        if v.ndim != 2:
            raise ValueError("cost matrix must be 2-D")
        if np.isnan(v).any() or np.isneginf(v).any():
            raise ValueError("costs must be finite or +inf (INFEASIBLE)")
        object.__setattr__(self, "values", v)

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    @property
    def feasible(self) -> np.ndarray:
        return np.isfinite(self.values)


@dataclass(frozen=True)
class Assignment:
    matches: Tuple[Tuple[int, int, float], ...] = ()
    unmatched_tracks: Tuple[int, ...] = ()
    unmatched_detections: Tuple[int, ...] = ()

    @property
    def total_cost(self) -> float:
        return float(sum(c for _, _, c in self.matches))

    def pairs(self) -> List[Tuple[int, int]]:
        return [(i, j) for i, j, _ in self.matches]

    @classmethod
    def from_pairs(cls, pairs, costs: np.ndarray, n_rows: int, n_cols: int) -> "Assignment":
        pairs = sorted(pairs)
        rows = {i for i, _ in pairs}
        cols = {j for _, j in pairs}
        return cls(
            tuple((i, j, float(costs[i, j])) for i, j in pairs),
            tuple(i for i in range(n_rows) if i not in rows),
            tuple(j for j in range(n_cols) if j not in cols),
        )


# -- costs -----------------------------------------------------------------


def mahalanobis_cost(
    tracks: Sequence[KalmanState],
    dets: Sequence[Detection],
    noise: MotionNoise = DEFAULT_NOISE,
) -> CostMatrix:
    """sqrt(nu^T S^-1 nu) on the 3D center innovation of each pair."""
    out = np.zeros((len(tracks), len(dets)))
    if len(dets):
        centers = np.array([d.box.center for d in dets])
    for i, s in enumerate(tracks):
        S = s.innovation_covariance(noise)[:3, :3]
        try:
            L = np.linalg.cholesky(S)
        except np.linalg.LinAlgError:
            raise SingularInnovationError(f"innovation covariance of track {i} is not invertible") from None
        if not len(dets):
            continue
        nu = centers - s.position
        z = np.linalg.solve(L, nu.T)
        out[i] = np.sqrt(np.sum(z * z, axis=0))
    return CostMatrix(out, CostKind.MAHALANOBIS)


def iou_cost(
    track_boxes: Sequence[OrientedBox3D],
    dets: Sequence[Detection],
    iou_min: float = 0.0,
) -> CostMatrix:
    """1 - rotated BEV IoU; pairs below ``iou_min`` (or with no overlap) are infeasible."""
    out = np.full((len(track_boxes), len(dets)), INFEASIBLE)
    for i, tb in enumerate(track_boxes):
        for j, d in enumerate(dets):
            iou = rotated_bev_iou(tb, d.box)
            if iou > 0.0 and iou >= iou_min:
                out[i, j] = 1.0 - iou
    return CostMatrix(out, CostKind.ONE_MINUS_IOU)


# -- assignment ------------------------------------------------------------


def _solve(values: np.ndarray, big: float) -> Tuple[int, float, List[Tuple[int, int]]]:
    """Optimal assignment over feasible entries, scored as (-feasible matches, cost).

    Infeasible entries are padded with ``big``, which exceeds any sum of feasible
    costs, so the solver first maximises the number of feasible pairs.
    """
    if values.size == 0:
        return 0, 0.0, []
    feasible = np.isfinite(values)
    padded = np.where(feasible, values, big)
    rows, cols = linear_sum_assignment(padded)
    pairs = [(i, j) for i, j in zip(rows.tolist(), cols.tolist()) if feasible[i, j]]
    cost = float(sum(values[i, j] for i, j in pairs))
    return -len(pairs), cost, pairs


def _same_score(a: Tuple[int, float], b: Tuple[int, float], scale: float) -> bool:
    return a[0] == b[0] and abs(a[1] - b[1]) <= 1e-12 * scale


def hungarian_solve(c: CostMatrix) -> Assignment:
    """Minimum-cost assignment over feasible entries.

    As many pairs as feasibility allows are matched, then total cost is
    minimised. Among equal optima the lexicographically smallest sorted match
    list is returned, so results do not depend on solver internals.
    """
    values = c.values
    n_rows, n_cols = values.shape
    feasible = np.isfinite(values)
    if not feasible.any():
        return Assignment((), tuple(range(n_rows)), tuple(range(n_cols)))

    finite = values[feasible]
    shift = min(0.0, float(finite.min()))
    work = values - shift  # non-negative feasible costs
    big = 2.0 + 2.0 * float(work[feasible].sum())
    n_neg, cost, pairs = _solve(work, big)
    best = (n_neg, cost)
    scale = 1.0 + abs(cost)

    # Walk the rows in order, giving each the smallest column that keeps the
    # optimum reachable; a row with no such column stays unmatched.
    fixed: List[Tuple[int, int]] = []
    fixed_score = (0, 0.0)
    free_rows = list(range(n_rows))
    free_cols = list(range(n_cols))
    current = dict(pairs)
    for r in range(n_rows):
        free_rows.remove(r)
        chosen = current.get(r)
        for j in free_cols:
            if chosen is not None and j >= chosen:
                break
            if not feasible[r, j]:
                continue
            sub_cols = [k for k in free_cols if k != j]
            b, cst, sub_pairs = _solve(work[np.ix_(free_rows, sub_cols)], big)
            score = (fixed_score[0] - 1 + b, fixed_score[1] + work[r, j] + cst)
            if _same_score(score, best, scale):
                chosen = j
                current = {free_rows[a]: sub_cols[b_] for a, b_ in sub_pairs}
                current[r] = j
                break
        if chosen is not None:
            fixed.append((r, chosen))
            free_cols.remove(chosen)
            fixed_score = (fixed_score[0] - 1, fixed_score[1] + work[r, chosen])

    return Assignment.from_pairs(fixed, values, n_rows, n_cols)


# -- gating ----------------------------------------------------------------


def _passes_gate(d: float, iou: float, cfg: TrackerConfig) -> bool:
    if iou < cfg.association_iou_min:
        return False
    return cfg.variant is not Variant.AB3DMOT_STYLE or d * d <= cfg.mahalanobis_gate


def prune_infeasible(
    c: CostMatrix,
    track_boxes: Sequence[OrientedBox3D],
    dets: Sequence[Detection],
    cfg: TrackerConfig,
) -> CostMatrix:
    """Flag every pair that ``gate`` would reject as INFEASIBLE before solving.

    Without this, a newborn track with a wide covariance can win a detection in
    the global optimum, lose it again at the gate, and leave the detection's
    true track unmatched.
    """
    values = c.values.copy()
    check_distance = cfg.variant is Variant.AB3DMOT_STYLE
    for i, tb in enumerate(track_boxes):
        for j, d in enumerate(dets):
            v = values[i, j]
            if not np.isfinite(v):
                continue
            # distance test first: it is far cheaper than polygon clipping
            if (check_distance and v * v > cfg.mahalanobis_gate) or not _passes_gate(
                v, rotated_bev_iou(tb, d.box), cfg
            ):
                values[i, j] = INFEASIBLE
    return CostMatrix(values, c.kind)


def gate(
    a: Assignment,
    track_boxes: Sequence[OrientedBox3D],
    dets: Sequence[Detection],
    cfg: TrackerConfig,
    mahalanobis: CostMatrix | None = None,
) -> Assignment:
    """Demote matches that fail the variant's gates to unmatched on both sides.

    AB3DMOT style rejects a pair when its squared Mahalanobis distance exceeds
    ``cfg.mahalanobis_gate`` (a chi-square quantile) or its BEV IoU falls
    below ``cfg.association_iou_min``. SimpleTrack style applies the IoU test
    only.
    """
    keep = []
    dropped_t, dropped_d = [], []
    for i, j, cost in a.matches:
        d = mahalanobis.values[i, j] if mahalanobis is not None else cost
        if _passes_gate(d, rotated_bev_iou(track_boxes[i], dets[j].box), cfg):
            keep.append((i, j, cost))
        else:
            dropped_t.append(i)
            dropped_d.append(j)
    if not dropped_t:
        return a
    return Assignment(
        tuple(keep),
        tuple(sorted(a.unmatched_tracks + tuple(dropped_t))),
        tuple(sorted(a.unmatched_detections + tuple(dropped_d))),
    )
