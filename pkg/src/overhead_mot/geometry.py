"""Rotated bird's-eye-view geometry.

All overlap in this package is computed on the BEV rectangle of a box; the
vertical center and extent never enter IoU.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .core import Detection, OrientedBox3D

Point = Tuple[float, float]

_EPS = 1e-12


@dataclass(frozen=True)
class ConvexPolygon2D:
    """Counter-clockwise convex polygon; fewer than 3 vertices means empty."""

    vertices: Tuple[Point, ...] = ()

    @property
    def is_empty(self) -> bool:
        return len(self.vertices) < 3

    def area(self) -> float:
        return max(0.0, shoelace_area(self.vertices))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.vertices, dtype=float).reshape(-1, 2)


def shoelace_area(vertices: Sequence[Point]) -> float:
    """Signed area, positive for counter-clockwise order."""
    n = len(vertices)
    if n < 3:
        return 0.0
    s = 0.0
    for i in range(n):
        x1, y1 = vertices[i]
        x2, y2 = vertices[(i + 1) % n]
        s += x1 * y2 - x2 * y1
    return 0.5 * s


def bev_polygon(box: OrientedBox3D) -> ConvexPolygon2D:
    c, s = math.cos(box.yaw), math.sin(box.yaw)
    hx, hy = box.dx / 2.0, box.dy / 2.0
    # local corners in CCW order, rotated by yaw then translated
    corners = ((-hx, -hy), (hx, -hy), (hx, hy), (-hx, hy))
    verts = tuple((box.cx + c * x - s * y, box.cy + s * x + c * y) for x, y in corners)
    return ConvexPolygon2D(verts)


def _clip(subject: List[Point], a: Point, b: Point) -> List[Point]:
    # keep the half-plane left of the directed edge a->b
    ax, ay = a
    ex, ey = b[0] - ax, b[1] - ay
    out: List[Point] = []
    n = len(subject)
    if n == 0:
        return out
    sides = [ex * (py - ay) - ey * (px - ax) for px, py in subject]
    for i in range(n):
        p, q = subject[i], subject[(i + 1) % n]
        sp, sq = sides[i], sides[(i + 1) % n]
        if sp >= 0.0:
            out.append(p)
        if (sp > 0.0 and sq < 0.0) or (sp < 0.0 and sq > 0.0):
            t = sp / (sp - sq)
            out.append((p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])))
    return out


def convex_intersection(a: ConvexPolygon2D, b: ConvexPolygon2D) -> ConvexPolygon2D:
    """Sutherland-Hodgman clip of ``a`` by every edge of ``b``."""
    if a.is_empty or b.is_empty:
        return ConvexPolygon2D()
    poly = list(a.vertices)
    clip = b.vertices
    for i in range(len(clip)):
        poly = _clip(poly, clip[i], clip[(i + 1) % len(clip)])
        if len(poly) < 3:
            return ConvexPolygon2D()
    return ConvexPolygon2D(tuple(poly))


def convex_intersection_area(a: ConvexPolygon2D, b: ConvexPolygon2D) -> float:
    area = shoelace_area(convex_intersection(a, b).vertices)
    # collinear / touching intersections come back as slivers of zero area
    return area if area > _EPS else 0.0


def _circumradius(box: OrientedBox3D) -> float:
    return 0.5 * math.hypot(box.dx, box.dy)


def rotated_bev_iou(a: OrientedBox3D, b: OrientedBox3D) -> float:
    if (a.cx, a.cy, a.dx, a.dy, a.yaw) == (b.cx, b.cy, b.dx, b.dy, b.yaw):
        return 1.0
    if math.hypot(a.cx - b.cx, a.cy - b.cy) >= _circumradius(a) + _circumradius(b):
        return 0.0
    inter = convex_intersection_area(bev_polygon(a), bev_polygon(b))
    if inter <= 0.0:
        return 0.0
    union = a.dx * a.dy + b.dx * b.dy - inter
    return min(1.0, max(0.0, inter / union))


def iou_matrix(boxes_a: Sequence[OrientedBox3D], boxes_b: Sequence[OrientedBox3D]) -> np.ndarray:
    out = np.zeros((len(boxes_a), len(boxes_b)))
    for i, a in enumerate(boxes_a):
        for j, b in enumerate(boxes_b):
            out[i, j] = rotated_bev_iou(a, b)
    return out


def horizontal_radius(box: OrientedBox3D) -> float:
    return math.hypot(box.cx, box.cy)


def nms_rotated(dets: Sequence[Detection], iou_threshold: float) -> List[Detection]:
    """Greedy rotated-IoU NMS; survivors are returned in descending score order.

    Equal scores keep their input order, so the result is fully deterministic.
    """
    order = sorted(range(len(dets)), key=lambda i: -dets[i].score)
    kept: List[Detection] = []
    for i in order:
        det = dets[i]
        if all(rotated_bev_iou(det.box, k.box) < iou_threshold for k in kept):
            kept.append(det)
    return kept


# -- Monte-Carlo reference, used to cross-check the exact clipping ----------


def points_in_box(points: np.ndarray, box: OrientedBox3D) -> np.ndarray:
    """Boolean mask of BEV points (N, 2) inside the box's BEV rectangle."""
    c, s = math.cos(box.yaw), math.sin(box.yaw)
    rel = points - np.array([box.cx, box.cy])
    u = rel[:, 0] * c + rel[:, 1] * s
    v = -rel[:, 0] * s + rel[:, 1] * c
    return (np.abs(u) <= box.dx / 2.0) & (np.abs(v) <= box.dy / 2.0)


def monte_carlo_bev_iou(
    a: OrientedBox3D, b: OrientedBox3D, n_samples: int = 1_000_000, rng=None
) -> float:
    """Sampled IoU over the bounding box of both BEV rectangles."""
    rng = np.random.default_rng(rng)
    corners = np.vstack([bev_polygon(a).as_array(), bev_polygon(b).as_array()])
    lo, hi = corners.min(axis=0), corners.max(axis=0)
    pts = rng.uniform(lo, hi, size=(n_samples, 2))
    in_a = points_in_box(pts, a)
    in_b = points_in_box(pts, b)
    union = np.count_nonzero(in_a | in_b)
    if union == 0:
        return 0.0
    return np.count_nonzero(in_a & in_b) / union
