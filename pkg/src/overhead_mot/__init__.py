"""Tracking-by-detection and evaluation toolkit for overhead-LiDAR person perception."""

from .association import (
    INFEASIBLE,
    Assignment,
    CostKind,
    CostMatrix,
    gate,
    hungarian_solve,
    iou_cost,
    mahalanobis_cost,
)
from .bench import bench_tracker, compare_variants
from .core import (
    ClassId,
    Detection,
    EvalConfig,
    FrameDetections,
    OrientedBox3D,
    SensorGeometry,
    SequenceClip,
    Track,
    TrackerConfig,
    TrackStatus,
    Variant,
    default_config,
    normalize_yaw,
)
from .evaluation import (
    DetectionMetricsRow,
    LatencyReport,
    MotMetrics,
    average_precision,
    clear_mot,
    detection_metrics_sliced,
    idf1,
    latency_percentiles,
    match_detections,
    mot_metrics,
)
from .formats import FormatError, load_clip, load_tracks, parse_frame, parse_tracks, write_clip, write_tracks
from .geometry import (
    ConvexPolygon2D,
    bev_polygon,
    convex_intersection_area,
    horizontal_radius,
    nms_rotated,
    rotated_bev_iou,
)
from .motion import (
    CENTER6,
    FULLBOX10,
    KalmanState,
    MotionNoise,
    SingularInnovationError,
    ema_smooth,
    kf_init,
    kf_predict,
    kf_update,
    yaw_residual,
)
from .tracker import (
    TrackerRuntime,
    TrackOutput,
    filter_detections,
    generate_pseudo_gt,
    pseudo_gt_config,
    run_clip,
)

__version__ = "0.1.0"
