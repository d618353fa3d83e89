"""Per-frame tracker latency measurement."""

from __future__ import annotations

import time
from typing import Dict, List, Sequence

from .core import SequenceClip, TrackerConfig, Variant, default_config
from .evaluation import LatencyReport, latency_percentiles
from .tracker import TrackerRuntime, filter_detections


def step_timings_ms(cfg: TrackerConfig, clip: SequenceClip, repeats: int = 1) -> List[float]:
    """Wall-clock milliseconds of every ``step`` call, pooled over ``repeats`` runs.

    Detection filtering happens before the timer starts; prediction,
    association and lifecycle bookkeeping are what gets measured.
    """
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    frames = [filter_detections(f, cfg) for f in clip.frames]
    samples: List[float] = []
    for _ in range(repeats):
        rt = TrackerRuntime(cfg)
        for frame in frames:
            t0 = time.perf_counter()
            rt.step(frame)
            samples.append((time.perf_counter() - t0) * 1e3)
    return samples


def bench_tracker(cfg: TrackerConfig, clip: SequenceClip, repeats: int = 1) -> LatencyReport:
    samples = step_timings_ms(cfg, clip, repeats)
    if not samples:
        raise ValueError("clip has no frames to time")
    return latency_percentiles(samples, label=cfg.variant.value)


def compare_variants(
    clip: SequenceClip,
    repeats: int = 1,
    variants: Sequence[Variant] = (Variant.AB3DMOT_STYLE, Variant.SIMPLETRACK_STYLE),
) -> Dict[Variant, LatencyReport]:
    return {v: bench_tracker(default_config(v), clip, repeats) for v in variants}
