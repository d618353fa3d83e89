"""Acceptance gate: nine criteria, each reported as a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` (the lines appear in the
terminal summary) or ``python tests/test_acceptance.py``.
"""

import copy
import itertools
import math
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from conftest import ACCEPTANCE_LINES, GEOMETRY, person  # noqa: E402
from overhead_mot import (  # noqa: E402
    CENTER6,
    FULLBOX10,
    CostMatrix,
    Detection,
    EvalConfig,
    FrameDetections,
    MotionNoise,
    OrientedBox3D,
    TrackerRuntime,
    TrackOutput,
    Variant,
    average_precision,
    clear_mot,
    default_config,
    detection_metrics_sliced,
    generate_pseudo_gt,
    hungarian_solve,
    idf1,
    kf_init,
    kf_predict,
    kf_update,
    latency_percentiles,
    pseudo_gt_config,
    rotated_bev_iou,
    run_clip,
)
from overhead_mot.geometry import monte_carlo_bev_iou  # noqa: E402
from overhead_mot.synthetic import simulate_walkers  # noqa: E402
from overhead_mot.tracker import outputs_to_clip  # noqa: E402


def report(number, name, ok, detail):
    line = f"criterion {number} {'PASS' if ok else 'FAIL'}: {name} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


# 1 -------------------------------------------------------------------------


def _random_pair(rng):
    # centers inside a 10 m disk; the partner lands within 3 m so most pairs overlap
    r, a = 10 * math.sqrt(rng.random()), rng.uniform(-math.pi, math.pi)
    c1 = np.array([r * math.cos(a), r * math.sin(a)])
    c2 = c1 + rng.uniform(-3, 3, 2)
    c2 *= min(1.0, 10.0 / np.linalg.norm(c2))
    ext = rng.uniform(0.2, 3.0, 4)
    yaw = rng.uniform(-math.pi, math.pi, 2)
    return (
        OrientedBox3D(c1[0], c1[1], 0, ext[0], ext[1], 1, yaw[0]),
        OrientedBox3D(c2[0], c2[1], 0, ext[2], ext[3], 1, yaw[1]),
    )


def test_criterion_1_geometry_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst, overlapping = 0.0, 0
    for _ in range(200):
        a, b = _random_pair(rng)
        exact = rotated_bev_iou(a, b)
        overlapping += exact > 0
        worst = max(worst, abs(exact - monte_carlo_bev_iou(a, b, 1_000_000, rng)))
    square = rotated_bev_iou(OrientedBox3D(0, 0, 0, 1, 1, 1), OrientedBox3D(0, 0, 0, 1, 1, 1, math.pi / 4))
    target = 2 * (math.sqrt(2) - 1) / (2 - 2 * (math.sqrt(2) - 1))
    elapsed = time.perf_counter() - t0
    ok = worst <= 0.01 and abs(square - target) <= 1e-6 and abs(square - 0.7071) <= 1e-4 and elapsed < 120
    assert report(
        1,
        "rotated IoU vs Monte Carlo",
        ok,
        f"max |diff| {worst:.4f} over 200 pairs ({overlapping} overlapping), "
        f"45deg square {square:.7f}, {elapsed:.1f} s",
    )


# 2 -------------------------------------------------------------------------


_PERMS = {}


def _exhaustive(values):
    """Minimum total cost and lexicographically smallest optimal pairs, rows <= columns."""
    n, m = values.shape
    key = (n, m)
    if key not in _PERMS:
        _PERMS[key] = np.array(list(itertools.permutations(range(m), n)), dtype=int)
    perms = _PERMS[key]  # lexicographic order
    totals = values[np.arange(n), perms].sum(axis=1)
    best = totals.min()
    k = int(np.argmin(totals))  # first optimum is lexicographically smallest
    return best, list(zip(range(n), perms[k].tolist()))


def _exhaustive_pairs(values):
    n, m = values.shape
    if n <= m:
        return _exhaustive(values)
    # rows outnumber columns: enumerate which row takes each column
    perms = np.array(list(itertools.permutations(range(n), m)), dtype=int)
    totals = values[perms, np.arange(m)].sum(axis=1)
    best = totals.min()
    candidates = [sorted(zip(p.tolist(), range(m))) for p in perms[totals == best]]
    return best, min(candidates)


def test_criterion_2_assignment_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    mismatches, checked = 0, 0
    for n in range(1, 8):
        for m in range(1, 8):
            for _ in range(1000):
                # small integer costs: sums are exact and ties are frequent
                values = rng.integers(0, 20, size=(n, m)).astype(float)
                best, pairs = _exhaustive_pairs(values)
                a = hungarian_solve(CostMatrix(values))
                checked += 1
                if a.total_cost != best or a.pairs() != pairs:
                    mismatches += 1
    elapsed = time.perf_counter() - t0
    ok = mismatches == 0 and elapsed < 60
    assert report(
        2,
        "Hungarian vs exhaustive permutations",
        ok,
        f"{checked} matrices up to 7x7, {mismatches} mismatches, {elapsed:.1f} s",
    )


# 3 -------------------------------------------------------------------------


def _noise_free_error(layout):
    noise = MotionNoise(q_pos=0, q_vel=0, q_size=0, q_yaw=0, r_pos=1e-10, r_size=1e-10, r_yaw=1e-10)
    x0, v = np.array([-3.0, 1.5, -2.07]), np.array([0.35, -0.2, 0.0])

    def det(k):
        return Detection(OrientedBox3D(*(x0 + v * k), 0.8, 0.6, 1.73, 0.3))

    s = kf_init(det(0), layout, noise)
    for k in range(1, 11):
        s = kf_update(kf_predict(s, 1.0, noise), det(k), noise)
    return float(np.linalg.norm(s.position - (x0 + v * 10)))


def _psd_violation(P):
    if not np.array_equal(P, P.T):
        return math.inf
    return max(0.0, -np.linalg.eigvalsh(P).min() / max(1.0, np.abs(P).max()))


def test_criterion_3_kalman():
    errors = {layout.name: _noise_free_error(layout) for layout in (CENTER6, FULLBOX10)}
    rng = np.random.default_rng(11)
    worst = 0.0
    s = None
    for step in range(10_000):
        if step % 200 == 0:
            layout = CENTER6 if rng.random() < 0.5 else FULLBOX10
            noise = MotionNoise(*(10.0 ** rng.uniform(-4, 0, 7)), p0_measured=10 ** rng.uniform(-2, 1),
                                p0_velocity=10 ** rng.uniform(-1, 2))
            s = kf_init(Detection(OrientedBox3D(0, 0, 0, 1, 1, 1)), layout, noise)
        if rng.random() < 0.5:
            s = kf_predict(s, float(rng.uniform(0.5, 2.0)), noise)
        else:
            c = rng.normal(0, 2, 3)
            box = OrientedBox3D(*c, *rng.uniform(0.3, 2, 3), rng.uniform(-4, 4))
            s = kf_update(s, Detection(box), noise)
        worst = max(worst, _psd_violation(s.covariance))
    ok = max(errors.values()) < 1e-6 and worst <= 1e-12
    assert report(
        3,
        "Kalman recovery and PSD fuzz",
        ok,
        ", ".join(f"{k} error {v:.1e} m" for k, v in errors.items())
        + f", worst PSD violation {worst:.1e} over 10000 steps",
    )


# 4 -------------------------------------------------------------------------


def _script(cfg, present):
    """Ids emitted per frame for one static person shown at frames where ``present`` is true."""
    rt = TrackerRuntime(cfg)
    p = person(1.0, -1.0)
    return [
        [o.track_id for o in rt.step(FrameDetections(k, k / 3, (p,) if on else ()))]
        for k, on in enumerate(present)
    ]


def _lifecycle_ok(cfg):
    h, age = cfg.min_hits, cfg.max_age
    # outputs start exactly at the min_hits-th match
    out = _script(cfg, [True] * (h + 2))
    if out != [[]] * (h - 1) + [[1]] * 3:
        return False
    # a gap of max_age misses is bridged with the same id
    out = _script(cfg, [True] * h + [False] * age + [True])
    if out[-1] != [1] or any(out[h : h + age]):
        return False
    # one more miss removes the track; the returning person restarts the warm-up
    out = _script(cfg, [True] * h + [False] * (age + 1) + [True] * h)
    return out[-1] == [2] and not any(out[h : h + age + 1 + h - 1])


def test_criterion_4_lifecycle():
    checked, failures = 0, []
    for variant in Variant:
        for h, age in [(2, 3), (1, 3), (3, 1), (2, 0), (2, 5)]:
            cfg = replace(default_config(variant), min_hits=h, max_age=age)
            checked += 1
            if not _lifecycle_ok(cfg):
                failures.append(f"{variant.name} min_hits={h} max_age={age}")
    assert report(
        4,
        "lifecycle fidelity",
        not failures,
        f"{checked} configurations incl. defaults 2/3 for both variants"
        + (f"; failed: {failures}" if failures else ""),
    )


# 5 -------------------------------------------------------------------------


def _crossing_labels():
    # two people pass within 0.9 m, one drops out for two frames
    per_frame = []
    for k in range(20):
        a = person(-3 + 0.3 * k, -0.45, 0.0)
        b = person(3 - 0.3 * k, 0.45, math.pi)
        per_frame.append([a, b] if k not in (8, 9) else [a])
    return per_frame


def test_criterion_5_closed_loop():
    from overhead_mot import SequenceClip

    clips = [SequenceClip.from_boxes(_crossing_labels(), "crossing")]
    for seed in range(8):
        clips.append(simulate_walkers(n_persons=6, n_frames=60, seed=seed, drop_rate=0, spurious_rate=0).labels)
    results = []
    for variant in Variant:
        for clip in clips:
            pgt = generate_pseudo_gt(clip, variant)
            fed = outputs_to_clip(pgt, n_frames=len(clip))
            out = run_clip(pseudo_gt_config(variant), fed)
            results.append(clear_mot(out, pgt, 0.3))
    ok = all(m.mota == 1.0 and m.idf1 == 1.0 and m.idsw == 0 for m in results)
    worst = min(results, key=lambda m: (m.mota, m.idf1))
    assert report(
        5,
        "closed-loop pseudo-GT",
        ok,
        f"{len(results)} runs, worst MOTA {worst.mota} IDF1 {worst.idf1} IDSW {worst.idsw}",
    )


# 6 -------------------------------------------------------------------------


def _out(frame, tid, x):
    return TrackOutput(frame, tid, GEOMETRY.person_box(x, 0.0))


def test_criterion_6_metric_formulas():
    gt = [_out(f, 1, 0) for f in range(3)] + [_out(f, 2, 3) for f in range(3)]
    pred = [_out(f, 7, 0) for f in range(3)] + [_out(f, 8, 3) for f in range(2)]
    one_fn = clear_mot(pred, gt, 0.3)
    gt4 = [_out(f, 1, 0) for f in range(4)]
    split = [_out(0, 5, 0), _out(1, 5, 0), _out(2, 6, 0), _out(3, 6, 0)]
    one_sw = clear_mot(split, gt4, 0.3)
    id_split = idf1(split, gt4, 0.3)
    ap = average_precision([(0.9, True), (0.8, False), (0.7, True)], 2)
    ok = (
        one_fn.mota == 1 - (1 + 0 + 0) / 6
        and (one_fn.fn, one_fn.fp, one_fn.idsw) == (1, 0, 0)
        and one_sw.mota == 1 - (0 + 0 + 1) / 4 == 0.75
        and id_split == 0.5
        and abs(ap - 5 / 6) <= 1e-9
    )
    assert report(
        6,
        "metric formulas",
        ok,
        f"MOTA {one_fn.mota:.4f} and {one_sw.mota:.4f}, IDF1 {id_split}, AP {ap:.10f}",
    )


# 7 -------------------------------------------------------------------------


def test_criterion_7_synthetic_robustness():
    t0 = time.perf_counter()
    scene = simulate_walkers(
        n_persons=5, n_frames=100, max_speed=0.4, roi_radius=4.5, center_noise=0.05,
        drop_rate=0.10, spurious_rate=0.05, seed=0,
    )
    parts, ok = [], True
    for variant in Variant:
        m = clear_mot(run_clip(default_config(variant), scene.detections), scene.ground_truth, 0.1)
        ok &= m.mota >= 0.80 and m.idf1 >= 0.85
        parts.append(f"{variant.name} MOTA {m.mota:.3f} IDF1 {m.idf1:.3f} IDSW {m.idsw}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 30
    assert report(7, "synthetic walkers at IoU 0.1", ok, "; ".join(parts) + f"; {elapsed:.1f} s")


# 8 -------------------------------------------------------------------------


def _at(r, deg, score=1.0):
    a = math.radians(deg)
    return person(r * math.cos(a), r * math.sin(a), score=score)


def test_criterion_8_distance_slices():
    gt0 = [_at(0.5, 0), _at(1.5, 60), _at(2.5, 120), _at(3.5, 180), _at(4.5, 240)]
    pred0 = [_at(0.5, 0, 0.9), _at(2.5, 120, 0.8), _at(3.5, 180, 0.7), _at(2.2, 300, 0.6), _at(4.8, 30, 0.5)]
    gt1 = [_at(0.8, 0), _at(1.2, 90), _at(3.9, 200)]
    pred1 = [_at(1.2, 90, 0.9), _at(3.9, 200, 0.8), _at(0.3, 180, 0.4)]
    # false positives must not touch any label
    for preds, gts in ((pred0[3:], gt0), (pred1[2:], gt1)):
        assert all(rotated_bev_iou(p.box, g.box) == 0 for p in preds for g in gts)
    rows = detection_metrics_sliced(
        [FrameDetections(0, 0, tuple(pred0)), FrameDetections(1, 1 / 3, tuple(pred1))],
        [FrameDetections(0, 0, tuple(gt0)), FrameDetections(1, 1 / 3, tuple(gt1))],
        EvalConfig(radii=(1.0, 2.0, 3.0, 4.0, 5.0)),
    )
    counts = [(r.tp, r.fp, r.fn) for r in rows]
    expected = [(1, 1, 1), (2, 1, 2), (3, 2, 2), (5, 2, 2), (5, 3, 3)]
    gt_counts = [r.gt_count for r in rows]
    ok = counts == expected and gt_counts == sorted(gt_counts)
    assert report(8, "distance-sliced counts", ok, f"(tp, fp, fn) per radius {counts}, gt {gt_counts}")


# 9 -------------------------------------------------------------------------


def _latency_samples(variant, n_samples=300):
    rng = np.random.default_rng(5)
    cfg = default_config(variant)
    starts = [np.array([math.cos(a), math.sin(a)]) * 3.0 for a in np.linspace(0, 2 * math.pi, 10, endpoint=False)]
    vel = [-0.05 * s for s in starts]

    def frame(k, distractors=0):
        dets = [person(*(s + v * k + rng.normal(0, 0.02, 2)), score=0.9) for s, v in zip(starts, vel)]
        for _ in range(distractors):
            dets.append(person(*rng.uniform(-4, 4, 2), score=0.6))
        return FrameDetections(k, k / 3, tuple(dets))

    rt = TrackerRuntime(cfg)
    for k in range(4):
        rt.step(frame(k))
    assert len(rt.live_tracks) == 10
    timed = [frame(4 + i % 20, distractors=5) for i in range(n_samples)]
    samples = []
    for f in timed:
        probe = copy.deepcopy(rt)  # every sample starts from the same 10 live tracks
        f = FrameDetections(4, f.timestamp, f.detections)
        assert len(probe.live_tracks) == 10 and len(f) == 15
        t0 = time.perf_counter()
        probe.step(f)
        samples.append((time.perf_counter() - t0) * 1e3)
    return latency_percentiles(samples, variant.name)


def test_criterion_9_latency():
    nr = latency_percentiles(list(range(1, 11)))
    reports = [_latency_samples(v) for v in Variant]
    ok = (nr.p50_ms, nr.p90_ms) == (5.0, 9.0) and all(r.p50_ms < 10.0 for r in reports)
    assert report(
        9,
        "per-frame latency",
        ok,
        ", ".join(f"{r.label} p50 {r.p50_ms:.2f} ms p90 {r.p90_ms:.2f} ms" for r in reports)
        + f"; nearest rank [1..10] -> ({nr.p50_ms:g}, {nr.p90_ms:g})",
    )


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
