"""Command-line entry point: ``overhead-mot <subcommand> ...``.

Exit status is 0 on success, 1 on a usage error and 2 on a data error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import List, Optional, Sequence

from .bench import bench_tracker
from .core import EvalConfig, TrackerConfig, Variant, default_config
from .evaluation import DetectionMetricsRow, LatencyReport, MotMetrics, detection_metrics_sliced, mot_metrics
from .formats import FormatError, load_clip, load_tracks, write_tracks
from .tracker import generate_pseudo_gt, run_clip

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2

VARIANTS = {"ab3dmot": Variant.AB3DMOT_STYLE, "simpletrack": Variant.SIMPLETRACK_STYLE}


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _float_list(text: str) -> List[float]:
    try:
        values = [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="overhead-mot", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    p = sub.add_parser("track", help="run a tracker over a detection clip")
    p.add_argument("--variant", choices=sorted(VARIANTS), default=None)
    p.add_argument("--detections", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--config", type=Path, help="key = value tracker config file")

    p = sub.add_parser("pseudo-gt", help="assign track ids to a labeled clip")
    p.add_argument("--labels", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--variant", choices=sorted(VARIANTS), default="ab3dmot")

    p = sub.add_parser("eval-det", help="distance-sliced detection metrics")
    p.add_argument("--detections", required=True, type=Path)
    p.add_argument("--labels", required=True, type=Path)
    p.add_argument("--radii", type=_float_list, default=None)
    p.add_argument("--iou", type=float, default=None, help="true-positive BEV IoU (default 0.10)")
    p.add_argument("--format", choices=("table", "records"), default="table")
    p.add_argument("--dump-curves", type=Path, help="write PR-curve points as records")

    p = sub.add_parser("eval-mot", help="CLEAR-MOT and IDF1 for a track file")
    p.add_argument("--tracks", required=True, type=Path)
    p.add_argument("--gt", required=True, type=Path)
    p.add_argument("--iou", type=_float_list, default=None)
    p.add_argument("--format", choices=("table", "records"), default="table")

    p = sub.add_parser("bench", help="per-frame tracker latency percentiles")
    p.add_argument("--variant", choices=sorted(VARIANTS) + ["both"], default="both")
    p.add_argument("--detections", required=True, type=Path)
    p.add_argument("--repeats", type=int, default=1)
    return parser


# -- reporting -------------------------------------------------------------


def format_detection_table(rows: Sequence[DetectionMetricsRow]) -> str:
    header = f"{'r (m)':>6} {'Precision':>9} {'Recall':>7} {'F1':>6} {'AP':>6} {'mIoU':>6} {'TP':>5} {'FP':>5} {'FN':>5}"
    lines = [header]
    for r in rows:
        lines.append(
            f"{r.radius:>6.1f} {r.precision:>9.3f} {r.recall:>7.3f} {r.f1:>6.3f} {r.ap:>6.3f} "
            f"{r.miou:>6.3f} {r.tp:>5d} {r.fp:>5d} {r.fn:>5d}"
        )
    return "\n".join(lines) + "\n"


def format_detection_records(rows: Sequence[DetectionMetricsRow]) -> str:
    return "".join(
        f"radius={r.radius:g} precision={r.precision:.6f} recall={r.recall:.6f} f1={r.f1:.6f} "
        f"ap={r.ap:.6f} miou={r.miou:.6f} tp={r.tp} fp={r.fp} fn={r.fn}\n"
        for r in rows
    )


def format_mot(metrics: Sequence[MotMetrics], fmt: str = "table") -> str:
    if fmt == "records":
        return "".join(
            f"iou={m.iou_threshold:g} mota={m.mota:.6f} idf1={m.idf1:.6f} motp={m.motp:.6f} "
            f"fp={m.fp} fn={m.fn} idsw={m.idsw} gt={m.gt_count}\n"
            for m in metrics
        )
    blocks = []
    for m in metrics:
        blocks.append(
            f"IoU >= {m.iou_threshold:g}\n"
            f"  MOTA  {m.mota:.3f}\n  IDF1  {m.idf1:.3f}\n  MOTP  {m.motp:.3f}\n"
            f"  FP {m.fp}  FN {m.fn}  IDSW {m.idsw}  GT {m.gt_count}\n"
        )
    return "\n".join(blocks)


def format_latency(reports: Sequence[LatencyReport]) -> str:
    lines = [f"{'tracker':<20} {'p50 (ms)':>9} {'p90 (ms)':>9} {'samples':>8}"]
    for r in reports:
        lines.append(f"{r.label:<20} {r.p50_ms:>9.3f} {r.p90_ms:>9.3f} {r.sample_count:>8d}")
    return "\n".join(lines) + "\n"


# -- commands --------------------------------------------------------------


def _load_nonempty(path: Path, expect_scores: bool):
    clip = load_clip(path, expect_scores=expect_scores)
    if not clip.frames:
        raise DataError(f"no frame files found in {path}")
    return clip


def _tracker_config(args) -> TrackerConfig:
    """``--config`` supplies the base settings; an explicit ``--variant`` wins over its variant."""
    if args.config is not None:
        cfg = TrackerConfig.from_text(args.config.read_text(encoding="utf-8"))
        if args.variant is not None:
            cfg = replace(cfg, variant=VARIANTS[args.variant])
        return cfg
    return default_config(VARIANTS[args.variant or "ab3dmot"])


def _cmd_track(args, out) -> None:
    clip = _load_nonempty(args.detections, expect_scores=True)
    outputs = run_clip(_tracker_config(args), clip)
    args.out.write_text(write_tracks(outputs), encoding="utf-8")
    print(f"wrote {len(outputs)} track boxes over {len(clip)} frames to {args.out}", file=out)


def _cmd_pseudo_gt(args, out) -> None:
    clip = _load_nonempty(args.labels, expect_scores=False)
    outputs = generate_pseudo_gt(clip, VARIANTS[args.variant])
    args.out.write_text(write_tracks(outputs), encoding="utf-8")
    n_ids = len({o.track_id for o in outputs})
    print(f"wrote {len(outputs)} labeled boxes with {n_ids} ids to {args.out}", file=out)


def _cmd_eval_det(args, out) -> None:
    cfg = EvalConfig()
    try:
        if args.radii is not None:
            cfg = replace(cfg, radii=tuple(args.radii))
        if args.iou is not None:
            cfg = replace(cfg, tp_iou_min=args.iou)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    preds = _load_nonempty(args.detections, expect_scores=True)
    labels = _load_nonempty(args.labels, expect_scores=False)
    curves = {} if args.dump_curves else None
    rows = detection_metrics_sliced(preds.frames, labels.frames, cfg, curves)
    text = format_detection_table(rows) if args.format == "table" else format_detection_records(rows)
    out.write(text)
    if curves is not None:
        lines = []
        for radius, (scores, precision, recall) in curves.items():
            for s, p, r in zip(scores, precision, recall):
                lines.append(f"radius={radius:g} score={s:.6f} precision={p:.6f} recall={r:.6f}\n")
        args.dump_curves.write_text("".join(lines), encoding="utf-8")


def _cmd_eval_mot(args, out) -> None:
    thresholds = args.iou if args.iou is not None else list(EvalConfig().mot_iou_thresholds)
    for t in thresholds:
        if not 0.0 < t <= 1.0:
            raise UsageError(f"IoU threshold {t} outside (0, 1]")
    pred = load_tracks(args.tracks)
    gt = load_tracks(args.gt)
    out.write(format_mot(mot_metrics(pred, gt, thresholds), args.format))


def _cmd_bench(args, out) -> None:
    if args.repeats < 1:
        raise UsageError("--repeats must be >= 1")
    clip = _load_nonempty(args.detections, expect_scores=True)
    names = sorted(VARIANTS) if args.variant == "both" else [args.variant]
    reports = [bench_tracker(default_config(VARIANTS[n]), clip, args.repeats) for n in names]
    out.write(format_latency(reports))


COMMANDS = {
    "track": _cmd_track,
    "pseudo-gt": _cmd_pseudo_gt,
    "eval-det": _cmd_eval_det,
    "eval-mot": _cmd_eval_mot,
    "bench": _cmd_bench,
}


def cli_main(argv: Optional[Sequence[str]] = None, out=None, err=None) -> int:
    out = out if out is not None else sys.stdout
    err = err if err is not None else sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=err)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        COMMANDS[args.command](args, out)
    except UsageError as exc:
        print(f"overhead-mot {args.command}: {exc}", file=err)
        return EXIT_USAGE
    except (DataError, FormatError, ValueError, OSError) as exc:
        print(f"overhead-mot {args.command}: {exc}", file=err)
        return EXIT_DATA
    return EXIT_OK


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
