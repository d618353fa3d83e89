"""Plain-text frame, clip and track file formats.

Frame file: one box per line, ``class cx cy cz dx dy dz yaw [score]``.
Clip: a directory of frame files ``000000.txt, 000001.txt, ...`` plus an
optional ``clip.meta`` holding ``rate_hz`` and ``clip_id`` as ``key = value``.
Track file: ``frame_index track_id class cx cy cz dx dy dz yaw score``.
"""

from __future__ import annotations

import json
import logging
import math
import os
import re
from pathlib import Path
from typing import Iterable, List, Optional, Union

from .core import ClassId, Detection, FrameDetections, OrientedBox3D, SequenceClip
from .tracker import TrackOutput

log = logging.getLogger(__name__)

PathLike = Union[str, os.PathLike]

_FRAME_FILE = re.compile(r"^(\d+)\.txt$")
META_FILE = "clip.meta"


class FormatError(ValueError):
    """Malformed input file; the message carries the offending line number."""

    def __init__(self, message: str, lineno: Optional[int] = None, source: str = ""):
        where = f"{source}:" if source else ""
        where += f"line {lineno}: " if lineno is not None else ""
        super().__init__(where + message)
        self.lineno = lineno


def _fmt(x: float) -> str:
    s = f"{x:.6f}"
    return "0.000000" if s == "-0.000000" else s


def _box_fields(box: OrientedBox3D) -> List[str]:
    out = [_fmt(v) for v in box.as_array()]
    # rounding can push a yaw near +-pi outside [-pi, pi), which would wrap on
    # reading; truncating toward zero keeps it on the same side
    if not -math.pi <= float(out[6]) < math.pi:
        out[6] = _fmt(math.copysign(3.141592, box.yaw))
    return out


def _parse_float(token: str, lineno: int, source: str) -> float:
    # float() accepts "1_000" and "nan"; neither belongs in a frame file
    if "_" in token or "," in token:
        raise FormatError(f"invalid number {token!r}", lineno, source)
    try:
        value = float(token)
    except ValueError:
        raise FormatError(f"invalid number {token!r}", lineno, source) from None
    if not math.isfinite(value):
        raise FormatError(f"non-finite value {token!r}", lineno, source)
    return value


def _parse_class(token: str, lineno: int, source: str) -> ClassId:
    key = token.lower()
    if key == "pedestrian":
        key = "person"
    try:
        return ClassId(key)
    except ValueError:
        raise FormatError(f"unsupported class {token!r}", lineno, source) from None


def _parse_box(tokens: List[str], lineno: int, source: str) -> OrientedBox3D:
    cx, cy, cz, dx, dy, dz, yaw = (_parse_float(t, lineno, source) for t in tokens)
    for name, v in (("dx", dx), ("dy", dy), ("dz", dz)):
        if v <= 0:
            raise FormatError(f"non-positive extent {name}={v}", lineno, source)
    return OrientedBox3D(cx, cy, cz, dx, dy, dz, yaw)


def _clamp_score(score: float, lineno: int, source: str) -> float:
    if 0.0 <= score <= 1.0:
        return score
    clamped = min(1.0, max(0.0, score))
    log.warning("%sline %d: score %g clamped to %g", f"{source}:" if source else "", lineno, score, clamped)
    return clamped


def _content_lines(content: str):
    for lineno, line in enumerate(content.splitlines(), start=1):
        stripped = line.strip()
        if stripped and not stripped.startswith("#"):
            yield lineno, stripped.split()


def parse_frame(
    content: str,
    expect_scores: bool = False,
    frame_index: int = 0,
    timestamp: float = 0.0,
    source: str = "",
) -> FrameDetections:
    """Parse one frame file.

    Label files (``expect_scores=False``) may omit the score column; missing
    scores become 1.0. Detection files must carry it.
    """
    dets = []
    for lineno, tokens in _content_lines(content):
        if len(tokens) not in (8, 9):
            raise FormatError(f"expected 8 or 9 fields, got {len(tokens)}", lineno, source)
        if expect_scores and len(tokens) != 9:
            raise FormatError("detection line is missing its score", lineno, source)
        cls = _parse_class(tokens[0], lineno, source)
        box = _parse_box(tokens[1:8], lineno, source)
        score = 1.0
        if len(tokens) == 9:
            score = _clamp_score(_parse_float(tokens[8], lineno, source), lineno, source)
        dets.append(Detection(box, score, cls))
    return FrameDetections(frame_index, timestamp, tuple(dets))


def format_frame(frame: FrameDetections, with_scores: bool = True) -> str:
    lines = []
    for d in frame.detections:
        fields = [d.class_id.value] + _box_fields(d.box)
        if with_scores:
            fields.append(_fmt(d.score))
        lines.append(" ".join(fields))
    return "".join(line + "\n" for line in lines)


# -- clips -----------------------------------------------------------------


def read_meta(path: Path) -> dict:
    meta = {}
    if not path.exists():
        return meta
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FormatError("expected 'key = value'", lineno, str(path))
        key, value = (p.strip() for p in line.split("=", 1))
        meta[key] = value
    return meta


def load_clip(path: PathLike, expect_scores: bool = False) -> SequenceClip:
    root = Path(path)
    if not root.is_dir():
        raise FileNotFoundError(f"clip directory not found: {root}")
    indexed = {}
    for entry in root.iterdir():
        m = _FRAME_FILE.match(entry.name)
        if m and entry.is_file():
            indexed[int(m.group(1))] = entry
    meta = read_meta(root / META_FILE)
    try:
        rate_hz = float(meta.get("rate_hz", 3.0))
    except ValueError:
        raise FormatError(f"bad rate_hz {meta['rate_hz']!r}", source=str(root / META_FILE)) from None
    clip_id = meta.get("clip_id", root.name)
    if indexed:
        for i in range(max(indexed) + 1):
            if i not in indexed:
                raise FormatError(f"missing frame file {i:06d}.txt", source=str(root))
    frames = []
    for i in sorted(indexed):
        text = indexed[i].read_text(encoding="utf-8")
        frames.append(parse_frame(text, expect_scores, i, i / rate_hz, str(indexed[i])))
    return SequenceClip(clip_id, tuple(frames), rate_hz)


def write_clip(clip: SequenceClip, path: PathLike, with_scores: bool = True) -> Path:
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    for frame in clip.frames:
        (root / f"{frame.frame_index:06d}.txt").write_text(
            format_frame(frame, with_scores), encoding="utf-8"
        )
    (root / META_FILE).write_text(
        f"clip_id = {clip.clip_id}\nrate_hz = {clip.rate_hz!r}\n", encoding="utf-8"
    )
    return root


# -- tracks ----------------------------------------------------------------


def write_tracks(outputs: Iterable[TrackOutput]) -> str:
    rows = sorted(outputs, key=lambda o: (o.frame_index, o.track_id))
    lines = []
    for o in rows:
        fields = [str(o.frame_index), str(o.track_id), o.class_id.value]
        fields += _box_fields(o.box)
        fields.append(_fmt(o.score))
        lines.append(" ".join(fields))
    return "".join(line + "\n" for line in lines)


def parse_tracks(content: str, source: str = "") -> List[TrackOutput]:
    out = []
    for lineno, tokens in _content_lines(content):
        if len(tokens) != 11:
            raise FormatError(f"expected 11 fields, got {len(tokens)}", lineno, source)
        try:
            frame_index, track_id = int(tokens[0]), int(tokens[1])
        except ValueError:
            raise FormatError("frame index and track id must be integers", lineno, source) from None
        if frame_index < 0 or track_id < 1:
            raise FormatError("frame index must be >= 0 and track id >= 1", lineno, source)
        cls = _parse_class(tokens[2], lineno, source)
        box = _parse_box(tokens[3:10], lineno, source)
        score = _clamp_score(_parse_float(tokens[10], lineno, source), lineno, source)
        out.append(TrackOutput(frame_index, track_id, box, score, cls))
    return out


def load_tracks(path: PathLike) -> List[TrackOutput]:
    p = Path(path)
    return parse_tracks(p.read_text(encoding="utf-8"), str(p))


# -- labelCloud export -----------------------------------------------------


def labelcloud_to_frame(content: str, frame_index: int = 0, timestamp: float = 0.0) -> FrameDetections:
    """Convert a labelCloud centroid-format JSON label into a frame.

    Reads ``objects[*].centroid{x,y,z}``, ``dimensions{length,width,height}``
    and ``rotations.z`` (degrees). Only person-like names are accepted.
    """
    data = json.loads(content)
    dets = []
    for k, obj in enumerate(data.get("objects", [])):
        try:
            name = str(obj.get("name", "person"))
            c, d = obj["centroid"], obj["dimensions"]
            yaw = math.radians(float(obj.get("rotations", {}).get("z", 0.0)))
            box = OrientedBox3D(
                c["x"], c["y"], c["z"], d["length"], d["width"], d["height"], yaw
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"object {k}: {exc}") from None
        dets.append(Detection(box, 1.0, _parse_class(name, k + 1, "labelCloud")))
    return FrameDetections(frame_index, timestamp, tuple(dets))
