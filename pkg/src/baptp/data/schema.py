"""Track records and the line-delimited dataset file.

One JSON object per line, one pedestrian track per object::

    {"track_id": "seq03/ped12", "image_width": 1920, "image_height": 1024,
     "fps": 20.0,
     "frames": [
        {"frame": 0, "box": [x_tl, y_tl, x_br, y_br],     # pixels
         "body_orientation": 87.5,                         # degrees [0, 360), optional
         "head_orientation": null,                         # degrees [0, 360), optional
         "pose": [x0, y0, ..., x16, y16],                  # 34 pixel values, optional
         "speed": 8.3,                                     # ego speed, m/s
         "yaw_rate": 0.01,                                 # ego yaw rate, rad/s, optional
         "yaw": null,                                      # ego yaw, rad, optional
         "keyframe": true},
        ...]}

Optional fields may be ``null`` or omitted. Orientation 0 means the
pedestrian faces the camera. ``frame`` must strictly increase within a track.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, NamedTuple, Sequence

from .._io import atomic_write_text

POSE_DIM = 34


class DataError(ValueError):
    """Malformed or inconsistent dataset content."""


class BoundingBox(NamedTuple):
    x_tl: float
    y_tl: float
    x_br: float
    y_br: float

    @property
    def width(self) -> float:
        return self.x_br - self.x_tl

    @property
    def height(self) -> float:
        return self.y_br - self.y_tl

    @property
    def center(self) -> tuple[float, float]:
        return (0.5 * (self.x_tl + self.x_br), 0.5 * (self.y_tl + self.y_br))

    @property
    def area(self) -> float:
        return max(0.0, self.width) * max(0.0, self.height)


@dataclass(frozen=True)
class FrameRecord:
    frame: int
    box: BoundingBox
    body_orientation: float | None = None
    head_orientation: float | None = None
    pose: tuple[float, ...] | None = None
    speed: float = 0.0
    yaw_rate: float | None = None
    yaw: float | None = None
    keyframe: bool = True

    def __post_init__(self):
        if not isinstance(self.box, BoundingBox):
            if len(self.box) != 4:
                raise DataError(f"box needs 4 values, got {len(self.box)}")
            object.__setattr__(self, "box", BoundingBox(*(float(v) for v in self.box)))
        for name in ("body_orientation", "head_orientation"):
            v = getattr(self, name)
            if v is not None and not (0.0 <= v < 360.0):
                raise DataError(f"{name} {v} outside [0, 360)")
        if self.pose is not None and len(self.pose) != POSE_DIM:
            raise DataError(f"pose has {len(self.pose)} values, expected {POSE_DIM}")
        if self.box.x_tl > self.box.x_br or self.box.y_tl > self.box.y_br:
            raise DataError(f"box {tuple(self.box)} has top-left below/right of bottom-right")

    @property
    def odometry(self) -> tuple[float, float]:
        """(speed, yaw rate); yaw stands in when only yaw is recorded."""
        second = self.yaw_rate if self.yaw_rate is not None else self.yaw
        return (self.speed, 0.0 if second is None else second)


@dataclass(frozen=True)
class PedestrianTrack:
    track_id: str
    image_width: float
    image_height: float
    frames: tuple[FrameRecord, ...] = field(default_factory=tuple)
    fps: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))
        if self.image_width <= 0 or self.image_height <= 0:
            raise DataError(f"track {self.track_id}: image dimensions must be positive")
        idx = [f.frame for f in self.frames]
        for k in range(1, len(idx)):
            if idx[k] <= idx[k - 1]:
                raise DataError(f"track {self.track_id}: non-increasing frame_index "
                                f"{idx[k - 1]} -> {idx[k]} at position {k}")

    def __len__(self) -> int:
        return len(self.frames)

    def with_frames(self, frames: Iterable[FrameRecord], suffix: str = "") -> "PedestrianTrack":
        return replace(self, frames=tuple(frames), track_id=self.track_id + suffix)


def _opt_float(v):
    return None if v is None else float(v)


def frame_from_dict(d: dict) -> FrameRecord:
    try:
        box = BoundingBox(*(float(x) for x in d["box"]))
    except (KeyError, TypeError) as exc:
        raise DataError(f"frame record needs a 4-value 'box': {exc}") from None
    pose = d.get("pose")
    return FrameRecord(
        frame=int(d["frame"]),
        box=box,
        body_orientation=_opt_float(d.get("body_orientation")),
        head_orientation=_opt_float(d.get("head_orientation")),
        pose=None if pose is None else tuple(float(x) for x in pose),
        speed=float(d.get("speed", 0.0)),
        yaw_rate=_opt_float(d.get("yaw_rate")),
        yaw=_opt_float(d.get("yaw")),
        keyframe=bool(d.get("keyframe", True)),
    )


def frame_to_dict(f: FrameRecord) -> dict:
    return {
        "frame": f.frame,
        "box": list(f.box),
        "body_orientation": f.body_orientation,
        "head_orientation": f.head_orientation,
        "pose": None if f.pose is None else list(f.pose),
        "speed": f.speed,
        "yaw_rate": f.yaw_rate,
        "yaw": f.yaw,
        "keyframe": f.keyframe,
    }


def track_from_dict(d: dict) -> PedestrianTrack:
    unknown = set(d) - {"track_id", "image_width", "image_height", "fps", "frames"}
    if unknown:
        raise DataError(f"unknown track fields {sorted(unknown)}")
    frames = d.get("frames", [])
    prev = None
    for k, fd in enumerate(frames):
        idx = fd.get("frame")
        if prev is not None and idx is not None and idx <= prev:
            raise DataError(f"non-increasing frame_index {prev} -> {idx} at frame position {k}")
        prev = idx
    return PedestrianTrack(
        track_id=str(d["track_id"]),
        image_width=float(d["image_width"]),
        image_height=float(d["image_height"]),
        frames=tuple(frame_from_dict(f) for f in frames),
        fps=_opt_float(d.get("fps")),
    )


def track_to_dict(t: PedestrianTrack) -> dict:
    return {
        "track_id": t.track_id,
        "image_width": t.image_width,
        "image_height": t.image_height,
        "fps": t.fps,
        "frames": [frame_to_dict(f) for f in t.frames],
    }


def parse_lines(lines: Iterable[str]) -> list[PedestrianTrack]:
    tracks = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            tracks.append(track_from_dict(json.loads(line)))
        except (DataError, KeyError, ValueError, TypeError) as exc:
            raise DataError(f"line {lineno}: {exc}") from None
    return tracks


def parse_dataset(path) -> list[PedestrianTrack]:
    with open(path, encoding="utf-8") as fh:
        return parse_lines(fh)


def dumps_tracks(tracks: Sequence[PedestrianTrack]) -> str:
    out = []
    for t in tracks:
        d = track_to_dict(t)
        for f in d["frames"]:
            for v in f.values():
                if isinstance(v, float) and not math.isfinite(v):
                    raise DataError(f"track {t.track_id}: non-finite value")
        out.append(json.dumps(d, separators=(",", ":")))
    return "".join(line + "\n" for line in out)


def write_dataset(path, tracks: Sequence[PedestrianTrack]) -> None:
    atomic_write_text(path, dumps_tracks(tracks))
