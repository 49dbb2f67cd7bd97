"""Densify keyframe-only annotations by interpolation."""
from __future__ import annotations

from .schema import BoundingBox, DataError, FrameRecord, PedestrianTrack


def lerp(a: float, b: float, w: float) -> float:
    return a + w * (b - a)


def lerp_angle(a: float, b: float, w: float) -> float:
    """Interpolate degrees along the shorter arc; result in [0, 360)."""
    delta = (b - a + 180.0) % 360.0 - 180.0
    out = (a + w * delta) % 360.0
    return 0.0 if out >= 360.0 else out


def _opt(a, b, fn, w):
    if a is None or b is None:
        return None
    return fn(a, b, w)


def interpolate_frames(a: FrameRecord, b: FrameRecord, frame: int) -> FrameRecord:
    w = (frame - a.frame) / (b.frame - a.frame)
    pose = None
    if a.pose is not None and b.pose is not None:
        pose = tuple(lerp(p, q, w) for p, q in zip(a.pose, b.pose))
    return FrameRecord(
        frame=frame,
        box=BoundingBox(*(lerp(p, q, w) for p, q in zip(a.box, b.box))),
        body_orientation=_opt(a.body_orientation, b.body_orientation, lerp_angle, w),
        head_orientation=_opt(a.head_orientation, b.head_orientation, lerp_angle, w),
        pose=pose,
        speed=lerp(a.speed, b.speed, w),
        yaw_rate=_opt(a.yaw_rate, b.yaw_rate, lerp, w),
        yaw=_opt(a.yaw, b.yaw, lerp, w),
        keyframe=False,
    )


def interpolate_track(track: PedestrianTrack, factor: int = 4) -> PedestrianTrack:
    """Fill the frames between consecutive keyframes up to ``factor`` apart.

    Keyframes are copied unchanged. Larger gaps (e.g. occlusions) are left
    open for :func:`split_on_gaps`. An attribute missing at either end stays
    missing in between.
    """
    if factor < 1:
        raise ValueError(f"factor must be >= 1, got {factor}")
    keys = [f for f in track.frames if f.keyframe]
    if len(keys) < 2:
        raise DataError(f"track {track.track_id}: interpolation needs at least 2 keyframes, found {len(keys)}")
    if factor == 1:
        return track
    out = [keys[0]]
    for a, b in zip(keys, keys[1:]):
        if b.frame - a.frame <= factor:
            out.extend(interpolate_frames(a, b, f) for f in range(a.frame + 1, b.frame))
        out.append(b)
    return track.with_frames(out)
