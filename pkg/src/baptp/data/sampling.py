"""Track splitting, window sampling, normalization and batching."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from ..model.network import Batch
from .schema import POSE_DIM, PedestrianTrack

FEATURE_DIMS = {"BO": 1, "HO": 1, "P": POSE_DIM}


@dataclass(frozen=True)
class Sample:
    """``n`` observed steps and ``m`` future steps cut from one track.

    Missing feature values are zero with ``masks[mod]`` False. When
    ``normalized`` is set, boxes are relative to ``anchor_box`` (the first
    observed box), pose is divided by the image size and orientations by 360.
    """

    track_id: str
    start_frame: int
    past_boxes: np.ndarray
    features: dict[str, np.ndarray]
    masks: dict[str, np.ndarray]
    future_odometry: np.ndarray
    future_boxes: np.ndarray
    anchor_box: np.ndarray
    future_keyframes: np.ndarray
    image_width: float
    image_height: float
    normalized: bool = False

    @property
    def obs_len(self) -> int:
        return self.past_boxes.shape[0]

    @property
    def pred_len(self) -> int:
        return self.future_boxes.shape[0]

    @property
    def ends_on_keyframe(self) -> bool:
        return bool(self.future_keyframes[-1])


def split_on_gaps(track: PedestrianTrack, n: int, m: int) -> list[PedestrianTrack]:
    """Maximal runs of consecutive frame indices, dropping runs shorter than ``n + m``."""
    runs: list[list] = []
    for f in track.frames:
        if runs and f.frame == runs[-1][-1].frame + 1:
            runs[-1].append(f)
        else:
            runs.append([f])
    keep = [r for r in runs if len(r) >= n + m]
    if len(keep) == 1 and len(keep[0]) == len(track.frames):
        return [track]
    return [track.with_frames(r, suffix=f"#{k}") for k, r in enumerate(keep)]


def window_starts(length: int, n: int, m: int, stride: int) -> range:
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    return range(0, max(length - (n + m), -1) + 1, stride)


def _frame_features(frames) -> tuple[dict, dict]:
    n = len(frames)
    feats = {k: np.zeros((n, d)) for k, d in FEATURE_DIMS.items()}
    masks = {k: np.zeros(n, dtype=bool) for k in ("BB", *FEATURE_DIMS)}
    masks["BB"][:] = True
    for t, f in enumerate(frames):
        if f.body_orientation is not None:
            feats["BO"][t, 0] = f.body_orientation
            masks["BO"][t] = True
        if f.head_orientation is not None:
            feats["HO"][t, 0] = f.head_orientation
            masks["HO"][t] = True
        if f.pose is not None:
            feats["P"][t] = f.pose
            masks["P"][t] = True
    return feats, masks


def make_sample(track: PedestrianTrack, start: int, n: int, m: int) -> Sample:
    frames = track.frames[start:start + n + m]
    if len(frames) != n + m:
        raise ValueError(f"track {track.track_id} too short for a window at {start}")
    past, fut = frames[:n], frames[n:]
    feats, masks = _frame_features(past)
    past_boxes = np.array([f.box for f in past], dtype=np.float64)
    return Sample(
        track_id=track.track_id,
        start_frame=frames[0].frame,
        past_boxes=past_boxes,
        features=feats,
        masks=masks,
        future_odometry=np.array([f.odometry for f in fut], dtype=np.float64),
        future_boxes=np.array([f.box for f in fut], dtype=np.float64),
        anchor_box=past_boxes[0].copy(),
        future_keyframes=np.array([f.keyframe for f in fut], dtype=bool),
        image_width=track.image_width,
        image_height=track.image_height,
    )


def sample_windows(track: PedestrianTrack, n: int, m: int, stride: int,
                   require_keyframe_end: bool = False) -> list[Sample]:
    """Windows ``[i, i+n+m)`` for ``i = 0, stride, ...`` over a gapless track."""
    out = []
    for i in window_starts(len(track), n, m, stride):
        if require_keyframe_end and not track.frames[i + n + m - 1].keyframe:
            continue
        out.append(make_sample(track, i, n, m))
    return out


def build_samples(tracks: Sequence[PedestrianTrack], n: int, m: int, stride: int,
                  require_keyframe_end: bool = False) -> list[Sample]:
    """Split every track on gaps and cut windows from each piece."""
    out = []
    for t in tracks:
        for piece in split_on_gaps(t, n, m):
            out.extend(sample_windows(piece, n, m, stride, require_keyframe_end))
    return out


def normalize_sample(s: Sample) -> Sample:
    if s.normalized:
        return s
    if s.image_width <= 0 or s.image_height <= 0:
        raise ValueError("image dimensions must be positive")
    scale = np.tile([s.image_width, s.image_height], POSE_DIM // 2)
    feats = {
        "BO": s.features["BO"] / 360.0,
        "HO": s.features["HO"] / 360.0,
        "P": s.features["P"] / scale,
    }
    return replace(s, past_boxes=s.past_boxes - s.anchor_box, future_boxes=s.future_boxes - s.anchor_box,
                   features=feats, normalized=True)


def denormalize_sample(s: Sample) -> Sample:
    if not s.normalized:
        return s
    scale = np.tile([s.image_width, s.image_height], POSE_DIM // 2)
    feats = {
        "BO": s.features["BO"] * 360.0,
        "HO": s.features["HO"] * 360.0,
        "P": s.features["P"] * scale,
    }
    return replace(s, past_boxes=s.past_boxes + s.anchor_box, future_boxes=s.future_boxes + s.anchor_box,
                   features=feats, normalized=False)


def denormalize_predictions(pred: np.ndarray, anchor_box: np.ndarray) -> np.ndarray:
    """Relative boxes ``[..., m, 4]`` back to pixels."""
    anchor = np.asarray(anchor_box, dtype=np.float64)
    return np.asarray(pred) + anchor[..., None, :]


def collate(samples: Sequence[Sample]) -> Batch:
    """Stack normalized samples into a model :class:`Batch`."""
    if not samples:
        raise ValueError("cannot collate an empty sample list")
    norm = [normalize_sample(s) for s in samples]
    inputs = {"BB": np.stack([s.past_boxes for s in norm])}
    masks = {"BB": np.stack([s.masks["BB"] for s in norm])}
    for k in FEATURE_DIMS:
        inputs[k] = np.stack([s.features[k] for s in norm])
        masks[k] = np.stack([s.masks[k] for s in norm])
    return Batch(
        inputs=inputs,
        masks=masks,
        odometry=np.stack([s.future_odometry for s in norm]),
        target=np.stack([s.future_boxes for s in norm]),
        anchors=np.stack([s.anchor_box for s in norm]),
        future_keyframes=np.stack([s.future_keyframes for s in norm]),
        meta=[(s.track_id, s.start_frame) for s in norm],
    )
