"""Shared builders for tests."""
from __future__ import annotations

import numpy as np

from baptp.data import FrameRecord, PedestrianTrack
from baptp.model import MODALITIES, MODALITY_DIMS, Batch, ModelConfig


def random_batch(cfg: ModelConfig, size: int, rng: np.random.Generator, p_missing: float = 0.3) -> Batch:
    """Normalized-looking random inputs for every modality with random gaps."""
    n, m = cfg.obs_len, cfg.pred_len
    inputs, masks = {}, {}
    for mod in MODALITIES:
        if mod == "BB":
            mask = np.ones((size, n), dtype=bool)
        else:
            mask = rng.random((size, n)) >= p_missing
        x = rng.normal(scale=0.5, size=(size, n, MODALITY_DIMS[mod]))
        inputs[mod] = np.where(mask[..., None], x, 0.0)
        masks[mod] = mask
    return Batch(
        inputs=inputs,
        masks=masks,
        odometry=rng.normal(size=(size, m, 2)),
        target=rng.normal(size=(size, m, 4)),
        anchors=rng.uniform(0, 500, size=(size, 4)),
        future_keyframes=np.ones((size, m), dtype=bool),
        meta=[(f"t{i}", 0) for i in range(size)],
    )


def box_track(track_id: str, frames, boxes, keyframes=None, **attrs) -> PedestrianTrack:
    keyframes = keyframes if keyframes is not None else [True] * len(frames)
    recs = []
    for k, (f, b) in enumerate(zip(frames, boxes)):
        extra = {name: vals[k] for name, vals in attrs.items()}
        recs.append(FrameRecord(frame=f, box=tuple(float(v) for v in b), keyframe=keyframes[k], **extra))
    return PedestrianTrack(track_id, 1920.0, 1024.0, tuple(recs))
