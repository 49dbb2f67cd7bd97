"""IoU and attaching detector attributes to ground-truth boxes."""
from __future__ import annotations

from dataclasses import replace
from typing import Mapping, Sequence

from .schema import BoundingBox, PedestrianTrack


def iou(a: Sequence[float], b: Sequence[float]) -> float:
    ax0, ay0, ax1, ay1 = a
    bx0, by0, bx1, by1 = b
    iw = min(ax1, bx1) - max(ax0, bx0)
    ih = min(ay1, by1) - max(ay0, by0)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = (ax1 - ax0) * (ay1 - ay0) + (bx1 - bx0) * (by1 - by0) - inter
    if union <= 0:
        return 0.0
    return inter / union


def match_detections(gt_boxes: Sequence[Sequence[float]],
                     detections: Sequence[Mapping]) -> list[dict | None]:
    """For every ground-truth box, the attributes of its highest-IoU detection.

    Each detection is a mapping with a ``"box"`` entry plus attributes.
    Ground-truth boxes are matched independently (one detection may serve
    several), ties go to the lowest detection index, and a best IoU of 0
    leaves the box unmatched (``None``).
    """
    out: list[dict | None] = []
    for gt in gt_boxes:
        best, best_iou = None, 0.0
        for det in detections:
            v = iou(gt, det["box"])
            if v > best_iou:
                best, best_iou = det, v
        out.append(None if best is None else {k: v for k, v in best.items() if k != "box"})
    return out


def attach_detections(track: PedestrianTrack,
                      detections_by_frame: Mapping[int, Sequence[Mapping]],
                      attributes: Sequence[str] = ("pose", "body_orientation")) -> PedestrianTrack:
    """Replace ``attributes`` of every frame with those of its matched detection.

    Frames without a match get the attributes cleared (masked downstream).
    """
    frames = []
    for f in track.frames:
        match = match_detections([f.box], detections_by_frame.get(f.frame, ()))[0]
        upd = {}
        for name in attributes:
            val = None if match is None else match.get(name)
            if name == "pose" and val is not None:
                val = tuple(float(x) for x in val)
            upd[name] = val
        frames.append(replace(f, **upd))
    return track.with_frames(frames)



