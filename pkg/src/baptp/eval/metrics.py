"""Box metrics in pixel space.

All functions take ``[I, m, 4]`` arrays of (x_tl, y_tl, x_br, y_br). The
optional ``step_mask`` ([I, m] booleans) restricts which timesteps count,
e.g. to hand-labelled keyframes.
"""
from __future__ import annotations

import numpy as np


def _check(pred, gt):
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape or pred.ndim != 3 or pred.shape[-1] != 4:
        raise ValueError(f"expected matching [I, m, 4] arrays, got {pred.shape} and {gt.shape}")
    return pred, gt


def _masked_mean(sq: np.ndarray, mask: np.ndarray | None) -> float:
    # sq: [I, k, c]
    if mask is None:
        return float(sq.mean())
    w = np.broadcast_to(mask[..., None], sq.shape)
    count = int(w.sum())
    if count == 0:
        raise ValueError("no timesteps selected by the step mask")
    return float(sq[w].sum() / count)


def mse_boxes(pred, gt, horizon: int | None = None, step_mask=None) -> float:
    """Mean squared corner error over samples, the first ``horizon`` steps and
    the four coordinates."""
    pred, gt = _check(pred, gt)
    m = pred.shape[1]
    k = m if horizon is None else horizon
    if not 1 <= k <= m:
        raise ValueError(f"horizon {k} outside 1..{m}")
    sq = (pred[:, :k] - gt[:, :k]) ** 2
    mask = None if step_mask is None else np.asarray(step_mask, dtype=bool)[:, :k]
    return _masked_mean(sq, mask)


def box_centers(boxes: np.ndarray) -> np.ndarray:
    return 0.5 * (boxes[..., :2] + boxes[..., 2:])


def c_mse(pred, gt, step_mask=None) -> float:
    """Mean squared center error over all samples, steps and both axes."""
    pred, gt = _check(pred, gt)
    sq = (box_centers(pred) - box_centers(gt)) ** 2
    return _masked_mean(sq, None if step_mask is None else np.asarray(step_mask, dtype=bool))


def cf_mse(pred, gt) -> float:
    """Mean squared center error at the final step only."""
    pred, gt = _check(pred, gt)
    sq = (box_centers(pred[:, -1]) - box_centers(gt[:, -1])) ** 2
    return float(sq.mean())


def rmse(pred, gt) -> float:
    """Square root of the per-sample summed squared error, averaged over samples."""
    pred, gt = _check(pred, gt)
    return float(np.sqrt(((pred - gt) ** 2).sum() / pred.shape[0]))


def horizon_steps(seconds: float, fps: float) -> int:
    steps = int(round(seconds * fps))
    if steps < 1:
        raise ValueError(f"horizon {seconds}s at {fps} fps is shorter than one step")
    return steps
