"""Independent reference implementations used as test oracles.

Everything here works on plain Python floats with explicit loops so it
shares no code path with the vectorized library.
"""
from __future__ import annotations

import math

import numpy as np


def sigmoid(x: float) -> float:
    return 1.0 / (1.0 + math.exp(-x))


def matvec(W, x):
    return [sum(W[i][j] * x[j] for j in range(len(x))) for i in range(len(W))]


def gru_cell(x, h, p):
    """The three GRU equations, one scalar at a time."""
    H = len(h)
    Wz, Wr, Wh = p["W_z"].tolist(), p["W_r"].tolist(), p["W_h"].tolist()
    Uz, Ur, Uh = p["U_z"].tolist(), p["U_r"].tolist(), p["U_h"].tolist()
    bz, br, bh = p["b_z"].tolist(), p["b_r"].tolist(), p["b_h"].tolist()
    wz, wr, wh = matvec(Wz, x), matvec(Wr, x), matvec(Wh, x)
    uz, ur = matvec(Uz, h), matvec(Ur, h)
    z = [sigmoid(wz[i] + uz[i] + bz[i]) for i in range(H)]
    r = [sigmoid(wr[i] + ur[i] + br[i]) for i in range(H)]
    rh = [r[i] * h[i] for i in range(H)]
    uh = matvec(Uh, rh)
    cand = [math.tanh(wh[i] + uh[i] + bh[i]) for i in range(H)]
    return [(1.0 - z[i]) * h[i] + z[i] * cand[i] for i in range(H)]


def elementwise_max(states):
    out = []
    for d in range(len(states[0])):
        best = states[0][d]
        for s in states[1:]:
            if s[d] > best:
                best = s[d]
        out.append(best)
    return out


def mse_boxes(pred, gt, k):
    total, count = 0.0, 0
    for i in range(len(pred)):
        for j in range(k):
            for c in range(4):
                total += (pred[i][j][c] - gt[i][j][c]) ** 2
                count += 1
    return total / count


def _center(b):
    return ((b[0] + b[2]) / 2.0, (b[1] + b[3]) / 2.0)


def c_mse(pred, gt):
    total, count = 0.0, 0
    for i in range(len(pred)):
        for j in range(len(pred[i])):
            cp, cg = _center(pred[i][j]), _center(gt[i][j])
            for a in range(2):
                total += (cp[a] - cg[a]) ** 2
                count += 1
    return total / count


def cf_mse(pred, gt):
    total, count = 0.0, 0
    for i in range(len(pred)):
        cp, cg = _center(pred[i][-1]), _center(gt[i][-1])
        for a in range(2):
            total += (cp[a] - cg[a]) ** 2
            count += 1
    return total / count


def rmse_loss(pred, gt):
    total = 0.0
    for i in range(len(pred)):
        for j in range(len(pred[i])):
            total += sum((pred[i][j][c] - gt[i][j][c]) ** 2 for c in range(4))
    return math.sqrt(total / len(pred))


def iou_monte_carlo(a, b, rng: np.random.Generator, n: int = 200_000) -> float:
    """Point-membership estimate of IoU by sampling the joint bounding rectangle."""
    x0, y0 = min(a[0], b[0]), min(a[1], b[1])
    x1, y1 = max(a[2], b[2]), max(a[3], b[3])
    pts = rng.uniform([x0, y0], [x1, y1], size=(n, 2))

    def inside(box):
        return (pts[:, 0] >= box[0]) & (pts[:, 0] <= box[2]) & (pts[:, 1] >= box[1]) & (pts[:, 1] <= box[3])

    ia, ib = inside(a), inside(b)
    union = np.count_nonzero(ia | ib)
    return 0.0 if union == 0 else np.count_nonzero(ia & ib) / union


def window_starts(length, n, m, stride):
    starts, i = [], 0
    while i + n + m <= length:
        starts.append(i)
        i += stride
    return starts


def rel_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-6) -> float:
    """Largest elementwise ``|a - f| / max(|a|, |f|, floor)``."""
    a, f = np.asarray(analytic, dtype=np.float64), np.asarray(numeric, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(f)), floor)
    return float(np.max(np.abs(a - f) / denom)) if a.size else 0.0


def central_difference(fn, arrays: dict, name: str, index, step: float = 1e-5) -> float:
    """d fn / d arrays[name][index] by a central difference; ``fn`` reads ``arrays``."""
    arr = arrays[name]
    orig = arr[index]
    arr[index] = orig + step
    up = fn()
    arr[index] = orig - step
    down = fn()
    arr[index] = orig
    return (up - down) / (2.0 * step)


def _np_sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def _np_gru(x, h, p, pre):
    z = _np_sigmoid(p[f"{pre}/W_z"] @ x + p[f"{pre}/U_z"] @ h + p[f"{pre}/b_z"])
    r = _np_sigmoid(p[f"{pre}/W_r"] @ x + p[f"{pre}/U_r"] @ h + p[f"{pre}/b_r"])
    c = np.tanh(p[f"{pre}/W_h"] @ x + p[f"{pre}/U_h"] @ (r * h) + p[f"{pre}/b_h"])
    return (1 - z) * h + z * c


def _np_score(x, W, b, v):
    return float(v[0] @ np.tanh(W @ x + b))


def _np_encode(seq, mask, p, name):
    """One sample: GRU over observed steps, then attention over their states."""
    H = p[f"enc/{name}/gru/U_z"].shape[0]
    h = np.zeros(H)
    states, scores = [], []
    for t in range(seq.shape[0]):
        if mask[t]:
            h = _np_gru(seq[t], h, p, f"enc/{name}/gru")
            states.append(h)
            scores.append(_np_score(h, p[f"enc/{name}/att/W"], p[f"enc/{name}/att/b"], p[f"enc/{name}/att/v"]))
    if not states:
        return np.zeros(H), h
    w = np.exp(np.array(scores) - max(scores))
    w /= w.sum()
    return sum(wi * s for wi, s in zip(w, states)), h


def numpy_forward(batch, params, cfg):
    """Per-sample numpy evaluation of the whole network in inference mode."""
    out = []
    odo_cols = [i for i, c in enumerate(("speed", "yaw_rate")) if c in cfg.odometry_channels]
    for i in range(batch.size):
        def inp(mod):
            x = batch.inputs[mod][i]
            return x / cfg.box_scale if mod == "BB" else x
        if cfg.encoding == "concat":
            seq = np.concatenate([inp(mod) for mod in cfg.modalities], axis=-1)
            e_final, _ = _np_encode(seq, batch.masks["BB"][i], params, "concat")
            h = np.zeros(cfg.hidden_dim)
        else:
            embs, finals, present = [], [], []
            for mod in cfg.modalities:
                e, hT = _np_encode(inp(mod), batch.masks[mod][i], params, mod)
                embs.append(e)
                finals.append(hT)
                present.append(bool(batch.masks[mod][i].any()))
            sc = [_np_score(e, params["modality_att/V"], params["modality_att/c"], params["modality_att/u"])
                  for e in embs]
            top = max(s for s, ok in zip(sc, present) if ok)
            w = np.array([np.exp(s - top) if ok else 0.0 for s, ok in zip(sc, present)])
            w /= w.sum()
            e_final = np.concatenate([wi * e for wi, e in zip(w, embs)])
            usable = [f for f, ok in zip(finals, present) if ok]
            h = np.max(np.stack(usable), axis=0)
        rows = []
        for j in range(cfg.pred_len):
            u = np.concatenate([e_final, batch.odometry[i, j, odo_cols]])
            gamma = _np_sigmoid(params["self_att/w"][0] @ np.tanh(params["self_att/A"] @ u + params["self_att/a"]))
            h = _np_gru(gamma * u, h, params, "dec/gru")
            rows.append((params["head/W"] @ h + params["head/b"]) * cfg.box_scale + batch.inputs["BB"][i, -1])
        out.append(rows)
    return np.array(out)
