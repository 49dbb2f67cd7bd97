"""
Checking backpropagation against finite differences
====================================================

The network is trained with a small reverse-mode differentiation engine
built on numpy. This script builds the full encoder-decoder on random
inputs, backpropagates the RMSE loss once, and compares a handful of
gradient entries with central differences.
"""
import numpy as np

from baptp.model import (MODALITY_DIMS, Batch, ModelConfig, as_tensors, forward, init_params, loss_and_grads,
                         rmse_loss)
from baptp.numcore import make_rng

cfg = ModelConfig(obs_len=4, pred_len=3, modalities=("BB", "BO", "HO", "P"), hidden_dim=8, dropout=0.0)
rng = np.random.default_rng(0)

# a batch of two samples with random (already normalized) features
inputs = {mod: rng.normal(scale=0.5, size=(2, cfg.obs_len, dim)) for mod, dim in MODALITY_DIMS.items()}
masks = {mod: np.ones((2, cfg.obs_len), dtype=bool) for mod in MODALITY_DIMS}
# the head orientation of the second sample is missing for two frames
masks["HO"][1, 1:3] = False
inputs["HO"][1, 1:3] = 0.0
batch = Batch(inputs, masks, odometry=rng.normal(size=(2, cfg.pred_len, 2)),
              target=rng.normal(size=(2, cfg.pred_len, 4)))

params = init_params(cfg, seed=1)
loss, grads = loss_and_grads(batch, params, cfg)
print(f"loss {loss:.6f}, {len(grads)} parameter arrays")


def loss_at(p):
    return float(rmse_loss(forward(batch, as_tensors(p), cfg), batch.target).data)


step = 1e-5
pick = make_rng(0, 99)
print(f"{'parameter':<26}{'backprop':>14}{'central diff':>14}{'rel err':>10}")
for name in ["enc/BB/gru/W_z", "enc/HO/att/v", "modality_att/V", "self_att/A", "dec/gru/U_h", "head/b"]:
    idx = tuple(int(pick.integers(s)) for s in params[name].shape)
    up = {k: v.copy() for k, v in params.items()}
    down = {k: v.copy() for k, v in params.items()}
    up[name][idx] += step
    down[name][idx] -= step
    numeric = (loss_at(up) - loss_at(down)) / (2 * step)
    analytic = grads[name][idx]
    rel = abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-6)
    print(f"{name + str(list(idx)):<26}{analytic:>14.8f}{numeric:>14.8f}{rel:>10.1e}")
