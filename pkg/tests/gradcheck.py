"""Finite-difference gradient checks for every layer and the full network."""
from __future__ import annotations

from typing import Callable

import numpy as np

from baptp.model import (AdditiveScore, GruParams, ModelConfig, SelfAttentionParams, decode,
                         decoder_init, encode_stream, forward, gru_cell, init_params,
                         modality_attention, rmse_loss, self_attention_unit)
from baptp.numcore import Graph, Tensor, backward, make_rng
from baptp.numcore import ops

from helpers import random_batch
from oracles import central_difference, rel_error

STEP = 1e-5


def check(build: Callable[[dict[str, Tensor]], Tensor], arrays: dict[str, np.ndarray],
          rng: np.random.Generator, coords_per_array: int | None = None) -> float:
    """Max relative error between backprop and central differences.

    ``build`` maps named tensors to a scalar. With ``coords_per_array`` only
    that many random coordinates of each array are perturbed.
    """
    arrays = {k: np.array(v, dtype=np.float64) for k, v in arrays.items()}
    leaves = {k: Tensor(v, requires_grad=True) for k, v in arrays.items()}
    with Graph() as g:
        loss = build(leaves)
    analytic = backward(g, loss, leaves)

    def value():
        return float(build({k: Tensor(v) for k, v in arrays.items()}).data)

    worst = 0.0
    for name, arr in arrays.items():
        flat = np.arange(arr.size)
        if coords_per_array is not None and arr.size > coords_per_array:
            flat = rng.choice(arr.size, size=coords_per_array, replace=False)
        for f in flat:
            idx = np.unravel_index(int(f), arr.shape)
            num = central_difference(value, arrays, name, idx, STEP)
            worst = max(worst, rel_error(analytic[name][idx], num))
    return worst


def _gru_arrays(prefix, d_in, hidden, rng):
    out = {}
    for g in "zrh":
        out[f"{prefix}W_{g}"] = rng.normal(scale=0.5, size=(hidden, d_in))
        out[f"{prefix}U_{g}"] = rng.normal(scale=0.5, size=(hidden, hidden))
        out[f"{prefix}b_{g}"] = rng.normal(scale=0.1, size=hidden)
    return out


def _gru(t, prefix=""):
    return GruParams(*(t[f"{prefix}{f}"] for f in GruParams._fields))


def _score_arrays(prefix, d, hidden, rng):
    return {f"{prefix}W": rng.normal(scale=0.5, size=(hidden, d)),
            f"{prefix}b": rng.normal(scale=0.1, size=hidden),
            f"{prefix}v": rng.normal(scale=0.5, size=(1, hidden))}


def _score(t, prefix=""):
    return AdditiveScore(t[f"{prefix}W"], t[f"{prefix}b"], t[f"{prefix}v"])


def _weighted(out: Tensor, R: np.ndarray) -> Tensor:
    return ops.sum(out * Tensor(R))


def layer_cases(seed: int, hidden: int = 8):
    """``(name, build, arrays)`` for each layer at small random shapes."""
    rng = np.random.default_rng(seed)
    B, T, d, m, S = 2, 4, 3, 3, 3
    cases = []

    arrays = {"x": rng.normal(size=(B, d)), "h": rng.normal(size=(B, hidden)), **_gru_arrays("", d, hidden, rng)}
    R = rng.normal(size=(B, hidden))
    cases.append(("gru_cell", lambda t, R=R: _weighted(gru_cell(t["x"], t["h"], _gru(t)), R), arrays))

    mask = rng.random((B, T)) < 0.7
    mask[:, 0] = True
    arrays = {"seq": rng.normal(size=(B, T, d)), **_gru_arrays("g/", d, hidden, rng),
              **_score_arrays("s/", hidden, hidden, rng)}
    R1, R2 = rng.normal(size=(B, hidden)), rng.normal(size=(B, hidden))

    def enc(t, mask=mask, R1=R1, R2=R2):
        e = encode_stream(t["seq"], mask, _gru(t, "g/"), _score(t, "s/"))
        return _weighted(e.embedding, R1) + _weighted(e.final_state, R2)
    cases.append(("encode_stream+temporal_attention", enc, arrays))

    present = rng.random((B, S)) < 0.8
    present[:, 0] = True
    arrays = {f"e{s}": rng.normal(size=(B, hidden)) for s in range(S)}
    arrays.update(_score_arrays("s/", hidden, hidden, rng))
    R = rng.normal(size=(B, S * hidden))

    def mod_att(t, present=present, R=R):
        e, _ = modality_attention([t[f"e{s}"] for s in range(S)], _score(t, "s/"), present)
        return _weighted(e, R)
    cases.append(("modality_attention", mod_att, arrays))

    arrays = {f"h{s}": rng.normal(size=(B, hidden)) for s in range(S)}
    R = rng.normal(size=(B, hidden))
    cases.append(("decoder_init", lambda t, R=R: _weighted(decoder_init([t[f"h{s}"] for s in range(S)]), R), arrays))

    D, k = S * hidden, 2
    odo = rng.normal(size=(B, m, k))
    arrays = {"e": rng.normal(size=(B, D)), "A": rng.normal(scale=0.3, size=(hidden, D + k)),
              "a": rng.normal(scale=0.1, size=hidden), "w": rng.normal(scale=0.5, size=(1, hidden))}
    R = rng.normal(size=(B, m, D + k))

    def sau(t, odo=odo, R=R):
        inputs, _ = self_attention_unit(t["e"], odo, SelfAttentionParams(t["A"], t["a"], t["w"]))
        return _weighted(inputs, R)
    cases.append(("self_attention_unit", sau, arrays))

    arrays = {"init": rng.normal(size=(B, hidden)), "inp": rng.normal(size=(B, m, d)),
              **_gru_arrays("g/", d, hidden, rng), "W": rng.normal(size=(4, hidden)), "b": rng.normal(size=4)}
    R = rng.normal(size=(B, m, 4))
    cases.append(("decode", lambda t, R=R: _weighted(decode(t["init"], t["inp"], _gru(t, "g/"), t["W"], t["b"]), R),
                  arrays))

    arrays = {"pred": rng.normal(size=(B, m, 4)), "gt": rng.normal(size=(B, m, 4))}
    cases.append(("rmse_loss", lambda t: rmse_loss(t["pred"], t["gt"]), arrays))

    arrays = {"x": rng.normal(size=(B, hidden))}
    R = rng.normal(size=(B, hidden))
    cases.append(("dropout", lambda t, R=R, s=seed: _weighted(ops.dropout(t["x"], 0.5, True, make_rng(s, 3, 0)), R),
                  arrays))

    smask = rng.random((B, T)) < 0.7
    smask[:, 0] = True
    arrays = {"x": rng.normal(size=(B, T))}
    R = rng.normal(size=(B, T))
    cases.append(("softmax", lambda t, R=R, smask=smask: _weighted(ops.softmax(t["x"], 1, smask), R), arrays))
    return cases


def full_model_error(seed: int, coords_per_array: int = 1, **overrides) -> float:
    """Gradient check of the assembled network (hidden 8, n 4, m 3, all modalities, batch 2)."""
    opts = dict(obs_len=4, pred_len=3, modalities=("BB", "BO", "HO", "P"), hidden_dim=8)
    opts.update(overrides)
    cfg = ModelConfig(**opts)
    rng = np.random.default_rng(10_000 + seed)
    batch = random_batch(cfg, 2, rng)
    params = init_params(cfg, seed)
    # move biases off zero so their gradients are not trivially tiny
    params = {k: v + rng.normal(scale=0.1, size=v.shape) for k, v in params.items()}

    def build(t):
        return rmse_loss(forward(batch, t, cfg, training=True, rng=make_rng(seed, 3, 1)), batch.target)
    return check(build, params, rng, coords_per_array)
