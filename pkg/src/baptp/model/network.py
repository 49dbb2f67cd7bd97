"""The assembled network: encoders, fusion, self-attention unit, decoder."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..numcore import Graph, ShapeError, Tensor, backward
from ..numcore import ops
from .config import CONCAT, MODALITY_DIMS, ODOMETRY_CHANNELS, ModelConfig, ModelParams
from .layers import (AdditiveScore, GruParams, SelfAttentionParams, decode, decoder_init,
                     encode_stream, modality_attention, self_attention_unit)


@dataclass
class Batch:
    """Normalized model inputs for ``B`` samples.

    ``inputs[mod]`` is ``[B, n, dim]`` with zeros wherever ``masks[mod]`` is
    False. ``odometry`` holds (speed, yaw_rate) for the ``m`` future steps;
    ``target`` the normalized future boxes when known.
    """

    inputs: dict[str, np.ndarray]
    masks: dict[str, np.ndarray]
    odometry: np.ndarray
    target: np.ndarray | None = None
    anchors: np.ndarray | None = None
    future_keyframes: np.ndarray | None = None
    meta: list = field(default_factory=list)

    @property
    def size(self) -> int:
        return self.odometry.shape[0]

    def subset(self, idx) -> "Batch":
        idx = np.asarray(idx)
        pick = lambda a: None if a is None else a[idx]  # noqa: E731
        return Batch(
            inputs={k: v[idx] for k, v in self.inputs.items()},
            masks={k: v[idx] for k, v in self.masks.items()},
            odometry=self.odometry[idx],
            target=pick(self.target),
            anchors=pick(self.anchors),
            future_keyframes=pick(self.future_keyframes),
            meta=[self.meta[i] for i in idx] if self.meta else [],
        )


@dataclass
class ForwardTrace:
    """Intermediate values kept for inspection and tests."""

    encodings: dict = field(default_factory=dict)
    modality_weights: Tensor | None = None
    dec_init: Tensor | None = None
    decoder_inputs: Tensor | None = None
    gates: Tensor | None = None
    offsets: Tensor | None = None


def as_tensors(params: ModelParams, requires_grad: bool = False) -> dict[str, Tensor]:
    return {k: Tensor(v, requires_grad=requires_grad, name=k) for k, v in params.items()}


def _check_batch(batch: Batch, config: ModelConfig) -> None:
    for mod in config.modalities:
        if mod not in batch.inputs or mod not in batch.masks:
            raise KeyError(f"batch is missing required modality {mod!r}")
        x = batch.inputs[mod]
        if x.shape[1:] != (config.obs_len, MODALITY_DIMS[mod]):
            raise ShapeError(f"{mod} input has shape {x.shape}, expected [B, {config.obs_len}, {MODALITY_DIMS[mod]}]")
    if batch.odometry.shape[1:] != (config.pred_len, len(ODOMETRY_CHANNELS)):
        raise ShapeError(f"odometry has shape {batch.odometry.shape}, expected [B, {config.pred_len}, 2]")


def _stream_input(batch: Batch, mod: str, config: ModelConfig, dtype) -> np.ndarray:
    x = batch.inputs[mod]
    if mod == "BB" and config.box_scale != 1.0:
        x = x / config.box_scale
    return x.astype(dtype, copy=False)


def forward(batch: Batch, params: dict[str, Tensor], config: ModelConfig,
            training: bool = False, rng: np.random.Generator | None = None,
            trace: ForwardTrace | None = None) -> Tensor:
    """Predict normalized future boxes ``[B, m, 4]``.

    The regression head outputs offsets from the last observed box, so a
    network with all-zero weights predicts that the pedestrian stays put.
    """
    _check_batch(batch, config)
    dtype = params["head/W"].dtype
    encs = {}
    if config.encoding == CONCAT:
        seq = np.concatenate([_stream_input(batch, m, config, dtype) for m in config.modalities], axis=-1)
        enc = encode_stream(Tensor(seq), batch.masks["BB"],
                            GruParams.from_params(params, "enc/concat/gru"),
                            AdditiveScore(params["enc/concat/att/W"], params["enc/concat/att/b"],
                                          params["enc/concat/att/v"]),
                            config.dropout, training, rng)
        encs["concat"] = enc
        e_final = enc.embedding
        beta = None
        init = decoder_init([enc.final_state], config.decoder_init)
    else:
        present = []
        for mod in config.modalities:
            mask = batch.masks[mod]
            encs[mod] = encode_stream(Tensor(_stream_input(batch, mod, config, dtype)), mask,
                                      GruParams.from_params(params, f"enc/{mod}/gru"),
                                      AdditiveScore(params[f"enc/{mod}/att/W"], params[f"enc/{mod}/att/b"],
                                                    params[f"enc/{mod}/att/v"]),
                                      config.dropout, training, rng)
            present.append(mask.any(axis=1))
        present = np.stack(present, axis=1)
        e_final, beta = modality_attention(
            [encs[m].embedding for m in config.modalities],
            AdditiveScore(params["modality_att/V"], params["modality_att/c"], params["modality_att/u"]),
            present)
        # a stream with no observations stands in with the BB state; max(x, x) = x
        base = encs["BB"].final_state
        finals = [ops.where(present[:, s:s + 1], encs[m].final_state, base)
                  for s, m in enumerate(config.modalities)]
        init = decoder_init(finals, config.decoder_init)

    keep = [ODOMETRY_CHANNELS.index(c) for c in config.odometry_channels]
    odo = batch.odometry[:, :, keep].astype(dtype, copy=False)
    dec_in, gates = self_attention_unit(
        e_final, odo, SelfAttentionParams(params["self_att/A"], params["self_att/a"], params["self_att/w"]))
    offsets = decode(init, dec_in, GruParams.from_params(params, "dec/gru"), params["head/W"], params["head/b"])
    if config.box_scale != 1.0:
        offsets = ops.scale(offsets, config.box_scale)
    last = batch.inputs["BB"][:, -1:, :].astype(dtype, copy=False)
    pred = offsets + Tensor(last)

    if trace is not None:
        trace.encodings = encs
        trace.modality_weights = beta
        trace.dec_init = init
        trace.decoder_inputs = dec_in
        trace.gates = gates
        trace.offsets = offsets
    return pred


def rmse_loss(pred: Tensor, target) -> Tensor:
    """``sqrt(sum_i sum_j ||b_ij - b^_ij||^2 / I)``: averaged over samples only."""
    target = Tensor(target, dtype=pred.dtype) if not isinstance(target, Tensor) else target
    if pred.shape != target.shape:
        raise ShapeError(f"rmse_loss: prediction {pred.shape} vs target {target.shape}")
    n = pred.shape[0]
    return ops.sqrt(ops.scale(ops.sum(ops.square(pred - target)), 1.0 / n))


def predict(batch: Batch, params: ModelParams, config: ModelConfig) -> np.ndarray:
    """Inference-mode forward on plain arrays."""
    return forward(batch, as_tensors(params), config, training=False).data


def loss_and_grads(batch: Batch, params: ModelParams, config: ModelConfig,
                   training: bool = True, rng: np.random.Generator | None = None
                   ) -> tuple[float, dict[str, np.ndarray]]:
    leaves = as_tensors(params, requires_grad=True)
    with Graph() as graph:
        loss = rmse_loss(forward(batch, leaves, config, training, rng), batch.target)
    return float(loss.data), backward(graph, loss, leaves)
