"""Building blocks of the encoder-decoder network.

All layers are batched: sequences are ``[B, T, d]`` and vectors ``[B, d]``.
Masks are constant boolean arrays, ``True`` where a value was observed.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from ..numcore import Tensor, ShapeError
from ..numcore import ops


class GruParams(NamedTuple):
    W_z: Tensor
    W_r: Tensor
    W_h: Tensor
    U_z: Tensor
    U_r: Tensor
    U_h: Tensor
    b_z: Tensor
    b_r: Tensor
    b_h: Tensor

    @classmethod
    def from_params(cls, tensors: dict[str, Tensor], prefix: str) -> "GruParams":
        return cls(*(tensors[f"{prefix}/{f}"] for f in cls._fields))

    @property
    def input_dim(self) -> int:
        return self.W_z.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.W_z.shape[0]


class AdditiveScore(NamedTuple):
    """``v . tanh(W x + b)``, one scalar score per row of ``x``."""
    W: Tensor
    b: Tensor
    v: Tensor

    def __call__(self, x: Tensor) -> Tensor:
        return ops.linear(ops.tanh(ops.linear(x, self.W, self.b)), self.v)


def gru_cell(x: Tensor, h: Tensor, p: GruParams) -> Tensor:
    if x.shape[-1] != p.input_dim or h.shape[-1] != p.hidden_dim:
        raise ShapeError(f"gru_cell: x {x.shape} / h {h.shape} do not fit "
                         f"input_dim={p.input_dim}, hidden_dim={p.hidden_dim}")
    z = ops.sigmoid(ops.linear(x, p.W_z, p.b_z) + ops.linear(h, p.U_z))
    r = ops.sigmoid(ops.linear(x, p.W_r, p.b_r) + ops.linear(h, p.U_r))
    cand = ops.tanh(ops.linear(x, p.W_h, p.b_h) + ops.linear(r * h, p.U_h))
    return (1.0 - z) * h + z * cand


def _zeros(batch: int, dim: int, dtype) -> Tensor:
    return Tensor(np.zeros((batch, dim), dtype=dtype))


def _column(mask: np.ndarray, t: int) -> np.ndarray:
    return mask[:, t:t + 1]


def run_gru(seq: Tensor, mask: np.ndarray, p: GruParams, h0: Tensor | None = None) -> list[Tensor]:
    """Unroll over time; masked steps carry the previous state unchanged."""
    batch, steps = seq.shape[0], seq.shape[1]
    h = _zeros(batch, p.hidden_dim, p.W_z.dtype) if h0 is None else h0
    states = []
    for t in range(steps):
        h_new = gru_cell(ops.take(seq, t, axis=1), h, p)
        h = ops.where(_column(mask, t), h_new, h)
        states.append(h)
    return states


def temporal_attention(states: Sequence[Tensor], mask: np.ndarray,
                       score: AdditiveScore) -> tuple[Tensor, Tensor]:
    """Attention-weighted sum of per-timestep states.

    Returns ``(embedding [B, H], weights [B, T])``. Masked steps get weight 0
    and are left out of the sum entirely.
    """
    batch = states[0].shape[0]
    scores = ops.concat([score(h) for h in states], axis=1)
    alpha = ops.softmax(scores, axis=1, mask=mask)
    emb = _zeros(batch, states[0].shape[1], states[0].dtype)
    for t, h in enumerate(states):
        a_t = ops.reshape(ops.take(alpha, t, axis=1), (batch, 1))
        emb = ops.where(_column(mask, t), emb + a_t * h, emb)
    return emb, alpha


@dataclass
class StreamEncoding:
    states: list[Tensor]
    embedding: Tensor
    final_state: Tensor
    weights: Tensor


def encode_stream(seq: Tensor, mask: np.ndarray, gru: GruParams, score: AdditiveScore,
                  dropout: float = 0.0, training: bool = False,
                  rng: np.random.Generator | None = None) -> StreamEncoding:
    """GRU encoder followed by temporal attention (and dropout when training).

    ``final_state`` is the state after the last observed step, zeros if the
    whole sequence is masked.
    """
    if seq.ndim != 3 or seq.shape[1] == 0:
        raise ShapeError(f"encode_stream expects a non-empty [B, T, d] sequence, got {seq.shape}")
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != seq.shape[:2]:
        raise ShapeError(f"mask {mask.shape} does not match sequence {seq.shape[:2]}")
    states = run_gru(seq, mask, gru)
    emb, alpha = temporal_attention(states, mask, score)
    emb = ops.dropout(emb, dropout, training, rng)
    return StreamEncoding(states, emb, states[-1], alpha)


def modality_attention(embeddings: Sequence[Tensor], score: AdditiveScore,
                       present: np.ndarray | None = None) -> tuple[Tensor, Tensor]:
    """Weight each stream's embedding and concatenate the weighted parts.

    ``present`` ([B, S]) drops streams with no observations from the softmax.
    Returns ``(e_final [B, S*H], beta [B, S])``.
    """
    if not embeddings:
        raise ShapeError("modality_attention needs at least one embedding")
    batch = embeddings[0].shape[0]
    scores = ops.concat([score(e) for e in embeddings], axis=1)
    beta = ops.softmax(scores, axis=1, mask=present)
    parts = [ops.reshape(ops.take(beta, s, axis=1), (batch, 1)) * e for s, e in enumerate(embeddings)]
    return ops.concat(parts, axis=-1), beta


def decoder_init(final_states: Sequence[Tensor], strategy: str = "max") -> Tensor:
    """Elementwise maximum over the streams' final states, or zeros."""
    if not final_states:
        raise ValueError("decoder_init needs at least one final state")
    if len({s.shape for s in final_states}) != 1:
        raise ShapeError(f"final states differ in shape: {[s.shape for s in final_states]}")
    if strategy == "zeros":
        return Tensor(np.zeros(final_states[0].shape, dtype=final_states[0].dtype))
    if strategy != "max":
        raise ValueError(f"unknown decoder init strategy {strategy!r}")
    out = final_states[0]
    for s in final_states[1:]:
        out = ops.maximum(out, s)
    return out


class SelfAttentionParams(NamedTuple):
    A: Tensor
    a: Tensor
    w: Tensor


def self_attention_unit(e_final: Tensor, odometry: np.ndarray | Tensor,
                        p: SelfAttentionParams) -> tuple[Tensor, Tensor]:
    """Per future step j: ``u_j = [e_final, odo_j]`` gated by ``sigmoid(w . tanh(A u_j + a))``.

    Returns ``(decoder inputs [B, m, D+k], gates [B, m])``.
    """
    odo = odometry.data if isinstance(odometry, Tensor) else np.asarray(odometry)
    if odo.ndim != 3 or odo.shape[0] != e_final.shape[0]:
        raise ShapeError(f"odometry must be [B, m, k] matching batch {e_final.shape[0]}, got {odo.shape}")
    steps = odo.shape[1]
    if steps == 0:
        raise ShapeError("self_attention_unit needs at least one future step")
    inputs, gates = [], []
    for j in range(steps):
        u = ops.concat([e_final, Tensor(odo[:, j, :], dtype=e_final.dtype)], axis=-1)
        gamma = ops.sigmoid(ops.linear(ops.tanh(ops.linear(u, p.A, p.a)), p.w))
        inputs.append(gamma * u)
        gates.append(gamma)
    return ops.stack(inputs, axis=1), ops.concat(gates, axis=1)


def decode(dec_init: Tensor, decoder_inputs: Tensor, gru: GruParams,
           head_W: Tensor, head_b: Tensor) -> Tensor:
    """Unroll the decoder GRU from ``dec_init`` and regress a 4-vector per step."""
    if decoder_inputs.ndim != 3:
        raise ShapeError(f"decoder inputs must be [B, m, d], got {decoder_inputs.shape}")
    if dec_init.shape != (decoder_inputs.shape[0], gru.hidden_dim):
        raise ShapeError(f"decoder init {dec_init.shape} does not fit hidden_dim={gru.hidden_dim}")
    h = dec_init
    outs = []
    for j in range(decoder_inputs.shape[1]):
        h = gru_cell(ops.take(decoder_inputs, j, axis=1), h, gru)
        outs.append(ops.linear(h, head_W, head_b))
    return ops.stack(outs, axis=1)
