"""Encoder-decoder network with per-modality streams and attention fusion."""
from .checkpoint import Checkpoint, CheckpointError, load_checkpoint, save_checkpoint
from .config import (CONCAT, INDEPENDENT, MODALITIES, MODALITY_DIMS, ModelConfig, ModelParams,
                     StreamConfig, init_params, param_shapes, zero_params)
from .layers import (AdditiveScore, GruParams, SelfAttentionParams, StreamEncoding, decode,
                     decoder_init, encode_stream, gru_cell, modality_attention, run_gru,
                     self_attention_unit, temporal_attention)
from .network import Batch, ForwardTrace, as_tensors, forward, loss_and_grads, predict, rmse_loss

__all__ = [
    "AdditiveScore", "Batch", "CONCAT", "Checkpoint", "CheckpointError", "ForwardTrace",
    "GruParams", "INDEPENDENT", "MODALITIES", "MODALITY_DIMS", "ModelConfig", "ModelParams",
    "SelfAttentionParams", "StreamConfig", "StreamEncoding", "as_tensors", "decode",
    "decoder_init", "encode_stream", "forward", "gru_cell", "init_params", "load_checkpoint",
    "loss_and_grads", "modality_attention", "param_shapes", "predict", "rmse_loss", "run_gru",
    "save_checkpoint", "self_attention_unit", "temporal_attention", "zero_params",
]
