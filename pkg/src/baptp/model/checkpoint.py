"""Binary checkpoint container.

Layout (all integers little-endian)::

    magic     8 bytes  b"BAPTPCKP"
    version   u32
    count     u32      number of arrays
    count x:
      name_len u32, name (utf-8)
      dtype    u8      1=float64 2=float32 3=uint8 4=int64
      rank     u8
      extents  rank x u64
      data     little-endian, C order

Model weights are stored as ``param/<name>``, Adam moments as
``adam_m/<name>`` and ``adam_v/<name>``. The ``meta`` array holds utf-8 JSON
with the model config, optimizer scalars and caller extras.
"""
from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .._io import atomic_write_bytes
from ..numcore import AdamState
from .config import ModelConfig, ModelParams, param_shapes

MAGIC = b"BAPTPCKP"
FORMAT_VERSION = 1

_DTYPES = {1: np.dtype("<f8"), 2: np.dtype("<f4"), 3: np.dtype("u1"), 4: np.dtype("<i8")}
_TAGS = {dt: tag for tag, dt in _DTYPES.items()}


class CheckpointError(ValueError):
    pass


@dataclass
class Checkpoint:
    params: ModelParams
    config: ModelConfig
    optimizer: AdamState | None = None
    extra: dict = field(default_factory=dict)


def write_arrays(fh, arrays: dict[str, np.ndarray]) -> None:
    fh.write(MAGIC)
    fh.write(struct.pack("<II", FORMAT_VERSION, len(arrays)))
    for name, arr in arrays.items():
        dt = np.dtype(arr.dtype).newbyteorder("<")
        if dt not in _TAGS:
            raise CheckpointError(f"array {name!r}: unsupported dtype {arr.dtype}")
        raw = name.encode("utf-8")
        fh.write(struct.pack("<I", len(raw)))
        fh.write(raw)
        fh.write(struct.pack("<BB", _TAGS[dt], arr.ndim))
        fh.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        fh.write(np.ascontiguousarray(arr, dtype=dt).tobytes())


def read_arrays(fh) -> dict[str, np.ndarray]:
    def need(n):
        b = fh.read(n)
        if len(b) != n:
            raise CheckpointError("truncated checkpoint")
        return b

    if need(len(MAGIC)) != MAGIC:
        raise CheckpointError("not a checkpoint file (bad magic bytes)")
    version, count = struct.unpack("<II", need(8))
    if version != FORMAT_VERSION:
        raise CheckpointError(f"checkpoint format version {version} is not supported (expected {FORMAT_VERSION})")
    arrays = {}
    for _ in range(count):
        (nlen,) = struct.unpack("<I", need(4))
        name = need(nlen).decode("utf-8")
        tag, rank = struct.unpack("<BB", need(2))
        if tag not in _DTYPES:
            raise CheckpointError(f"array {name!r}: unknown dtype tag {tag}")
        shape = struct.unpack(f"<{rank}Q", need(8 * rank))
        dt = _DTYPES[tag]
        n = int(np.prod(shape, dtype=np.int64))
        arrays[name] = np.frombuffer(need(n * dt.itemsize), dtype=dt).reshape(shape).astype(dt.newbyteorder("="))
    return arrays


def save_checkpoint(path, params: ModelParams, config: ModelConfig,
                    optimizer: AdamState | None = None, extra: dict | None = None) -> None:
    meta = {"config": config.to_dict(), "extra": extra or {}}
    arrays = {f"param/{k}": v for k, v in params.items()}
    if optimizer is not None:
        meta["optimizer"] = {k: getattr(optimizer, k) for k in ("lr", "beta1", "beta2", "eps", "l2", "step")}
        arrays.update({f"adam_m/{k}": v for k, v in optimizer.m.items()})
        arrays.update({f"adam_v/{k}": v for k, v in optimizer.v.items()})
    arrays["meta"] = np.frombuffer(json.dumps(meta, sort_keys=True).encode("utf-8"), dtype=np.uint8)
    buf = io.BytesIO()
    write_arrays(buf, arrays)
    atomic_write_bytes(Path(path), buf.getvalue())


def _validate(found: dict[str, np.ndarray], expected: dict[str, tuple], what: str) -> None:
    missing = sorted(set(expected) - set(found))
    unexpected = sorted(set(found) - set(expected))
    if missing or unexpected:
        parts = []
        if missing:
            parts.append(f"missing {what} arrays: {', '.join(missing)}")
        if unexpected:
            parts.append(f"unexpected {what} arrays: {', '.join(unexpected)}")
        raise CheckpointError("; ".join(parts))
    for name, shape in expected.items():
        if found[name].shape != tuple(shape):
            raise CheckpointError(f"{what} array {name!r} has shape {found[name].shape}, expected {tuple(shape)}")


def load_checkpoint(path, config: ModelConfig | None = None) -> Checkpoint:
    """Read and validate a checkpoint.

    When ``config`` is given the stored parameters must match its layout
    exactly; otherwise the stored config is used.
    """
    with open(path, "rb") as fh:
        arrays = read_arrays(fh)
    if "meta" not in arrays:
        raise CheckpointError("checkpoint has no meta array")
    meta = json.loads(arrays.pop("meta").tobytes().decode("utf-8"))
    stored = ModelConfig.from_dict(meta["config"])
    cfg = config or stored
    params = {k[len("param/"):]: v for k, v in arrays.items() if k.startswith("param/")}
    m = {k[len("adam_m/"):]: v for k, v in arrays.items() if k.startswith("adam_m/")}
    v = {k[len("adam_v/"):]: v for k, v in arrays.items() if k.startswith("adam_v/")}
    other = sorted(k for k in arrays if not k.startswith(("param/", "adam_m/", "adam_v/")))
    if other:
        raise CheckpointError(f"unexpected arrays: {', '.join(other)}")
    shapes = param_shapes(cfg)
    _validate(params, shapes, "parameter")

    opt = None
    if "optimizer" in meta:
        opt = AdamState(**meta["optimizer"])
        if opt.step > 0:
            _validate(m, shapes, "adam_m")
            _validate(v, shapes, "adam_v")
            opt.m, opt.v = m, v
    return Checkpoint(params, cfg, opt, meta.get("extra", {}))
