"""Model configuration and the named parameter layout."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from ..numcore import make_rng

MODALITIES = ("BB", "BO", "HO", "P")
MODALITY_DIMS = {"BB": 4, "BO": 1, "HO": 1, "P": 34}
ODOMETRY_CHANNELS = ("speed", "yaw_rate")

INDEPENDENT = "independent"
CONCAT = "concat"
INIT_MAX = "max"
INIT_ZEROS = "zeros"

ModelParams = dict[str, np.ndarray]


@dataclass(frozen=True)
class StreamConfig:
    modality: str
    input_dim: int
    enabled: bool = True

    def __post_init__(self):
        if self.modality not in MODALITY_DIMS:
            raise ValueError(f"unknown modality {self.modality!r}")
        if self.input_dim != MODALITY_DIMS[self.modality]:
            raise ValueError(f"{self.modality} input_dim must be {MODALITY_DIMS[self.modality]}, got {self.input_dim}")


@dataclass(frozen=True)
class ModelConfig:
    obs_len: int = 13
    pred_len: int = 32
    modalities: tuple[str, ...] = ("BB",)
    use_speed: bool = True
    use_yaw_rate: bool = True
    encoding: str = INDEPENDENT
    # None resolves to "max" for independent and "zeros" for concat
    decoder_init: str | None = None
    dropout: float = 0.5
    hidden_dim: int = 256
    # BB inputs are divided by this and regressed offsets multiplied by it
    box_scale: float = 1.0

    def __post_init__(self):
        mods = tuple(self.modalities)
        unknown = [m for m in mods if m not in MODALITIES]
        if unknown:
            raise ValueError(f"unknown modalities {unknown}")
        if "BB" not in mods:
            raise ValueError("the BB modality must be enabled")
        if len(set(mods)) != len(mods):
            raise ValueError(f"duplicate modalities in {mods}")
        # canonical order so labels and parameter names are stable
        object.__setattr__(self, "modalities", tuple(m for m in MODALITIES if m in mods))
        if self.encoding not in (INDEPENDENT, CONCAT):
            raise ValueError(f"encoding must be {INDEPENDENT!r} or {CONCAT!r}, got {self.encoding!r}")
        init = self.decoder_init
        if init is None:
            init = INIT_ZEROS if self.encoding == CONCAT else INIT_MAX
            object.__setattr__(self, "decoder_init", init)
        if init not in (INIT_MAX, INIT_ZEROS):
            raise ValueError(f"decoder_init must be {INIT_MAX!r} or {INIT_ZEROS!r}, got {init!r}")
        if self.encoding == CONCAT and init != INIT_ZEROS:
            raise ValueError("concat encoding requires a zeros decoder init")
        if self.obs_len < 1 or self.pred_len < 1:
            raise ValueError("obs_len and pred_len must be positive")
        if self.hidden_dim < 1:
            raise ValueError("hidden_dim must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout must lie in [0, 1), got {self.dropout}")
        if self.box_scale <= 0:
            raise ValueError("box_scale must be positive")

    @property
    def streams(self) -> tuple[StreamConfig, ...]:
        return tuple(StreamConfig(m, MODALITY_DIMS[m], m in self.modalities) for m in MODALITIES)

    @property
    def odometry_channels(self) -> tuple[str, ...]:
        return tuple(c for c, on in zip(ODOMETRY_CHANNELS, (self.use_speed, self.use_yaw_rate)) if on)

    @property
    def encoder_names(self) -> tuple[str, ...]:
        return ("concat",) if self.encoding == CONCAT else self.modalities

    @property
    def embedding_dim(self) -> int:
        return self.hidden_dim * len(self.encoder_names)

    @property
    def decoder_input_dim(self) -> int:
        return self.embedding_dim + len(self.odometry_channels)

    @property
    def label(self) -> str:
        label = "+".join(self.modalities)
        if not self.use_yaw_rate:
            label += "-Y"
        if not self.use_speed:
            label += "-S"
        if self.encoding == CONCAT:
            label += " - C"
        return label

    def to_dict(self) -> dict:
        d = asdict(self)
        d["modalities"] = list(self.modalities)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        d = dict(d)
        if "modalities" in d:
            d["modalities"] = tuple(d["modalities"])
        return cls(**d)


def _gru_shapes(prefix: str, input_dim: int, hidden: int) -> dict[str, tuple[int, ...]]:
    shapes = {}
    for gate in ("z", "r", "h"):
        shapes[f"{prefix}/W_{gate}"] = (hidden, input_dim)
        shapes[f"{prefix}/U_{gate}"] = (hidden, hidden)
        shapes[f"{prefix}/b_{gate}"] = (hidden,)
    return shapes


def param_shapes(config: ModelConfig) -> dict[str, tuple[int, ...]]:
    """Name -> shape for every trainable array of ``config``'s network."""
    hid = config.hidden_dim
    shapes: dict[str, tuple[int, ...]] = {}
    if config.encoding == CONCAT:
        enc_inputs = {"concat": sum(MODALITY_DIMS[m] for m in config.modalities)}
    else:
        enc_inputs = {m: MODALITY_DIMS[m] for m in config.modalities}
    for name, dim in enc_inputs.items():
        shapes.update(_gru_shapes(f"enc/{name}/gru", dim, hid))
        shapes[f"enc/{name}/att/W"] = (hid, hid)
        shapes[f"enc/{name}/att/b"] = (hid,)
        shapes[f"enc/{name}/att/v"] = (1, hid)
    if config.encoding == INDEPENDENT:
        shapes["modality_att/V"] = (hid, hid)
        shapes["modality_att/c"] = (hid,)
        shapes["modality_att/u"] = (1, hid)
    d_in = config.decoder_input_dim
    shapes["self_att/A"] = (hid, d_in)
    shapes["self_att/a"] = (hid,)
    shapes["self_att/w"] = (1, hid)
    shapes.update(_gru_shapes("dec/gru", d_in, hid))
    shapes["head/W"] = (4, hid)
    shapes["head/b"] = (4,)
    return shapes


def init_params(config: ModelConfig, seed: int, dtype=np.float64) -> ModelParams:
    """Uniform(+-1/sqrt(fan_in)) matrices and zero biases."""
    rng = make_rng(seed, 1)
    params = {}
    for name, shape in param_shapes(config).items():
        if len(shape) == 1:
            params[name] = np.zeros(shape, dtype=dtype)
        else:
            bound = 1.0 / np.sqrt(shape[1])
            params[name] = rng.uniform(-bound, bound, size=shape).astype(dtype)
    return params


def zero_params(config: ModelConfig, dtype=np.float64) -> ModelParams:
    return {name: np.zeros(shape, dtype=dtype) for name, shape in param_shapes(config).items()}
