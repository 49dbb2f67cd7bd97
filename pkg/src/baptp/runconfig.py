"""Run configuration shared by the ``train``, ``eval`` and ``predict`` commands.

A run config is a JSON object with these sections (every key optional
unless noted, unknown keys rejected)::

    {
      "data": {
        "train": "data/train.jsonl",      # required for train
        "val": "data/val.jsonl",          # optional; without it training loss drives the schedule
        "test": "data/test.jsonl",        # required for eval/predict on the test split
        "stride": 1,                      # window stride for training samples
        "eval_stride": 1,                 # window stride for val/test samples
        "interpolate_factor": 1,          # fill keyframe gaps up to this many frames (1 = off)
        "require_keyframe_end": false,    # eval windows must end on a keyframe
        "keyframes_only": false           # eval metrics only count keyframe timesteps
      },
      "model": {ModelConfig fields: obs_len, pred_len, modalities, use_speed,
                use_yaw_rate, encoding, decoder_init, dropout, hidden_dim, box_scale},
      "optim": {"lr": 5e-4, "batch_size": 128, "epochs": 80, "l2": 1e-4,
                "patience": 5, "decay_factor": 5.0},
      "eval": {"fps": 20.0, "horizons": {"0.8s": 0.8, "1.6s": 1.6},
               "weights": "best"},        # best | final
      "seed": 0,
      "output_dir": "runs/example"        # required
    }

Relative paths are resolved against the config file's directory.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .model import ModelConfig
from .training import TrainConfig


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


def _strict(cls, d, where: str):
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected an object, got {type(d).__name__}")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(d) - known)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {unknown}")
    try:
        return cls(**d)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _check_type(where: str, value, types, what: str):
    if isinstance(value, bool) and bool not in (types if isinstance(types, tuple) else (types,)):
        raise ConfigError(f"{where}: expected {what}, got {value!r}")
    if not isinstance(value, types):
        raise ConfigError(f"{where}: expected {what}, got {value!r}")


@dataclass(frozen=True)
class DataConfig:
    train: str | None = None
    val: str | None = None
    test: str | None = None
    stride: int = 1
    eval_stride: int = 1
    interpolate_factor: int = 1
    require_keyframe_end: bool = False
    keyframes_only: bool = False

    def __post_init__(self):
        for name in ("train", "val", "test"):
            v = getattr(self, name)
            if v is not None:
                _check_type(f"data.{name}", v, str, "a path string")
        for name in ("stride", "eval_stride", "interpolate_factor"):
            v = getattr(self, name)
            _check_type(f"data.{name}", v, int, "an integer")
            if v < 1:
                raise ConfigError(f"data.{name} must be >= 1, got {v}")
        for name in ("require_keyframe_end", "keyframes_only"):
            _check_type(f"data.{name}", getattr(self, name), bool, "true or false")


@dataclass(frozen=True)
class EvalConfig:
    fps: float = 20.0
    horizons: dict = field(default_factory=lambda: {"0.8s": 0.8, "1.6s": 1.6})
    weights: str = "best"

    def __post_init__(self):
        _check_type("eval.fps", self.fps, (int, float), "a number")
        if self.fps <= 0:
            raise ConfigError("eval.fps must be positive")
        if not isinstance(self.horizons, dict) or not self.horizons:
            raise ConfigError("eval.horizons must be a non-empty object of label -> seconds")
        for k, v in self.horizons.items():
            _check_type(f"eval.horizons.{k}", v, (int, float), "seconds")
            if v <= 0:
                raise ConfigError(f"eval.horizons.{k} must be positive")
        if self.weights not in ("best", "final"):
            raise ConfigError(f"eval.weights must be 'best' or 'final', got {self.weights!r}")

    def horizon_steps(self, pred_len: int) -> dict[str, int]:
        out = {}
        for label, seconds in self.horizons.items():
            steps = int(round(seconds * self.fps))
            if not 1 <= steps <= pred_len:
                raise ConfigError(f"eval.horizons.{label}: {seconds}s at {self.fps} fps is {steps} steps, "
                                  f"outside 1..{pred_len}")
            out[label] = steps
        return out


@dataclass(frozen=True)
class RunConfig:
    data: DataConfig
    model: ModelConfig
    optim: TrainConfig
    eval: EvalConfig
    seed: int
    output_dir: str

    @classmethod
    def from_dict(cls, d: dict, base_dir: Path | None = None) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigError("run config must be a JSON object")
        known = {"data", "model", "optim", "eval", "seed", "output_dir"}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown top-level keys {unknown}")
        if "output_dir" not in d:
            raise ConfigError("output_dir is required")
        seed = d.get("seed", 0)
        _check_type("seed", seed, int, "an integer")
        if seed < 0:
            raise ConfigError("seed must be >= 0")
        _check_type("output_dir", d["output_dir"], str, "a path string")
        data = _strict(DataConfig, d.get("data", {}), "data")
        model_d = d.get("model", {})
        if not isinstance(model_d, dict):
            raise ConfigError("model: expected an object")
        model_d = dict(model_d)
        if "modalities" in model_d:
            if not isinstance(model_d["modalities"], list):
                raise ConfigError("model.modalities must be a list of modality names")
            model_d["modalities"] = tuple(model_d["modalities"])
        model = _strict(ModelConfig, model_d, "model")
        optim_d = d.get("optim", {})
        if isinstance(optim_d, dict) and "seed" in optim_d:
            raise ConfigError("optim: seed belongs at the top level")
        optim = _strict(TrainConfig, optim_d, "optim")
        optim = TrainConfig(**{**asdict(optim), "seed": seed})
        ev = _strict(EvalConfig, d.get("eval", {}), "eval")
        ev.horizon_steps(model.pred_len)

        def resolve(p):
            if p is None or base_dir is None:
                return p
            q = Path(p)
            return str(q if q.is_absolute() else (base_dir / q))

        data = DataConfig(**{**asdict(data), **{k: resolve(getattr(data, k)) for k in ("train", "val", "test")}})
        return cls(data, model, optim, ev, seed, resolve(d["output_dir"]))

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
        return cls.from_dict(d, path.parent)

    def with_overrides(self, seed: int | None = None, output_dir: str | None = None) -> "RunConfig":
        d = self.to_dict()
        if seed is not None:
            d["seed"] = seed
        if output_dir is not None:
            d["output_dir"] = str(output_dir)
        return RunConfig.from_dict(d)

    def to_dict(self) -> dict:
        optim = asdict(self.optim)
        optim.pop("seed")
        return {
            "data": asdict(self.data),
            "model": self.model.to_dict(),
            "optim": optim,
            "eval": asdict(self.eval),
            "seed": self.seed,
            "output_dir": self.output_dir,
        }
