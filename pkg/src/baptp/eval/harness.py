"""Evaluation reports and the feature/encoding ablation harness."""
from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass, field, replace
from decimal import ROUND_HALF_UP, Decimal
from typing import Callable, Sequence

import numpy as np

from ..data.sampling import Sample, collate
from ..model import CONCAT, INDEPENDENT, MODALITIES, Batch, ModelConfig, ModelParams, predict
from ..training import TrainConfig, train
from .metrics import c_mse, cf_mse, mse_boxes, rmse


@dataclass
class MetricsReport:
    variant: str
    sample_count: int
    mse: dict[str, float]
    c_mse: float
    cf_mse: float
    rmse: float
    seed: int | None = None

    def __post_init__(self):
        if self.sample_count <= 0:
            raise ValueError("a report needs at least one sample")
        values = [*self.mse.values(), self.c_mse, self.cf_mse, self.rmse]
        if any(v < 0 or not math.isfinite(v) for v in values):
            raise ValueError(f"metrics must be finite and non-negative: {values}")

    def metric_values(self) -> dict[str, float]:
        out = {f"mse_{k}": v for k, v in self.mse.items()}
        out.update(c_mse=self.c_mse, cf_mse=self.cf_mse, rmse=self.rmse)
        return out


def _as_batch(data) -> Batch:
    if isinstance(data, Batch):
        return data
    if not data:
        raise ValueError("cannot evaluate an empty dataset")
    if isinstance(data[0], Sample):
        return collate(data)
    raise TypeError(f"expected a Batch or a list of Samples, got {type(data)!r}")


def evaluate(params: ModelParams | None, config: ModelConfig, data: Batch | Sequence[Sample],
             horizons: dict[str, int], keyframes_only: bool = False, seed: int | None = None,
             variant: str | None = None,
             predict_fn: Callable[[Batch], np.ndarray] | None = None) -> MetricsReport:
    """Run inference and compute every metric on pixel-space boxes.

    ``horizons`` maps a label (e.g. ``"0.8s"``) to a number of steps. With
    ``keyframes_only`` the per-horizon MSE and C_MSE only count future steps
    flagged as keyframes. ``predict_fn`` replaces the network (a test hook);
    it must return normalized boxes like the model does.
    """
    batch = _as_batch(data)
    if batch.size == 0:
        raise ValueError("cannot evaluate an empty dataset")
    norm_pred = predict_fn(batch) if predict_fn is not None else predict(batch, params, config)
    anchors = batch.anchors[:, None, :]
    pred = np.asarray(norm_pred, dtype=np.float64) + anchors
    gt = batch.target + anchors
    mask = batch.future_keyframes if keyframes_only else None
    return MetricsReport(
        variant=variant or config.label,
        sample_count=batch.size,
        mse={label: mse_boxes(pred, gt, k, mask) for label, k in horizons.items()},
        c_mse=c_mse(pred, gt, mask),
        cf_mse=cf_mse(pred, gt),
        rmse=rmse(pred, gt),
        seed=seed,
    )


def round_half_up(x: float) -> int:
    return int(Decimal(repr(x)).quantize(Decimal(1), rounding=ROUND_HALF_UP))


@dataclass
class Aggregate:
    variant: str
    runs: int
    mean: dict[str, float]
    std: dict[str, float]

    def formatted(self) -> dict[str, str]:
        return {k: f"{round_half_up(self.mean[k])}±{round_half_up(self.std[k])}" for k in self.mean}


def aggregate(reports: Sequence[MetricsReport]) -> Aggregate:
    """Arithmetic mean and population standard deviation across runs."""
    if not reports:
        raise ValueError("nothing to aggregate")
    keys = list(reports[0].metric_values())
    table = np.array([[r.metric_values()[k] for k in keys] for r in reports])
    return Aggregate(reports[0].variant, len(reports),
                     dict(zip(keys, table.mean(axis=0).tolist())),
                     dict(zip(keys, table.std(axis=0, ddof=0).tolist())))


_VARIANT = re.compile(r"^\s*(?P<mods>[A-Za-z+]+?)(?P<noyaw>-Y)?\s*(?:(?:,|-)\s*(?P<enc>C|I|Concat|Independent))?\s*$")


def variant_config(name: str, **base) -> ModelConfig:
    """Model config for an ablation variant name.

    Accepted forms: ``"BB"``, ``"BB+BO+P"``, ``"BB-Y"`` (no yaw rate),
    ``"BB+BO+P - C"`` / ``"BB+BO+P, Concat"`` (concat encoding),
    ``"... - I"`` (independent encoding, the default).
    """
    m = _VARIANT.match(name)
    if not m:
        raise ValueError(f"unknown variant {name!r}")
    mods = tuple(m.group("mods").split("+"))
    bad = [x for x in mods if x not in MODALITIES]
    if bad:
        raise ValueError(f"unknown variant {name!r}: modalities {bad}")
    enc = m.group("enc")
    encoding = CONCAT if enc in ("C", "Concat") else INDEPENDENT
    opts = dict(base)
    opts.update(modalities=mods, encoding=encoding, decoder_init=None)
    if m.group("noyaw"):
        opts["use_yaw_rate"] = False
    return ModelConfig(**opts)


@dataclass
class AblationTable:
    horizons: dict[str, int]
    reports: list[MetricsReport] = field(default_factory=list)

    def variants(self) -> list[str]:
        seen = []
        for r in self.reports:
            if r.variant not in seen:
                seen.append(r.variant)
        return seen

    def aggregates(self) -> list[Aggregate]:
        return [aggregate([r for r in self.reports if r.variant == v]) for v in self.variants()]

    def to_csv(self) -> str:
        """Header ``variant,seed,sample_count,mse_<h>...,c_mse,cf_mse,rmse``.

        One row per (variant, seed), then per variant a ``mean`` and a
        ``std`` row in the seed column.
        """
        keys = list(self.reports[0].metric_values()) if self.reports else []
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["variant", "seed", "sample_count", *keys])
        for r in self.reports:
            vals = r.metric_values()
            w.writerow([r.variant, r.seed, r.sample_count, *(repr(vals[k]) for k in keys)])
        for agg in self.aggregates():
            count = next(r.sample_count for r in self.reports if r.variant == agg.variant)
            w.writerow([agg.variant, "mean", count, *(repr(agg.mean[k]) for k in keys)])
            w.writerow([agg.variant, "std", count, *(repr(agg.std[k]) for k in keys)])
        return buf.getvalue()

    def summary(self) -> str:
        aggs = self.aggregates()
        if not aggs:
            return "(no runs)\n"
        keys = list(aggs[0].mean)
        width = max(len("Model"), *(len(a.variant) for a in aggs))
        lines = ["  ".join([f"{'Model':<{width}}", *(f"{k:>14}" for k in keys)])]
        for a in aggs:
            cells = a.formatted()
            lines.append("  ".join([f"{a.variant:<{width}}", *(f"{cells[k]:>14}" for k in keys)]))
        lines.append(f"(mean±std over {aggs[0].runs} runs, rounded half-up to integer pixels)")
        return "\n".join(lines) + "\n"


def run_ablation(variants: Sequence[str], train_data: Batch, val_data: Batch | None, test_data: Batch,
                 seeds: Sequence[int], model_base: dict, train_config: TrainConfig,
                 horizons: dict[str, int], keyframes_only: bool = False,
                 weights: str = "best") -> AblationTable:
    """Train and evaluate every variant once per seed."""
    configs = [variant_config(v, **model_base) for v in variants]
    table = AblationTable(dict(horizons))
    for name, cfg in zip(variants, configs):
        for seed in seeds:
            res = train(cfg, replace(train_config, seed=seed), train_data, val_data)
            params = res.best_params if weights == "best" else res.final_params
            table.reports.append(evaluate(params, cfg, test_data, horizons, keyframes_only,
                                          seed=seed, variant=cfg.label))
    return table
