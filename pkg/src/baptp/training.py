"""Mini-batch training with Adam and a plateau learning-rate schedule."""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .model import Batch, ModelConfig, ModelParams, init_params, loss_and_grads, predict
from .numcore import AdamState, NonFiniteError, adam_step, make_rng

log = logging.getLogger(__name__)


class TrainingError(RuntimeError):
    """Training hit a non-finite loss or gradient."""


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 5e-4
    batch_size: int = 128
    epochs: int = 80
    l2: float = 1e-4
    patience: int = 5
    decay_factor: float = 5.0
    seed: int = 0

    def __post_init__(self):
        if self.lr <= 0 or self.batch_size < 1 or self.epochs < 0:
            raise ValueError("lr must be positive, batch_size >= 1, epochs >= 0")
        if self.l2 < 0 or self.patience < 1 or self.decay_factor <= 1.0:
            raise ValueError("l2 must be >= 0, patience >= 1, decay_factor > 1")

    def to_dict(self) -> dict:
        return asdict(self)


class PlateauSchedule:
    """Divide the learning rate by ``factor`` after ``patience`` epochs without
    a strictly lower validation loss; the counter restarts after each cut."""

    def __init__(self, lr: float, patience: int = 5, factor: float = 5.0):
        self.lr = lr
        self.patience = patience
        self.factor = factor
        self.best = math.inf
        self.bad_epochs = 0

    def step(self, val_loss: float) -> bool:
        if val_loss < self.best:
            self.best = val_loss
            self.bad_epochs = 0
            return False
        self.bad_epochs += 1
        if self.bad_epochs >= self.patience:
            self.lr /= self.factor
            self.bad_epochs = 0
            return True
        return False


def dataset_rmse(params: ModelParams, config: ModelConfig, data: Batch, chunk: int = 512) -> float:
    """Training-loss RMSE over a whole set: squared error summed per sample, averaged over samples."""
    total = 0.0
    for lo in range(0, data.size, chunk):
        part = data.subset(np.arange(lo, min(lo + chunk, data.size)))
        err = predict(part, params, config) - part.target
        total += float(np.sum(err * err))
    return math.sqrt(total / data.size)


@dataclass
class TrainResult:
    best_params: ModelParams
    final_params: ModelParams
    optimizer: AdamState
    history: list[dict] = field(default_factory=list)
    best_epoch: int = 0
    best_val: float = math.inf


def train(config: ModelConfig, tc: TrainConfig, train_data: Batch, val_data: Batch | None = None,
          params: ModelParams | None = None,
          on_epoch: Callable[[dict], None] | None = None) -> TrainResult:
    """Train for ``tc.epochs`` epochs, keeping the best-validation weights.

    Without validation data the training loss drives the schedule and the
    best-weights selection.
    """
    params = init_params(config, tc.seed) if params is None else dict(params)
    opt = AdamState(lr=tc.lr, l2=tc.l2)
    sched = PlateauSchedule(tc.lr, tc.patience, tc.decay_factor)
    result = TrainResult(dict(params), dict(params), opt)
    n = train_data.size
    for epoch in range(1, tc.epochs + 1):
        order = make_rng(tc.seed, 2, epoch).permutation(n)
        drop_rng = make_rng(tc.seed, 3, epoch)
        sq_sum = 0.0
        for b, lo in enumerate(range(0, n, tc.batch_size)):
            batch = train_data.subset(order[lo:lo + tc.batch_size])
            try:
                loss, grads = loss_and_grads(batch, params, config, training=True, rng=drop_rng)
                params = adam_step(opt, params, grads)
            except NonFiniteError as exc:
                raise TrainingError(f"epoch {epoch} batch {b}: {exc}") from exc
            sq_sum += loss * loss * batch.size
        train_loss = math.sqrt(sq_sum / n)
        val_loss = dataset_rmse(params, config, val_data) if val_data is not None else train_loss
        if not math.isfinite(val_loss):
            raise TrainingError(f"epoch {epoch}: validation loss is not finite")
        entry = {"epoch": epoch, "lr": opt.lr, "train_loss": train_loss, "val_loss": val_loss}
        if val_loss < result.best_val:
            result.best_val = val_loss
            result.best_epoch = epoch
            result.best_params = params
        if sched.step(val_loss):
            opt.lr = sched.lr
        result.history.append(entry)
        log.info("epoch %d lr %.3g train %.4f val %.4f", epoch, entry["lr"], train_loss, val_loss)
        if on_epoch is not None:
            on_epoch(entry)
    result.final_params = params
    return result


def fit_steps(config: ModelConfig, batch: Batch, steps: int, lr: float = 1e-3, seed: int = 0,
              l2: float = 0.0, training: bool = True) -> tuple[ModelParams, list[float]]:
    """Full-batch Adam for a fixed number of steps; returns params and the loss curve."""
    params = init_params(config, seed)
    opt = AdamState(lr=lr, l2=l2)
    rng = make_rng(seed, 3, 0)
    losses = []
    for _ in range(steps):
        loss, grads = loss_and_grads(batch, params, config, training=training, rng=rng)
        params = adam_step(opt, params, grads)
        losses.append(loss)
    return params, losses
