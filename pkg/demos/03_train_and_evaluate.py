"""
Training on synthetic walkers and comparing with persistence
============================================================

A box-only model learns to extrapolate walkers moving at constant velocity.
Its errors are compared with the trivial predictor that repeats the last
observed box. Settings are small so this finishes in well under a minute.
"""
import numpy as np

from baptp.data import SceneConfig, build_samples, collate, generate_synthetic
from baptp.eval import AblationTable, evaluate, horizon_steps
from baptp.model import ModelConfig
from baptp.training import TrainConfig, train

n, m = 13, 32


def make(num, seed):
    scene = SceneConfig(num_tracks=num, track_length=n + m)
    return collate(build_samples(generate_synthetic(scene, seed), n, m, stride=4))


train_set, val_set, test_set = make(300, 1), make(40, 2), make(100, 3)
print(f"{train_set.size} training windows, {test_set.size} test windows")

cfg = ModelConfig(obs_len=n, pred_len=m, modalities=("BB",), hidden_dim=16, box_scale=10.0)
res = train(cfg, TrainConfig(lr=2e-3, batch_size=64, epochs=40), train_set, val_set,
            on_epoch=lambda e: print(f"  epoch {e['epoch']:>2}  train {e['train_loss']:8.2f}  val {e['val_loss']:8.2f}"))

horizons = {"0.8s": horizon_steps(0.8, 20), "1.6s": horizon_steps(1.6, 20)}
model = evaluate(res.best_params, cfg, test_set, horizons, variant="network")
last = test_set.inputs["BB"][:, -1:]
persistence = evaluate(None, cfg, test_set, horizons, variant="persistence",
                       predict_fn=lambda b: np.repeat(last, m, axis=1))
print()
print(AblationTable(horizons, [model, persistence]).summary())
