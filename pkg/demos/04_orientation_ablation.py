"""
Does body orientation help?
===========================

Half the walkers turn, and their body rotates 10 frames before the path
bends. We train three variants with two seeds each: boxes only, boxes plus
body orientation with one encoder per stream, and the same two inputs
squeezed through a single shared encoder. Expect a few minutes of runtime;
the acceptance suite runs a larger version of this experiment.
"""
from baptp.data import SceneConfig, build_samples, collate, generate_synthetic
from baptp.eval import run_ablation
from baptp.training import TrainConfig

n, m = 13, 32


def make(num, seed):
    scene = SceneConfig(num_tracks=num, track_length=n + m,
                        walker_mix={"constant_velocity": 0.5, "turning": 0.5}, cue_lead=10)
    return collate(build_samples(generate_synthetic(scene, seed), n, m, stride=2))


train_set, val_set, test_set = make(1000, 11), make(100, 12), make(250, 13)
table = run_ablation(["BB", "BB+BO", "BB+BO - C"], train_set, val_set, test_set, seeds=[0, 1],
                     model_base=dict(obs_len=n, pred_len=m, hidden_dim=32, box_scale=10.0),
                     train_config=TrainConfig(lr=1e-3, batch_size=128, epochs=30),
                     horizons={"1.6s": m})
print(table.summary())
print(table.to_csv())
