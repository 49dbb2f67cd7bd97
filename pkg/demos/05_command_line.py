"""
The command-line workflow end to end
====================================

``baptp synth`` writes a dataset, ``baptp train`` fits a model and keeps the
best checkpoint, ``baptp eval`` reports metrics and ``baptp predict`` dumps
predictions with SVG overlays. Everything goes to a temporary directory.
"""
import json
import subprocess
import sys
import tempfile
from pathlib import Path

work = Path(tempfile.mkdtemp(prefix="baptp-demo-"))
(work / "scene.json").write_text(json.dumps({"num_tracks": 60, "track_length": 40,
                                             "walker_mix": {"constant_velocity": 1, "turning": 1}}))
(work / "run.json").write_text(json.dumps({
    "data": {"train": "data/train.jsonl", "val": "data/val.jsonl", "test": "data/test.jsonl",
             "stride": 2, "eval_stride": 4},
    "model": {"obs_len": 8, "pred_len": 16, "modalities": ["BB", "BO"], "hidden_dim": 16, "box_scale": 10.0},
    "optim": {"epochs": 5, "batch_size": 32, "lr": 2e-3},
    "eval": {"fps": 20, "horizons": {"0.4s": 0.4, "0.8s": 0.8}},
    "seed": 0,
    "output_dir": "runs/bb-bo",
}, indent=2))


def baptp(*args):
    cmd = [sys.executable, "-m", "baptp", *args]
    print("$ baptp " + " ".join(args))
    done = subprocess.run(cmd, cwd=work, capture_output=True, text=True)
    print(done.stdout + done.stderr, end="")
    print(f"(exit {done.returncode})\n")
    return done.returncode


baptp("synth", "--config", "scene.json", "--seed", "7", "--out", "data")
baptp("train", "--config", "run.json")
# a second run into the same directory is refused
baptp("train", "--config", "run.json")
baptp("eval", "--config", "run.json")
baptp("predict", "--config", "run.json", "--overlays", "3")

print((work / "runs/bb-bo/train_log.jsonl").read_text())
row = json.loads((work / "runs/bb-bo/predict-test/predictions.jsonl").read_text().splitlines()[0])
print("first prediction:", row["track_id"], "final box", [round(v, 1) for v in row["predicted_boxes"][-1]])
print("outputs are in", work)
