"""Command-line entry point: ``baptp {synth,train,eval,predict}``.

Exit codes: 0 success, 2 invalid config or incompatible checkpoint,
3 unreadable or malformed data, 4 numerical failure during training,
5 output already exists (pass ``--force`` to overwrite).
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from ._io import atomic_write_text
from .data import (DataError, SceneConfig, build_samples, collate, generate_synthetic,
                   interpolate_track, parse_dataset)
from .eval import AblationTable, evaluate
from .model import Batch, CheckpointError, load_checkpoint, predict, save_checkpoint
from .numcore import NonFiniteError
from .runconfig import ConfigError, RunConfig
from .training import TrainingError, train

log = logging.getLogger("baptp")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC, EXIT_EXISTS = 0, 2, 3, 4, 5
SPLIT_RATIOS = (("train", 0.55), ("val", 0.10), ("test", 0.35))


class OutputExistsError(RuntimeError):
    pass


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _claim_outputs(paths: Sequence[Path], force: bool) -> None:
    """Refuse to start if any output exists, unless forced."""
    existing = [str(p) for p in paths if p.exists()]
    if existing and not force:
        raise OutputExistsError(f"refusing to overwrite {', '.join(existing)} (use --force)")
    for p in paths:
        p.parent.mkdir(parents=True, exist_ok=True)


def split_counts(total: int) -> dict[str, int]:
    train_n = int(round(total * SPLIT_RATIOS[0][1]))
    val_n = int(round(total * SPLIT_RATIOS[1][1]))
    return {"train": train_n, "val": val_n, "test": total - train_n - val_n}


def cmd_synth(scene: SceneConfig, seed: int, out_dir: Path, force: bool = False) -> dict[str, Path]:
    """Generate train/val/test files; each split draws from its own seed."""
    scene.validate()
    counts = split_counts(scene.num_tracks)
    paths = {name: out_dir / f"{name}.jsonl" for name in counts}
    echo = out_dir / "scene.json"
    _claim_outputs([*paths.values(), echo], force)
    for k, (name, n) in enumerate(counts.items()):
        generate_synthetic(replace(scene, num_tracks=n), 3 * seed + k, paths[name])
    atomic_write_text(echo, _dumps({"scene": scene.to_dict(), "seed": seed, "counts": counts}))
    return paths


def load_samples(cfg: RunConfig, split: str):
    path = getattr(cfg.data, split)
    if path is None:
        raise ConfigError(f"data.{split} is not set")
    try:
        tracks = parse_dataset(path)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if cfg.data.interpolate_factor > 1:
        tracks = [interpolate_track(t, cfg.data.interpolate_factor) for t in tracks]
    is_train = split == "train"
    stride = cfg.data.stride if is_train else cfg.data.eval_stride
    kf_end = cfg.data.require_keyframe_end and not is_train
    samples = build_samples(tracks, cfg.model.obs_len, cfg.model.pred_len, stride, kf_end)
    if not samples:
        raise DataError(f"{path}: no samples of length {cfg.model.obs_len}+{cfg.model.pred_len}")
    return samples


def _load_batch(cfg: RunConfig, split: str) -> Batch:
    return collate(load_samples(cfg, split))


def cmd_train(cfg: RunConfig, force: bool = False) -> Path:
    """Train, writing the resolved config, a JSONL epoch log and best/final checkpoints."""
    out = Path(cfg.output_dir)
    paths = {k: out / name for k, name in (("config", "config.json"), ("log", "train_log.jsonl"),
                                           ("best", "best.ckpt"), ("final", "final.ckpt"))}
    _claim_outputs(list(paths.values()), force)
    train_data = _load_batch(cfg, "train")
    val_data = _load_batch(cfg, "val") if cfg.data.val else None
    atomic_write_text(paths["config"], _dumps(cfg.to_dict()))
    lines: list[str] = []

    def on_epoch(entry):
        lines.append(json.dumps(entry, sort_keys=True))
        atomic_write_text(paths["log"], "\n".join(lines) + "\n")

    res = train(cfg.model, cfg.optim, train_data, val_data, on_epoch=on_epoch)
    if not lines:
        atomic_write_text(paths["log"], "")
    last = res.history[-1] if res.history else {}
    save_checkpoint(paths["best"], res.best_params, cfg.model, None,
                    {"epoch": res.best_epoch, "val_loss": res.best_val, "seed": cfg.seed, "weights": "best"})
    save_checkpoint(paths["final"], res.final_params, cfg.model, res.optimizer,
                    {"epoch": last.get("epoch", 0), "val_loss": last.get("val_loss"), "seed": cfg.seed,
                     "weights": "final"})
    return out


def _checkpoint_path(cfg: RunConfig, checkpoint: str | None) -> Path:
    if checkpoint:
        return Path(checkpoint)
    return Path(cfg.output_dir) / f"{cfg.eval.weights}.ckpt"


def _load_params(cfg: RunConfig, checkpoint: str | None):
    path = _checkpoint_path(cfg, checkpoint)
    try:
        ck = load_checkpoint(path)
    except OSError as exc:
        raise ConfigError(f"cannot read checkpoint {path}: {exc}") from exc
    except (CheckpointError, TypeError, KeyError) as exc:
        raise ConfigError(f"invalid checkpoint {path}: {exc}") from exc
    if ck.config != cfg.model:
        stored, wanted = ck.config.to_dict(), cfg.model.to_dict()
        diff = sorted(k for k in wanted if stored.get(k) != wanted[k])
        raise ConfigError(f"checkpoint {path} does not match the model config (differs in {', '.join(diff)})")
    return ck.params


def load_scene(path) -> SceneConfig:
    try:
        return SceneConfig.load(path)
    except OSError as exc:
        raise ConfigError(f"cannot read scene config {path}: {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def cmd_eval(cfg: RunConfig, checkpoint: str | None = None, split: str = "test",
             out_dir: Path | None = None, force: bool = False) -> AblationTable:
    """Evaluate one checkpoint; writes ``report.csv`` and ``summary.txt``."""
    out = Path(out_dir) if out_dir is not None else Path(cfg.output_dir) / f"eval-{split}"
    paths = [out / "report.csv", out / "summary.txt", out / "config.json"]
    _claim_outputs(paths, force)
    params = _load_params(cfg, checkpoint)
    batch = _load_batch(cfg, split)
    horizons = cfg.eval.horizon_steps(cfg.model.pred_len)
    report = evaluate(params, cfg.model, batch, horizons, cfg.data.keyframes_only, seed=cfg.seed)
    table = AblationTable(horizons, [report])
    atomic_write_text(paths[0], table.to_csv())
    atomic_write_text(paths[1], table.summary())
    atomic_write_text(paths[2], _dumps(cfg.to_dict()))
    return table


def _fmt(x: float) -> str:
    return f"{x:.2f}".rstrip("0").rstrip(".")


def overlay_svg(width: float, height: float, last_box, pred_boxes, gt_boxes) -> str:
    """Vector overlay: last observed box, final predicted and true boxes,
    and the predicted and true center paths."""
    def rect(b, cls, color, dash=""):
        x0, y0, x1, y1 = (float(v) for v in b)
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        return (f'  <rect class="{cls}" x="{_fmt(x0)}" y="{_fmt(y0)}" width="{_fmt(x1 - x0)}" '
                f'height="{_fmt(y1 - y0)}" fill="none" stroke="{color}" stroke-width="2"{extra}/>')

    def path(boxes, cls, color):
        c = 0.5 * (np.asarray(boxes)[:, :2] + np.asarray(boxes)[:, 2:])
        pts = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in c)
        return f'  <polyline class="{cls}" points="{pts}" fill="none" stroke="{color}" stroke-width="2"/>'

    body = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(width)}" height="{_fmt(height)}" '
        f'viewBox="0 0 {_fmt(width)} {_fmt(height)}">',
        f'  <rect x="0" y="0" width="{_fmt(width)}" height="{_fmt(height)}" fill="#f4f4f4"/>',
        rect(last_box, "observed", "#1f77b4"),
        rect(gt_boxes[-1], "ground-truth", "#2ca02c", "6,4"),
        path(gt_boxes, "ground-truth-centers", "#2ca02c"),
        rect(pred_boxes[-1], "predicted", "#d62728"),
        path(pred_boxes, "predicted-centers", "#d62728"),
        "</svg>",
    ]
    return "\n".join(body) + "\n"


def cmd_predict(cfg: RunConfig, checkpoint: str | None = None, split: str = "test",
                data_path: str | None = None, out_dir: Path | None = None, overlays: int = 0,
                force: bool = False) -> Path:
    """Write ``predictions.jsonl`` (one row per sample) and up to ``overlays`` SVG files."""
    if data_path is not None:
        cfg = RunConfig.from_dict({**cfg.to_dict(), "data": {**cfg.to_dict()["data"], split: data_path}})
    out = Path(out_dir) if out_dir is not None else Path(cfg.output_dir) / f"predict-{split}"
    pred_file = out / "predictions.jsonl"
    _claim_outputs([pred_file, out / "config.json"], force)
    params = _load_params(cfg, checkpoint)
    samples = load_samples(cfg, split)
    batch = collate(samples)
    anchors = batch.anchors[:, None, :]
    pred = predict(batch, params, cfg.model) + anchors
    gt = batch.target + anchors
    last = batch.inputs["BB"][:, -1] + batch.anchors
    rows = []
    for i, (track_id, start) in enumerate(batch.meta):
        rows.append(json.dumps({
            "track_id": track_id,
            "start_frame": start,
            "last_observed_box": last[i].tolist(),
            "predicted_boxes": pred[i].tolist(),
            "ground_truth_boxes": gt[i].tolist(),
        }, sort_keys=True))
    atomic_write_text(pred_file, "\n".join(rows) + "\n")
    atomic_write_text(out / "config.json", _dumps(cfg.to_dict()))
    if overlays > 0:
        odir = out / "overlays"
        odir.mkdir(parents=True, exist_ok=True)
        for i in range(min(overlays, batch.size)):
            s = samples[i]
            name = f"{i:05d}.svg"
            atomic_write_text(odir / name, overlay_svg(s.image_width, s.image_height, last[i], pred[i], gt[i]))
    return pred_file


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="baptp", description="Pedestrian box trajectory prediction.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log per-epoch progress")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config_help):
        sp.add_argument("--config", required=True, help=config_help)
        sp.add_argument("--seed", type=int, default=None, help="override the config seed")
        sp.add_argument("--out", default=None, help="output directory")
        sp.add_argument("--force", action="store_true", help="overwrite existing outputs")

    s = sub.add_parser("synth", help="generate synthetic train/val/test files")
    common(s, "scene config JSON")
    t = sub.add_parser("train", help="train a model")
    common(t, "run config JSON")
    for name, helptext in (("eval", "evaluate a checkpoint"), ("predict", "export predictions")):
        e = sub.add_parser(name, help=helptext)
        common(e, "run config JSON")
        e.add_argument("--checkpoint", default=None, help="checkpoint path (default: <output_dir>/<weights>.ckpt)")
        e.add_argument("--split", choices=("train", "val", "test"), default="test")
    sub.choices["predict"].add_argument("--data", default=None, help="dataset file replacing the split's path")
    sub.choices["predict"].add_argument("--overlays", type=int, default=0,
                                        help="write SVG overlays for the first N samples")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "synth":
            scene = load_scene(args.config)
            if args.out is None:
                raise ConfigError("synth needs --out")
            paths = cmd_synth(scene, args.seed or 0, Path(args.out), args.force)
            print("\n".join(str(p) for p in paths.values()))
            return EXIT_OK
        cfg = RunConfig.load(args.config)
        if args.seed is not None:
            cfg = cfg.with_overrides(seed=args.seed)
        if args.command == "train":
            if args.out is not None:
                cfg = cfg.with_overrides(output_dir=args.out)
            print(cmd_train(cfg, args.force))
        elif args.command == "eval":
            table = cmd_eval(cfg, args.checkpoint, args.split, args.out and Path(args.out), args.force)
            sys.stdout.write(table.summary())
        else:
            print(cmd_predict(cfg, args.checkpoint, args.split, args.data, args.out and Path(args.out),
                              args.overlays, args.force))
        return EXIT_OK
    except OutputExistsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EXISTS
    except (TrainingError, NonFiniteError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ConfigError, CheckpointError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
