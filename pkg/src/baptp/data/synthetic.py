"""Synthetic on-board scenes: walkers seen from a moving pinhole camera.

World frame is the ground plane with ``x`` to the right and ``z`` forward at
the ego start pose; headings are measured from ``+z`` towards ``+x``. A
positive ego yaw rate turns the vehicle towards ``+x`` (to the right).

Each walker is a cuboid standing on the ground. Its box is the bounding
rectangle of the projected cuboid corners, its pose the projection of a
17-joint template (COCO joint order) animated with a gait phase. Body and
head orientations are the walker's headings relative to the line of sight,
0 meaning the walker faces the camera.

Turning walkers rotate their head, then their body, before the path bends;
``cue_lead`` frames separate the body rotation from the path change.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from typing import Sequence

import numpy as np

from ..numcore import make_rng
from .schema import BoundingBox, DataError, FrameRecord, PedestrianTrack, write_dataset

# body-frame joints (right, up, forward) in metres for a 1.75 m walker
_JOINTS = np.array([
    [0.000, 1.62, 0.10],   # nose
    [-0.035, 1.66, 0.08],  # left eye
    [0.035, 1.66, 0.08],   # right eye
    [-0.075, 1.64, 0.00],  # left ear
    [0.075, 1.64, 0.00],   # right ear
    [-0.19, 1.44, 0.00],   # left shoulder
    [0.19, 1.44, 0.00],    # right shoulder
    [-0.22, 1.15, 0.00],   # left elbow
    [0.22, 1.15, 0.00],    # right elbow
    [-0.23, 0.88, 0.00],   # left wrist
    [0.23, 0.88, 0.00],    # right wrist
    [-0.11, 0.95, 0.00],   # left hip
    [0.11, 0.95, 0.00],    # right hip
    [-0.11, 0.50, 0.00],   # left knee
    [0.11, 0.50, 0.00],    # right knee
    [-0.11, 0.08, 0.00],   # left ankle
    [0.11, 0.08, 0.00],    # right ankle
])
_HEAD_JOINTS = slice(0, 5)
# forward swing per unit gait amplitude; legs and arms in counter-phase
_SWING = np.array([0, 0, 0, 0, 0, 0, 0, -0.10, 0.10, -0.22, 0.22, 0, 0, 0.18, -0.18, 0.35, -0.35])
_TEMPLATE_HEIGHT = 1.75
_STRIDE_LENGTH = 1.4

WALKER_KINDS = ("constant_velocity", "turning", "stopping")
EGO_KINDS = ("straight", "turning")


@dataclass(frozen=True)
class CameraConfig:
    focal_length: float = 1000.0
    image_width: int = 1920
    image_height: int = 1024
    height: float = 1.5

    def validate(self) -> None:
        if self.focal_length <= 0 or self.image_width <= 0 or self.image_height <= 0:
            raise ValueError("camera focal length and image size must be positive")
        if self.height <= 0:
            raise ValueError("camera height must be positive")


@dataclass(frozen=True)
class SceneConfig:
    """Scenario mix and randomization ranges for :func:`simulate`."""

    camera: CameraConfig = field(default_factory=CameraConfig)
    fps: float = 20.0
    num_tracks: int = 100
    track_length: int = 80
    walker_mix: dict = field(default_factory=lambda: {"constant_velocity": 1.0, "turning": 0.0, "stopping": 0.0})
    ego_mix: dict = field(default_factory=lambda: {"straight": 1.0, "turning": 0.0})
    walker_speed: tuple[float, float] = (0.8, 1.8)
    walker_height: tuple[float, float] = (1.55, 1.9)
    walker_width: float = 0.5
    walker_depth: float = 0.3
    ego_speed: tuple[float, float] = (0.0, 8.0)
    ego_yaw_rate: tuple[float, float] = (0.05, 0.2)
    start_depth: tuple[float, float] = (8.0, 25.0)
    turn_angle_deg: tuple[float, float] = (60.0, 120.0)
    turn_frames: int = 6
    cue_lead: int = 8
    head_lead: int = 12
    stop_frames: int = 10
    keyframe_interval: int = 1
    box_noise_px: float = 0.0
    orientation_noise_deg: float = 0.0
    max_attempts: int = 200

    def validate(self) -> None:
        self.camera.validate()
        if self.fps <= 0:
            raise ValueError("fps must be positive")
        if self.num_tracks < 0 or self.track_length < 2:
            raise ValueError("num_tracks must be >= 0 and track_length >= 2")
        for name, kinds in (("walker_mix", WALKER_KINDS), ("ego_mix", EGO_KINDS)):
            mix = getattr(self, name)
            bad = set(mix) - set(kinds)
            if bad:
                raise ValueError(f"{name}: unknown kinds {sorted(bad)}")
            if any(v < 0 for v in mix.values()) or sum(mix.values()) <= 0:
                raise ValueError(f"{name}: weights must be non-negative with a positive sum")
        for name in ("walker_speed", "walker_height", "ego_speed", "ego_yaw_rate",
                     "start_depth", "turn_angle_deg"):
            lo, hi = getattr(self, name)
            if lo > hi or lo < 0:
                raise ValueError(f"{name}: expected 0 <= low <= high, got {(lo, hi)}")
        if self.start_depth[0] <= 1.0:
            raise ValueError("start_depth must keep walkers more than 1 m in front of the camera")
        if self.cue_lead < 0 or self.head_lead < 0 or self.turn_frames < 1 or self.stop_frames < 1:
            raise ValueError("cue_lead/head_lead must be >= 0, turn_frames/stop_frames >= 1")
        if self.keyframe_interval < 1:
            raise ValueError("keyframe_interval must be >= 1")
        if self.box_noise_px < 0 or self.orientation_noise_deg < 0:
            raise ValueError("noise levels must be non-negative")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SceneConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown scene config keys {sorted(unknown)}")
        d = dict(d)
        if "camera" in d:
            cam = dict(d["camera"])
            bad = set(cam) - {f.name for f in fields(CameraConfig)}
            if bad:
                raise ValueError(f"unknown camera keys {sorted(bad)}")
            d["camera"] = CameraConfig(**cam)
        for k, v in d.items():
            if isinstance(v, list):
                d[k] = tuple(v)
        cfg = cls(**d)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "SceneConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class ScenarioInfo:
    """Ground truth about how a track was generated."""

    walker: str
    ego: str
    turn_frame: int | None = None
    cue_frame: int | None = None
    stop_frame: int | None = None


@dataclass(frozen=True)
class SyntheticTrack:
    track: PedestrianTrack
    info: ScenarioInfo
    # world headings (radians) per frame
    path_heading: np.ndarray
    body_heading: np.ndarray
    # body orientation the walker would show had it kept its initial heading
    straight_orientation: np.ndarray


def _direction(heading):
    return np.sin(heading), np.cos(heading)


def _wrap_deg(x: float) -> float:
    out = x % 360.0
    return 0.0 if out >= 360.0 else out


def _ramp(k: np.ndarray, start: float, length: int) -> np.ndarray:
    return np.clip((k - start) / length, 0.0, 1.0)


class _Camera:
    def __init__(self, cfg: CameraConfig):
        self.f = cfg.focal_length
        self.cx = cfg.image_width / 2.0
        self.cy = cfg.image_height / 2.0
        self.w = cfg.image_width
        self.h = cfg.image_height
        self.height = cfg.height

    def to_camera(self, x, z, ego):
        ex, ez, theta = ego
        rx, rz = x - ex, z - ez
        xc = rx * np.cos(theta) - rz * np.sin(theta)
        zc = rx * np.sin(theta) + rz * np.cos(theta)
        return xc, zc

    def project(self, x, up, z, ego):
        xc, zc = self.to_camera(x, z, ego)
        yc = self.height - up
        return self.cx + self.f * xc / zc, self.cy + self.f * yc / zc, zc


def _walker_states(kind: str, cfg: SceneConfig, rng: np.random.Generator, length: int):
    """Per-frame position, path heading, body/head heading and speed."""
    dt = 1.0 / cfg.fps
    k = np.arange(length, dtype=np.float64)
    speed0 = rng.uniform(*cfg.walker_speed)
    heading0 = rng.uniform(0.0, 2.0 * math.pi)
    path = np.full(length, heading0)
    speed = np.full(length, speed0)
    body = path.copy()
    head = path.copy()
    info = {}
    if kind == "turning":
        lo = cfg.head_lead + 1
        hi = max(lo + 1, length - cfg.turn_frames - 1)
        turn = int(rng.integers(lo, hi))
        angle = math.radians(rng.uniform(*cfg.turn_angle_deg)) * rng.choice([-1.0, 1.0])
        path = heading0 + angle * _ramp(k, turn, cfg.turn_frames)
        body = heading0 + angle * _ramp(k, turn - cfg.cue_lead, cfg.turn_frames)
        head = heading0 + angle * _ramp(k, turn - cfg.head_lead, cfg.turn_frames)
        info = {"turn_frame": turn, "cue_frame": turn - cfg.cue_lead}
    elif kind == "stopping":
        stop = int(rng.integers(1, max(2, length - cfg.stop_frames)))
        speed = speed0 * (1.0 - _ramp(k, stop, cfg.stop_frames))
        info = {"stop_frame": stop}
    # position at frame k integrates the velocity of frames before it
    vx, vz = _direction(path)
    vx, vz = vx * speed * dt, vz * speed * dt
    px = np.concatenate([[0.0], np.cumsum(vx[:-1])])
    pz = np.concatenate([[0.0], np.cumsum(vz[:-1])])
    phase0 = rng.uniform(0.0, 2.0 * math.pi)
    phase = phase0 + 2.0 * math.pi * np.concatenate([[0.0], np.cumsum(speed[:-1] * dt)]) / _STRIDE_LENGTH
    return px, pz, path, body, head, speed, phase, info


def _ego_states(kind: str, cfg: SceneConfig, rng: np.random.Generator, length: int):
    dt = 1.0 / cfg.fps
    speed = np.full(length, rng.uniform(*cfg.ego_speed))
    yaw_rate = np.zeros(length)
    if kind == "turning":
        omega = rng.uniform(*cfg.ego_yaw_rate) * rng.choice([-1.0, 1.0])
        start = int(rng.integers(0, max(1, length // 2)))
        yaw_rate[start:] = omega
    theta = np.concatenate([[0.0], np.cumsum(yaw_rate[:-1] * dt)])
    dx, dz = _direction(theta)
    ex = np.concatenate([[0.0], np.cumsum(dx[:-1] * speed[:-1] * dt)])
    ez = np.concatenate([[0.0], np.cumsum(dz[:-1] * speed[:-1] * dt)])
    return ex, ez, theta, speed, yaw_rate


def _relative_orientation(cam: _Camera, x, z, heading, ego) -> float:
    """Walker heading relative to the line of sight, degrees; 0 = facing the camera."""
    xc, zc = cam.to_camera(x, z, ego)
    to_cam = math.atan2(-xc, -zc)
    facing = heading - ego[2]
    return _wrap_deg(math.degrees(facing - to_cam))


def _render_frame(cam: _Camera, cfg: SceneConfig, x, z, body, head, height, amp, phase, ego):
    s = height / _TEMPLATE_HEIGHT
    # cuboid corners
    hw, hd = cfg.walker_width / 2.0, cfg.walker_depth / 2.0
    fx, fz = _direction(body)
    rx, rz = fz, -fx
    corners = []
    for a in (-hw, hw):
        for b in (-hd, hd):
            corners.append((x + a * rx + b * fx, z + a * rz + b * fz))
    cx = np.array([c[0] for c in corners] * 2)
    cz = np.array([c[1] for c in corners] * 2)
    up = np.array([0.0] * 4 + [height] * 4)
    u, v, zc = cam.project(cx, up, cz, ego)
    if (zc < 1.0).any():
        return None
    box = BoundingBox(float(u.min()), float(v.min()), float(u.max()), float(v.max()))
    if box.x_tl < 0 or box.y_tl < 0 or box.x_br > cam.w or box.y_br > cam.h:
        return None

    joints = _JOINTS * s
    fwd = joints[:, 2] + amp * np.sin(phase) * _SWING * s
    right = joints[:, 0]
    jh = np.full(len(joints), body)
    jh[_HEAD_JOINTS] = head
    jfx, jfz = _direction(jh)
    jx = x + right * jfz + fwd * jfx
    jz = z - right * jfx + fwd * jfz
    pu, pv, pz = cam.project(jx, joints[:, 1], jz, ego)
    if (pz < 0.5).any():
        return None
    pose = tuple(float(c) for uv in zip(pu, pv) for c in uv)
    return box, pose


def _pick(rng: np.random.Generator, mix: dict, kinds: Sequence[str]) -> str:
    w = np.array([mix.get(k, 0.0) for k in kinds], dtype=np.float64)
    return kinds[int(rng.choice(len(kinds), p=w / w.sum()))]


def simulate_track(cfg: SceneConfig, rng: np.random.Generator, track_id: str,
                   walker: str | None = None, ego: str | None = None) -> SyntheticTrack:
    """Draw scenarios until one stays fully in view for the whole track."""
    cam = _Camera(cfg.camera)
    walker = walker or _pick(rng, cfg.walker_mix, WALKER_KINDS)
    ego = ego or _pick(rng, cfg.ego_mix, EGO_KINDS)
    n = cfg.track_length
    for _ in range(cfg.max_attempts):
        px, pz, path, body, head, speed, phase, info = _walker_states(walker, cfg, rng, n)
        ex, ez, theta, ego_speed, yaw_rate = _ego_states(ego, cfg, rng, n)
        height = rng.uniform(*cfg.walker_height)
        depth = rng.uniform(*cfg.start_depth)
        half_fov = 0.8 * (cam.w / 2.0) / cam.f
        lateral = rng.uniform(-half_fov, half_fov) * depth
        px, pz = px + lateral, pz + depth
        frames, straight = [], []
        for k in range(n):
            pose_ego = (ex[k], ez[k], theta[k])
            amp = min(1.0, speed[k] / max(cfg.walker_speed[1], 1e-9))
            rendered = _render_frame(cam, cfg, px[k], pz[k], body[k], head[k], height, amp, phase[k], pose_ego)
            if rendered is None:
                break
            box, pose = rendered
            bo = _relative_orientation(cam, px[k], pz[k], body[k], pose_ego)
            ho = _relative_orientation(cam, px[k], pz[k], head[k], pose_ego)
            straight.append(_relative_orientation(cam, px[k], pz[k], path[0], pose_ego))
            if cfg.box_noise_px:
                box = _noisy_box(box, rng, cfg.box_noise_px)
            if cfg.orientation_noise_deg:
                bo = _wrap_deg(bo + rng.normal(0, cfg.orientation_noise_deg))
                ho = _wrap_deg(ho + rng.normal(0, cfg.orientation_noise_deg))
            frames.append(FrameRecord(
                frame=k, box=box, body_orientation=bo, head_orientation=ho, pose=pose,
                speed=float(ego_speed[k]), yaw_rate=float(yaw_rate[k]),
                keyframe=(k % cfg.keyframe_interval == 0),
            ))
        if len(frames) == n:
            track = PedestrianTrack(track_id, cfg.camera.image_width, cfg.camera.image_height,
                                    tuple(frames), fps=cfg.fps)
            return SyntheticTrack(track, ScenarioInfo(walker, ego, **info), path, body, np.array(straight))
    raise DataError(f"could not keep a {walker}/{ego} walker in view for {n} frames "
                    f"after {cfg.max_attempts} attempts; widen start_depth or shorten tracks")


def _noisy_box(box: BoundingBox, rng: np.random.Generator, sigma: float) -> BoundingBox:
    x0, y0, x1, y1 = np.array(box) + rng.normal(0.0, sigma, 4)
    return BoundingBox(float(min(x0, x1)), float(min(y0, y1)), float(max(x0, x1)), float(max(y0, y1)))


def simulate(cfg: SceneConfig, seed: int) -> list[SyntheticTrack]:
    """All tracks of a scene; track ``i`` uses its own sub-stream of ``seed``."""
    cfg.validate()
    return [simulate_track(cfg, make_rng(seed, 7, i), f"syn{seed}-{i:05d}") for i in range(cfg.num_tracks)]


def generate_synthetic(cfg: SceneConfig, seed: int, path=None) -> list[PedestrianTrack]:
    """Simulate a scene and optionally write it as a dataset file."""
    tracks = [s.track for s in simulate(cfg, seed)]
    if path is not None:
        write_dataset(path, tracks)
    return tracks


def cue_precedes_turn(st: SyntheticTrack, threshold_deg: float = 1.0) -> bool:
    """True when the body-orientation signal departs from straight walking
    before the path heading starts to change. Non-turning walkers pass."""
    if st.info.walker != "turning":
        return True
    bo = np.array([f.body_orientation for f in st.track.frames])
    dev = np.abs((bo - st.straight_orientation + 180.0) % 360.0 - 180.0)
    cue = np.nonzero(dev > threshold_deg)[0]
    bend = np.nonzero(np.abs(st.path_heading - st.path_heading[0]) > 1e-12)[0]
    if not cue.size:
        return False
    return not bend.size or int(cue[0]) < int(bend[0])
