import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from baptp.data import (DataError, FrameRecord, PedestrianTrack, attach_detections, build_samples, collate,
                        denormalize_predictions, denormalize_sample, dumps_tracks, interpolate_track, iou,
                        lerp_angle, match_detections, normalize_sample, parse_dataset, parse_lines,
                        sample_windows, split_on_gaps, window_starts, write_dataset)

import oracles
from helpers import box_track


# ---------------------------------------------------------------- parsing

def test_empty_file_gives_no_tracks(tmp_path):
    (tmp_path / "e.jsonl").write_text("")
    assert parse_dataset(tmp_path / "e.jsonl") == []


def test_repeated_frame_index_rejected_with_line_number():
    good = json.dumps({"track_id": "a", "image_width": 100, "image_height": 80,
                       "frames": [{"frame": 0, "box": [0, 0, 1, 1]}]})
    bad = json.dumps({"track_id": "b", "image_width": 100, "image_height": 80,
                      "frames": [{"frame": f, "box": [0, 0, 1, 1]} for f in (3, 3, 4)]})
    with pytest.raises(DataError, match=r"line 2: non-increasing frame_index"):
        parse_lines([good, bad])


@pytest.mark.parametrize("frame, msg", [
    ({"frame": 0, "box": [0, 0, 1, 1], "body_orientation": 360.0}, "body_orientation"),
    ({"frame": 0, "box": [0, 0, 1, 1], "pose": [1.0] * 33}, "pose"),
    ({"frame": 0, "box": [5, 0, 1, 1]}, "box"),
    ({"frame": 0}, "box"),
])
def test_invalid_frames_rejected(frame, msg):
    line = json.dumps({"track_id": "a", "image_width": 100, "image_height": 80, "frames": [frame]})
    with pytest.raises(DataError, match=msg):
        parse_lines([line])


def test_unknown_track_field_rejected():
    with pytest.raises(DataError, match="unknown"):
        parse_lines([json.dumps({"track_id": "a", "image_width": 1, "image_height": 1, "frams": []})])


def _opt(draw, strat):
    return draw(st.one_of(st.none(), strat))


@st.composite
def tracks(draw):
    n = draw(st.integers(1, 6))
    idx = sorted(draw(st.sets(st.integers(0, 200), min_size=n, max_size=n)))
    real = st.floats(-1e4, 1e4, allow_nan=False)
    angle = st.floats(0, 359.999, allow_nan=False)
    frames = []
    for f in idx:
        x, y = draw(real), draw(real)
        w, h = draw(st.floats(0, 500)), draw(st.floats(0, 500))
        frames.append(FrameRecord(
            frame=f, box=(x, y, x + w, y + h),
            body_orientation=_opt(draw, angle), head_orientation=_opt(draw, angle),
            pose=_opt(draw, st.lists(real, min_size=34, max_size=34).map(tuple)),
            speed=draw(real), yaw_rate=_opt(draw, real), yaw=_opt(draw, real), keyframe=draw(st.booleans())))
    return PedestrianTrack(draw(st.text(min_size=1, max_size=8)), draw(st.floats(1, 4000)),
                           draw(st.floats(1, 4000)), tuple(frames), fps=_opt(draw, st.floats(1, 60)))


@settings(max_examples=60)
@given(st.lists(tracks(), max_size=3))
def test_write_parse_round_trip(ts):
    text = dumps_tracks(ts)
    parsed = parse_lines(text.splitlines())
    assert dumps_tracks(parsed) == text
    for a, b in zip(ts, parsed):
        assert a.track_id == b.track_id
        assert [tuple(f.box) for f in a.frames] == [tuple(f.box) for f in b.frames]


def test_write_dataset_then_parse(tmp_path):
    t = box_track("x", [0, 1], [(0, 0, 1, 1), (1, 1, 2, 2)])
    write_dataset(tmp_path / "d.jsonl", [t])
    assert parse_dataset(tmp_path / "d.jsonl")[0].frames == t.frames


# ---------------------------------------------------------------- interpolation

def keyframed(boxes_at, **attrs):
    frames = sorted(boxes_at)
    return box_track("k", frames, [boxes_at[f] for f in frames], **attrs)


def test_box_interpolation_is_linear():
    t = interpolate_track(keyframed({0: (0, 0, 10, 10), 4: (4, 0, 14, 10)}), 4)
    assert [f.frame for f in t.frames] == [0, 1, 2, 3, 4]
    assert [tuple(f.box) for f in t.frames[1:4]] == [(1, 0, 11, 10), (2, 0, 12, 10), (3, 0, 13, 10)]
    assert [f.keyframe for f in t.frames] == [True, False, False, False, True]


def test_orientation_takes_the_short_arc():
    assert lerp_angle(350.0, 10.0, 0.5) == 0.0
    assert lerp_angle(10.0, 350.0, 0.25) == 5.0
    t = interpolate_track(keyframed({0: (0, 0, 1, 1), 4: (0, 0, 1, 1)}, body_orientation=[350.0, 10.0]), 4)
    assert t.frames[2].body_orientation == 0.0
    assert all(0 <= f.body_orientation < 360 for f in t.frames)


def test_factor_one_is_identity():
    t = keyframed({0: (0, 0, 1, 1), 4: (4, 0, 5, 1)})
    assert interpolate_track(t, 1) == t


def test_interpolation_needs_two_keyframes():
    with pytest.raises(DataError):
        interpolate_track(keyframed({0: (0, 0, 1, 1)}), 4)


def test_large_gaps_left_open_and_odometry_interpolated():
    t = box_track("g", [0, 4, 20], [(0, 0, 1, 1)] * 3, speed=[0.0, 4.0, 4.0], yaw_rate=[0.0, 0.4, None])
    out = interpolate_track(t, 4)
    assert [f.frame for f in out.frames] == [0, 1, 2, 3, 4, 20]
    assert out.frames[1].speed == 1.0
    assert out.frames[2].yaw_rate == pytest.approx(0.2, abs=1e-15)


@settings(max_examples=50)
@given(st.lists(st.tuples(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3), st.floats(0, 300), st.floats(0, 300),
                          st.floats(0, 359.99)), min_size=2, max_size=8),
       st.integers(1, 6))
def test_keyframes_reproduced_exactly(keys, factor):
    boxes = {factor * k: (x, y, x + w, y + h) for k, (x, y, w, h, _) in enumerate(keys)}
    t = keyframed(boxes, body_orientation=[k[4] for k in keys])
    out = interpolate_track(t, factor)
    by_frame = {f.frame: f for f in out.frames}
    for f in t.frames:
        assert by_frame[f.frame] == f
    assert len(out.frames) == factor * (len(keys) - 1) + 1


# ---------------------------------------------------------------- splitting and windows

def test_split_on_gaps_examples():
    frames = list(range(10)) + list(range(15, 31))
    t = box_track("s", frames, [(0, 0, 1, 1)] * len(frames))
    parts = split_on_gaps(t, 6, 4)
    assert [len(p) for p in parts] == [10, 16]
    gapless = box_track("g", range(12), [(0, 0, 1, 1)] * 12)
    assert split_on_gaps(gapless, 6, 4) == [gapless]
    short = box_track("h", list(range(9)) + [30], [(0, 0, 1, 1)] * 10)
    assert split_on_gaps(short, 6, 4) == []


@settings(max_examples=100)
@given(st.sets(st.integers(0, 120), max_size=60), st.integers(1, 5), st.integers(1, 5))
def test_split_pieces_gapless_and_cover_usable_frames(idx, n, m):
    idx = sorted(idx)
    t = box_track("p", idx, [(0, 0, 1, 1)] * len(idx))
    parts = split_on_gaps(t, n, m)
    for p in parts:
        fr = [f.frame for f in p.frames]
        assert fr == list(range(fr[0], fr[0] + len(fr)))
        assert len(fr) >= n + m
    runs, cur = [], []
    for f in idx:
        if cur and f != cur[-1] + 1:
            runs.append(cur)
            cur = []
        cur.append(f)
    if cur:
        runs.append(cur)
    usable = [f for r in runs if len(r) >= n + m for f in r]
    assert [f.frame for p in parts for f in p.frames] == usable


def test_window_examples():
    t10 = box_track("w", range(10), [(0, 0, 1, 1)] * 10)
    assert [s.start_frame for s in sample_windows(t10, 4, 3, 7)] == [0]
    t17 = box_track("w", range(17), [(0, 0, 1, 1)] * 17)
    assert [s.start_frame for s in sample_windows(t17, 4, 3, 2)] == [0, 2, 4, 6, 8, 10]
    t17n = box_track("w", range(17), [(0, 0, 1, 1)] * 17, keyframes=[False] * 17)
    assert sample_windows(t17n, 4, 3, 2, require_keyframe_end=True) == []


def test_keyframe_end_filter():
    kf = [f % 4 == 0 for f in range(20)]
    t = box_track("w", range(20), [(0, 0, 1, 1)] * 20, keyframes=kf)
    samples = sample_windows(t, 4, 3, 1, require_keyframe_end=True)
    assert samples and all(s.ends_on_keyframe for s in samples)
    assert [s.start_frame for s in samples] == [2, 6, 10]


@given(st.integers(0, 200), st.integers(1, 10), st.integers(1, 10), st.integers(1, 12))
def test_window_count_formula(length, n, m, stride):
    starts = list(window_starts(length, n, m, stride))
    assert starts == oracles.window_starts(length, n, m, stride)
    expected = (length - (n + m)) // stride + 1 if length >= n + m else 0
    assert len(starts) == expected


# ---------------------------------------------------------------- normalization

def feature_track(rng, length=10):
    frames = []
    for f in range(length):
        x, y = rng.uniform(0, 1800), rng.uniform(0, 900)
        frames.append(FrameRecord(
            frame=f, box=(x, y, x + rng.uniform(10, 100), y + rng.uniform(20, 120)),
            body_orientation=None if f == 3 else float(rng.uniform(0, 360)),
            head_orientation=359.9, pose=tuple(rng.uniform(0, 1000, 34)), speed=float(rng.normal()),
            yaw_rate=float(rng.normal())))
    return PedestrianTrack("f", 1920.0, 1024.0, tuple(frames))


def test_normalize_examples():
    s = normalize_sample(sample_windows(feature_track(np.random.default_rng(0)), 5, 3, 1)[0])
    np.testing.assert_array_equal(s.past_boxes[0], 0.0)
    assert s.features["HO"][0, 0] == pytest.approx(0.99972, abs=1e-5)
    assert not s.masks["BO"][3]
    assert s.future_odometry.shape == (3, 2)


@pytest.mark.parametrize("seed", range(10))
def test_normalize_round_trip(seed):
    for s in sample_windows(feature_track(np.random.default_rng(seed)), 5, 3, 2):
        back = denormalize_sample(normalize_sample(s))
        np.testing.assert_allclose(back.past_boxes, s.past_boxes, atol=1e-9, rtol=0)
        np.testing.assert_allclose(back.future_boxes, s.future_boxes, atol=1e-9, rtol=0)
        for k in s.features:
            np.testing.assert_allclose(back.features[k], s.features[k], atol=1e-9, rtol=0)
        np.testing.assert_array_equal(back.future_odometry, s.future_odometry)


def test_denormalize_predictions_examples():
    anchor = np.array([10.0, 20.0, 30.0, 60.0])
    np.testing.assert_array_equal(denormalize_predictions(np.zeros((3, 4)), anchor), np.tile(anchor, (3, 1)))
    pred = np.random.default_rng(0).normal(size=(3, 4))
    d = 7.5
    np.testing.assert_allclose(denormalize_predictions(pred, anchor + [d, 0, d, 0]),
                               denormalize_predictions(pred, anchor) + [d, 0, d, 0], atol=1e-12, rtol=0)
    s = sample_windows(feature_track(np.random.default_rng(1)), 5, 3, 1)[0]
    n = normalize_sample(s)
    np.testing.assert_allclose(denormalize_predictions(n.future_boxes, n.anchor_box), s.future_boxes, atol=1e-9)


def test_collate_shapes():
    samples = build_samples([feature_track(np.random.default_rng(2), 14)], 5, 3, 2)
    b = collate(samples)
    assert b.inputs["BB"].shape == (len(samples), 5, 4)
    assert b.inputs["P"].shape == (len(samples), 5, 34)
    assert b.odometry.shape == (len(samples), 3, 2)
    assert b.target.shape == (len(samples), 3, 4)


# ---------------------------------------------------------------- IoU and matching

def test_iou_examples():
    assert iou((0, 0, 2, 2), (0, 0, 2, 2)) == 1.0
    assert iou((0, 0, 1, 1), (2, 2, 3, 3)) == 0.0
    assert iou((0, 0, 2, 2), (1, 0, 3, 2)) == pytest.approx(1 / 3, abs=1e-15)
    assert iou((0, 0, 0, 5), (0, 0, 0, 5)) == 0.0


box_st = st.tuples(st.floats(-100, 100), st.floats(-100, 100), st.floats(0, 100), st.floats(0, 100)).map(
    lambda t: (t[0], t[1], t[0] + t[2], t[1] + t[3]))


@given(box_st, box_st)
def test_iou_symmetric_and_bounded(a, b):
    assert iou(a, b) == iou(b, a)
    assert 0.0 <= iou(a, b) <= 1.0


@pytest.mark.parametrize("seed", range(10))
def test_iou_matches_monte_carlo(seed):
    rng = np.random.default_rng(seed)
    x, y = rng.uniform(0, 10, 2)
    a = (x, y, x + rng.uniform(1, 5), y + rng.uniform(1, 5))
    x, y = a[0] + rng.uniform(-3, 3), a[1] + rng.uniform(-3, 3)
    b = (x, y, x + rng.uniform(1, 5), y + rng.uniform(1, 5))
    assert abs(iou(a, b) - oracles.iou_monte_carlo(a, b, rng)) < 0.01


def test_matching_examples():
    gts = [(0, 0, 10, 10), (100, 100, 110, 110)]
    assert match_detections(gts, []) == [None, None]
    det = [{"box": (1, 1, 10, 10), "pose": "p0"}]
    assert match_detections(gts, det) == [{"pose": "p0"}, None]
    dets = [{"box": (5, 0, 15, 10), "body_orientation": 1.0}, {"box": (1, 0, 11, 10), "body_orientation": 2.0}]
    assert iou(gts[0], dets[0]["box"]) == pytest.approx(1 / 3)
    assert match_detections(gts[:1], dets) == [{"body_orientation": 2.0}]


def test_matching_ties_prefer_lowest_index():
    dets = [{"box": (0, 0, 10, 10), "id": 0}, {"box": (0, 0, 10, 10), "id": 1}]
    assert match_detections([(0, 0, 10, 10)], dets) == [{"id": 0}]


def test_attach_detections_masks_unmatched_frames():
    t = box_track("a", [0, 1], [(0, 0, 10, 10), (50, 50, 60, 60)], body_orientation=[5.0, 6.0])
    pose = tuple(float(i) for i in range(34))
    out = attach_detections(t, {0: [{"box": (0, 0, 9, 9), "pose": pose, "body_orientation": 90.0}]})
    assert out.frames[0].pose == pose and out.frames[0].body_orientation == 90.0
    assert out.frames[1].pose is None and out.frames[1].body_orientation is None
