"""Dataset schema, preprocessing, detection matching and synthetic scenes."""
from .interpolate import interpolate_track, lerp_angle
from .matching import attach_detections, iou, match_detections
from .sampling import (Sample, build_samples, collate, denormalize_predictions, denormalize_sample,
                       make_sample, normalize_sample, sample_windows, split_on_gaps, window_starts)
from .schema import (BoundingBox, DataError, FrameRecord, PedestrianTrack, dumps_tracks, parse_dataset,
                     parse_lines, write_dataset)
from .synthetic import (CameraConfig, SceneConfig, ScenarioInfo, SyntheticTrack, cue_precedes_turn,
                        generate_synthetic, simulate, simulate_track)

__all__ = [
    "BoundingBox", "CameraConfig", "DataError", "FrameRecord", "PedestrianTrack", "Sample",
    "ScenarioInfo", "SceneConfig", "SyntheticTrack", "attach_detections", "build_samples", "collate",
    "cue_precedes_turn", "denormalize_predictions", "denormalize_sample", "dumps_tracks",
    "generate_synthetic", "interpolate_track", "iou", "lerp_angle", "make_sample", "match_detections",
    "normalize_sample", "parse_dataset", "parse_lines", "sample_windows", "simulate",
    "simulate_track", "split_on_gaps", "window_starts", "write_dataset",
]
