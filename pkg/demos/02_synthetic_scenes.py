"""
Synthetic pedestrians seen from a moving car
============================================

Walkers move on a ground plane and are projected through a pinhole camera
mounted on an ego vehicle. A turning walker rotates its body a few frames
before the path bends, which is the cue the orientation stream can use.
"""
import numpy as np

from baptp.data import SceneConfig, simulate

scene = SceneConfig(num_tracks=6, track_length=45, walker_mix={"constant_velocity": 1, "turning": 1},
                    ego_mix={"straight": 1, "turning": 1}, cue_lead=8)

for st in simulate(scene, seed=4):
    t, info = st.track, st.info
    first, last = t.frames[0].box, t.frames[-1].box
    print(f"{t.track_id}: walker={info.walker:<17} ego={info.ego:<8} "
          f"box {np.round(first, 1)} -> {np.round(last, 1)}")

# follow one turning walker frame by frame around its turn
turner = next(st for st in simulate(scene, seed=4) if st.info.walker == "turning")
cue, turn = turner.info.cue_frame, turner.info.turn_frame
print(f"\nbody starts rotating at frame {cue}, path bends at frame {turn}")
print("frame  body_orientation  center_x")
for f in turner.track.frames[max(0, cue - 3):turn + 6]:
    cx = 0.5 * (f.box[0] + f.box[2])
    marker = " <- cue" if f.frame == cue else (" <- turn" if f.frame == turn else "")
    print(f"{f.frame:>5}  {f.body_orientation:>16.1f}  {cx:>8.1f}{marker}")
