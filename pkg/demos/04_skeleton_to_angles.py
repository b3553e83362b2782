"""From depth-sensor skeleton joints to model-ready joint angles.

A body tracker emits 3-D joint positions per frame; the model wants
sagittal trunk/hip/knee/ankle angles at a uniform rate. The pipeline is:
fit the sagittal plane from the motion, project each frame, compute the
angles, then interpolate, low-pass and resample. No camera SDK involved:
frames are plain text records, one line per frame.
"""

import io
import math

import numpy as np

from sit2stand import JointAngles
from sit2stand.perception import (
    SkeletonFrame,
    fit_sagittal_plane,
    format_skeleton,
    project_and_angles,
    read_skeleton,
    smooth_and_resample,
)

rng = np.random.default_rng(8)


def skeleton_at(t, trunk, knee, ankle, jitter=0.0):
    """Place joints for a chain-consistent pose, with optional position noise."""
    th_s = math.pi - ankle
    th_t = th_s + knee - math.pi
    ank = np.array([0.0, 0.0, 0.06])
    kne = ank + 0.49 * np.array([math.sin(th_s), 0.0, math.cos(th_s)])
    hip = kne + 0.42 * np.array([math.sin(th_t), 0.0, math.cos(th_t)])
    sho = hip + 0.82 * np.array([math.sin(trunk), 0.0, math.cos(trunk)])
    foot = ank + np.array([0.25, 0.0, 0.0])
    joints = {"ankle": ank, "knee": kne, "hip": hip,
              "shoulder_center": sho, "foot": foot}
    joints = {k: v + rng.normal(0.0, jitter, 3) for k, v in joints.items()}
    conf = {k: 0.95 for k in joints}
    # trackers are least sure about the ankle; occasionally it drops out
    conf["ankle"] = 0.55 if rng.uniform() > 0.05 else 0.1
    return SkeletonFrame(t=t, joints=joints, confidence=conf)


# a 60 Hz stream of a slow stand-up-like motion, 2 mm of tracking noise
frames = [
    skeleton_at(
        i / 60.0,
        trunk=0.5 * math.sin(math.pi * min(i / 120.0, 0.5)) ** 2,
        knee=math.pi / 2 + (math.pi / 2 - 0.05) * min(i / 120.0, 1.0),
        ankle=math.pi - 0.05 - 0.08 * math.sin(math.pi * min(i / 120.0, 1.0)),
        jitter=0.002,
    )
    for i in range(150)
]

# the record format round-trips through plain text (file or stdin)
text = format_skeleton(frames)
print("one record:", text.splitlines()[0][:80], "...")
frames = read_skeleton(io.StringIO(text))

plane = fit_sagittal_plane(frames)
print("fitted plane normal:", np.round(plane.normal, 4))

sagittal = [project_and_angles(f, plane) for f in frames]
flagged = sum(s.low_confidence for s in sagittal)
print(f"{flagged} of {len(sagittal)} frames flagged low-confidence")

traj = smooth_and_resample(sagittal, rate=100.0)
print(f"resampled to {traj.n_frames} frames at 100 Hz; "
      f"derivatives filled: {traj.has_derivatives}")

mid = traj.n_frames // 2
print("mid-motion angles (deg):",
      {n: round(math.degrees(a), 1)
       for n, a in zip(("trunk", "hip", "knee", "ankle"), traj.angles[mid])})
