import math

import numpy as np
import pytest

from sit2stand import (
    JointAngles,
    PhaseTimings,
    Subject,
    scale_anthropometrics,
)
from sit2stand.perception import SkeletonFrame

REFERENCE_SUBJECT = Subject(height=1.734, mass=88.3, sex="male")


@pytest.fixture(scope="session")
def model():
    return scale_anthropometrics(REFERENCE_SUBJECT)


@pytest.fixture
def timings():
    return PhaseTimings(1.2, 0.4, 0.6)


def random_joint_angles(rng) -> JointAngles:
    """Random chain-consistent pose in the sit-to-stand envelope."""
    while True:
        trunk = rng.uniform(-0.4, 0.85)
        knee = rng.uniform(1.0, math.pi)
        ankle = rng.uniform(2.5, math.pi)
        hip = math.pi + ((math.pi - ankle) + knee - math.pi) - trunk
        if 0.05 < hip <= math.pi:
            return JointAngles.from_chain(trunk, knee, ankle)


def chain_skeleton(
    t: float,
    angles: JointAngles,
    offset=np.zeros(3),
    yaw: float = 0.0,
    confidence: float = 1.0,
    with_pairs: bool = True,
) -> SkeletonFrame:
    """3-D skeleton in the x-z plane whose projected sagittal angles equal
    ``angles`` exactly; optionally yawed about z and translated."""
    th_s = angles.shank_from_vertical
    th_t = angles.thigh_from_vertical
    th_h = angles.trunk
    lengths = {"shank": 0.49, "thigh": 0.42, "hat": 0.82, "foot": 0.25}
    ankle = np.array([0.0, 0.0, 0.05])
    knee = ankle + lengths["shank"] * np.array([math.sin(th_s), 0.0, math.cos(th_s)])
    hip = knee + lengths["thigh"] * np.array([math.sin(th_t), 0.0, math.cos(th_t)])
    shoulder = hip + lengths["hat"] * np.array([math.sin(th_h), 0.0, math.cos(th_h)])
    foot = ankle + lengths["foot"] * np.array([1.0, 0.0, 0.0])
    rot = np.array(
        [
            [math.cos(yaw), -math.sin(yaw), 0.0],
            [math.sin(yaw), math.cos(yaw), 0.0],
            [0.0, 0.0, 1.0],
        ]
    )
    joints = {
        name: rot @ p + offset
        for name, p in [
            ("ankle", ankle),
            ("knee", knee),
            ("hip", hip),
            ("shoulder_center", shoulder),
            ("foot", foot),
        ]
    }
    if with_pairs:
        lateral = rot @ np.array([0.0, 0.09, 0.0])
        joints["knee_left"] = joints["knee"] + lateral
        joints["knee_right"] = joints["knee"] - lateral
    conf = {name: confidence for name in joints}
    return SkeletonFrame(t=t, joints=joints, confidence=conf)
