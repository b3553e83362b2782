"""Skeleton joint streams to sagittal joint angles.

Input is a plain record stream (no camera SDK): one line per frame,
``t`` followed by ``joint:x,y,z[,conf]`` tuples in metres, z up. Only the
sagittal-relevant joints are required (shoulder_center, hip, knee, ankle,
foot); left/right pairs such as ``hip_left``/``hip_right``, when present,
pin down the mediolateral direction for the plane fit.

Angles are interior joint angles from the projected 2-D points. The ankle
is converted to the chain convention (anatomical shank-foot angle + pi/2)
so a vertical shank over a flat foot reads pi, matching JointAngles. The
trunk angle is signed, measured from the gravity vertical within the
plane.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .kinematics import JointAngles, PoseTrajectory, differentiate, lowpass

REQUIRED_JOINTS = ("shoulder_center", "hip", "knee", "ankle", "foot")

DEFAULT_CONFIDENCE_THRESHOLD = 0.3
DEFAULT_CUTOFF_HZ = 4.0
MAX_GAP_S = 0.25

WORLD_UP = np.array([0.0, 0.0, 1.0])


class DegeneratePlaneError(ValueError):
    """Motion too degenerate to orient the sagittal plane."""


@dataclass
class SkeletonFrame:
    t: float
    joints: dict[str, np.ndarray]
    confidence: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        self.joints = {k: np.asarray(v, dtype=float) for k, v in self.joints.items()}
        missing = [j for j in REQUIRED_JOINTS if j not in self.joints]
        if missing:
            raise ValueError(f"skeleton frame missing joints: {missing}")
        for name, p in self.joints.items():
            if p.shape != (3,) or not np.all(np.isfinite(p)):
                raise ValueError(f"joint {name!r}: need a finite 3-vector, got {p}")

    def conf(self, name: str) -> float:
        return float(self.confidence.get(name, 1.0))


@dataclass(frozen=True)
class SagittalPlane:
    point: np.ndarray
    normal: np.ndarray  # unit, mediolateral

    def __post_init__(self):
        object.__setattr__(self, "point", np.asarray(self.point, dtype=float))
        n = np.asarray(self.normal, dtype=float)
        n = n / np.linalg.norm(n)
        object.__setattr__(self, "normal", n)

    def basis(self) -> tuple[np.ndarray, np.ndarray]:
        """In-plane (forward, up) unit vectors; up is the projected world
        vertical."""
        up = WORLD_UP - np.dot(WORLD_UP, self.normal) * self.normal
        norm = np.linalg.norm(up)
        if norm < 1e-9:
            raise DegeneratePlaneError(
                "plane normal is vertical; configure the plane manually"
            )
        up = up / norm
        forward = np.cross(self.normal, up)
        return forward, up

    def project(self, p: np.ndarray) -> np.ndarray:
        """Orthogonal projection into the plane as 2-D (forward, up)."""
        forward, up = self.basis()
        d = np.asarray(p, dtype=float) - self.point
        return np.array([np.dot(d, forward), np.dot(d, up)])


@dataclass
class SagittalFrame:
    t: float
    points: dict[str, np.ndarray]  # 2-D in-plane coordinates
    angles: JointAngles
    low_confidence: bool = False


def _paired_names(frames: list[SkeletonFrame]) -> list[str]:
    names = set(frames[0].joints)
    return sorted(
        b for b in {n[:-5] for n in names if n.endswith("_left")}
        if f"{b}_right" in names
    )


def fit_sagittal_plane(frames: list[SkeletonFrame]) -> SagittalPlane:
    """Estimate the sagittal plane from a motion sequence.

    With left/right joint pairs, the normal is the dominant direction of
    the left-right offsets. Otherwise it is the direction of least motion
    variance (each joint's displacement about its own mean). Static or
    collinear motion is refused.
    """
    if len(frames) < 10:
        raise ValueError(f"need at least 10 frames to fit a plane, got {len(frames)}")
    centre = np.mean([f.joints["hip"] for f in frames], axis=0)

    pairs = _paired_names(frames)
    if pairs:
        diffs = np.array(
            [f.joints[f"{b}_left"] - f.joints[f"{b}_right"] for f in frames for b in pairs]
        )
        _, _, vt = np.linalg.svd(diffs, full_matrices=False)
        normal = vt[0]
    else:
        blocks = []
        for name in REQUIRED_JOINTS:
            pts = np.array([f.joints[name] for f in frames])
            blocks.append(pts - pts.mean(axis=0))
        motion = np.vstack(blocks)
        scale = float(np.max(np.abs(motion), initial=0.0))
        if scale < 1e-9:
            raise DegeneratePlaneError(
                "no joint motion; configure the sagittal plane manually"
            )
        _, s, vt = np.linalg.svd(motion, full_matrices=False)
        if s[1] < 1e-8 * s[0]:
            raise DegeneratePlaneError(
                "joint motion is collinear; configure the sagittal plane manually"
            )
        normal = vt[2]

    # deterministic sign: largest-magnitude component positive
    k = int(np.argmax(np.abs(normal)))
    if normal[k] < 0:
        normal = -normal
    return SagittalPlane(point=centre, normal=normal)


def _interior(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na < 1e-12 or nb < 1e-12:
        raise ValueError("coincident joints: zero-length segment vector")
    c = float(np.dot(a, b) / (na * nb))
    return math.acos(min(1.0, max(-1.0, c)))


def project_and_angles(
    frame: SkeletonFrame,
    plane: SagittalPlane,
    confidence_threshold: float | dict[str, float] = DEFAULT_CONFIDENCE_THRESHOLD,
    ankle_prior: float | None = None,
) -> SagittalFrame:
    """Project one frame and compute the joint angles.

    hip = angle(hip->shoulder_center, hip->knee); knee = angle(knee->hip,
    knee->ankle); ankle = angle(ankle->knee, ankle->foot) + pi/2 (chain
    convention); trunk = signed angle of hip->shoulder_center from the
    in-plane vertical. Low joint confidence never alters values - it only
    flags the frame for downstream interpolation.

    ``confidence_threshold`` may be per-joint (a mapping), since trackers
    lose the ankle long before the rest; with ``ankle_prior`` set, a frame
    whose only weak joints are ankle/foot gets the prior substituted for
    its ankle channel instead of being flagged.
    """
    pts = {name: plane.project(frame.joints[name]) for name in frame.joints}
    shoulder = pts["shoulder_center"]
    hip = pts["hip"]
    knee = pts["knee"]
    ankle = pts["ankle"]
    foot = pts["foot"]

    trunk_vec = shoulder - hip
    hip_angle = _interior(trunk_vec, knee - hip)
    knee_angle = _interior(hip - knee, ankle - knee)
    ankle_angle = _interior(knee - ankle, foot - ankle) + math.pi / 2.0
    trunk = math.atan2(trunk_vec[0], trunk_vec[1])

    if isinstance(confidence_threshold, dict):
        def limit(j):
            return confidence_threshold.get(j, DEFAULT_CONFIDENCE_THRESHOLD)
    else:
        def limit(j):
            return confidence_threshold

    weak = {j for j in REQUIRED_JOINTS if frame.conf(j) < limit(j)}
    if ankle_prior is not None and weak and weak <= {"ankle", "foot"}:
        ankle_angle = ankle_prior
        weak = set()

    angles = JointAngles(trunk=trunk, hip=hip_angle, knee=knee_angle, ankle=ankle_angle)
    return SagittalFrame(
        t=frame.t, points=pts, angles=angles, low_confidence=bool(weak)
    )


def smooth_and_resample(
    frames: list[SagittalFrame],
    rate: float,
    cutoff_hz: float | None = DEFAULT_CUTOFF_HZ,
    max_gap: float = MAX_GAP_S,
) -> PoseTrajectory:
    """Bridge an irregular angle stream to a uniform model-rate trajectory.

    Low-confidence frames are dropped and linearly interpolated over, as
    long as no gap between surviving frames exceeds ``max_gap``. The
    uniform series is low-pass filtered (zero-phase, detrended) and
    differentiated.
    """
    valid = [f for f in frames if not f.low_confidence]
    if len(valid) < 5:
        raise ValueError(f"need at least 5 usable frames, got {len(valid)}")
    t = np.array([f.t for f in valid])
    if not np.all(np.diff(t) > 0):
        raise ValueError("frame timestamps must be strictly increasing")
    gaps = np.diff(t)
    bad = np.nonzero(gaps > max_gap)[0]
    if bad.size:
        spans = ", ".join(f"[{t[i]:.3f}, {t[i + 1]:.3f}] s" for i in bad)
        raise ValueError(f"gaps longer than {max_gap} s: {spans}")

    angles = np.array([f.angles.as_array() for f in valid])
    n_out = int(math.floor((t[-1] - t[0]) * rate)) + 1
    tu = t[0] + np.arange(n_out) / rate
    resampled = np.stack([np.interp(tu, t, angles[:, j]) for j in range(4)], axis=1)
    if cutoff_hz is not None:
        resampled = lowpass(resampled, rate, cutoff_hz)
    return differentiate(PoseTrajectory(tu, resampled))


# -- record stream format ----------------------------------------------------


def parse_skeleton_line(line: str, lineno: int = 0) -> SkeletonFrame:
    parts = line.split()
    if len(parts) < 2:
        raise ValueError(f"line {lineno}: expected 't joint:x,y,z[,conf] ...'")
    try:
        t = float(parts[0])
    except ValueError as exc:
        raise ValueError(f"line {lineno}: bad timestamp {parts[0]!r}") from exc
    joints: dict[str, np.ndarray] = {}
    confidence: dict[str, float] = {}
    for tok in parts[1:]:
        if ":" not in tok:
            raise ValueError(f"line {lineno}: bad joint token {tok!r}")
        name, values = tok.split(":", 1)
        nums = values.split(",")
        if len(nums) not in (3, 4):
            raise ValueError(f"line {lineno}: joint {name!r} needs x,y,z[,conf]")
        joints[name] = np.array([float(v) for v in nums[:3]])
        if len(nums) == 4:
            confidence[name] = float(nums[3])
    return SkeletonFrame(t=t, joints=joints, confidence=confidence)


def read_skeleton(stream) -> list[SkeletonFrame]:
    """Read frames from a text stream or iterable of lines."""
    frames = []
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        frames.append(parse_skeleton_line(line, lineno))
    return frames


def read_skeleton_file(path) -> list[SkeletonFrame]:
    """Read a record file; ``-`` reads standard input (stream mode)."""
    if str(path) == "-":
        import sys

        return read_skeleton(sys.stdin)
    with open(path, "r", encoding="utf-8") as fh:
        return read_skeleton(fh)


def format_skeleton(frames: list[SkeletonFrame]) -> str:
    lines = []
    for f in frames:
        toks = [repr(float(f.t))]
        for name in sorted(f.joints):
            x, y, z = (repr(float(v)) for v in f.joints[name])
            tok = f"{name}:{x},{y},{z}"
            if name in f.confidence:
                tok += f",{f.confidence[name]!r}"
            toks.append(tok)
        lines.append(" ".join(toks))
    return "\n".join(lines) + "\n"
