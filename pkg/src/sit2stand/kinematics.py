"""Planar kinematics of the four-link sit-to-stand chain.

Frame convention: sagittal plane with x forward and z up; the ankle pivot
is fixed at the origin (feet stay on the ground). Moments are positive
counterclockwise in this picture.

Angle conventions (all radians):

* ``trunk``  - HAT axis measured from vertical, positive leaning forward.
* ``hip``    - interior angle at the hip between the HAT axis and the
  thigh; pi when fully extended (standing).
* ``knee``   - interior angle at the knee between thigh and shank; pi when
  fully extended.
* ``ankle``  - shank orientation in the same pi-extended convention:
  pi when the shank is perpendicular to the flat foot (upright), so the
  anatomical shank-foot angle is ``ankle - pi/2``.

With the foot flat, the absolute shank lean from vertical is
``pi - ankle``, the thigh direction (knee->hip, from vertical) is
``(pi - ankle) + knee - pi``, and consistency requires
``trunk = (pi - ankle) + knee - hip``. The trunk channel is authoritative
for the HAT segment; ``JointAngles.chain_consistency`` reports the
mismatch of a measured hip channel.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import butter, filtfilt

from .anthro import AnthropometricModel

ANGLE_COLUMNS = ("trunk", "hip", "knee", "ankle")

# ankle joint position along the foot, as a fraction of foot length from the heel
HEEL_TO_ANKLE_FRACTION = 0.25

# grace above full extension: measured streams jitter a few degrees past pi
_ANGLE_TOL = 0.06


@dataclass(frozen=True)
class JointAngles:
    """One frame of joint angles; hip/knee/ankle live in (0, pi] with a few
    degrees of grace past extension for measurement jitter."""

    trunk: float
    hip: float
    knee: float
    ankle: float

    def __post_init__(self):
        values = (self.trunk, self.hip, self.knee, self.ankle)
        if not all(math.isfinite(v) for v in values):
            raise ValueError(f"joint angles must be finite, got {values}")
        for name in ("hip", "knee", "ankle"):
            v = getattr(self, name)
            if not (0.0 < v <= math.pi + _ANGLE_TOL):
                raise ValueError(f"{name}: {v} rad outside the (0, pi] joint range")

    @classmethod
    def from_chain(cls, trunk: float, knee: float, ankle: float) -> "JointAngles":
        """Build a chain-consistent set; the hip angle is implied."""
        shank = math.pi - ankle
        thigh = shank + knee - math.pi
        return cls(trunk=trunk, hip=math.pi + thigh - trunk, knee=knee, ankle=ankle)

    def chain_consistency(self) -> float:
        """Residual of the hip channel against trunk/knee/ankle (rad)."""
        return self.hip - (math.pi + self.thigh_from_vertical - self.trunk)

    @property
    def shank_from_vertical(self) -> float:
        return math.pi - self.ankle

    @property
    def thigh_from_vertical(self) -> float:
        """Direction of knee->hip from vertical (negative: hip behind knee)."""
        return self.shank_from_vertical + self.knee - math.pi

    def as_array(self) -> np.ndarray:
        return np.array([self.trunk, self.hip, self.knee, self.ankle])


@dataclass
class PoseTrajectory:
    """Time series of joint angles with optional derivative channels.

    ``angles``/``velocity``/``acceleration`` are (n, 4) arrays with columns
    trunk, hip, knee, ankle.
    """

    t: np.ndarray
    angles: np.ndarray
    velocity: np.ndarray | None = None
    acceleration: np.ndarray | None = None

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.angles = np.asarray(self.angles, dtype=float)
        if self.t.ndim != 1 or self.angles.shape != (self.t.size, 4):
            raise ValueError("need t of shape (n,) and angles of shape (n, 4)")
        if self.t.size >= 2 and not np.all(np.diff(self.t) > 0):
            raise ValueError("timestamps must be strictly increasing")
        for name in ("velocity", "acceleration"):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.asarray(arr, dtype=float)
                if arr.shape != self.angles.shape:
                    raise ValueError(f"{name} shape {arr.shape} != angles shape")
                setattr(self, name, arr)

    @property
    def n_frames(self) -> int:
        return self.t.size

    @property
    def duration(self) -> float:
        return float(self.t[-1] - self.t[0])

    @property
    def has_derivatives(self) -> bool:
        return self.velocity is not None and self.acceleration is not None

    def frame(self, i: int) -> JointAngles:
        return JointAngles(*self.angles[i])

    def rates(self, i: int) -> np.ndarray:
        if self.velocity is None:
            raise ValueError("trajectory has no velocity; run differentiate() first")
        return self.velocity[i]

    def slice(self, t0: float, t1: float) -> "PoseTrajectory":
        m = (self.t >= t0) & (self.t <= t1)
        return PoseTrajectory(
            self.t[m],
            self.angles[m],
            None if self.velocity is None else self.velocity[m],
            None if self.acceleration is None else self.acceleration[m],
        )

    # -- CSV interface: t,trunk,hip,knee,ankle[,dtrunk,...,ddankle] ---------

    def to_csv(self) -> str:
        cols = ["t"] + list(ANGLE_COLUMNS)
        data = [self.t, *self.angles.T]
        if self.has_derivatives:
            cols += [f"d{c}" for c in ANGLE_COLUMNS] + [f"dd{c}" for c in ANGLE_COLUMNS]
            data += [*self.velocity.T, *self.acceleration.T]
        buf = io.StringIO()
        buf.write(",".join(cols) + "\n")
        for row in zip(*data):
            buf.write(",".join(repr(float(v)) for v in row) + "\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "PoseTrajectory":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        header = [c.strip() for c in lines[0].split(",")]
        expected = ["t"] + list(ANGLE_COLUMNS)
        if header[: len(expected)] != expected:
            raise ValueError(f"bad trajectory header: {lines[0]!r}")
        rows = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
        if rows.shape[1] != len(header):
            raise ValueError("row length does not match header")
        traj = cls(rows[:, 0], rows[:, 1:5])
        if len(header) >= 13:
            traj.velocity = rows[:, 5:9]
            traj.acceleration = rows[:, 9:13]
        else:
            traj = differentiate(traj)
        return traj


@dataclass(frozen=True)
class ChainPose:
    """Joint and mass-centre positions for one frame, plus the HAT
    acceleration terms the dynamics needs."""

    ankle: np.ndarray
    knee: np.ndarray
    hip: np.ndarray
    hat_top: np.ndarray
    com_hat: np.ndarray
    com_thigh: np.ndarray
    com_shank: np.ndarray
    com_foot: np.ndarray
    hat_com_acc: np.ndarray = field(default_factory=lambda: np.zeros(2))
    trunk_acc: float = 0.0


def _unit(theta: float) -> np.ndarray:
    return np.array([math.sin(theta), math.cos(theta)])


def _unit_acc(theta: float, rate: float, acc: float) -> np.ndarray:
    """Second time derivative of the unit vector (sin t, cos t)."""
    s, c = math.sin(theta), math.cos(theta)
    return np.array([acc * c - rate**2 * s, -acc * s - rate**2 * c])


def forward_kinematics(
    angles: JointAngles,
    model: AnthropometricModel,
    rates: JointAngles | None = None,
    accels: JointAngles | None = None,
) -> ChainPose:
    """Compose the chain from the fixed ankle for one frame.

    ``rates``/``accels`` carry per-channel first/second angle derivatives
    (same field layout as the angles); when omitted the frame is static.
    """
    th_s = angles.shank_from_vertical
    th_t = angles.thigh_from_vertical
    th_h = angles.trunk

    ls = model.shank.length
    lt = model.thigh.length
    lh = model.hat.length
    lf = model.foot.length

    ankle = np.zeros(2)
    knee = ankle + ls * _unit(th_s)
    hip = knee + lt * _unit(th_t)
    hat_top = hip + lh * _unit(th_h)

    com_hat = hip + model.hat.com_offset * lh * _unit(th_h)
    com_thigh = hip + model.thigh.com_offset * (knee - hip)
    com_shank = knee + model.shank.com_offset * (ankle - knee)
    # foot com measured from the heel along the ground
    heel = ankle + np.array([-HEEL_TO_ANKLE_FRACTION * lf, 0.0])
    com_foot = heel + np.array([model.foot.com_offset * lf, 0.0])

    hat_com_acc = np.zeros(2)
    trunk_acc = 0.0
    if accels is not None:
        if rates is None:
            raise ValueError("accels given without rates")
        # channel derivatives -> absolute-orientation derivatives
        dth_s = -rates.ankle
        dth_t = dth_s + rates.knee
        dth_h = rates.trunk
        ath_s = -accels.ankle
        ath_t = ath_s + accels.knee
        ath_h = accels.trunk
        hat_com_acc = (
            ls * _unit_acc(th_s, dth_s, ath_s)
            + lt * _unit_acc(th_t, dth_t, ath_t)
            + model.hat.com_offset * lh * _unit_acc(th_h, dth_h, ath_h)
        )
        trunk_acc = ath_h

    return ChainPose(
        ankle=ankle,
        knee=knee,
        hip=hip,
        hat_top=hat_top,
        com_hat=com_hat,
        com_thigh=com_thigh,
        com_shank=com_shank,
        com_foot=com_foot,
        hat_com_acc=hat_com_acc,
        trunk_acc=trunk_acc,
    )


def chain_poses(traj: PoseTrajectory, model: AnthropometricModel) -> list[ChainPose]:
    """Per-frame chain poses with HAT acceleration filled from the
    trajectory's derivative channels."""
    if not traj.has_derivatives:
        raise ValueError("trajectory has no derivatives; run differentiate() first")
    out = []
    for i in range(traj.n_frames):
        out.append(
            forward_kinematics(
                traj.frame(i),
                model,
                rates=AngleRates(traj.velocity[i]),
                accels=AngleRates(traj.acceleration[i]),
            )
        )
    return out


class AngleRates:
    """Angle-derivative carrier; same fields as JointAngles, no range checks."""

    __slots__ = ("trunk", "hip", "knee", "ankle")

    def __init__(self, values):
        self.trunk, self.hip, self.knee, self.ankle = (float(v) for v in values)


def differentiate(traj: PoseTrajectory, cutoff_hz: float | None = None) -> PoseTrajectory:
    """Fill velocity/acceleration by central differences (one-sided at the
    endpoints). ``cutoff_hz`` applies a zero-phase 2nd-order Butterworth
    low-pass to the angles first; the per-channel linear trend is removed
    before filtering and restored after, so affine signals pass through
    exactly.
    """
    if traj.n_frames < 5:
        raise ValueError(f"need at least 5 frames to differentiate, got {traj.n_frames}")
    t = traj.t
    angles = traj.angles
    if cutoff_hz is not None:
        dt = np.diff(t)
        if not np.allclose(dt, dt[0], rtol=1e-6, atol=0.0):
            raise ValueError("low-pass smoothing needs a uniform sample grid")
        angles = lowpass(angles, 1.0 / dt[0], cutoff_hz)
    velocity = np.stack(
        [np.gradient(angles[:, j], t, edge_order=2) for j in range(4)], axis=1
    )
    acceleration = np.stack(
        [np.gradient(velocity[:, j], t, edge_order=2) for j in range(4)], axis=1
    )
    return PoseTrajectory(t.copy(), angles.copy(), velocity, acceleration)


def lowpass(signal: np.ndarray, rate_hz: float, cutoff_hz: float) -> np.ndarray:
    """Zero-phase 2nd-order Butterworth low-pass, detrended per channel."""
    if cutoff_hz <= 0 or cutoff_hz >= rate_hz / 2:
        raise ValueError(f"cutoff {cutoff_hz} Hz must be in (0, rate/2)")
    signal = np.asarray(signal, dtype=float)
    flat = signal.ndim == 1
    if flat:
        signal = signal[:, None]
    n = signal.shape[0]
    x = np.arange(n)
    b, a = butter(2, cutoff_hz / (rate_hz / 2.0))
    out = np.empty_like(signal)
    for j in range(signal.shape[1]):
        coef = np.polyfit(x, signal[:, j], 1)
        trend = np.polyval(coef, x)
        out[:, j] = filtfilt(b, a, signal[:, j] - trend) + trend
    return out[:, 0] if flat else out


# -- synthetic sit-to-stand trajectories ------------------------------------


@dataclass(frozen=True)
class PhaseTimings:
    """Durations (s) of the three movement phases: trunk flexion (seated),
    transfer (lift-off to peak loading), and knee-hip extension."""

    flexion: float
    transfer: float
    extension: float

    def __post_init__(self):
        if min(self.flexion, self.transfer, self.extension) <= 0:
            raise ValueError("phase durations must be positive")

    @property
    def total(self) -> float:
        return self.flexion + self.transfer + self.extension

    @property
    def rise(self) -> float:
        """Duration of the hip rise (transfer + extension)."""
        return self.transfer + self.extension


def _quintic(u: np.ndarray):
    """Minimum-jerk blend s(u) on [0, 1] and its two u-derivatives."""
    s = u**3 * (10.0 - 15.0 * u + 6.0 * u**2)
    ds = 30.0 * u**2 * (1.0 - u) ** 2
    dds = 60.0 * u - 180.0 * u**2 + 120.0 * u**3
    return s, ds, dds


def _blend(t, t0, t1, y0, y1):
    """Quintic segment from (t0, y0) to (t1, y1), clamped outside."""
    u = np.clip((t - t0) / (t1 - t0), 0.0, 1.0)
    s, ds, dds = _quintic(u)
    span = y1 - y0
    inside = (t > t0) & (t < t1)
    y = y0 + span * s
    dy = np.where(inside, span * ds / (t1 - t0), 0.0)
    ddy = np.where(inside, span * dds / (t1 - t0) ** 2, 0.0)
    return y, dy, ddy


def _schedule(t, segments, start_value):
    """Piecewise quintic profile; segments are consecutive (t0, t1, y0, y1)
    with matching endpoints. Evaluated with value/rate/acceleration."""
    y = np.full_like(t, float(start_value))
    dy = np.zeros_like(t)
    ddy = np.zeros_like(t)
    for t0, t1, y0, y1 in segments:
        seg, dseg, ddseg = _blend(t, t0, t1, y0, y1)
        after = t >= t0
        y = np.where(after, seg, y)
        dy = np.where(after, dseg, dy)
        ddy = np.where(after, ddseg, ddy)
    return y, dy, ddy


# shape constants for the generated motion
TRUNK_FLEXION_PEAK = 0.70  # rad, forward lean at deepest flexion
SHANK_LEAN_PEAK = 0.10  # rad, forward shank lean at mid-rise
FLEXION_OVERLAP = 0.35  # trunk keeps flexing this far into the rise


def generate_sts_trajectory(
    model: AnthropometricModel,
    timings: PhaseTimings,
    rate: float = 100.0,
    chair_height: float = 0.40,
    trunk_flexion: float = TRUNK_FLEXION_PEAK,
    shank_lean: float = SHANK_LEAN_PEAK,
) -> PoseTrajectory:
    """Smooth synthetic sit-to-stand trajectory.

    The motion starts seated (hip height = chair height, shank vertical,
    trunk vertical), flexes the trunk forward through lift-off (deepest
    lean a fraction of the way into the rise), then extends everything to
    an exact upright at the end. All channels are C2 quintic blends, and
    the returned derivatives are analytic.

    Raises
    ------
    ValueError
        If the chair height is geometrically unreachable for the subject,
        or rate < 30 Hz.
    """
    if rate < 30.0:
        raise ValueError(f"rate: {rate} Hz below the 30 Hz minimum")
    ls = model.shank.length
    lt = model.thigh.length
    cos_psi = (chair_height - ls) / lt
    if abs(cos_psi) > 1.0 - 1e-9:
        raise ValueError(
            f"chair height {chair_height} m unreachable for hip span "
            f"[{ls - lt:.3f}, {ls + lt:.3f}] m"
        )
    psi0 = -math.acos(cos_psi)  # hip behind the knee when seated

    total = timings.total
    t = np.linspace(0.0, total, int(round(total * rate)) + 1)
    t_lift = timings.flexion
    t_flex_end = t_lift + FLEXION_OVERLAP * timings.rise

    trunk, d_trunk, dd_trunk = _schedule(
        t,
        [(0.0, t_flex_end, 0.0, trunk_flexion), (t_flex_end, total, trunk_flexion, 0.0)],
        0.0,
    )
    psi, d_psi, dd_psi = _schedule(t, [(t_lift, total, psi0, 0.0)], psi0)
    mid_rise = t_lift + 0.5 * timings.rise
    lean, d_lean, dd_lean = _schedule(
        t,
        [(t_lift, mid_rise, 0.0, shank_lean), (mid_rise, total, shank_lean, 0.0)],
        0.0,
    )

    # channel conversion: ankle = pi - lean, knee = pi + psi - lean,
    # hip = pi + psi - trunk
    angles = np.stack(
        [trunk, math.pi + psi - trunk, math.pi + psi - lean, math.pi - lean], axis=1
    )
    velocity = np.stack([d_trunk, d_psi - d_trunk, d_psi - d_lean, -d_lean], axis=1)
    acceleration = np.stack(
        [dd_trunk, dd_psi - dd_trunk, dd_psi - dd_lean, -dd_lean], axis=1
    )
    return PoseTrajectory(t, angles, velocity, acceleration)


def hold_frames(angles: JointAngles, t0: float, duration: float, rate: float):
    """Static extension block (zero rates) for splicing holds around a
    trajectory; returns (t, angles, velocity, acceleration) arrays."""
    n = int(round(duration * rate))
    t = t0 + np.arange(n) / rate
    a = np.tile(angles.as_array(), (n, 1))
    z = np.zeros_like(a)
    return t, a, z, z.copy()
