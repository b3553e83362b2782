"""Segment-by-segment inverse dynamics of the four-link chain with an
external cane thrust.

The balance is evaluated top-down: HAT (keeping its m*a and J*alpha
terms), then thigh, shank and foot quasi-statically (lower-limb inertia is
neglected - the movement is slow relative to the weights involved). Joint
torques are the moments the distal segment exerts on the proximal one,
positive counterclockwise in the x-forward / z-up sagittal frame. Moments
of planar vectors are 2-D cross products, ``rx*fz - rz*fx``.

Every frame carries the whole-body residual
``Fg + Fs + sum(G_i) - m_hat * a_hat``, which is the primary self-check:
any sign or lever error in the chain shows up there.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from .anthro import AnthropometricModel
from .kinematics import HEEL_TO_ANKLE_FRACTION, ChainPose, PoseTrajectory, chain_poses

CANE_ATTACH_FRACTION = 0.60  # default thrust point: fraction of HAT length above hip


def cross2d(r, f) -> float:
    """Out-of-plane moment of force f applied at lever r (CCW positive)."""
    return float(r[0] * f[1] - r[1] * f[0])


@dataclass(frozen=True)
class CaneForce:
    """External thrust anchored to the HAT segment.

    The attach point sits ``attach_fraction`` of the HAT length above the
    hip along the HAT axis, shifted ``attach_offset`` m perpendicular to
    the axis (positive forward).
    """

    magnitude: float
    direction: np.ndarray = field(default_factory=lambda: np.array([0.0, 1.0]))
    attach_fraction: float = CANE_ATTACH_FRACTION
    attach_offset: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "direction", np.asarray(self.direction, dtype=float))
        if self.magnitude < 0:
            raise ValueError(f"cane force magnitude {self.magnitude} < 0")
        norm = float(np.hypot(*self.direction))
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"cane direction must be a unit vector, |d| = {norm}")

    @classmethod
    def zero(cls) -> "CaneForce":
        return cls(0.0)

    @classmethod
    def vertical(cls, magnitude: float, **kwargs) -> "CaneForce":
        return cls(magnitude, np.array([0.0, 1.0]), **kwargs)

    @property
    def vector(self) -> np.ndarray:
        return self.magnitude * self.direction

    def attach_point(self, pose: ChainPose, model: AnthropometricModel) -> np.ndarray:
        axis = pose.hat_top - pose.hip
        along = pose.hip + self.attach_fraction * axis
        unit = axis / np.hypot(*axis)
        perp = np.array([unit[1], -unit[0]])  # forward normal of the HAT axis
        return along + self.attach_offset * perp


@dataclass
class SegmentLoads:
    """Joint torques, inter-segment forces and the ground reaction for one
    frame. Forces follow the chain convention: f_hip acts on the HAT from
    the thigh, f_knee on the thigh from the shank, f_ankle on the shank
    from the foot."""

    tau_hip: float
    tau_knee: float
    tau_ankle: float
    f_hip: np.ndarray
    f_knee: np.ndarray
    f_ankle: np.ndarray
    f_ground: np.ndarray
    m_ankle_grf: float  # moment of the ground reaction about the ankle
    m_plate: float  # residual plate moment closing the foot balance
    residual: np.ndarray  # whole-body force balance residual
    cop_x: float
    tipping: bool = False


@dataclass
class DynamicsFrame:
    t: float
    pose: ChainPose
    cane: CaneForce
    loads: SegmentLoads


def _weight(model: AnthropometricModel, name: str) -> np.ndarray:
    return np.array([0.0, -model.segment(name).mass * model.gravity])


def hat_balance(
    pose: ChainPose, cane: CaneForce, model: AnthropometricModel
) -> tuple[float, np.ndarray]:
    """Hip torque and thigh-on-HAT force from the HAT free body.

    Moment balance about the hip (d'Alembert form):
    tau1 + AG1 x G1 + AS x Fs - AG1 x (m1 a) - J1 alpha'' = 0
    Force balance: Fs + G1 + Ft = m1 a.
    """
    g1 = _weight(model, "hat")
    m1 = model.hat.mass
    ag1 = pose.com_hat - pose.hip
    a_s = cane.attach_point(pose, model) - pose.hip
    inertial = m1 * pose.hat_com_acc
    tau_hip = (
        cross2d(ag1, inertial)
        + model.hat.inertia_sagittal * pose.trunk_acc
        - cross2d(ag1, g1)
        - cross2d(a_s, cane.vector)
    )
    f_hip = inertial - cane.vector - g1
    return tau_hip, f_hip


def thigh_balance(
    pose: ChainPose, tau_hip: float, f_hip: np.ndarray, model: AnthropometricModel
) -> tuple[float, np.ndarray]:
    """Knee torque and shank-on-thigh force (quasi-static thigh)."""
    g2 = _weight(model, "thigh")
    bg2 = pose.com_thigh - pose.knee
    ba = pose.hip - pose.knee
    tau_knee = tau_hip - cross2d(bg2, g2) + cross2d(ba, f_hip)
    f_knee = f_hip - g2
    return tau_knee, f_knee


def shank_balance(
    pose: ChainPose, tau_knee: float, f_knee: np.ndarray, model: AnthropometricModel
) -> tuple[float, np.ndarray]:
    """Ankle torque and foot-on-shank force (quasi-static shank)."""
    g3 = _weight(model, "shank")
    cg3 = pose.com_shank - pose.ankle
    cb = pose.knee - pose.ankle
    tau_ankle = tau_knee - cross2d(cg3, g3) + cross2d(cb, f_knee)
    f_ankle = f_knee - g3
    return tau_ankle, f_ankle


def foot_closure(
    pose: ChainPose,
    tau_ankle: float,
    f_ankle: np.ndarray,
    model: AnthropometricModel,
    cop_x: float | None = None,
) -> tuple[np.ndarray, float, float, bool]:
    """Ground reaction, its ankle moment, and the residual plate moment.

    The foot receives -f_ankle from the shank, its own weight, and the
    ground reaction at the pressure centre P = (cop_x, 0); the plate
    moment is whatever closes the foot's moment balance:
    -tau3 + CG4 x G4 + CP x Fg + M_plate = 0.

    A pressure centre outside the heel-toe support span sets the tipping
    flag (not an error).
    """
    g4 = _weight(model, "foot")
    f_ground = f_ankle - g4
    if cop_x is None:
        cop_x = float(pose.ankle[0])
    cp = np.array([cop_x, 0.0]) - pose.ankle
    m_ankle_grf = cross2d(cp, f_ground)
    cg4 = pose.com_foot - pose.ankle
    m_plate = tau_ankle - cross2d(cg4, g4) - m_ankle_grf
    lf = model.foot.length
    lo = pose.ankle[0] - HEEL_TO_ANKLE_FRACTION * lf
    hi = pose.ankle[0] + (1.0 - HEEL_TO_ANKLE_FRACTION) * lf
    tipping = not (lo <= cop_x <= hi)
    return f_ground, m_ankle_grf, m_plate, tipping


def balance_cop(
    pose: ChainPose, tau_ankle: float, f_ankle: np.ndarray, model: AnthropometricModel
) -> float:
    """Pressure-centre x that makes the plate moment vanish."""
    g4 = _weight(model, "foot")
    f_ground = f_ankle - g4
    if abs(f_ground[1]) < 1e-12:
        return float(pose.ankle[0])
    cg4 = pose.com_foot - pose.ankle
    # solve cross2d((x - ankle, -ankle_z), Fg) = tau3 - CG4 x G4 for x
    target = tau_ankle - cross2d(cg4, g4)
    return float(pose.ankle[0] + (target + pose.ankle[1] * f_ground[0]) / f_ground[1])


def solve_frame(
    pose: ChainPose,
    cane: CaneForce,
    model: AnthropometricModel,
    cop_x: float | str | None = None,
    t: float = 0.0,
) -> DynamicsFrame:
    """Chain the four balances for one frame and attach the whole-body
    residual. ``cop_x`` may be a coordinate, None (under the ankle) or
    "balance" (zero plate moment)."""
    tau_hip, f_hip = hat_balance(pose, cane, model)
    tau_knee, f_knee = thigh_balance(pose, tau_hip, f_hip, model)
    tau_ankle, f_ankle = shank_balance(pose, tau_knee, f_knee, model)
    if isinstance(cop_x, str):
        if cop_x != "balance":
            raise ValueError(f"cop_x: unknown mode {cop_x!r}")
        cop = balance_cop(pose, tau_ankle, f_ankle, model)
    else:
        cop = float(pose.ankle[0]) if cop_x is None else float(cop_x)
    f_ground, m_ankle_grf, m_plate, tipping = foot_closure(
        pose, tau_ankle, f_ankle, model, cop
    )

    total_weight = np.array([0.0, -model.total_mass * model.gravity])
    residual = f_ground + cane.vector + total_weight - model.hat.mass * pose.hat_com_acc

    loads = SegmentLoads(
        tau_hip=tau_hip,
        tau_knee=tau_knee,
        tau_ankle=tau_ankle,
        f_hip=f_hip,
        f_knee=f_knee,
        f_ankle=f_ankle,
        f_ground=f_ground,
        m_ankle_grf=m_ankle_grf,
        m_plate=m_plate,
        residual=residual,
        cop_x=cop,
        tipping=tipping,
    )
    return DynamicsFrame(t=t, pose=pose, cane=cane, loads=loads)


def inverse_dynamics(
    traj: PoseTrajectory,
    cane_profile,
    model: AnthropometricModel,
    cop_x: float | str | None = None,
) -> list[DynamicsFrame]:
    """Run the chain over a trajectory.

    ``cane_profile`` is a sequence of CaneForce (one per frame) or None for
    an unassisted run. Length mismatches are an error.
    """
    poses = chain_poses(traj, model)
    if cane_profile is None:
        cane_profile = [CaneForce.zero()] * len(poses)
    if len(cane_profile) != len(poses):
        raise ValueError(
            f"cane profile length {len(cane_profile)} != frame count {len(poses)}"
        )
    return [
        solve_frame(pose, cane, model, cop_x=cop_x, t=float(traj.t[i]))
        for i, (pose, cane) in enumerate(zip(poses, cane_profile))
    ]


LOADS_COLUMNS = (
    "t,tau_hip,tau_knee,tau_ankle,Ftx,Ftz,Flx,Flz,Fax,Faz,Fgx,Fgz,Mc,residual"
)


def loads_to_csv(frames: list[DynamicsFrame]) -> str:
    buf = io.StringIO()
    buf.write(LOADS_COLUMNS + "\n")
    for fr in frames:
        ld = fr.loads
        row = [
            fr.t,
            ld.tau_hip,
            ld.tau_knee,
            ld.tau_ankle,
            ld.f_hip[0],
            ld.f_hip[1],
            ld.f_knee[0],
            ld.f_knee[1],
            ld.f_ankle[0],
            ld.f_ankle[1],
            ld.f_ground[0],
            ld.f_ground[1],
            ld.m_ankle_grf,
            math.hypot(*ld.residual),
        ]
        buf.write(",".join(repr(float(v)) for v in row) + "\n")
    return buf.getvalue()
