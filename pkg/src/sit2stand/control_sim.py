"""Closed-loop simulation of the assistive cane.

The loop mirrors the deployed dataflow: joint angles stream in, a
sit-to-stand onset is detected from trunk motion, a cane-force target is
shaped over the movement phases, a PI law servos the cylinder pressure
to that force, and the inverse-dynamics chain redistributes the support
between the feet and the cane. The human trajectory is prescribed:
assistance changes the load split, not the motion, so assisted and
unassisted episodes share identical kinematics by construction.

Cylinder: 32 mm bore, 500 mm stroke, 0.8 MPa ceiling; axial force is
pressure x piston area at every step. Pressure follows the setpoint as a
slew-limited first-order lag. Pressures below a small vent threshold snap
to exactly zero when the setpoint is also near zero (the valve vents),
which lets an assisted run reach an exact body-weight plateau.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import anthro
from .anthro import AnthropometricModel, Subject
from ._config import ConfigError, format_kv, get_bool, get_float, parse_kv
from .dynamics import CANE_ATTACH_FRACTION, CaneForce, DynamicsFrame, solve_frame
from .grf_analysis import GrfProfile
from .kinematics import (
    PhaseTimings,
    PoseTrajectory,
    chain_poses,
    generate_sts_trajectory,
    hold_frames,
)

CYLINDER_BORE = 0.032  # m
PISTON_AREA = math.pi * (CYLINDER_BORE / 2.0) ** 2  # m^2
PRESSURE_MAX = 0.8e6  # Pa
STROKE_MAX = 0.5  # m
PRESSURE_SNAP = 100.0  # Pa, vent threshold (~0.08 N of force)
DEFAULT_TIME_CONSTANT = 0.08  # s
DEFAULT_SLEW = 2.5e7  # Pa/s, generous: the nominal lag is never slew-limited

MAX_THRUST = PRESSURE_MAX * PISTON_AREA  # ~643.4 N


@dataclass(frozen=True)
class PlantState:
    pressure: float  # Pa
    stroke: float  # m
    axial_force: float  # N, always pressure * area
    stroke_saturated: bool = False  # last update hit a stroke hard stop

    def __post_init__(self):
        if not (0.0 <= self.pressure <= PRESSURE_MAX):
            raise ValueError(f"pressure {self.pressure} outside [0, {PRESSURE_MAX}]")
        if not (0.0 <= self.stroke <= STROKE_MAX):
            raise ValueError(f"stroke {self.stroke} outside [0, {STROKE_MAX}]")
        if self.axial_force != self.pressure * PISTON_AREA:
            raise ValueError("axial_force must equal pressure * piston area")

    @classmethod
    def at_rest(cls) -> "PlantState":
        return cls(0.0, 0.0, 0.0)

    @classmethod
    def from_pressure(cls, pressure: float, stroke: float = 0.0) -> "PlantState":
        return cls(pressure, stroke, pressure * PISTON_AREA)


@dataclass(frozen=True)
class CaneCommand:
    pressure_setpoint: float  # Pa, already clamped
    saturated: bool = False  # setpoint hit a pressure limit


@dataclass(frozen=True)
class ControllerConfig:
    kp: float = 2.4  # Pa per (N s) through the incremental law
    ki: float = 18.0
    target_fraction: float = 0.52  # of body weight
    onset_rate: float = 0.3  # rad/s trunk flexion to call an onset
    onset_sustain: float = 0.2  # s the rate must persist
    ramp_overlap: float = 0.35  # target peaks this far into the rise
    decay_fraction: float = 0.62  # of the rise, after the peak, to reach zero
    max_force: float = MAX_THRUST  # N, safety ceiling on the commanded target

    def __post_init__(self):
        if self.kp < 0 or self.ki < 0:
            raise ValueError("gains must be non-negative")
        if not (0.0 <= self.target_fraction <= 1.0):
            raise ValueError(f"target_fraction {self.target_fraction} outside [0, 1]")
        if self.max_force < 0:
            raise ValueError("max_force must be non-negative")


# -- intent detection --------------------------------------------------------


@dataclass(frozen=True)
class IntentEvent:
    t: float
    kind: str  # sts_onset | sts_complete | abort

    def __post_init__(self):
        if self.kind not in ("sts_onset", "sts_complete", "abort"):
            raise ValueError(f"unknown intent kind {self.kind!r}")


_SEATED_KNEE_MAX = 2.6  # rad; a flexed knee marks a seated posture
_UPRIGHT_TOL = 0.05  # rad
_QUASI_STATIC_RATE = 0.05  # rad/s


class IntentDetector:
    """Stateful onset/completion detector over a sliding angle window.

    Events latch: each kind fires once per movement. The onset event is
    stamped at the threshold-crossing time (movement start), so detection
    lags it by the sustain window.
    """

    def __init__(self, cfg: ControllerConfig | None = None):
        self.cfg = cfg or ControllerConfig()
        self._onset_fired = False
        self._complete_fired = False
        self._abort_fired = False
        self._seated_reference: np.ndarray | None = None

    def update(self, window: PoseTrajectory) -> IntentEvent | None:
        if window.duration < 0.5:
            return None
        if not window.has_derivatives:
            raise ValueError("intent detection needs angle derivatives")
        cfg = self.cfg
        t = window.t
        trunk_rate = window.velocity[:, 0]
        knee = window.angles[:, 2]

        if self._seated_reference is None and knee[0] < _SEATED_KNEE_MAX:
            self._seated_reference = window.angles[0].copy()

        still = np.max(np.abs(window.velocity), axis=1) < _QUASI_STATIC_RATE

        if not self._onset_fired:
            seated = knee < _SEATED_KNEE_MAX
            fast = (trunk_rate > cfg.onset_rate) & seated
            start = None
            for i in range(1, t.size):
                if fast[i]:
                    if start is None:
                        start = i
                    if t[i] - t[start] >= cfg.onset_sustain:
                        self._onset_fired = True
                        return IntentEvent(float(t[start]), "sts_onset")
                else:
                    start = None

        if not self._complete_fired:
            upright = (np.abs(window.angles[:, 0]) < _UPRIGHT_TOL) & (
                window.angles[:, 2] > math.pi - _UPRIGHT_TOL
            )
            ok = upright & still
            # completion: upright and quasi-static over the last 0.3 s
            recent = t >= t[-1] - 0.3
            if np.all(ok[recent]) and np.count_nonzero(recent) >= 2:
                self._complete_fired = True
                first = int(np.argmax(recent))
                return IntentEvent(float(t[first]), "sts_complete")

        # abort: back at the seated posture, quasi-static, movement unfinished
        if self._onset_fired and not self._complete_fired and not self._abort_fired:
            if self._seated_reference is not None:
                near_seated = (
                    np.max(np.abs(window.angles[-1] - self._seated_reference)) < 0.05
                )
                if near_seated and still[-1]:
                    self._abort_fired = True
                    self._complete_fired = True  # no completion after an abort
                    return IntentEvent(float(t[-1]), "abort")
        return None


def detect_intent(
    window: PoseTrajectory, cfg: ControllerConfig | None = None
) -> IntentEvent | None:
    """Single-shot onset/completion check on one window (fresh detector)."""
    return IntentDetector(cfg).update(window)


# -- force target shaping ----------------------------------------------------


def target_force_profile(
    t: np.ndarray | float,
    timings: PhaseTimings,
    body_weight: float,
    cfg: ControllerConfig | None = None,
    motion_start: float = 0.0,
) -> np.ndarray | float:
    """Cane-force target over an episode, relative to the movement start.

    Quintic ramp from zero to ``target_fraction * body_weight`` across the
    trunk-flexion phase plus ``ramp_overlap`` of the rise, then a quintic
    decay back to zero over ``decay_fraction`` of the rise: the cane loads
    through lift-off and has unloaded by the knee-hip extension.
    """
    cfg = cfg or ControllerConfig()
    peak = cfg.target_fraction * body_weight
    t = np.asarray(t, dtype=float)
    tau = t - motion_start
    t_peak = timings.flexion + cfg.ramp_overlap * timings.rise
    t_zero = t_peak + cfg.decay_fraction * timings.rise

    def blend(u):
        u = np.clip(u, 0.0, 1.0)
        return u**3 * (10.0 - 15.0 * u + 6.0 * u**2)

    up = peak * blend(tau / t_peak)
    down = peak * (1.0 - blend((tau - t_peak) / (t_zero - t_peak)))
    out = np.where(tau <= t_peak, up, down)
    out = np.where(tau <= 0.0, 0.0, out)
    out = np.where(tau >= t_zero, 0.0, out)
    return float(out) if out.ndim == 0 else out


# -- controller and plant ----------------------------------------------------


class ForceController:
    """Incremental PI servo on cane axial force.

    The commanded setpoint is the current pressure plus the PI correction
    mapped through the piston area, clamped to the pressure limits; the
    integrator freezes while the command would push further into a limit.
    With zero gains the setpoint equals the current pressure.
    """

    def __init__(self, cfg: ControllerConfig | None = None):
        self.cfg = cfg or ControllerConfig()
        self.integral = 0.0  # N s

    def step(self, state: PlantState, target_force: float, dt: float) -> CaneCommand:
        if not (0.0 < dt <= 0.05):
            raise ValueError(f"dt {dt} outside (0, 0.05] s")
        target_force = min(target_force, self.cfg.max_force)
        error = target_force - state.axial_force
        correction = (
            self.cfg.kp * error + self.cfg.ki * (self.integral + error * dt)
        ) / PISTON_AREA
        raw = state.pressure + correction
        setpoint = min(max(raw, 0.0), PRESSURE_MAX)
        saturated = raw != setpoint
        winding_out = (raw > PRESSURE_MAX and error > 0) or (raw < 0.0 and error < 0)
        if not winding_out:
            self.integral += error * dt
        return CaneCommand(pressure_setpoint=setpoint, saturated=saturated)


def plant_step(
    state: PlantState,
    command: CaneCommand,
    dt: float,
    attach_height: float | None = None,
    base_length: float | None = None,
    time_constant: float = DEFAULT_TIME_CONSTANT,
    slew_limit: float = DEFAULT_SLEW,
) -> PlantState:
    """Advance the cylinder one control period.

    Pressure relaxes toward the setpoint with the exact first-order update
    ``p += (sp - p) * (1 - exp(-dt/tau))``, limited to ``slew_limit`` Pa/s
    and clamped to [0, 0.8 MPa]; near-zero pressures with a near-zero
    setpoint vent to exactly 0. Stroke follows the attachment height
    against the fixed tube length, hard-stopped at [0, 0.5 m].
    """
    if not (0.0 < dt <= 0.05):
        raise ValueError(f"dt {dt} outside (0, 0.05] s")
    sp = command.pressure_setpoint
    delta = (sp - state.pressure) * (1.0 - math.exp(-dt / time_constant))
    max_step = slew_limit * dt
    delta = min(max(delta, -max_step), max_step)
    pressure = min(max(state.pressure + delta, 0.0), PRESSURE_MAX)
    if pressure < PRESSURE_SNAP and sp < PRESSURE_SNAP:
        pressure = 0.0

    stroke = state.stroke
    stroke_saturated = False
    if attach_height is not None:
        if base_length is None:
            raise ValueError("attach_height given without base_length")
        raw = attach_height - base_length
        stroke = min(max(raw, 0.0), STROKE_MAX)
        stroke_saturated = raw != stroke

    return PlantState(pressure, stroke, pressure * PISTON_AREA, stroke_saturated)


# -- scenario and episode ----------------------------------------------------


@dataclass(frozen=True)
class Scenario:
    subject: Subject = Subject(1.734, 88.3, "male")
    chair_height: float = 0.40
    timings: PhaseTimings = PhaseTimings(1.2, 0.4, 0.6)
    assist: bool = True
    control_rate: float = 100.0
    pre_hold: float = 0.5  # s seated before the movement
    post_hold: float = 1.3  # s standing after it
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    cane_attach_fraction: float = CANE_ATTACH_FRACTION

    def __post_init__(self):
        if self.control_rate < 30.0:
            raise ValueError(f"control_rate {self.control_rate} below 30 Hz")
        if self.pre_hold < 0.5 or self.post_hold < 0.5:
            raise ValueError("pre_hold and post_hold must be at least 0.5 s")

    def to_text(self) -> str:
        items = {
            "subject.height": self.subject.height,
            "subject.mass": self.subject.mass,
            "subject.sex": self.subject.sex,
            "chair.height": self.chair_height,
            "phases.flexion": self.timings.flexion,
            "phases.transfer": self.timings.transfer,
            "phases.extension": self.timings.extension,
            "assist.enabled": str(self.assist).lower(),
            "control.rate": self.control_rate,
            "control.kp": self.controller.kp,
            "control.ki": self.controller.ki,
            "control.target_fraction": self.controller.target_fraction,
            "cane.attach_fraction": self.cane_attach_fraction,
            "episode.pre_hold": self.pre_hold,
            "episode.post_hold": self.post_hold,
        }
        return format_kv(items, header="sit-to-stand scenario")

    @classmethod
    def from_text(cls, text: str) -> "Scenario":
        kv = parse_kv(text)
        known = {
            "subject.height", "subject.mass", "subject.sex", "chair.height",
            "phases.flexion", "phases.transfer", "phases.extension",
            "assist.enabled", "control.rate", "control.kp", "control.ki",
            "control.target_fraction", "cane.attach_fraction",
            "episode.pre_hold", "episode.post_hold",
        }
        unknown = sorted(set(kv) - known)
        if unknown:
            raise ConfigError(0, f"unknown scenario keys: {unknown}")
        base = cls()
        subject = Subject(
            height=get_float(kv, "subject.height", base.subject.height),
            mass=get_float(kv, "subject.mass", base.subject.mass),
            sex=kv.get("subject.sex", base.subject.sex),
        )
        controller = ControllerConfig(
            kp=get_float(kv, "control.kp", base.controller.kp),
            ki=get_float(kv, "control.ki", base.controller.ki),
            target_fraction=get_float(
                kv, "control.target_fraction", base.controller.target_fraction
            ),
        )
        return cls(
            subject=subject,
            chair_height=get_float(kv, "chair.height", base.chair_height),
            timings=PhaseTimings(
                get_float(kv, "phases.flexion", base.timings.flexion),
                get_float(kv, "phases.transfer", base.timings.transfer),
                get_float(kv, "phases.extension", base.timings.extension),
            ),
            assist=get_bool(kv, "assist.enabled", base.assist),
            control_rate=get_float(kv, "control.rate", base.control_rate),
            pre_hold=get_float(kv, "episode.pre_hold", base.pre_hold),
            post_hold=get_float(kv, "episode.post_hold", base.post_hold),
            controller=controller,
            cane_attach_fraction=get_float(
                kv, "cane.attach_fraction", base.cane_attach_fraction
            ),
        )

    @classmethod
    def from_file(cls, path) -> "Scenario":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_text(fh.read())


@dataclass
class EpisodeLog:
    scenario: Scenario
    assist: bool
    t: np.ndarray
    angles: np.ndarray  # (n, 4)
    pressure: np.ndarray
    stroke: np.ndarray
    cane_force: np.ndarray
    target_force: np.ndarray
    seat_fz: np.ndarray
    foot_grf: np.ndarray  # (n, 2): x, z on the feet after the seat split
    frames: list[DynamicsFrame]
    events: list[IntentEvent]
    t_liftoff: float  # scheduled support-transfer completion

    @property
    def body_weight(self) -> float:
        return self.scenario.subject.mass * anthro.GRAVITY

    def grf_profile(self) -> GrfProfile:
        return GrfProfile(
            t=self.t,
            fz=self.foot_grf[:, 1],
            body_weight=self.body_weight,
            seat_fz=self.seat_fz,
            cane_fz=self.cane_force,
        )

    def to_csv(self) -> str:
        cols = (
            "t,trunk,hip,knee,ankle,pressure,stroke,cane_fz,target_fz,"
            "seat_fz,foot_fx,foot_fz,tau_hip,tau_knee,tau_ankle,mc,residual"
        )
        buf = io.StringIO()
        buf.write(cols + "\n")
        for i in range(self.t.size):
            ld = self.frames[i].loads
            row = [
                self.t[i], *self.angles[i],
                self.pressure[i], self.stroke[i],
                self.cane_force[i], self.target_force[i], self.seat_fz[i],
                self.foot_grf[i, 0], self.foot_grf[i, 1],
                ld.tau_hip, ld.tau_knee, ld.tau_ankle, ld.m_ankle_grf,
                math.hypot(*ld.residual),
            ]
            buf.write(",".join(repr(float(v)) for v in row) + "\n")
        return buf.getvalue()


def _seated_seat_share(pose, model) -> float:
    """Static two-support split of body weight between the chair (under
    the hip) and the feet (at the ankle), from the seated whole-body
    centre of mass."""
    w = model.weight
    masses = [model.hat.mass, model.thigh.mass, model.shank.mass, model.foot.mass]
    xs = [pose.com_hat[0], pose.com_thigh[0], pose.com_shank[0], pose.com_foot[0]]
    x_com = sum(m * x for m, x in zip(masses, xs)) / model.total_mass
    x_seat = pose.hip[0]
    x_foot = pose.ankle[0]
    if abs(x_seat - x_foot) < 1e-9:
        return 0.0
    share = (x_com - x_foot) / (x_seat - x_foot)
    return w * min(max(share, 0.0), 1.0)


def _quintic_down(u):
    u = np.clip(u, 0.0, 1.0)
    return 1.0 - u**3 * (10.0 - 15.0 * u + 6.0 * u**2)


def run_episode(
    scenario: Scenario,
    assist: bool | None = None,
    model: AnthropometricModel | None = None,
) -> EpisodeLog:
    """Simulate one episode at the control rate.

    The prescribed motion is a seated hold, the generated sit-to-stand
    trajectory, and a standing hold. The chair channel transfers its
    static share of the weight to the feet over the flexion phase,
    reaching zero exactly at lift-off. With assist on, the controller
    gates on the detected onset and servos the cane force to the shaped
    target; the realised thrust feeds the inverse dynamics, and the cane's
    vertical force is removed from what the feet carry.
    """
    if assist is None:
        assist = scenario.assist
    if model is None:
        model = anthro.scale_anthropometrics(scenario.subject)
    rate = scenario.control_rate
    dt = 1.0 / rate

    sts = generate_sts_trajectory(
        model, scenario.timings, rate=rate, chair_height=scenario.chair_height
    )

    # splice: [seated hold][sts][standing hold]
    pre_t, pre_a, pre_v, pre_acc = hold_frames(
        sts.frame(0), -scenario.pre_hold, scenario.pre_hold, rate
    )
    post_t, post_a, post_v, post_acc = hold_frames(
        sts.frame(sts.n_frames - 1), sts.t[-1] + dt, scenario.post_hold, rate
    )
    t = np.concatenate([pre_t, sts.t, post_t]) + scenario.pre_hold
    angles = np.vstack([pre_a, sts.angles, post_a])
    velocity = np.vstack([pre_v, sts.velocity, post_v])
    acceleration = np.vstack([pre_acc, sts.acceleration, post_acc])
    traj = PoseTrajectory(t, angles, velocity, acceleration)

    poses = chain_poses(traj, model)
    n = traj.n_frames
    motion_start = scenario.pre_hold
    t_liftoff = motion_start + scenario.timings.flexion

    # chair support transfer, zero at lift-off
    seat0 = _seated_seat_share(poses[0], model)
    seat_fz = seat0 * _quintic_down((t - motion_start) / scenario.timings.flexion)
    seat_fz[t >= t_liftoff] = 0.0

    # cane geometry: size the tube so full stroke lands at the upright height
    upright_attach = (
        model.standing_hip_height
        + scenario.cane_attach_fraction * model.hat.length
    )
    base_length = upright_attach - STROKE_MAX

    detector = IntentDetector(scenario.controller)
    controller = ForceController(scenario.controller)
    plant = PlantState.at_rest()
    events: list[IntentEvent] = []
    assist_enabled = False

    pressure = np.zeros(n)
    stroke = np.zeros(n)
    cane_force = np.zeros(n)
    target_force = np.zeros(n)
    frames: list[DynamicsFrame] = []
    foot_grf = np.zeros((n, 2))

    window_len = int(round(0.6 * rate))
    bw = model.weight
    for i in range(n):
        lo = max(0, i - window_len)
        if i - lo >= 2:
            event = detector.update(
                PoseTrajectory(
                    t[lo : i + 1],
                    angles[lo : i + 1],
                    velocity[lo : i + 1],
                    acceleration[lo : i + 1],
                )
            )
            if event is not None:
                events.append(event)
                if event.kind == "sts_onset":
                    assist_enabled = True

        target = 0.0
        if assist and assist_enabled:
            target = float(
                target_force_profile(
                    t[i], scenario.timings, bw, scenario.controller, motion_start
                )
            )
        command = controller.step(plant, target, dt)
        attach = poses[i].hip[1] + scenario.cane_attach_fraction * (
            poses[i].hat_top[1] - poses[i].hip[1]
        )
        plant = plant_step(plant, command, dt, attach_height=attach, base_length=base_length)

        cane = (
            CaneForce.vertical(
                plant.axial_force, attach_fraction=scenario.cane_attach_fraction
            )
            if plant.axial_force > 0.0
            else CaneForce.zero()
        )
        frame = solve_frame(poses[i], cane, model, t=float(t[i]))
        frames.append(frame)

        pressure[i] = plant.pressure
        stroke[i] = plant.stroke
        cane_force[i] = plant.axial_force
        target_force[i] = target
        foot_grf[i] = frame.loads.f_ground - np.array([0.0, seat_fz[i]])

    return EpisodeLog(
        scenario=scenario,
        assist=assist,
        t=t,
        angles=angles,
        pressure=pressure,
        stroke=stroke,
        cane_force=cane_force,
        target_force=target_force,
        seat_fz=seat_fz,
        foot_grf=foot_grf,
        frames=frames,
        events=events,
        t_liftoff=t_liftoff,
    )
