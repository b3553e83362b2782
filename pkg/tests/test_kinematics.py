import math

import numpy as np
import pytest

from sit2stand.kinematics import (
    JointAngles,
    PhaseTimings,
    PoseTrajectory,
    chain_poses,
    differentiate,
    forward_kinematics,
    generate_sts_trajectory,
)

from conftest import random_joint_angles

UPRIGHT = JointAngles(0.0, math.pi, math.pi, math.pi)


def test_upright_chain_is_vertical(model):
    pose = forward_kinematics(UPRIGHT, model)
    for p in (pose.knee, pose.hip, pose.hat_top):
        assert abs(p[0]) < 1e-12
    assert np.linalg.norm(pose.hip - pose.ankle) == pytest.approx(
        model.thigh.length + model.shank.length, abs=1e-12
    )
    assert pose.hat_top[1] == pytest.approx(1.734, abs=1e-12)


def test_seated_right_angle_hip_height(model):
    seated = JointAngles.from_chain(trunk=0.0, knee=math.pi / 2, ankle=math.pi)
    pose = forward_kinematics(seated, model)
    # foot flat, shank vertical, thigh horizontal: hip at shank height
    assert pose.hip[1] == pytest.approx(model.shank.length, abs=1e-12)
    assert pose.hip[0] == pytest.approx(-model.thigh.length, abs=1e-12)


def test_link_lengths_preserved_on_random_poses(model):
    rng = np.random.default_rng(3)
    for _ in range(300):
        pose = forward_kinematics(random_joint_angles(rng), model)
        assert np.linalg.norm(pose.hip - pose.knee) == pytest.approx(
            model.thigh.length, rel=1e-12
        )
        assert np.linalg.norm(pose.knee - pose.ankle) == pytest.approx(
            model.shank.length, rel=1e-12
        )


def test_angle_validation():
    with pytest.raises(ValueError, match="knee"):
        JointAngles(0.0, math.pi, -0.1, math.pi)
    with pytest.raises(ValueError, match="finite"):
        JointAngles(math.nan, math.pi, math.pi, math.pi)


def test_chain_consistency_residual():
    a = JointAngles.from_chain(0.3, 2.0, 3.0)
    assert a.chain_consistency() == pytest.approx(0.0, abs=1e-12)
    b = JointAngles(0.3, a.hip + 0.05, 2.0, 3.0)
    assert b.chain_consistency() == pytest.approx(0.05, abs=1e-12)


# -- differentiate -----------------------------------------------------------


def _traj_from_fn(fn, t):
    angles = np.stack([fn(t)] * 4, axis=1)
    return PoseTrajectory(t, angles)


def test_differentiate_constant_is_zero():
    t = np.linspace(0, 1, 101)
    traj = differentiate(_traj_from_fn(lambda t: np.full_like(t, 1.3), t))
    assert np.allclose(traj.velocity, 0.0, atol=1e-12)
    assert np.allclose(traj.acceleration, 0.0, atol=1e-12)


def test_differentiate_linear_ramp_exact():
    t = np.linspace(0, 2, 201)
    omega = 0.7
    traj = differentiate(_traj_from_fn(lambda t: 1.0 + omega * t, t))
    assert np.allclose(traj.velocity[1:-1], omega, atol=1e-9)
    assert np.allclose(traj.acceleration[1:-1], 0.0, atol=1e-9)


def test_differentiate_quadratic_exact_interior():
    t = np.linspace(0, 2, 201)
    traj = differentiate(_traj_from_fn(lambda t: 0.5 + 0.3 * t - 0.4 * t**2, t))
    assert np.allclose(traj.velocity[1:-1], (0.3 - 0.8 * t[1:-1])[:, None], atol=1e-9)
    assert np.allclose(traj.acceleration[1:-1], -0.8, atol=1e-9)


def test_differentiate_sine_against_analytic():
    t = np.arange(0, 2.0, 1 / 120.0)
    traj = differentiate(_traj_from_fn(np.sin, t))
    acc_err = np.abs(traj.acceleration[2:-2, 0] + np.sin(t[2:-2]))
    assert acc_err.max() < 1e-3


def test_differentiate_needs_five_frames():
    t = np.linspace(0, 1, 4)
    with pytest.raises(ValueError, match="5 frames"):
        differentiate(_traj_from_fn(lambda t: t, t))


def test_smoothed_differentiate_passes_affine_exactly():
    t = np.linspace(0, 2, 241)
    traj = differentiate(_traj_from_fn(lambda t: 0.2 + 0.5 * t, t), cutoff_hz=6.0)
    assert np.allclose(traj.angles[:, 0], 0.2 + 0.5 * t, atol=1e-9)


# -- generator ---------------------------------------------------------------


def test_generated_trajectory_bookkeeping(model):
    traj = generate_sts_trajectory(model, PhaseTimings(1.0, 1.0, 1.0), rate=100.0)
    assert traj.duration == pytest.approx(3.0)
    assert traj.n_frames == 301
    assert traj.has_derivatives


def test_generated_trajectory_start_and_end(model):
    chair = 0.40
    traj = generate_sts_trajectory(model, PhaseTimings(1.2, 0.4, 0.6), chair_height=chair)
    poses = chain_poses(traj, model)
    assert poses[0].hip[1] == pytest.approx(chair, abs=1e-9)
    final = traj.angles[-1]
    assert abs(final[0]) < 1e-6  # trunk vertical
    assert abs(final[2] - math.pi) < 1e-6  # knee extended
    assert poses[-1].hip[1] == pytest.approx(model.standing_hip_height, abs=1e-9)


def test_generated_trajectory_feet_fixed_and_links(model, timings):
    traj = generate_sts_trajectory(model, timings)
    poses = chain_poses(traj, model)
    for pose in poses:
        assert pose.ankle[0] == 0.0 and pose.ankle[1] == 0.0
        assert np.linalg.norm(pose.hip - pose.knee) == pytest.approx(
            model.thigh.length, rel=1e-9
        )


def test_generated_trajectory_smoothness(model, timings):
    traj = generate_sts_trajectory(model, timings, rate=100.0)
    rediff = differentiate(PoseTrajectory(traj.t, traj.angles))
    assert np.all(np.isfinite(rediff.velocity))
    assert np.all(np.isfinite(rediff.acceleration))
    # velocity continuity: inter-frame jumps bounded by max acceleration x dt
    dt = 1 / 100.0
    jump = np.abs(np.diff(traj.velocity, axis=0)).max()
    bound = 1.5 * np.abs(traj.acceleration).max() * dt + 1e-9
    assert jump < bound


def _away_from_junctions(t, timings, dt, pad=3):
    """Mask excluding blend junctions, where jerk spikes make central
    differences locally O(h x jerk)."""
    junctions = [
        0.0,
        timings.flexion,
        timings.flexion + 0.35 * timings.rise,
        timings.flexion + 0.5 * timings.rise,
        timings.total,
    ]
    mask = np.ones_like(t, dtype=bool)
    for tj in junctions:
        mask &= np.abs(t - tj) > pad * dt
    return mask


def test_generated_derivatives_match_finite_differences(model, timings):
    rate = 200.0
    traj = generate_sts_trajectory(model, timings, rate=rate)
    rediff = differentiate(PoseTrajectory(traj.t, traj.angles))
    smooth = _away_from_junctions(traj.t, timings, 1.0 / rate)
    assert np.allclose(traj.velocity[smooth], rediff.velocity[smooth], atol=2e-3)
    assert np.allclose(
        traj.acceleration[smooth], rediff.acceleration[smooth], atol=5e-2
    )
    # at the junctions the mismatch is bounded by the jerk scale
    jerk = np.abs(np.diff(traj.acceleration, axis=0)).max() * rate
    bound = 1.0 * jerk / rate
    assert np.abs(traj.acceleration - rediff.acceleration).max() < bound


def test_unreachable_chair_heights(model, timings):
    with pytest.raises(ValueError, match="unreachable"):
        generate_sts_trajectory(model, timings, chair_height=3.0)
    with pytest.raises(ValueError, match="unreachable"):
        generate_sts_trajectory(model, timings, chair_height=0.01)


def test_rate_floor(model, timings):
    with pytest.raises(ValueError, match="30"):
        generate_sts_trajectory(model, timings, rate=10.0)


# -- csv ---------------------------------------------------------------------


def test_trajectory_csv_round_trip(model, timings):
    traj = generate_sts_trajectory(model, timings)
    text = traj.to_csv()
    assert text.splitlines()[0] == (
        "t,trunk,hip,knee,ankle,dtrunk,dhip,dknee,dankle,"
        "ddtrunk,ddhip,ddknee,ddankle"
    )
    again = PoseTrajectory.from_csv(text)
    assert np.array_equal(again.t, traj.t)
    assert np.array_equal(again.angles, traj.angles)
    assert np.array_equal(again.velocity, traj.velocity)


def test_trajectory_csv_without_derivatives_computes_them(model, timings):
    traj = generate_sts_trajectory(model, timings)
    bare = PoseTrajectory(traj.t, traj.angles)
    again = PoseTrajectory.from_csv(bare.to_csv())
    assert again.has_derivatives
    assert np.allclose(again.velocity[5:-5], traj.velocity[5:-5], atol=1e-2)
