"""Joint torques and ground reaction along a sit-to-stand movement.

A synthetic trajectory stands the subject up from a 40 cm chair; the
segment chain then yields hip/knee/ankle torques, the predicted ground
reaction force, and the ankle moment of that force. Running the same
motion with a vertical cane thrust shows how assistance unloads the feet
without changing the movement.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from sit2stand import (
    CaneForce,
    PhaseTimings,
    Subject,
    generate_sts_trajectory,
    inverse_dynamics,
    scale_anthropometrics,
)

out_dir = Path(__file__).with_name("output")
out_dir.mkdir(exist_ok=True)

model = scale_anthropometrics(Subject(1.734, 88.3))
timings = PhaseTimings(flexion=1.2, transfer=0.4, extension=0.6)
traj = generate_sts_trajectory(model, timings, rate=100.0, chair_height=0.40)
print(f"trajectory: {traj.n_frames} frames over {traj.duration:.1f} s")

# unassisted: the feet carry everything
frames = inverse_dynamics(traj, None, model)

# assisted: a thrust ramping to 52% of body weight through lift-off,
# gone by the extension phase
target = 0.52 * model.weight
t_peak = timings.flexion + 0.35 * timings.rise
t_zero = t_peak + 0.62 * timings.rise
profile = []
for t in traj.t:
    if t <= t_peak:
        level = target * t / t_peak
    else:
        level = target * max(0.0, 1.0 - (t - t_peak) / (t_zero - t_peak))
    profile.append(CaneForce.vertical(level))
assisted = inverse_dynamics(traj, profile, model)

worst = max(np.hypot(*f.loads.residual) for f in frames)
print(f"whole-body balance residual, worst frame: {worst:.2e} N")

fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
for label, result, style in (("unassisted", frames, "k-"), ("assisted", assisted, "r--")):
    ax1.plot(traj.t, [f.loads.f_ground[1] for f in result], style, label=label)
    ax2.plot(traj.t, [f.loads.tau_ankle for f in result], style, label=label)
ax1.axhline(model.weight, color="0.6", lw=0.8)
ax1.set_ylabel("vertical GRF (N)")
ax1.legend()
ax2.set_ylabel("ankle torque (N m)")
ax2.set_xlabel("time (s)")
fig.tight_layout()
fig.savefig(out_dir / "inverse_dynamics.png", dpi=110)
print(f"wrote {out_dir / 'inverse_dynamics.png'}")

peak_off = max(f.loads.f_ground[1] for f in frames)
peak_on = max(f.loads.f_ground[1] for f in assisted)
print(f"peak foot load: {peak_off / model.weight:.2f} BW unassisted, "
      f"{peak_on / model.weight:.2f} BW assisted")
