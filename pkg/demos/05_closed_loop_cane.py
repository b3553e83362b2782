"""The full closed loop: intent detection, force shaping, pneumatic plant.

One episode runs the prescribed sit-to-stand while the controller watches
the angle stream. Once trunk flexion signals an onset, the cane-force
target ramps in (peaking at 52% of body weight around lift-off) and the
PI law servos cylinder pressure to it; the thrust decays away before the
knee-hip extension. Assistance redistributes load between cane and feet -
the motion itself is identical in both runs.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from sit2stand import Scenario, run_episode

out_dir = Path(__file__).with_name("output")
out_dir.mkdir(exist_ok=True)

scenario = Scenario()
control = run_episode(scenario, assist=False)
assisted = run_episode(scenario, assist=True)
bw = assisted.body_weight

for e in assisted.events:
    print(f"event: {e.kind:13s} at {e.t:.2f} s")
print(f"cane peak thrust : {assisted.cane_force.max():6.1f} N "
      f"({assisted.cane_force.max() / bw:.0%} BW)")
print(f"pressure ceiling : {assisted.pressure.max() / 1e6:6.2f} MPa (limit 0.80)")
print(f"stroke range     : {assisted.stroke.min():.2f} .. {assisted.stroke.max():.2f} m")
print(f"foot peak, off/on: {control.foot_grf[:, 1].max() / bw:.2f} / "
      f"{assisted.foot_grf[:, 1].max() / bw:.2f} BW")

fig, ax = plt.subplots(figsize=(7, 4))
ax.plot(control.t, control.foot_grf[:, 1], "k-", label="feet, no cane")
ax.plot(assisted.t, assisted.foot_grf[:, 1], "r--", label="feet, with cane")
ax.plot(assisted.t, assisted.cane_force, "b:", label="cane thrust")
ax.plot(assisted.t, assisted.seat_fz, color="0.5", lw=0.8, label="chair")
ax.axhline(bw, color="0.7", lw=0.8)
ax.annotate("body weight", (assisted.t[-1], bw), textcoords="offset points",
            xytext=(-70, 4), fontsize=8, color="0.4")
ax.set_xlabel("time (s)")
ax.set_ylabel("vertical force (N)")
ax.legend(loc="upper left", fontsize=9)
fig.tight_layout()
fig.savefig(out_dir / "closed_loop_grf.png", dpi=110)
print(f"wrote {out_dir / 'closed_loop_grf.png'}")

# the overshoot above body weight exists only without the cane
over_off = control.foot_grf[:, 1].max() > bw
over_on = assisted.foot_grf[:, 1].max() > bw * (1 + 1e-9)
print(f"overshoot above BW: without cane {over_off}, with cane {over_on}")
