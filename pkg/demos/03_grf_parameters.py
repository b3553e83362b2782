"""The ten ground-reaction-force parameters behind falls-risk scoring.

F1/F2 (force at lift-off and at the peak), T1-T3 (phase durations),
P1-P3 (phase impulses) and V1/V2 (loading rates) summarise how hard and
how fast the legs are loaded while standing up. Smaller force and rate
values mean less lower-limb effort and lower fall risk.

Here both conditions come from the closed-loop simulation; the same
functions accept measured force-plate CSVs.
"""

from sit2stand import Scenario, run_episode
from sit2stand.grf_analysis import detect_events, extract_parameters, trial_statistics

scenario = Scenario()  # reference subject, 40 cm chair
control = run_episode(scenario, assist=False)
assisted = run_episode(scenario, assist=True)

rows = {}
for label, episode in (("control", control), ("assisted", assisted)):
    prof = episode.grf_profile()
    events = detect_events(prof)
    rows[label] = extract_parameters(prof, events)
    print(f"{label:9s} lift-off {events.t_liftoff:.2f} s, "
          f"peak {events.t_peak:.2f} s, completion {events.t_end:.2f} s")

print(f"\n{'param':6s} {'control':>10s} {'assisted':>10s}")
c, a = rows["control"].as_dict(), rows["assisted"].as_dict()
for name in ("F1", "F2", "T1", "T2", "T3", "P1", "P2", "P3", "V1", "V2"):
    print(f"{name:6s} {c[name]:10.2f} {a[name]:10.2f}")

bw = control.body_weight
print(f"\nas %BW: control F2 = {100 * c['F2'] / bw:.0f}%, "
      f"assisted F2 = {100 * a['F2'] / bw:.0f}%")
print("assisted F2, |V1|, |V2| all smaller:",
      a["F2"] < c["F2"] and abs(a["V1"]) < abs(c["V1"]) and abs(a["V2"]) < abs(c["V2"]))

# repeated trials aggregate into mean +- SD per parameter
stats = trial_statistics([rows["control"]] * 6)
print(f"\nsix identical control trials: F2 = {stats.mean['F2']:.1f} "
      f"+- {stats.sd['F2']:.1f} N (n={stats.n})")
