"""Build subject-specific body segment parameters.

The four-link model needs a mass, length, centre-of-mass offset and
sagittal inertia for each of HAT (head-arms-trunk), thigh, shank and
foot. Those come from published anthropometric fractions scaled to the
subject's height and mass; bilateral segments are lumped (left + right)
because the motion is treated as sagittally symmetric.
"""

from sit2stand import Subject, default_table, scale_anthropometrics
from sit2stand.anthro import SEGMENT_NAMES, format_table, parse_table

# the toolkit's reference subject: an average older-adult male build
subject = Subject(height=1.734, mass=88.3, sex="male")
model = scale_anthropometrics(subject)

print(f"subject: {subject.height} m, {subject.mass} kg ({subject.sex})")
print(f"body weight        : {model.weight:7.1f} N")
print(f"standing hip height: {model.standing_hip_height:7.3f} m "
      f"({model.standing_hip_height / subject.height:.0%} of stature)")
print()
print(f"{'segment':8s} {'mass kg':>8s} {'length m':>9s} {'com':>6s} {'J kg m^2':>9s}")
for name in SEGMENT_NAMES:
    seg = model.segment(name)
    print(f"{name:8s} {seg.mass:8.2f} {seg.length:9.3f} "
          f"{seg.com_offset:6.3f} {seg.inertia_sagittal:9.3f}")

# the fraction table itself is plain data and ships as a text config;
# any field can be overridden per subject from a file
text = format_table(default_table())
print("\nfirst lines of the serialized table:")
print("\n".join(text.splitlines()[:5]))

heavier_thighs = parse_table("segment.thigh.mass_fraction = 0.31\n")
custom = scale_anthropometrics(subject, heavier_thighs)
print(f"\noverridden thigh mass: {custom.thigh.mass:.2f} kg "
      f"(default {model.thigh.mass:.2f} kg)")
