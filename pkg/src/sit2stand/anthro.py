"""Subject-specific body segment parameters for the four-link sagittal model.

The body is reduced to four rigid segments: HAT (head-arms-trunk), thigh,
shank, and foot. Motion is assumed symmetric about the sagittal plane, so
the bilateral segments (thigh/shank/foot) are lumped: the table stores the
left+right mass sum for each. Fractions follow de Leva's adjusted
Zatsiorsky-Seluyanov parameters; the HAT row is a composite (head + trunk +
both arms in a standing posture) assembled once from the same source's
per-segment values, because no single published row covers the aggregate.

Length fractions are standing-height fractions. The ankle pivot of the
chain sits at ground level, so the "shank" length is the knee height
(0.285 x stature) and standing hip height is thigh + shank = 0.53 x
stature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ._config import ConfigError, format_kv, parse_kv

GRAVITY = 9.81  # m/s^2

SEGMENT_NAMES = ("hat", "thigh", "shank", "foot")

HEIGHT_RANGE = (0.5, 2.5)  # m
MASS_RANGE = (20.0, 250.0)  # kg


@dataclass(frozen=True)
class Subject:
    """Subject to scale the segment table to."""

    height: float  # m
    mass: float  # kg
    sex: str = "male"

    def __post_init__(self):
        if not (HEIGHT_RANGE[0] < self.height < HEIGHT_RANGE[1]):
            raise ValueError(
                f"height: {self.height} m outside plausible range {HEIGHT_RANGE}"
            )
        if not (MASS_RANGE[0] < self.mass < MASS_RANGE[1]):
            raise ValueError(f"mass: {self.mass} kg outside plausible range {MASS_RANGE}")
        if self.sex not in ("male", "female"):
            raise ValueError(f"sex: must be 'male' or 'female', got {self.sex!r}")


@dataclass(frozen=True)
class SegmentFractions:
    """Dimensionless fractions describing one lumped segment.

    mass_fraction is of total body mass (bilateral segments pre-summed),
    length_fraction is of stature, com_fraction locates the mass centre
    along the segment axis from its proximal end (heel for the foot), and
    gyration_fraction is the sagittal radius of gyration about the mass
    centre as a fraction of segment length.
    """

    mass_fraction: float
    length_fraction: float
    com_fraction: float
    gyration_fraction: float


@dataclass(frozen=True)
class AnthroTable:
    hat: SegmentFractions
    thigh: SegmentFractions
    shank: SegmentFractions
    foot: SegmentFractions

    def segment(self, name: str) -> SegmentFractions:
        if name not in SEGMENT_NAMES:
            raise KeyError(name)
        return getattr(self, name)

    def mass_fraction_sum(self) -> float:
        return math.fsum(self.segment(n).mass_fraction for n in SEGMENT_NAMES)


def _lumped_table(thigh, shank, foot, hat_length, hat_com, hat_gyration) -> AnthroTable:
    # hat mass fraction is the complement so the partition sums to 1 exactly
    hat_mass = 1.0 - (thigh[0] + shank[0] + foot[0])
    return AnthroTable(
        hat=SegmentFractions(hat_mass, hat_length, hat_com, hat_gyration),
        thigh=SegmentFractions(*thigh),
        shank=SegmentFractions(*shank),
        foot=SegmentFractions(*foot),
    )


# de Leva (1996) adjusted fractions, transcribed; per-side mass doubled for
# the lumped bilateral segments. Length fractions: knee height 0.285,
# knee-to-hip 0.245, hip-to-vertex 0.470, foot length 0.152 of stature.
# HAT com/gyration: frozen standing-posture composite of head, trunk and
# both arms (mass-weighted com; parallel-axis inertia about it).
_MALE = _lumped_table(
    thigh=(2 * 0.1416, 0.245, 0.4095, 0.329),
    shank=(2 * 0.0433, 0.285, 0.4459, 0.251),
    foot=(2 * 0.0137, 0.152, 0.4415, 0.257),
    hat_length=0.470,
    hat_com=0.362,
    hat_gyration=0.291,
)

_FEMALE = _lumped_table(
    thigh=(2 * 0.1478, 0.245, 0.3612, 0.369),
    shank=(2 * 0.0481, 0.285, 0.4416, 0.271),
    foot=(2 * 0.0129, 0.152, 0.4014, 0.299),
    hat_length=0.470,
    hat_com=0.375,
    hat_gyration=0.298,
)


def default_table(sex: str = "male") -> AnthroTable:
    """Built-in fraction table for the requested sex."""
    if sex == "male":
        return _MALE
    if sex == "female":
        return _FEMALE
    raise ValueError(f"sex: must be 'male' or 'female', got {sex!r}")


@dataclass(frozen=True)
class SegmentParams:
    """Scaled parameters of one lumped segment."""

    mass: float  # kg
    length: float  # m
    com_offset: float  # fraction of length from the proximal end
    inertia_sagittal: float  # kg m^2, about the com, axis normal to the plane

    def __post_init__(self):
        if self.mass <= 0 or self.length <= 0:
            raise ValueError("segment mass and length must be positive")
        if not (0.0 <= self.com_offset <= 1.0):
            raise ValueError(f"com_offset: {self.com_offset} outside [0, 1]")
        if self.inertia_sagittal < 0:
            raise ValueError("inertia_sagittal must be non-negative")


@dataclass(frozen=True)
class AnthropometricModel:
    """Four-segment model scaled to a subject."""

    hat: SegmentParams
    thigh: SegmentParams
    shank: SegmentParams
    foot: SegmentParams
    total_mass: float  # kg
    gravity: float = GRAVITY

    def segment(self, name: str) -> SegmentParams:
        if name not in SEGMENT_NAMES:
            raise KeyError(name)
        return getattr(self, name)

    @property
    def weight(self) -> float:
        """Body weight in N."""
        return self.total_mass * self.gravity

    @property
    def standing_hip_height(self) -> float:
        """Hip pivot height when fully upright (0.53 x stature by default)."""
        return self.shank.length + self.thigh.length


def scale_anthropometrics(
    subject: Subject,
    table: AnthroTable | None = None,
    gravity: float = GRAVITY,
) -> AnthropometricModel:
    """Scale a fraction table to a subject.

    Parameters
    ----------
    subject : Subject
        Validated height/mass/sex.
    table : AnthroTable, optional
        Fraction table; defaults to the built-in table for subject.sex.

    Returns
    -------
    AnthropometricModel
        Segment masses sum to subject.mass; inertias use the gyration
        fractions (lumping both sides leaves the gyration fraction
        unchanged, since both single-side quantities just double).
    """
    if table is None:
        table = default_table(subject.sex)

    def scaled(name: str) -> SegmentParams:
        frac = table.segment(name)
        mass = frac.mass_fraction * subject.mass
        length = frac.length_fraction * subject.height
        inertia = mass * (frac.gyration_fraction * length) ** 2
        return SegmentParams(mass, length, frac.com_fraction, inertia)

    return AnthropometricModel(
        hat=scaled("hat"),
        thigh=scaled("thigh"),
        shank=scaled("shank"),
        foot=scaled("foot"),
        total_mass=subject.mass,
        gravity=gravity,
    )


# -- override file format ---------------------------------------------------
# keys: segment.<name>.{mass_fraction,length_fraction,com_fraction,gyration_fraction}

_FIELDS = ("mass_fraction", "length_fraction", "com_fraction", "gyration_fraction")


def format_table(table: AnthroTable) -> str:
    items: dict[str, object] = {}
    for name in SEGMENT_NAMES:
        frac = table.segment(name)
        for field in _FIELDS:
            items[f"segment.{name}.{field}"] = getattr(frac, field)
    return format_kv(items, header="anthropometric segment fractions")


def parse_table(text: str, base: AnthroTable | None = None) -> AnthroTable:
    """Parse an override file; keys missing from the text fall back to base
    (the built-in male table when base is None)."""
    if base is None:
        base = default_table()
    kv = parse_kv(text)
    values = {
        name: {field: getattr(base.segment(name), field) for field in _FIELDS}
        for name in SEGMENT_NAMES
    }
    for key, raw in kv.items():
        parts = key.split(".")
        if len(parts) != 3 or parts[0] != "segment":
            raise ConfigError(0, f"unknown key {key!r}")
        _, name, field = parts
        if name not in SEGMENT_NAMES or field not in _FIELDS:
            raise ConfigError(0, f"unknown key {key!r}")
        values[name][field] = float(raw)
    return AnthroTable(
        **{name: SegmentFractions(**values[name]) for name in SEGMENT_NAMES}
    )


def load_table(path) -> AnthroTable:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_table(fh.read())


def save_table(table: AnthroTable, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_table(table))
