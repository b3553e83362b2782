"""Sit-to-stand events and ground-reaction-force parameters.

From a vertical GRF trace the movement is segmented by three events - hip
lift-off, peak force, completion - and ten parameters are extracted:

========  =====================================================
F1, F2    force at lift-off / peak force (N)
T1-T3     start->lift-off, lift-off->peak, peak->completion (s)
P1-P3     impulse (trapezoidal integral) over T1/T2/T3 (N s)
V1        (F2 - F1) / T2 (N/s)
V2        least-squares force slope over the T3 window (N/s)
========  =====================================================

Lift-off comes from the seat-force channel when present (first crossing
below a small threshold, linearly interpolated), otherwise from a
sustained rise of the foot force above its early baseline. Completion is
confirmed once the force has stayed within a +-2 % body-weight band for
0.2 s after the peak; ``t_end`` is the time that confirmation completes,
so T3 > 0 even when the peak sits at the start of the settled plateau.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

PARAM_NAMES = ("F1", "F2", "T1", "T2", "T3", "P1", "P2", "P3", "V1", "V2")

# per-BW normalisation units used in the CSV output
_FORCE_PARAMS = ("F1", "F2", "P1", "P2", "P3", "V1", "V2")


class IncompleteMovementError(ValueError):
    """The trace has no usable sit-to-stand event structure."""


@dataclass
class GrfProfile:
    t: np.ndarray
    fz: np.ndarray
    body_weight: float
    seat_fz: np.ndarray | None = None
    cane_fz: np.ndarray | None = None

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.fz = np.asarray(self.fz, dtype=float)
        if self.t.ndim != 1 or self.fz.shape != self.t.shape:
            raise ValueError("t and fz must be equal-length 1-D arrays")
        if self.t.size >= 2 and not np.all(np.diff(self.t) > 0):
            raise ValueError("timestamps must be strictly increasing")
        if not (self.body_weight > 0):
            raise ValueError(f"body_weight must be positive, got {self.body_weight}")
        for name in ("seat_fz", "cane_fz"):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.asarray(arr, dtype=float)
                if arr.shape != self.t.shape:
                    raise ValueError(f"{name} length != t length")
                setattr(self, name, arr)

    @property
    def duration(self) -> float:
        return float(self.t[-1] - self.t[0])

    def value_at(self, time: float) -> float:
        return float(np.interp(time, self.t, self.fz))

    def to_csv(self) -> str:
        cols = ["t", "fz"]
        data = [self.t, self.fz]
        if self.seat_fz is not None:
            cols.append("seat_fz")
            data.append(self.seat_fz)
        if self.cane_fz is not None:
            cols.append("cane_fz")
            data.append(self.cane_fz)
        buf = io.StringIO()
        buf.write(",".join(cols) + "\n")
        for row in zip(*data):
            buf.write(",".join(repr(float(v)) for v in row) + "\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, body_weight: float | None = None) -> "GrfProfile":
        """Parse ``t,fz[,seat_fz][,cane_fz]``. When body_weight is None it
        is estimated as the median force over the final 0.3 s."""
        lines = [ln for ln in text.splitlines() if ln.strip()]
        header = [c.strip() for c in lines[0].split(",")]
        if header[:2] != ["t", "fz"]:
            raise ValueError(f"bad GRF header: {lines[0]!r}")
        known = {"t", "fz", "seat_fz", "cane_fz"}
        unknown = [c for c in header if c not in known]
        if unknown:
            raise ValueError(f"unknown GRF columns: {unknown}")
        rows = []
        for i, ln in enumerate(lines[1:], start=2):
            vals = ln.split(",")
            if len(vals) != len(header):
                raise ValueError(f"row {i}: expected {len(header)} columns")
            try:
                rows.append([float(v) for v in vals])
            except ValueError as exc:
                raise ValueError(f"row {i}: {exc}") from exc
        arr = np.array(rows)
        col = {name: arr[:, j] for j, name in enumerate(header)}
        if body_weight is None:
            tail = col["t"] >= col["t"][-1] - 0.3
            body_weight = float(np.median(col["fz"][tail]))
        return cls(
            t=col["t"],
            fz=col["fz"],
            body_weight=body_weight,
            seat_fz=col.get("seat_fz"),
            cane_fz=col.get("cane_fz"),
        )


@dataclass(frozen=True)
class StsEvents:
    t_start: float
    t_liftoff: float
    t_peak: float
    t_end: float

    def __post_init__(self):
        if not (self.t_start <= self.t_liftoff <= self.t_peak <= self.t_end):
            raise ValueError(
                "events out of order: "
                f"{self.t_start}, {self.t_liftoff}, {self.t_peak}, {self.t_end}"
            )


@dataclass(frozen=True)
class EventConfig:
    seat_threshold: float = 5.0  # N
    settle_band: float = 0.02  # fraction of body weight
    settle_time: float = 0.2  # s
    baseline_window: float = 0.25  # s, for the no-seat lift-off heuristic
    rise_fraction: float = 0.02  # of body weight, sustained rise above baseline
    rise_sustain: float = 0.1  # s


def _cross_below(t, y, threshold):
    """First interpolated time y crosses from above to <= threshold."""
    below = y <= threshold
    if below[0]:
        return float(t[0])
    idx = np.nonzero(below[1:] & ~below[:-1])[0]
    if idx.size == 0:
        return None
    i = int(idx[0])
    frac = (y[i] - threshold) / (y[i] - y[i + 1])
    return float(t[i] + frac * (t[i + 1] - t[i]))


def _liftoff_from_rise(t, fz, bw, cfg):
    base_mask = t <= t[0] + cfg.baseline_window
    baseline = float(np.median(fz[base_mask]))
    threshold = baseline + cfg.rise_fraction * bw
    above = fz > threshold
    # first up-crossing that stays above for rise_sustain
    starts = np.nonzero(above[1:] & ~above[:-1])[0] + 1
    if above[0]:
        starts = np.concatenate([[0], starts])
    for s in starts:
        e = s
        while e + 1 < t.size and above[e + 1]:
            e += 1
        if t[e] - t[s] >= cfg.rise_sustain:
            if s == 0:
                return float(t[0])
            frac = (threshold - fz[s - 1]) / (fz[s] - fz[s - 1])
            return float(t[s - 1] + frac * (t[s] - t[s - 1]))
    return None


def _refine_peak(t, y, i):
    """Parabolic vertex through samples i-1, i, i+1 when i is a strict
    local max; otherwise the sample itself."""
    if i == 0 or i == y.size - 1:
        return float(t[i]), float(y[i])
    y0, y1, y2 = y[i - 1], y[i], y[i + 1]
    denom = y0 - 2.0 * y1 + y2
    if not (y1 > y0 and y1 > y2) or denom >= 0:
        return float(t[i]), float(y[i])
    delta = 0.5 * (y0 - y2) / denom
    h = 0.5 * (t[i + 1] - t[i - 1])
    return float(t[i] + delta * h), float(y1 - 0.25 * (y0 - y2) * delta)


def detect_events(profile: GrfProfile, cfg: EventConfig | None = None) -> StsEvents:
    """Locate lift-off, peak and completion on a GRF trace.

    Raises
    ------
    IncompleteMovementError
        If no lift-off can be found, or the force never settles into the
        +-2 % body-weight band after the peak.
    """
    cfg = cfg or EventConfig()
    t, fz, bw = profile.t, profile.fz, profile.body_weight
    if profile.duration < 1.0:
        raise ValueError(f"need at least 1 s of data, got {profile.duration:.3f} s")

    if profile.seat_fz is not None:
        t_liftoff = _cross_below(t, profile.seat_fz, cfg.seat_threshold)
        if t_liftoff is None:
            raise IncompleteMovementError(
                "incomplete movement: seat force never drops below "
                f"{cfg.seat_threshold} N"
            )
    else:
        t_liftoff = _liftoff_from_rise(t, fz, bw, cfg)
        if t_liftoff is None:
            raise IncompleteMovementError(
                "incomplete movement: no sustained foot-force rise found"
            )

    after = t > t_liftoff
    if not np.any(after):
        raise IncompleteMovementError("incomplete movement: no data after lift-off")
    i0 = int(np.argmax(after))
    i_peak = i0 + int(np.argmax(fz[i0:]))
    t_peak, f_peak = _refine_peak(t, fz, i_peak)
    t_peak = max(t_peak, t_liftoff)

    band = cfg.settle_band * bw
    in_band = np.abs(fz - bw) <= band
    t_end = None
    i = max(i_peak, 1)
    while i < t.size:
        if in_band[i]:
            j = i
            while j + 1 < t.size and in_band[j + 1]:
                j += 1
            if in_band[i - 1] or i == i_peak:
                entry = float(t[i]) if i == i_peak else float(max(t[i], t_peak))
            else:
                # interpolate the band entry on the crossing segment
                target = bw + band if fz[i - 1] > bw + band else bw - band
                frac = (fz[i - 1] - target) / (fz[i - 1] - fz[i])
                entry = float(t[i - 1] + frac * (t[i] - t[i - 1]))
            entry = max(entry, t_peak)
            if float(t[j]) - entry >= cfg.settle_time:
                t_end = entry + cfg.settle_time
                break
            i = j + 1
        else:
            i += 1
    if t_end is None:
        if f_peak <= bw:
            raise IncompleteMovementError(
                "incomplete movement: no peak above body weight and no settling"
            )
        raise IncompleteMovementError(
            "incomplete movement: force never settles near body weight"
        )

    return StsEvents(
        t_start=float(t[0]), t_liftoff=t_liftoff, t_peak=t_peak, t_end=t_end
    )


@dataclass
class GrfParameters:
    f1: float
    f2: float
    t1: float
    t2: float
    t3: float
    p1: float
    p2: float
    p3: float
    v1: float
    v2: float
    flags: dict[str, str] = field(default_factory=dict)

    def as_dict(self) -> dict[str, float]:
        return {
            "F1": self.f1,
            "F2": self.f2,
            "T1": self.t1,
            "T2": self.t2,
            "T3": self.t3,
            "P1": self.p1,
            "P2": self.p2,
            "P3": self.p3,
            "V1": self.v1,
            "V2": self.v2,
        }

    def pct_bw(self, body_weight: float) -> dict[str, float]:
        """Force-scaled parameters as percent of body weight (durations
        excluded)."""
        return {
            k: 100.0 * v / body_weight
            for k, v in self.as_dict().items()
            if k in _FORCE_PARAMS
        }


def _window_integral(t, fz, a, b):
    """Trapezoidal integral over [a, b] with interpolated endpoints."""
    if b <= a:
        return 0.0
    inside = (t > a) & (t < b)
    tt = np.concatenate([[a], t[inside], [b]])
    yy = np.concatenate(
        [[np.interp(a, t, fz)], fz[inside], [np.interp(b, t, fz)]]
    )
    return float(np.trapezoid(yy, tt))


def extract_parameters(profile: GrfProfile, events: StsEvents) -> GrfParameters:
    """Ten parameters from a trace and its events.

    Zero-duration windows leave the corresponding rate undefined: the
    field is NaN and ``flags`` records the reason.
    """
    t, fz = profile.t, profile.fz
    if not (t[0] <= events.t_start and events.t_end <= t[-1] + 1e-12):
        raise ValueError("events lie outside the profile time span")

    f1 = profile.value_at(events.t_liftoff)
    f2 = profile.value_at(events.t_peak)
    t1 = events.t_liftoff - events.t_start
    t2 = events.t_peak - events.t_liftoff
    t3 = events.t_end - events.t_peak
    p1 = _window_integral(t, fz, events.t_start, events.t_liftoff)
    p2 = _window_integral(t, fz, events.t_liftoff, events.t_peak)
    p3 = _window_integral(t, fz, events.t_peak, events.t_end)

    flags: dict[str, str] = {}
    if t2 > 0:
        v1 = (f2 - f1) / t2
    else:
        v1 = math.nan
        flags["V1"] = "zero-duration lift-off-to-peak window"

    inside = (t >= events.t_peak) & (t <= events.t_end)
    if np.count_nonzero(inside) >= 2 and t3 > 0:
        tw = t[inside]
        v2 = float(np.polyfit(tw - tw[0], fz[inside], 1)[0])
    else:
        v2 = math.nan
        flags["V2"] = "zero-duration extension window"

    return GrfParameters(f1, f2, t1, t2, t3, p1, p2, p3, v1, v2, flags)


@dataclass
class TrialStats:
    mean: dict[str, float]
    sd: dict[str, float]
    n: int
    single_trial: bool = False


def trial_statistics(params: list[GrfParameters]) -> TrialStats:
    """Per-parameter sample mean and (n-1)-denominator SD over trials."""
    if not params:
        raise ValueError("no trials given")
    n = len(params)
    names = PARAM_NAMES
    table = {k: np.array([p.as_dict()[k] for p in params]) for k in names}
    mean = {k: float(np.mean(v)) for k, v in table.items()}
    sd = {}
    for k, v in table.items():
        if n == 1 or np.ptp(v) == 0.0:
            sd[k] = 0.0  # identical samples: exactly zero spread
        else:
            sd[k] = float(np.std(v, ddof=1))
    return TrialStats(mean=mean, sd=sd, n=n, single_trial=(n == 1))


def stats_to_csv(stats: TrialStats, body_weight: float) -> str:
    """``param,mean,sd,mean_pct_bw,sd_pct_bw`` rows; the %BW columns are
    blank for durations."""
    buf = io.StringIO()
    buf.write("param,mean,sd,mean_pct_bw,sd_pct_bw\n")
    for name in PARAM_NAMES:
        m, s = stats.mean[name], stats.sd[name]
        if name in _FORCE_PARAMS:
            pm = repr(100.0 * m / body_weight)
            ps = repr(100.0 * s / body_weight)
        else:
            pm = ps = ""
        buf.write(f"{name},{m!r},{s!r},{pm},{ps}\n")
    return buf.getvalue()


def parse_stats_csv(text: str) -> tuple[dict[str, float], dict[str, float]]:
    """Read back mean/sd maps from a stats CSV (for run comparison)."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    header = lines[0].split(",")
    if header[:3] != ["param", "mean", "sd"]:
        raise ValueError(f"bad parameter-file header: {lines[0]!r}")
    mean: dict[str, float] = {}
    sd: dict[str, float] = {}
    for ln in lines[1:]:
        parts = ln.split(",")
        mean[parts[0]] = float(parts[1])
        sd[parts[0]] = float(parts[2])
    missing = [p for p in PARAM_NAMES if p not in mean]
    if missing:
        raise ValueError(f"parameter file missing rows: {missing}")
    return mean, sd
