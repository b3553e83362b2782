import math

import numpy as np
import pytest

from sit2stand.grf_analysis import (
    EventConfig,
    GrfParameters,
    GrfProfile,
    IncompleteMovementError,
    StsEvents,
    detect_events,
    extract_parameters,
    parse_stats_csv,
    stats_to_csv,
    trial_statistics,
)

BW = 866.0


def linear_fixture():
    """Piecewise-linear trace with breakpoints on the 1 kHz grid:
    500 N to 0.499 s, 600 N at lift-off 0.5 s, 900 N peak at 0.8 s,
    866 N (body weight) at 1.5 s, flat to 2 s."""
    t = np.round(np.arange(0, 2.0 + 1e-9, 0.001), 9)
    knots_t = np.array([0.0, 0.499, 0.5, 0.8, 1.5, 2.0])
    knots_f = np.array([500.0, 500.0, 600.0, 900.0, 866.0, 866.0])
    fz = np.interp(t, knots_t, knots_f)
    return GrfProfile(t=t, fz=fz, body_weight=BW)


FIXTURE_EVENTS = StsEvents(0.0, 0.5, 0.8, 1.5)

# closed-form oracle values for the fixture windows
P1_EXPECT = 500.0 * 0.499 + 0.001 * (500.0 + 600.0) / 2.0
P2_EXPECT = 0.3 * (600.0 + 900.0) / 2.0
P3_EXPECT = 0.7 * (900.0 + 866.0) / 2.0


def test_linear_fixture_parameters_exact():
    p = extract_parameters(linear_fixture(), FIXTURE_EVENTS)
    assert p.f1 == pytest.approx(600.0, abs=1e-9)
    assert p.f2 == pytest.approx(900.0, abs=1e-9)
    assert (p.t1, p.t2, p.t3) == pytest.approx((0.5, 0.3, 0.7), abs=1e-12)
    assert p.p1 == pytest.approx(P1_EXPECT, abs=1e-9)
    assert p.p2 == pytest.approx(P2_EXPECT, abs=1e-9)
    assert p.p3 == pytest.approx(P3_EXPECT, abs=1e-9)
    assert p.v1 == pytest.approx(1000.0, rel=1e-9)
    assert p.v2 == pytest.approx((866.0 - 900.0) / 0.7, rel=1e-6)


def test_window_identities():
    prof = linear_fixture()
    p = extract_parameters(prof, FIXTURE_EVENTS)
    assert p.t1 + p.t2 + p.t3 == pytest.approx(
        FIXTURE_EVENTS.t_end - FIXTURE_EVENTS.t_start, abs=1e-12
    )
    window = (prof.t >= 0.0) & (prof.t <= 1.5)
    total = np.trapezoid(prof.fz[window], prof.t[window])
    assert p.p1 + p.p2 + p.p3 == pytest.approx(total, abs=1e-9)


def test_constant_window_impulse_is_force_times_duration():
    t = np.arange(0, 3.0, 0.01)
    prof = GrfProfile(t=t, fz=np.full_like(t, 700.0), body_weight=BW)
    p = extract_parameters(prof, StsEvents(0.0, 1.0, 1.5, 2.5))
    assert p.p1 == pytest.approx(700.0 * 1.0, rel=1e-12)
    assert p.p2 == pytest.approx(700.0 * 0.5, rel=1e-12)
    assert p.p3 == pytest.approx(700.0 * 1.0, rel=1e-12)


def test_zero_duration_window_flags_nan():
    prof = linear_fixture()
    p = extract_parameters(prof, StsEvents(0.0, 0.8, 0.8, 1.5))
    assert math.isnan(p.v1)
    assert "V1" in p.flags
    p2 = extract_parameters(prof, StsEvents(0.0, 0.5, 1.5, 1.5))
    assert math.isnan(p2.v2)
    assert "V2" in p2.flags


def test_events_validation():
    with pytest.raises(ValueError, match="order"):
        StsEvents(0.0, 0.5, 0.4, 1.0)
    prof = linear_fixture()
    with pytest.raises(ValueError, match="span"):
        extract_parameters(prof, StsEvents(0.0, 0.5, 0.8, 5.0))


# -- event detection ----------------------------------------------------------


def test_seat_channel_liftoff():
    prof = linear_fixture()
    seat = np.where(prof.t < 0.5, 300.0, 0.0)
    prof = GrfProfile(t=prof.t, fz=prof.fz, body_weight=BW, seat_fz=seat)
    ev = detect_events(prof)
    assert ev.t_liftoff == pytest.approx(0.5, abs=2e-3)
    assert ev.t_peak == pytest.approx(0.8, abs=2e-3)
    # completion: 866 reached at 1.5 within the 2% band, confirmed 0.2 s later
    assert 1.2 < ev.t_end < 1.7


def test_liftoff_without_seat_channel_uses_rise():
    prof = linear_fixture()
    ev = detect_events(prof)
    # force leaves the 500 N baseline just before 0.5 s
    assert 0.45 < ev.t_liftoff < 0.55


def test_constant_force_is_incomplete():
    t = np.arange(0, 3.0, 0.01)
    prof = GrfProfile(t=t, fz=np.full_like(t, BW), body_weight=BW)
    with pytest.raises(IncompleteMovementError, match="incomplete"):
        detect_events(prof)


def test_no_settle_is_incomplete():
    t = np.arange(0, 3.0, 0.01)
    fz = np.where(t < 1.0, 500.0, 500.0 + 300.0 * (t - 1.0))  # never settles
    seat = np.where(t < 1.0, 200.0, 0.0)
    prof = GrfProfile(t=t, fz=fz, body_weight=BW, seat_fz=seat)
    with pytest.raises(IncompleteMovementError, match="settle|body weight"):
        detect_events(prof)


def test_minimum_duration():
    t = np.arange(0, 0.5, 0.01)
    prof = GrfProfile(t=t, fz=np.full_like(t, 500.0), body_weight=BW)
    with pytest.raises(ValueError, match="1 s"):
        detect_events(prof)


def test_detection_is_rate_invariant():
    """Same band-limited profile sampled at 100 Hz and 1 kHz: parameters
    drift below 1 %."""

    def smooth_profile(rate):
        t = np.arange(0.0, 4.0, 1.0 / rate)
        u = np.clip(t - 1.0, 0.0, 1.0)
        step = u**3 * (10.0 - 15.0 * u + 6.0 * u**2)
        hump = np.exp(-(((t - 1.7) / 0.25) ** 2))
        fz = 0.4 * BW + 0.6 * BW * step + 0.15 * BW * hump
        seat = np.clip(0.6 * BW * (1.0 - t / 1.2), 0.0, None)
        return GrfProfile(t=t, fz=fz, body_weight=BW, seat_fz=seat)

    results = []
    for rate in (100.0, 1000.0):
        prof = smooth_profile(rate)
        p = extract_parameters(prof, detect_events(prof))
        results.append(p.as_dict())
    for key, a in results[0].items():
        b = results[1][key]
        assert abs(a - b) <= 0.01 * max(abs(a), abs(b), 1e-9), key


def test_time_shift_invariance():
    prof = linear_fixture()
    p0 = extract_parameters(prof, FIXTURE_EVENTS)
    shifted = GrfProfile(t=prof.t + 11.0, fz=prof.fz, body_weight=BW)
    ev = StsEvents(11.0, 11.5, 11.8, 12.5)
    p1 = extract_parameters(shifted, ev)
    for a, b in zip(p0.as_dict().values(), p1.as_dict().values()):
        assert a == pytest.approx(b, rel=1e-12)


def test_force_scale_equivariance():
    prof = linear_fixture()
    p0 = extract_parameters(prof, FIXTURE_EVENTS)
    k = 2.5
    scaled = GrfProfile(t=prof.t, fz=k * prof.fz, body_weight=k * BW)
    p1 = extract_parameters(scaled, FIXTURE_EVENTS)
    for name in ("F1", "F2", "P1", "P2", "P3", "V1", "V2"):
        assert p1.as_dict()[name] == pytest.approx(k * p0.as_dict()[name], rel=1e-9)
    for name in ("T1", "T2", "T3"):
        assert p1.as_dict()[name] == p0.as_dict()[name]


# -- statistics ---------------------------------------------------------------


def _params(**overrides):
    base = dict(f1=600, f2=900, t1=0.5, t2=0.3, t3=0.7,
                p1=250, p2=225, p3=618, v1=1000, v2=-48)
    base.update(overrides)
    return GrfParameters(**base)


def test_identical_trials_zero_sd():
    stats = trial_statistics([_params()] * 6)
    assert stats.n == 6
    assert all(v == 0.0 for v in stats.sd.values())


def test_two_trial_sd_hand_computed():
    stats = trial_statistics([_params(f2=900), _params(f2=1000)])
    assert stats.mean["F2"] == pytest.approx(950.0)
    assert stats.sd["F2"] == pytest.approx(math.sqrt(5000.0), rel=1e-12)
    assert stats.sd["F2"] == pytest.approx(70.7107, abs=1e-4)


def test_single_trial_flagged():
    stats = trial_statistics([_params()])
    assert stats.single_trial
    assert stats.mean["F1"] == 600.0
    assert stats.sd["F1"] == 0.0


def test_empty_trials_error():
    with pytest.raises(ValueError, match="no trials"):
        trial_statistics([])


def test_stats_csv_round_trip():
    stats = trial_statistics([_params(), _params(f2=950)])
    text = stats_to_csv(stats, BW)
    assert text.splitlines()[0] == "param,mean,sd,mean_pct_bw,sd_pct_bw"
    mean, sd = parse_stats_csv(text)
    assert mean["F2"] == stats.mean["F2"]
    assert sd["F2"] == stats.sd["F2"]


def test_pct_bw_columns():
    p = _params()
    pct = p.pct_bw(BW)
    assert pct["F1"] == pytest.approx(100.0 * 600.0 / BW)
    assert "T1" not in pct


def test_grf_csv_round_trip():
    prof = linear_fixture()
    seat = np.where(prof.t < 0.5, 300.0, 0.0)
    prof = GrfProfile(t=prof.t, fz=prof.fz, body_weight=BW, seat_fz=seat)
    text = prof.to_csv()
    assert text.splitlines()[0] == "t,fz,seat_fz"
    again = GrfProfile.from_csv(text, body_weight=BW)
    assert np.array_equal(again.t, prof.t)
    assert np.array_equal(again.fz, prof.fz)
    assert np.array_equal(again.seat_fz, prof.seat_fz)


def test_grf_csv_weight_estimate():
    prof = linear_fixture()
    again = GrfProfile.from_csv(prof.to_csv())
    assert again.body_weight == pytest.approx(866.0)


def test_grf_csv_malformed():
    with pytest.raises(ValueError, match="header"):
        GrfProfile.from_csv("a,b\n1,2\n")
    with pytest.raises(ValueError, match="row 3"):
        GrfProfile.from_csv("t,fz\n0.0,1.0\n0.01\n")
