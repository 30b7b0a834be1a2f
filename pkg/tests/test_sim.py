import dataclasses
import datetime as dt
import math

import numpy as np
import pytest
from scipy.signal import welch

from skylabel.errors import ConfigError
from skylabel.estimator import EstimatorConfig, estimate_tone
from skylabel.propagation import CwTone, TwoPathChannel, combine_two_path, wrap_phase
from skylabel.sim import (
    IqBuffer,
    SimConfig,
    add_cw_tones,
    alpha_for_phase_shift,
    apply_two_path,
    cw_null_check,
    diurnal_alpha,
    msk_baseband,
    msk_phase,
    synthesize_campaign,
    synthesize_iq,
)
from skylabel.solar import local_midnight_utc, solar_events

FS = 4000.0
CARRIER = 318_000.0


def tone(offset, amp=1.0, phase=0.0, seconds=2.0, fs=FS):
    t = np.arange(int(seconds * fs)) / fs
    return IqBuffer(amp * np.exp(1j * (2 * np.pi * offset * t + phase)), fs)


# -- MSK ----------------------------------------------------------------------

def test_msk_all_ones_is_pure_tone():
    b = msk_baseband(np.ones(50, dtype=int), 200, FS)
    t = np.arange(len(b)) / FS
    assert np.allclose(b.samples, np.exp(2j * np.pi * 50.0 * t), atol=1e-9)


def test_msk_constant_envelope_and_phase_steps():
    rng = np.random.default_rng(4)
    bits = rng.integers(0, 2, 500)
    b = msk_baseband(bits, 200, FS, amplitude=0.7)
    assert np.max(np.abs(np.abs(b.samples) / 0.7 - 1)) <= 1e-9
    edges = np.unwrap(np.angle(b.samples))[::20]
    steps = np.diff(edges)
    assert steps == pytest.approx((2 * bits[:-1] - 1) * np.pi / 2, abs=1e-9)


def test_msk_phase_function_matches_sampled():
    rng = np.random.default_rng(8)
    bits = rng.integers(0, 2, 40)
    b = msk_baseband(bits, 200, FS)
    ph = msk_phase(np.arange(len(b)) / FS, bits, 200)
    assert np.allclose(np.exp(1j * ph), b.samples, atol=1e-9)


def test_msk_psd_nulls():
    rng = np.random.default_rng(0)
    b = msk_baseband(rng.integers(0, 2, 200 * 300), 200, FS)
    f, p = welch(b.samples, fs=FS, nperseg=4000, return_onesided=False)
    peak = p.max()
    for off in (150, 250, 350, 450):
        for sgn in (1, -1):
            level = 10 * np.log10(p[np.argmin(np.abs(f - sgn * off))] / peak)
            assert level <= -30, (off, level)
    # between nulls the spectrum is clearly higher
    assert 10 * np.log10(p[np.argmin(np.abs(f - 100))] / peak) > -20


def test_msk_requires_integer_samples_per_bit():
    with pytest.raises(ConfigError):
        msk_baseband([0, 1, 1], 300, FS)


@pytest.mark.parametrize("bitrate,offset,expected", [
    (200, 450, True), (200, -450, True), (200, 250, True), (200, -250, True),
    (200, 150, True), (200, 300, False), (200, 50, False), (100, 175, True),
])
def test_cw_null_check(bitrate, offset, expected):
    assert cw_null_check(bitrate, offset) is expected


# -- tones --------------------------------------------------------------------

def test_zero_amplitude_tones_identity():
    b = msk_baseband(np.random.default_rng(1).integers(0, 2, 100), 200, FS)
    out = add_cw_tones(b, (-450, 450), (0, 0), (1, 2))
    assert np.array_equal(out.samples, b.samples)


def test_single_tone_closed_loop():
    silent = IqBuffer(np.zeros(int(FS)), FS)
    out = add_cw_tones(silent, (450,), (0.8,), (-2.1,))
    est = estimate_tone(out, 450, EstimatorConfig())
    assert est.phase_rad == pytest.approx(-2.1, abs=1e-6)
    assert est.amplitude == pytest.approx(0.8, rel=1e-6)


def test_two_tone_spectrum_lines():
    silent = IqBuffer(np.zeros(int(4 * FS)), FS)
    out = add_cw_tones(silent, (-450, 450), (1, 1), (0, 0))
    spec = np.abs(np.fft.fft(out.samples)) / len(out)
    f = np.fft.fftfreq(len(out), 1 / FS)
    top = sorted(f[np.argsort(spec)[-2:]])
    assert top == [-450, 450]


def test_tone_beyond_nyquist():
    with pytest.raises(ConfigError):
        add_cw_tones(IqBuffer(np.zeros(100), FS), (2500,), (1,), (0,))


# -- diurnal alpha -------------------------------------------------------------

@pytest.fixture
def feb12(daesan):
    return solar_events(daesan, dt.date(2023, 2, 12), 9)


def test_diurnal_alpha_landmarks(feb12):
    assert diurnal_alpha(feb12.solar_noon_utc, feb12, 0.6, dt.timedelta(hours=1)) == 0.0
    midnight = local_midnight_utc(dt.date(2023, 2, 12), 9)
    assert diurnal_alpha(midnight, feb12, 0.6, 3600) == 0.6
    assert diurnal_alpha(midnight + dt.timedelta(hours=23, minutes=59), feb12, 0.6, 3600) == 0.6
    assert diurnal_alpha(feb12.sunset_utc, feb12, 0.6, 3600) == pytest.approx(0.3, abs=1e-12)
    assert diurnal_alpha(feb12.sunrise_utc, feb12, 0.6, 3600) == pytest.approx(0.3, abs=1e-12)


def test_diurnal_alpha_continuity(feb12):
    start = local_midnight_utc(dt.date(2023, 2, 12), 9).timestamp()
    t = start + np.arange(0, 86400, 1.0)
    a = diurnal_alpha(t, feb12, 0.8, 1800)
    bound = 0.8 * math.pi / (2 * 1800) + 1e-9
    assert np.max(np.abs(np.diff(a))) <= bound
    assert a.min() == 0.0 and a.max() == 0.8


# -- two-path channel ----------------------------------------------------------

def test_apply_two_path_alpha_zero_identity():
    b = tone(450)
    assert np.array_equal(apply_two_path(b, 0.0, 3e-4, CARRIER).samples, b.samples)


def _measure(buf_in, buf_out, offset):
    ref = estimate_tone(buf_in.slice(0.5, 1.0), offset)
    out = estimate_tone(buf_out.slice(0.5, 1.0), offset)
    return wrap_phase(out.phase_rad - ref.phase_rad), out.amplitude / ref.amplitude


@pytest.mark.parametrize("alpha,delay,offset", [(0.5, 230.4e-6, 450), (0.9, 600.42e-6, -450), (0.2, 1e-3, 450)])
def test_apply_two_path_matches_phasor(alpha, delay, offset):
    b = tone(offset, phase=0.4)
    out = apply_two_path(b, alpha, delay, CARRIER)
    beta, eta = _measure(b, out, offset)
    c = combine_two_path(CwTone(CARRIER + offset), TwoPathChannel(alpha, delay))
    assert beta == pytest.approx(c.beta_rad, abs=1e-3)
    assert eta == pytest.approx(c.eta, rel=1e-3)


def test_apply_two_path_energy():
    rng = np.random.default_rng(21)
    for _ in range(20):
        alpha, delay, off = rng.uniform(0.01, 1.0), rng.uniform(0, 1e-3), rng.choice([-450, 450])
        b = tone(off, seconds=2.0)
        out = apply_two_path(b, alpha, delay, CARRIER)
        n0 = int(round(delay * FS))
        ratio = np.mean(np.abs(out.samples[n0:]) ** 2) / np.mean(np.abs(b.samples[n0:]) ** 2)
        eta = combine_two_path(CwTone(CARRIER + off), TwoPathChannel(alpha, delay)).eta
        assert ratio == pytest.approx(eta ** 2, rel=1e-4)


def test_apply_two_path_delay_too_long():
    with pytest.raises(ConfigError):
        apply_two_path(IqBuffer(np.ones(4), FS), 0.5, 0.01, CARRIER)


def test_alpha_for_phase_shift():
    f, td = CARRIER + 450, 230.4e-6
    a = alpha_for_phase_shift(0.2, f, td)
    c = combine_two_path(CwTone(f), TwoPathChannel(a, td))
    assert abs(c.beta_rad) == pytest.approx(0.2, abs=1e-9)


# -- campaign -------------------------------------------------------------------

START = dt.date(2023, 2, 11)


def test_campaign_shapes_and_truth():
    cfg = SimConfig(seed=3, noise_sigma=0.0)
    camp = synthesize_campaign(cfg, START, 3)
    assert set(camp.phases) == {"CW1", "CW2"}
    assert len(camp.truth.epochs) == 3 * 1440
    i = 200  # night epoch
    for name, f, phi0 in zip(cfg.channel_names, cfg.tone_freqs_hz, cfg.cw_phases_rad):
        c = combine_two_path(CwTone(f), TwoPathChannel(camp.truth.alpha[i], camp.truth.delay_s[i]))
        assert camp.truth.eta[name][i] == pytest.approx(c.eta, abs=1e-9)
        assert camp.truth.beta[name][i] == pytest.approx(c.beta_rad, abs=1e-9)
        assert camp.phases[name].phases[i] == pytest.approx(wrap_phase(phi0 + c.beta_rad), abs=1e-9)


def test_campaign_no_skywave_day_night_alike():
    cfg = SimConfig(seed=12, alpha_night=0.0)
    camp = synthesize_campaign(cfg, START, 3)
    ev = solar_events(cfg.rx, dt.date(2023, 2, 12), 9)
    t = camp.truth.epochs
    ph = camp.phases["CW1"].phases
    day = ph[(t >= ev.sunrise_utc.timestamp()) & (t < ev.sunset_utc.timestamp())]
    night = ph[(t >= local_midnight_utc(dt.date(2023, 2, 12), 9).timestamp()) & (t < ev.sunrise_utc.timestamp())]
    ratio = np.var(night, ddof=1) / np.var(day, ddof=1)
    assert 0.8 <= ratio <= 1.25


def test_campaign_deterministic_and_segmentation_free():
    cfg = SimConfig(seed=99)
    a = synthesize_campaign(cfg, START, 3)
    b = synthesize_campaign(cfg, START, 3, workers=3)
    c = synthesize_campaign(cfg, START - dt.timedelta(days=1), 4)
    for name in cfg.channel_names:
        assert a.phases[name] == b.phases[name]
        assert np.array_equal(a.phases[name].phases, c.phases[name].phases[1440:])
    d = synthesize_campaign(dataclasses.replace(cfg, seed=100), START, 3)
    assert not np.array_equal(a.phases["CW1"].phases, d.phases["CW1"].phases)


def test_campaign_requires_three_days():
    with pytest.raises(ConfigError):
        synthesize_campaign(SimConfig(), START, 2)


def test_config_validation():
    with pytest.raises(ConfigError):
        SimConfig(cw_offsets_hz=(450, 450))
    with pytest.raises(ConfigError):
        SimConfig(sample_rate_hz=1000)
    with pytest.raises(ConfigError):
        SimConfig(alpha_night=1.5)
    with pytest.raises(ConfigError):
        SimConfig.from_dict({"bogus": 1})
    cfg = SimConfig.from_dict({"tx": {"lat": 36.0, "lon": 127.0}, "cw_offsets_hz": [-250, 250]})
    assert cfg.tx.lat == 36.0 and cfg.cw_offsets_hz == (-250, 250)
    assert SimConfig.from_dict(cfg.to_dict()) == cfg


def test_iq_synthesis_matches_campaign_truth():
    cfg = SimConfig(seed=5, noise_sigma=0.0, height_wander_m=0.0, alpha_night=0.5)
    start = local_midnight_utc(START + dt.timedelta(days=1), 9).timestamp()
    buf = synthesize_iq(cfg, start, 3.0)
    camp = synthesize_campaign(cfg, START, 3)
    i = 1440  # same epoch
    for name, off, phi0 in zip(cfg.channel_names, cfg.cw_offsets_hz, cfg.cw_phases_rad):
        est = estimate_tone(buf, off)
        assert wrap_phase(est.phase_rad - phi0 - camp.truth.beta[name][i]) == pytest.approx(0, abs=5e-3)
        assert est.amplitude == pytest.approx(camp.truth.eta[name][i], rel=5e-3)


def test_iq_synthesis_deterministic():
    cfg = SimConfig(seed=1)
    a = synthesize_iq(cfg, 1676041200.0, 2.0)
    b = synthesize_iq(cfg, 1676041200.0, 2.0)
    assert np.array_equal(a.samples, b.samples)
