import math

import numpy as np
import pytest

from skylabel.errors import ConfigError, InsufficientDataError
from skylabel.estimator import EstimatorConfig, estimate_tone, phase_series_from_iq
from skylabel.propagation import CwTone, TwoPathChannel, combine_two_path, wrap_phase
from skylabel.sim import IqBuffer, add_cw_tones, apply_two_path, msk_baseband

FS = 4000.0
CFG = EstimatorConfig()


def clean_tone(offset, amp, phase, seconds=1.0, start=0.0):
    t = np.arange(int(round(seconds * FS))) / FS
    return IqBuffer(amp * np.exp(1j * (2 * np.pi * offset * t + phase)), FS, start)


def test_reference_tone():
    est = estimate_tone(clean_tone(450, 1.0, 0.0), 450, CFG)
    assert est.phase_rad == pytest.approx(0.0, abs=1e-6)
    assert est.amplitude == pytest.approx(1.0, rel=1e-6)


def test_known_phase_and_amplitude():
    est = estimate_tone(clean_tone(-450, 0.5, 1.234), -450, CFG)
    assert est.phase_rad == pytest.approx(1.234, abs=1e-6)
    assert est.amplitude == pytest.approx(0.5, rel=1e-6)


def test_adjacent_tone_rejected():
    buf = add_cw_tones(clean_tone(450, 1.0, 0.3), (-450,), (3.0,), (2.0,))
    est = estimate_tone(buf, 450, CFG)
    assert est.phase_rad == pytest.approx(0.3, abs=1e-9)


def test_tone_with_msk_equal_power():
    rng = np.random.default_rng(17)
    worst = 0.0
    for _ in range(20):
        msk = msk_baseband(rng.integers(0, 2, 200), 200, FS)
        phases = rng.uniform(-np.pi, np.pi, 2)
        buf = add_cw_tones(msk, (-450, 450), (1.0, 1.0), phases)
        for off, ph in zip((-450, 450), phases):
            worst = max(worst, abs(wrap_phase(estimate_tone(buf, off, CFG).phase_rad - ph)))
    assert worst <= 5e-3


def test_window_underrun():
    with pytest.raises(InsufficientDataError):
        estimate_tone(clean_tone(450, 1, 0, seconds=0.5), 450, CFG)


def test_config_separation_invariant():
    with pytest.raises(ConfigError):
        EstimatorConfig(tone_offsets_hz=(449.0, 450.0), integration_seconds=1.0)


def _stream(seconds, start=1_676_000_000.0):
    t = np.arange(int(seconds * FS)) / FS
    x = np.exp(1j * (2 * np.pi * -450 * t + 0.2)) + 0.5 * np.exp(1j * (2 * np.pi * 450 * t - 1.0))
    return IqBuffer(x, FS, start)


def test_series_counts():
    out = phase_series_from_iq([_stream(180)], CFG)
    assert set(out) == {"CW1", "CW2"}
    assert len(out["CW1"]) == 3
    assert np.diff(out["CW1"].epochs) == pytest.approx([60, 60])
    assert out["CW1"].phases == pytest.approx([0.2] * 3, abs=1e-9)
    assert out["CW2"].amplitudes == pytest.approx([0.5] * 3, rel=1e-9)


def test_series_gap_marks_missing():
    full = _stream(240)
    first = full.slice(0, 60)
    rest = full.slice(120)  # epoch at +60 s has no data
    out = phase_series_from_iq([first, rest], CFG)
    assert len(out["CW1"]) == 4
    assert list(out["CW1"].missing) == [False, True, False, False]


def test_series_from_two_path_stream():
    alpha, delay = 0.6, 230.4e-6
    base = _stream(130)
    out = apply_two_path(base, alpha, delay, 318_000.0)
    ref = phase_series_from_iq([base], CFG)
    got = phase_series_from_iq([out], CFG)
    for name, off in zip(CFG.channel_names, CFG.tone_offsets_hz):
        c = combine_two_path(CwTone(318_000.0 + off), TwoPathChannel(alpha, delay))
        # first epoch window starts at the buffer edge; skip the zero-filled transient
        d = wrap_phase(got[name].phases[1:] - ref[name].phases[1:])
        assert d == pytest.approx([c.beta_rad] * len(d), abs=1e-3)


def test_phase_rotation_equivariance():
    rng = np.random.default_rng(2)
    buf = add_cw_tones(msk_baseband(rng.integers(0, 2, 200), 200, FS), (-450, 450), (1, 0.7), (0.1, 2.0))
    for theta in rng.uniform(-np.pi, np.pi, 10):
        rot = IqBuffer(buf.samples * np.exp(1j * theta), FS)
        for off in (-450, 450):
            a, b = estimate_tone(buf, off), estimate_tone(rot, off)
            assert wrap_phase(b.phase_rad - a.phase_rad - theta) == pytest.approx(0, abs=1e-9)


def test_amplitude_scale_equivariance():
    buf = _stream(1)
    for g in (1e-3, 0.5, 7.0):
        a, b = estimate_tone(buf, 450), estimate_tone(IqBuffer(buf.samples * g, FS), 450)
        assert b.amplitude == pytest.approx(g * a.amplitude, rel=1e-9)
        assert b.phase_rad == pytest.approx(a.phase_rad, abs=1e-9)


@pytest.mark.parametrize("snr_db", [20.0, 30.0])
def test_awgn_phase_std_near_theory(snr_db):
    rng = np.random.default_rng(int(snr_db))
    n = int(FS)
    snr = 10 ** (snr_db / 10)
    # SNR in the integration bandwidth: A^2 / (sigma^2 / n)
    sigma = math.sqrt(n / snr)
    base = clean_tone(450, 1.0, 0.7).samples
    est = []
    for _ in range(1000):
        noise = sigma / math.sqrt(2) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
        est.append(estimate_tone(IqBuffer(base + noise, FS), 450).phase_rad)
    std = np.std(wrap_phase(np.array(est) - 0.7), ddof=1)
    assert std <= 1.1 / math.sqrt(2 * snr)
    assert std >= 0.9 / math.sqrt(2 * snr)
