"""MF R-Mode waveform and campaign synthesis.

Everything is complex baseband centred on the carrier.  The DGNSS payload is
a seeded pseudorandom bit stream MSK-modulated at ``msk_bitrate_bps``; two
CW ranging tones sit at MSK spectral nulls (+/-450 Hz by default).  The
skywave is the delayed, attenuated copy of the whole signal, rotated by the
carrier phase accrued over the delay.
"""
from __future__ import annotations

import datetime as dt
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .errors import ConfigError, InvalidInputError
from .propagation import (
    DEFAULT_IONO_HEIGHT_M,
    SPEED_OF_LIGHT,
    GeoPoint,
    composite_phasor,
    great_circle_distance,
    wrap_phase,
)
from .series import PhaseSeries, to_epoch
from .solar import SolarEvents, local_midnight_utc, solar_events

# Approximate sites of the Korean testbed; synthetic defaults, not survey data.
CHUNGJU = GeoPoint(36.99, 127.93)
DAESAN = GeoPoint(37.00, 126.35)


@dataclass
class IqBuffer:
    samples: np.ndarray
    sample_rate_hz: float
    start_epoch_utc: float = 0.0

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=complex).reshape(-1)
        if self.samples.size == 0:
            raise InvalidInputError("empty IQ buffer")
        if not np.all(np.isfinite(self.samples)):
            raise InvalidInputError("IQ buffer holds non-finite samples")
        if not self.sample_rate_hz > 0:
            raise InvalidInputError("sample rate must be positive")

    def __len__(self):
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz

    @property
    def end_epoch_utc(self) -> float:
        return self.start_epoch_utc + self.duration_s

    def times(self) -> np.ndarray:
        """Sample times relative to the buffer start."""
        return np.arange(self.samples.size) / self.sample_rate_hz

    def slice(self, start_s: float, duration_s: float | None = None) -> "IqBuffer":
        i0 = int(round(start_s * self.sample_rate_hz))
        i1 = self.samples.size if duration_s is None else i0 + int(round(duration_s * self.sample_rate_hz))
        if i0 < 0 or i1 > self.samples.size or i1 <= i0:
            raise InvalidInputError(f"slice [{start_s}, +{duration_s}) outside buffer")
        return IqBuffer(self.samples[i0:i1], self.sample_rate_hz,
                        self.start_epoch_utc + i0 / self.sample_rate_hz)


# -- MSK ---------------------------------------------------------------------

def _samples_per_bit(bitrate: float, sample_rate: float) -> int:
    if not bitrate > 0 or not sample_rate > 0:
        raise ConfigError("bit rate and sample rate must be positive")
    sps = sample_rate / bitrate
    if abs(sps - round(sps)) > 1e-9 * sps:
        raise ConfigError(f"sample rate {sample_rate} is not an integer multiple of bit rate {bitrate}")
    return int(round(sps))


def msk_phase(t, bits, bitrate: float) -> np.ndarray:
    """Continuous MSK phase at times ``t`` (s, relative to the first bit edge).

    Each bit advances the phase by exactly +/-pi/2, linearly across the bit.
    """
    d = 2 * np.asarray(bits, dtype=np.int8).astype(float) - 1
    t = np.asarray(t, dtype=float)
    pos = t * bitrate
    k = np.floor(pos).astype(np.int64)
    if k.size and (k.min() < 0 or k.max() >= d.size):
        raise InvalidInputError("MSK evaluation time outside the bit stream")
    start_phase = np.concatenate(([0.0], np.cumsum(d))) * (np.pi / 2)
    return start_phase[k] + d[k] * (np.pi / 2) * (pos - k)


def msk_baseband(bits, bitrate: float = 200.0, sample_rate: float = 4000.0,
                 amplitude: float = 1.0, start_epoch: float = 0.0) -> IqBuffer:
    sps = _samples_per_bit(bitrate, sample_rate)
    bits = np.asarray(bits)
    if bits.size == 0:
        raise InvalidInputError("no bits to modulate")
    # integer sample/bit indexing keeps the +/-pi/2 per-bit advance exact
    n = np.arange(bits.size * sps)
    k = n // sps
    d = 2 * bits.astype(float) - 1
    start_phase = np.concatenate(([0.0], np.cumsum(d))) * (np.pi / 2)
    phase = start_phase[k] + d[k] * (np.pi / 2) * (n - k * sps) / sps
    return IqBuffer(amplitude * np.exp(1j * phase), sample_rate, start_epoch)


def cw_null_check(bitrate: float, offset: float) -> bool:
    """True when ``|offset|`` lies on the MSK null grid ``(0.75 + 0.5 k) * bitrate``."""
    if not bitrate > 0:
        raise InvalidInputError("bit rate must be positive")
    x = abs(offset) / bitrate
    k = round((x - 0.75) / 0.5)
    if k < 0:
        return False
    return abs(x - (0.75 + 0.5 * k)) <= 1e-6 * max(x, 1e-300)


def add_cw_tones(buf: IqBuffer, offsets, amplitudes, phases) -> IqBuffer:
    """Add complex exponentials at baseband ``offsets``; phases are at the buffer start."""
    nyq = buf.sample_rate_hz / 2
    out = buf.samples.copy()
    t = buf.times()
    for f, a, p in zip(offsets, amplitudes, phases):
        if abs(f) >= nyq:
            raise ConfigError(f"tone offset {f} Hz beyond Nyquist {nyq} Hz")
        if a:
            out += a * np.exp(1j * (2 * np.pi * f * t + p))
    return IqBuffer(out, buf.sample_rate_hz, buf.start_epoch_utc)


# -- channel -----------------------------------------------------------------

def _seconds(x) -> float:
    return x.total_seconds() if isinstance(x, dt.timedelta) else float(x)


def diurnal_alpha(t, ev: SolarEvents, alpha_night: float, transition):
    """Skywave attenuation over the day: 0 in daylight, ``alpha_night`` at night.

    Raised-cosine ramps of length ``transition`` are centred on sunset and
    sunrise.  Times before solar noon use the sunrise ramp, later times the
    sunset ramp.  ``t`` may be a datetime, POSIX seconds or an array of them.
    """
    width = _seconds(transition)
    if not width > 0:
        raise InvalidInputError("transition must be positive")
    if not 0.0 <= alpha_night <= 1.0:
        raise InvalidInputError(f"alpha_night={alpha_night} outside [0, 1]")
    scalar = np.ndim(t) == 0
    if isinstance(t, dt.datetime):
        t = to_epoch(t)
    t = np.asarray(t, dtype=float)
    rise, sset = ev.sunrise_utc.timestamp(), ev.sunset_utc.timestamp()
    noon = 0.5 * (rise + sset)

    def ramp(x):  # 0 -> 1 across [-width/2, width/2]
        x = np.clip(x, -width / 2, width / 2)
        return 0.5 * (1 + np.sin(np.pi * x / width))

    a = np.where(t < noon, alpha_night * (1 - ramp(t - rise)), alpha_night * ramp(t - sset))
    return float(a) if scalar else a


def fractional_delay(x: np.ndarray, delay_samples: float) -> np.ndarray:
    """Circular delay by a (sub-)sample amount via per-bin phase rotation."""
    if delay_samples == 0:
        return x.copy()
    freqs = np.fft.fftfreq(x.size)
    return np.fft.ifft(np.fft.fft(x) * np.exp(-2j * np.pi * freqs * delay_samples))


def apply_two_path(buf: IqBuffer, alpha: float, delay_s: float, carrier_hz: float) -> IqBuffer:
    """Groundwave plus ``alpha`` times the delayed copy, rotated by the carrier phase.

    The delay is split into a whole-sample shift (zero-filled at the buffer
    start, so the first ``round(delay * fs)`` samples carry no skywave) and a
    sub-sample residual applied as a per-frequency phase rotation.
    """
    if delay_s < 0 or not math.isfinite(delay_s):
        raise ConfigError("skywave delay must be finite and non-negative")
    if not 0.0 <= alpha <= 1.0:
        raise InvalidInputError(f"alpha={alpha} outside [0, 1]")
    fs = buf.sample_rate_hz
    n0 = int(round(delay_s * fs))
    if n0 >= len(buf):
        raise ConfigError(f"delay {delay_s} s exceeds buffer length {buf.duration_s} s")
    if alpha == 0:
        return IqBuffer(buf.samples.copy(), fs, buf.start_epoch_utc)
    sky = fractional_delay(buf.samples, delay_s * fs - n0)
    if n0:
        sky = np.concatenate((np.zeros(n0, dtype=complex), sky[:-n0]))
    out = buf.samples + alpha * sky * np.exp(-2j * np.pi * carrier_hz * delay_s)
    return IqBuffer(out, fs, buf.start_epoch_utc)


def alpha_for_phase_shift(beta_abs: float, freq_hz: float, delay_s: float) -> float:
    """Smallest alpha in [0, 1] whose two-path phase shift reaches ``|beta| = beta_abs``."""
    theta = 2 * np.pi * freq_hz * delay_s

    def beta(a):
        return abs(math.atan2(-a * math.sin(theta), 1 + a * math.cos(theta)))

    if beta(1.0) < beta_abs:
        raise ConfigError(f"|beta|={beta_abs} unreachable at f={freq_hz} Hz, t_d={delay_s} s")
    lo, hi = 0.0, 1.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if beta(mid) < beta_abs else (lo, mid)
    return hi


# -- campaign ----------------------------------------------------------------

@dataclass
class SimConfig:
    carrier_hz: float = 318_000.0
    cw_offsets_hz: tuple = (-450.0, 450.0)
    cw_amplitudes: tuple = (1.0, 1.0)
    cw_phases_rad: tuple = (0.3, -1.2)
    channel_names: tuple = ("CW1", "CW2")
    msk_bitrate_bps: float = 200.0
    msk_amplitude: float = 1.0
    sample_rate_hz: float = 4000.0
    tx: GeoPoint = CHUNGJU
    rx: GeoPoint = DAESAN
    iono_height_m: float = DEFAULT_IONO_HEIGHT_M
    height_wander_m: float = 300.0
    alpha_night: float = 0.4
    transition_minutes: float = 60.0
    noise_sigma: float = 0.02
    phase_drift_rad_per_s: float = 0.0
    utc_offset_hours: float = 9.0
    epoch_spacing_s: float = 60.0
    integration_seconds: float = 1.0
    seed: int = 0

    def __post_init__(self):
        for name in ("cw_offsets_hz", "cw_amplitudes", "cw_phases_rad", "channel_names"):
            setattr(self, name, tuple(getattr(self, name)))
        if isinstance(self.tx, dict):
            self.tx = GeoPoint(**self.tx)
        if isinstance(self.rx, dict):
            self.rx = GeoPoint(**self.rx)
        n = len(self.cw_offsets_hz)
        if not (len(self.cw_amplitudes) == len(self.cw_phases_rad) == len(self.channel_names) == n):
            raise ConfigError("tone offsets, amplitudes, phases and channel names differ in length")
        if len(set(self.cw_offsets_hz)) != n:
            raise ConfigError("CW offsets must be distinct")
        if not 0.0 <= self.alpha_night <= 1.0:
            raise ConfigError(f"alpha_night={self.alpha_night} outside [0, 1]")
        main_lobe = 0.75 * self.msk_bitrate_bps
        if not self.sample_rate_hz > 2 * (max(abs(f) for f in self.cw_offsets_hz) + main_lobe):
            raise ConfigError("sample rate too low for the CW offsets and MSK main lobe")
        if self.transition_minutes <= 0 or self.epoch_spacing_s <= 0 or self.integration_seconds <= 0:
            raise ConfigError("transition, epoch spacing and integration time must be positive")
        if self.noise_sigma < 0 or self.height_wander_m < 0 or self.iono_height_m < 0:
            raise ConfigError("noise, height and wander must be non-negative")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown SimConfig field(s): {', '.join(sorted(unknown))}")
        return cls(**d)

    def to_dict(self) -> dict:
        out = asdict(self)
        for k, v in out.items():
            if isinstance(v, tuple):
                out[k] = list(v)
        return out

    @property
    def distance_m(self) -> float:
        return great_circle_distance(self.tx, self.rx)

    @property
    def tone_freqs_hz(self):
        return tuple(self.carrier_hz + f for f in self.cw_offsets_hz)


@dataclass
class CampaignTruth:
    epochs: np.ndarray
    alpha: np.ndarray
    delay_s: np.ndarray
    eta: dict = field(default_factory=dict)
    beta: dict = field(default_factory=dict)


@dataclass
class Campaign:
    phases: dict
    truth: CampaignTruth


def _wander(cfg: SimConfig, t: np.ndarray) -> np.ndarray:
    """Unit-RMS smooth random process for nighttime ionosphere height drift.

    Evaluated at absolute time so any segmentation of the campaign sees the
    same realisation.
    """
    rng = np.random.default_rng([int(cfg.seed), 0x1080])
    periods = rng.uniform(30 * 60, 180 * 60, size=4)
    offsets = rng.uniform(0, 2 * np.pi, size=4)
    w = np.zeros_like(t)
    for period, psi in zip(periods, offsets):
        w += np.sin(2 * np.pi * np.mod(t, period) / period + psi)
    return w / math.sqrt(len(periods) / 2)


def iono_height(cfg: SimConfig, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    return np.maximum(cfg.iono_height_m + cfg.height_wander_m * _wander(cfg, t), 0.0)


def excess_delay_array(distance_m: float, height_m) -> np.ndarray:
    h = np.asarray(height_m, dtype=float)
    return 4 * h * h / (np.hypot(2 * h, distance_m) + distance_m) / SPEED_OF_LIGHT


def _channel_state(cfg: SimConfig, t: np.ndarray, events_for):
    """Per-time alpha and delay; ``events_for`` maps a local date to SolarEvents."""
    alpha = np.empty_like(t)
    local_day = np.floor((t + cfg.utc_offset_hours * 3600.0) / 86400.0).astype(np.int64)
    for day in np.unique(local_day):
        m = local_day == day
        date = dt.date(1970, 1, 1) + dt.timedelta(days=int(day))
        alpha[m] = diurnal_alpha(t[m], events_for(date), cfg.alpha_night,
                                 cfg.transition_minutes * 60.0)
    delay = excess_delay_array(cfg.distance_m, iono_height(cfg, t))
    return alpha, delay


def _events_cache(cfg: SimConfig):
    cache = {}

    def get(date):
        if date not in cache:
            cache[date] = solar_events(cfg.rx, date, cfg.utc_offset_hours)
        return cache[date]
    return get


def _simulate_day(cfg: SimConfig, date: dt.date):
    start = local_midnight_utc(date, cfg.utc_offset_hours).timestamp()
    n = int(math.ceil(86400.0 / cfg.epoch_spacing_s - 1e-9))
    t = start + np.arange(n) * cfg.epoch_spacing_s
    alpha, delay = _channel_state(cfg, t, _events_cache(cfg))
    out = {}
    for i, (name, f, amp, phi0) in enumerate(zip(cfg.channel_names, cfg.tone_freqs_hz,
                                                 cfg.cw_amplitudes, cfg.cw_phases_rad)):
        phasor = composite_phasor(f, alpha, delay)
        clean = amp * phasor * np.exp(1j * (phi0 + cfg.phase_drift_rad_per_s * t))
        # one generator per (seed, date, channel): independent of how days are split
        rng = np.random.default_rng([int(cfg.seed), date.toordinal(), i])
        noise = rng.standard_normal((2, n))
        measured = clean + cfg.noise_sigma / math.sqrt(2) * (noise[0] + 1j * noise[1])
        out[name] = (wrap_phase(np.angle(measured)), np.abs(measured), np.abs(phasor), np.angle(phasor))
    return t, alpha, delay, out


def synthesize_campaign(cfg: SimConfig, start: dt.date, days: int = 3, workers: int = 1) -> Campaign:
    """Simulated per-minute CW phase measurements over ``days`` local days.

    Phase noise is the argument of the clean composite phasor plus complex
    Gaussian noise of total std ``noise_sigma``, so the daytime phase std is
    ``noise_sigma / (sqrt(2) * amplitude)``.  Output is identical for any
    ``workers``.
    """
    if days < 3:
        raise ConfigError("a campaign needs at least 3 days (the labeller uses flanking days)")
    dates = [start + dt.timedelta(days=k) for k in range(days)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(lambda d: _simulate_day(cfg, d), dates))
    else:
        parts = [_simulate_day(cfg, d) for d in dates]

    t = np.concatenate([p[0] for p in parts])
    truth = CampaignTruth(
        epochs=t,
        alpha=np.concatenate([p[1] for p in parts]),
        delay_s=np.concatenate([p[2] for p in parts]),
    )
    phases = {}
    for name in cfg.channel_names:
        ph = np.concatenate([p[3][name][0] for p in parts])
        amp = np.concatenate([p[3][name][1] for p in parts])
        phases[name] = PhaseSeries(name, t, ph, amp)
        truth.eta[name] = np.concatenate([p[3][name][2] for p in parts])
        truth.beta[name] = np.concatenate([p[3][name][3] for p in parts])
    return Campaign(phases, truth)


def synthesize_iq(cfg: SimConfig, start_epoch: float, duration_s: float) -> IqBuffer:
    """Contiguous received IQ (MSK + CW tones through the diurnal two-path channel).

    The skywave is evaluated analytically at ``t - t_d(t)``, so time-varying
    attenuation and delay need no resampling.  Tone phases are referenced to
    ``start_epoch``.  Per-sample AWGN is scaled so that after a
    ``integration_seconds`` correlation its std equals ``noise_sigma``.
    """
    fs = cfg.sample_rate_hz
    _samples_per_bit(cfg.msk_bitrate_bps, fs)
    n = int(round(duration_s * fs))
    if n <= 0:
        raise ConfigError("IQ duration must be positive")
    rel = np.arange(n) / fs
    t = start_epoch + rel
    alpha, delay = _channel_state(cfg, t, _events_cache(cfg))

    t_bits0 = -2.0 / cfg.msk_bitrate_bps  # lead-in so delayed samples stay inside the stream
    if delay.max() > -t_bits0:
        raise ConfigError("skywave delay longer than the MSK lead-in")
    nbits = int(math.ceil((duration_s - t_bits0) * cfg.msk_bitrate_bps)) + 1
    bits = np.random.default_rng([int(cfg.seed), 0xB175, int(start_epoch)]).integers(0, 2, nbits)

    def clean(tr):
        s = cfg.msk_amplitude * np.exp(1j * msk_phase(tr - t_bits0, bits, cfg.msk_bitrate_bps))
        for f, a, p in zip(cfg.cw_offsets_hz, cfg.cw_amplitudes, cfg.cw_phases_rad):
            s = s + a * np.exp(1j * (2 * np.pi * f * tr + p))
        return s

    r = clean(rel) + alpha * clean(rel - delay) * np.exp(-2j * np.pi * cfg.carrier_hz * delay)
    if cfg.phase_drift_rad_per_s:
        r = r * np.exp(1j * cfg.phase_drift_rad_per_s * t)
    if cfg.noise_sigma:
        rng = np.random.default_rng([int(cfg.seed), 0xA3, int(start_epoch)])
        per_sample = cfg.noise_sigma * math.sqrt(cfg.integration_seconds * fs)
        r = r + per_sample / math.sqrt(2) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    return IqBuffer(r, fs, float(start_epoch))
