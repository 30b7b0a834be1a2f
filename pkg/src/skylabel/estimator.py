"""CW tone phase/amplitude extraction from complex baseband IQ.

Each estimate is a single-bin DFT projection: multiply by the conjugate
reference exponential at the tone offset, average over the integration
window, take argument and modulus.  Estimates are stateless, one per
(epoch, tone).  Phase is referenced to the window's first sample.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from .errors import ConfigError, InsufficientDataError
from .propagation import wrap_phase
from .series import PhaseSeries
from .sim import IqBuffer


@dataclass
class EstimatorConfig:
    tone_offsets_hz: tuple = (-450.0, 450.0)
    channel_names: tuple = ("CW1", "CW2")
    integration_seconds: float = 1.0
    epoch_spacing_seconds: float = 60.0

    def __post_init__(self):
        self.tone_offsets_hz = tuple(float(f) for f in self.tone_offsets_hz)
        self.channel_names = tuple(self.channel_names)
        if len(self.tone_offsets_hz) != len(self.channel_names):
            raise ConfigError("one channel name per tone offset required")
        if self.integration_seconds <= 0 or self.epoch_spacing_seconds <= 0:
            raise ConfigError("integration time and epoch spacing must be positive")
        if self.epoch_spacing_seconds < self.integration_seconds:
            raise ConfigError("epoch spacing shorter than the integration window")
        offs = sorted(self.tone_offsets_hz)
        if len(offs) > 1:
            sep = min(b - a for a, b in zip(offs, offs[1:]))
            if self.integration_seconds * sep < 2:
                raise ConfigError(
                    f"integration {self.integration_seconds} s too short to separate tones {sep} Hz apart"
                )

    @classmethod
    def from_dict(cls, d: dict) -> "EstimatorConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown EstimatorConfig field(s): {', '.join(sorted(unknown))}")
        return cls(**d)

    def to_dict(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}


@dataclass(frozen=True)
class ToneEstimate:
    phase_rad: float
    amplitude: float


def estimate_tone(buf: IqBuffer, offset_hz: float, cfg: EstimatorConfig = EstimatorConfig(),
                  start_s: float = 0.0) -> ToneEstimate:
    fs = buf.sample_rate_hz
    i0 = int(round(start_s * fs))
    n = int(round(cfg.integration_seconds * fs))
    if i0 < 0 or i0 + n > len(buf):
        raise InsufficientDataError(
            f"integration window [{start_s}, {start_s + cfg.integration_seconds}) s "
            f"exceeds buffer of {buf.duration_s} s"
        )
    ref = np.exp(-2j * np.pi * offset_hz * np.arange(n) / fs)
    c = np.dot(buf.samples[i0:i0 + n], ref) / n
    return ToneEstimate(wrap_phase(math.atan2(c.imag, c.real)), float(abs(c)))


def phase_series_from_iq(stream, cfg: EstimatorConfig = EstimatorConfig()) -> dict[str, PhaseSeries]:
    """One sample per tone every ``epoch_spacing_seconds`` from the first buffer's start.

    Epochs whose integration window is not fully inside a single buffer get a
    NaN phase (missing-data marker) instead of failing the whole stream.
    """
    if isinstance(stream, IqBuffer):
        stream = [stream]
    stream = sorted(stream, key=lambda b: b.start_epoch_utc)
    if not stream:
        raise InsufficientDataError("empty IQ stream")
    t0 = stream[0].start_epoch_utc
    t_end = max(b.end_epoch_utc for b in stream)
    tol = 0.5 / stream[0].sample_rate_hz
    n_epochs = int(math.floor((t_end - t0 - cfg.integration_seconds + tol) / cfg.epoch_spacing_seconds)) + 1
    n_epochs = max(n_epochs, 0)
    epochs = t0 + np.arange(n_epochs) * cfg.epoch_spacing_seconds

    ntone = len(cfg.tone_offsets_hz)
    phases = np.full((ntone, n_epochs), np.nan)
    amps = np.full((ntone, n_epochs), np.nan)
    for j, te in enumerate(epochs):
        for b in stream:
            if b.start_epoch_utc - tol <= te and te + cfg.integration_seconds <= b.end_epoch_utc + tol:
                for i, f in enumerate(cfg.tone_offsets_hz):
                    est = estimate_tone(b, f, cfg, start_s=te - b.start_epoch_utc)
                    phases[i, j], amps[i, j] = est.phase_rad, est.amplitude
                break
    return {
        name: PhaseSeries(name, epochs, phases[i], amps[i])
        for i, name in enumerate(cfg.channel_names)
    }
