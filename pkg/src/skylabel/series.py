"""Timestamped per-channel phase measurements.

Epochs are held as float POSIX seconds (UTC).  A NaN phase marks an epoch
the estimator could not measure (gap in the IQ stream).
"""
from __future__ import annotations

import datetime as dt
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

UTC = dt.timezone.utc


def to_epoch(t: dt.datetime) -> float:
    if t.tzinfo is None:
        raise InvalidInputError(f"naive datetime {t!r}; timestamps must be UTC-aware")
    return t.timestamp()


def from_epoch(s: float) -> dt.datetime:
    # integer microseconds avoid float drift when formatting
    us = round(float(s) * 1_000_000)
    return dt.datetime(1970, 1, 1, tzinfo=UTC) + dt.timedelta(microseconds=us)


@dataclass(frozen=True)
class PhaseSample:
    epoch_utc: dt.datetime
    channel: str
    phase_rad: float
    amplitude: float | None = None


class PhaseSeries:
    """One channel's phase (and optional amplitude) samples, strictly increasing in time."""

    def __init__(self, channel, epochs, phases, amplitudes=None):
        self.channel = str(channel)
        self.epochs = np.asarray(epochs, dtype=float).reshape(-1)
        self.phases = np.asarray(phases, dtype=float).reshape(-1)
        if amplitudes is None:
            amplitudes = np.full(self.epochs.shape, np.nan)
        self.amplitudes = np.asarray(amplitudes, dtype=float).reshape(-1)
        if not (len(self.epochs) == len(self.phases) == len(self.amplitudes)):
            raise InvalidInputError("epochs, phases and amplitudes differ in length")
        if not np.all(np.isfinite(self.epochs)):
            raise InvalidInputError(f"{self.channel}: non-finite epoch")
        if np.any(np.diff(self.epochs) <= 0):
            raise InvalidInputError(f"{self.channel}: epochs are not strictly increasing")
        if np.any(np.isinf(self.phases)):
            raise InvalidInputError(f"{self.channel}: infinite phase")

    def __len__(self):
        return len(self.epochs)

    def __repr__(self):
        return f"PhaseSeries({self.channel!r}, n={len(self)})"

    def __eq__(self, other):
        if not isinstance(other, PhaseSeries):
            return NotImplemented
        return (
            self.channel == other.channel
            and np.array_equal(self.epochs, other.epochs)
            and np.array_equal(self.phases, other.phases, equal_nan=True)
            and np.array_equal(self.amplitudes, other.amplitudes, equal_nan=True)
        )

    @classmethod
    def from_samples(cls, samples):
        samples = list(samples)
        channels = {s.channel for s in samples}
        if len(channels) > 1:
            raise InvalidInputError(f"samples span several channels: {sorted(channels)}")
        channel = channels.pop() if channels else ""
        return cls(
            channel,
            [to_epoch(s.epoch_utc) for s in samples],
            [s.phase_rad for s in samples],
            [np.nan if s.amplitude is None else s.amplitude for s in samples],
        )

    @property
    def samples(self) -> list[PhaseSample]:
        return [
            PhaseSample(from_epoch(t), self.channel, float(p), None if np.isnan(a) else float(a))
            for t, p, a in zip(self.epochs, self.phases, self.amplitudes)
        ]

    @property
    def missing(self) -> np.ndarray:
        return np.isnan(self.phases)

    def with_phases(self, phases) -> "PhaseSeries":
        return PhaseSeries(self.channel, self.epochs, phases, self.amplitudes)

    def select(self, mask) -> "PhaseSeries":
        mask = np.asarray(mask, dtype=bool)
        return PhaseSeries(self.channel, self.epochs[mask], self.phases[mask], self.amplitudes[mask])

    def dropna(self) -> "PhaseSeries":
        return self.select(~self.missing)
