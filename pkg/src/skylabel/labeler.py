"""Skywave ground truth from three days of daytime phase statistics.

For a target day, all daytime phase samples from the day before, the day
itself and the day after are pooled; their mean and standard deviation
define a Z-score for every sample of the target day.  A sample is labelled
skywave when ``|phi_t - mu_day| / sigma_day >= threshold`` (4.5 by default).

This is offline post-processing: the pool uses data after the epoch being
labelled.
"""
from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import InsufficientDataError, InvalidInputError
from .propagation import GeoPoint
from .series import PhaseSample, PhaseSeries, from_epoch  # noqa: F401  (re-exported)
from .solar import DaytimeWindow, WindowPolicy, local_midnight_utc, three_day_windows

DEFAULT_THRESHOLD = 4.5


@dataclass(frozen=True)
class PreprocessOptions:
    unwrap: bool = True
    detrend: str = "none"

    def __post_init__(self):
        if self.detrend not in ("none", "linear"):
            raise InvalidInputError(f"detrend must be 'none' or 'linear', got {self.detrend!r}")


@dataclass(frozen=True)
class DaytimeStats:
    mu_day: float
    sigma_day: float
    n: int


@dataclass(frozen=True)
class LabelRecord:
    epoch_utc: dt.datetime
    channel: str
    phase_rad: float
    z_score: float
    is_skywave: bool
    stats: DaytimeStats = field(repr=False)


def _in_windows(epochs: np.ndarray, windows) -> np.ndarray:
    mask = np.zeros(epochs.shape, dtype=bool)
    for w in windows:
        mask |= (epochs >= w.start_s) & (epochs < w.end_s)
    return mask


def preprocess_phase(series: PhaseSeries, opts: PreprocessOptions = PreprocessOptions(),
                     windows=None) -> PhaseSeries:
    """Unwrap and optionally detrend.

    The linear trend is fitted over samples inside ``windows`` (the daytime
    pool) when given, otherwise over the whole series, and subtracted from
    every sample.  Missing (NaN) samples pass through untouched.
    """
    if len(series) == 0:
        raise InsufficientDataError(f"{series.channel}: empty phase series")
    phases = series.phases.copy()
    ok = ~np.isnan(phases)
    if opts.unwrap and ok.any():
        phases[ok] = np.unwrap(phases[ok])
    if opts.detrend == "linear":
        fit = ok & _in_windows(series.epochs, windows) if windows is not None else ok
        if fit.sum() >= 2:
            t0 = series.epochs[fit][0]
            slope, intercept = np.polyfit(series.epochs[fit] - t0, phases[fit], 1)
            phases[ok] -= slope * (series.epochs[ok] - t0) + intercept
    return series.with_phases(phases)


def daytime_pool(series: PhaseSeries, windows) -> np.ndarray:
    """Phase values inside any window, ``[start, end)``, in original order."""
    mask = _in_windows(series.epochs, windows) & ~series.missing
    pool = series.phases[mask]
    if pool.size == 0:
        raise InsufficientDataError(
            f"{series.channel}: no samples inside daytime windows "
            + ", ".join(str(w) for w in windows)
        )
    return pool


def pool_stats(pool) -> DaytimeStats:
    """Mean and sample (n-1) standard deviation of the daytime pool.

    The mean is correctly rounded and the squared deviations are summed
    exactly, so the Z-score keeps its digits even when the spread is tiny
    compared with the mean phase.
    """
    pool = np.asarray(pool, dtype=float).reshape(-1)
    n = pool.size
    if n < 2:
        raise InsufficientDataError(f"need at least 2 daytime samples, got {n}")
    total = math.fsum(pool)
    residual = math.fsum(np.append(pool, -total))
    mu = float((Fraction(total) + Fraction(residual)) / n)
    dev = pool - mu
    var = math.fsum(dev * dev) / (n - 1)
    return DaytimeStats(mu_day=mu, sigma_day=math.sqrt(var), n=int(n))


def z_score(phi_t: float, stats: DaytimeStats) -> float:
    dev = abs(float(phi_t) - stats.mu_day)
    if stats.sigma_day == 0:
        return 0.0 if dev == 0 else math.inf
    return dev / stats.sigma_day


def label_epoch(phi_t: float, stats: DaytimeStats, threshold: float = DEFAULT_THRESHOLD) -> bool:
    if not threshold > 0:
        raise InvalidInputError(f"threshold must be positive, got {threshold}")
    return bool(z_score(phi_t, stats) >= threshold)


def label_series(series: PhaseSeries, p: GeoPoint, date: dt.date,
                 policy: WindowPolicy = WindowPolicy(), threshold: float = DEFAULT_THRESHOLD,
                 opts: PreprocessOptions = PreprocessOptions()) -> list[LabelRecord]:
    """Label every measured sample of ``series`` on the local civil ``date``.

    Missing samples produce no record.  Each of the three daytime windows must
    hold at least one measured sample.
    """
    if not threshold > 0:
        raise InvalidInputError(f"threshold must be positive, got {threshold}")
    windows = three_day_windows(p, date, policy)
    series = series.dropna()
    if len(series) == 0:
        raise InsufficientDataError(f"{series.channel}: no measured samples")

    uncovered = [w for w in windows if not _in_windows(series.epochs, [w]).any()]
    if uncovered:
        raise InsufficientDataError(
            f"{series.channel}: no samples in daytime window(s) " + ", ".join(str(w) for w in uncovered)
        )

    prepped = preprocess_phase(series, opts, windows)
    stats = pool_stats(daytime_pool(prepped, windows))

    day_start = local_midnight_utc(date, policy.utc_offset).timestamp()
    on_day = (prepped.epochs >= day_start) & (prepped.epochs < day_start + 86400.0)
    records = []
    for t, phi in zip(prepped.epochs[on_day], prepped.phases[on_day]):
        s = z_score(float(phi), stats)
        records.append(LabelRecord(from_epoch(t), prepped.channel, float(phi), s, s >= threshold, stats))
    return records


def label_channels(channels, p: GeoPoint, date: dt.date, policy: WindowPolicy = WindowPolicy(),
                   threshold: float = DEFAULT_THRESHOLD, opts: PreprocessOptions = PreprocessOptions()):
    """Label each channel independently; returns ``{channel: [LabelRecord, ...]}``."""
    if isinstance(channels, dict):
        channels = channels.values()
    return {s.channel: label_series(s, p, date, policy, threshold, opts) for s in channels}


def combined_verdict(records_by_channel) -> dict[dt.datetime, bool]:
    """Per-epoch logical OR of the per-channel verdicts."""
    out: dict[dt.datetime, bool] = {}
    for records in records_by_channel.values():
        for r in records:
            out[r.epoch_utc] = out.get(r.epoch_utc, False) or r.is_skywave
    return dict(sorted(out.items()))


def window_mask(series: PhaseSeries, windows: list[DaytimeWindow]) -> np.ndarray:
    return _in_windows(series.epochs, windows)
