"""Path geometry and the closed-form groundwave/skywave combination.

The received CW tone is the groundwave plus one ionospheric reflection,

    r(t) = s(t) + alpha * s(t - t_d) = eta * B * sin(2 pi f t + phi + beta)

with the skywave excess delay ``t_d = (sqrt(4 h^2 + d^2) - d) / c``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateCancellationError, InvalidInputError

SPEED_OF_LIGHT = 299_792_458.0
EARTH_RADIUS_M = 6_371_000.0
DEFAULT_IONO_HEIGHT_M = 90_000.0  # E layer; configuration value only


def wrap_phase(x):
    """Wrap radians to (-pi, pi]. Works on scalars and arrays."""
    w = math.pi - np.mod(math.pi - np.asarray(x, dtype=float), 2 * math.pi)
    if np.ndim(w) == 0:
        return float(w)
    return w


def _finite(*values):
    return all(math.isfinite(v) for v in values)


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float

    def __post_init__(self):
        if not _finite(self.lat, self.lon):
            raise InvalidInputError(f"non-finite coordinates {self.lat!r}, {self.lon!r}")
        if not -90.0 <= self.lat <= 90.0:
            raise InvalidInputError(f"latitude {self.lat} outside [-90, 90]")
        if not -180.0 <= self.lon < 180.0:
            raise InvalidInputError(f"longitude {self.lon} outside [-180, 180)")


@dataclass(frozen=True)
class PathGeometry:
    distance_m: float
    iono_height_m: float = DEFAULT_IONO_HEIGHT_M

    def __post_init__(self):
        if not _finite(self.distance_m, self.iono_height_m):
            raise InvalidInputError("path geometry must be finite")
        if self.distance_m < 0 or self.iono_height_m < 0:
            raise InvalidInputError("distance and ionosphere height must be non-negative")


@dataclass(frozen=True)
class Constants:
    c: float = SPEED_OF_LIGHT


@dataclass(frozen=True)
class CwTone:
    freq_hz: float
    amplitude: float = 1.0
    phase_rad: float = 0.0

    def __post_init__(self):
        if not _finite(self.freq_hz, self.amplitude, self.phase_rad):
            raise InvalidInputError("tone parameters must be finite")
        if self.freq_hz <= 0:
            raise InvalidInputError(f"tone frequency must be positive, got {self.freq_hz}")
        if self.amplitude < 0:
            raise InvalidInputError("tone amplitude must be non-negative")
        object.__setattr__(self, "phase_rad", wrap_phase(self.phase_rad))


@dataclass(frozen=True)
class TwoPathChannel:
    alpha: float
    delay_s: float

    def __post_init__(self):
        if not _finite(self.alpha, self.delay_s):
            raise InvalidInputError("channel parameters must be finite")
        if not 0.0 <= self.alpha <= 1.0:
            raise InvalidInputError(f"attenuation alpha={self.alpha} outside [0, 1]")
        if self.delay_s < 0:
            raise InvalidInputError("skywave delay must be non-negative")


@dataclass(frozen=True)
class CompositeTone:
    eta: float
    beta_rad: float


def great_circle_distance(a: GeoPoint, b: GeoPoint) -> float:
    """Haversine distance in meters on a sphere of radius 6 371 km."""
    lat1, lat2 = math.radians(a.lat), math.radians(b.lat)
    dlat = lat2 - lat1
    dlon = math.radians(b.lon - a.lon)
    h = math.sin(dlat / 2) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin(dlon / 2) ** 2
    h = min(1.0, max(0.0, h))
    return 2 * EARTH_RADIUS_M * math.asin(math.sqrt(h))


def skywave_excess_delay(geom: PathGeometry, k: Constants = Constants()) -> float:
    """Extra travel time (s) of the single-hop skywave over the groundwave."""
    d, h = geom.distance_m, geom.iono_height_m
    # d / (hyp + d) form avoids cancellation when d >> h
    hyp = math.hypot(2 * h, d)
    return (4 * h * h) / (hyp + d) / k.c if hyp + d > 0 else 0.0


def combine_two_path(tone: CwTone, ch: TwoPathChannel) -> CompositeTone:
    """Amplitude scaling and phase shift of groundwave + attenuated, delayed skywave.

    The tone's own amplitude and phase only scale and rotate the composite,
    so the result depends on the tone frequency alone.
    """
    theta = 2 * math.pi * tone.freq_hz * ch.delay_s
    re = 1.0 + ch.alpha * math.cos(theta)
    im = -ch.alpha * math.sin(theta)
    eta = math.hypot(re, im)
    if eta < 1e-12:
        raise DegenerateCancellationError(
            f"skywave cancels groundwave at f={tone.freq_hz} Hz, t_d={ch.delay_s} s"
        )
    return CompositeTone(eta=eta, beta_rad=wrap_phase(math.atan2(im, re)))


def composite_phasor(freq_hz, alpha, delay_s):
    """Vectorised ``1 + alpha * exp(-j 2 pi f t_d)``; no degeneracy check."""
    theta = 2 * np.pi * np.asarray(freq_hz, dtype=float) * np.asarray(delay_s, dtype=float)
    return 1.0 + np.asarray(alpha, dtype=float) * np.exp(-1j * theta)
