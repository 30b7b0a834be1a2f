"""Sunrise/sunset and the daytime windows that feed the statistics pool.

Solar times use the NOAA low-accuracy model (fractional year, equation of
time, declination) with the 90.833 deg zenith that folds in refraction and
the solar radius.  Civil dates are local to the station, given by a fixed
UTC offset; there is no daylight-saving handling.
"""
from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass, field

from .errors import DegenerateWindowError, InvalidInputError, UnsupportedLatitudeError
from .propagation import GeoPoint

UTC = dt.timezone.utc
SUNRISE_ZENITH_DEG = 90.833
MAX_ABS_LATITUDE = 66.0

SOLAR_OFFSET = "solar-offset"
FIXED_LOCAL = "fixed-local"


@dataclass(frozen=True)
class SolarEvents:
    date: dt.date
    sunrise_utc: dt.datetime
    sunset_utc: dt.datetime
    solar_noon_utc: dt.datetime

    @property
    def day_length(self) -> dt.timedelta:
        return self.sunset_utc - self.sunrise_utc


@dataclass(frozen=True)
class WindowPolicy:
    mode: str = SOLAR_OFFSET
    offset_after_sunrise: dt.timedelta = dt.timedelta(hours=1)
    offset_before_sunset: dt.timedelta = dt.timedelta(hours=1)
    fixed_start: dt.time = dt.time(8, 30)
    fixed_end: dt.time = dt.time(20, 0)
    utc_offset: float = 0.0

    def __post_init__(self):
        if self.mode not in (SOLAR_OFFSET, FIXED_LOCAL):
            raise InvalidInputError(f"unknown window mode {self.mode!r}")

    @property
    def tz(self) -> dt.timezone:
        return dt.timezone(dt.timedelta(hours=self.utc_offset))


@dataclass(frozen=True)
class DaytimeWindow:
    start_utc: dt.datetime
    end_utc: dt.datetime
    date: dt.date | None = field(default=None, compare=False)

    def __post_init__(self):
        if not self.start_utc < self.end_utc:
            raise DegenerateWindowError(
                f"empty or inverted daytime window {self.start_utc.isoformat()} .. "
                f"{self.end_utc.isoformat()}" + (f" for {self.date}" if self.date else "")
            )

    @property
    def start_s(self) -> float:
        return self.start_utc.timestamp()

    @property
    def end_s(self) -> float:
        return self.end_utc.timestamp()

    def __str__(self):
        label = f"{self.date} " if self.date else ""
        return f"{label}[{self.start_utc:%Y-%m-%dT%H:%M:%SZ}, {self.end_utc:%Y-%m-%dT%H:%M:%SZ})"


def local_midnight_utc(date: dt.date, utc_offset: float) -> dt.datetime:
    return dt.datetime.combine(date, dt.time(0), tzinfo=UTC) - dt.timedelta(hours=utc_offset)


def _solar_terms(date: dt.date, minutes_utc: float):
    """Equation of time (min) and declination (rad) at the given UTC minute of ``date``."""
    doy = date.timetuple().tm_yday
    days_in_year = 366 if (date.year % 4 == 0 and (date.year % 100 != 0 or date.year % 400 == 0)) else 365
    g = 2 * math.pi / days_in_year * (doy - 1 + (minutes_utc / 60 - 12) / 24)
    eqtime = 229.18 * (
        0.000075 + 0.001868 * math.cos(g) - 0.032077 * math.sin(g)
        - 0.014615 * math.cos(2 * g) - 0.040849 * math.sin(2 * g)
    )
    decl = (
        0.006918 - 0.399912 * math.cos(g) + 0.070257 * math.sin(g)
        - 0.006758 * math.cos(2 * g) + 0.000907 * math.sin(2 * g)
        - 0.002697 * math.cos(3 * g) + 0.00148 * math.sin(3 * g)
    )
    return eqtime, decl


def _event_minutes(date: dt.date, p: GeoPoint, sign: int, guess: float) -> float:
    # sign: -1 sunrise, +1 sunset, 0 solar noon; two fixed-point passes refine the
    # fractional-year argument to the event time itself
    t = guess
    for _ in range(3):
        eqtime, decl = _solar_terms(date, t)
        if sign == 0:
            t = 720 - 4 * p.lon - eqtime
            continue
        lat = math.radians(p.lat)
        cos_ha = (math.cos(math.radians(SUNRISE_ZENITH_DEG)) / (math.cos(lat) * math.cos(decl))
                  - math.tan(lat) * math.tan(decl))
        if not -1.0 <= cos_ha <= 1.0:
            raise UnsupportedLatitudeError(f"no sunrise/sunset at latitude {p.lat} on {date}")
        ha = math.degrees(math.acos(cos_ha))
        t = 720 - 4 * (p.lon - sign * ha) - eqtime
    return t


def solar_events(p: GeoPoint, date: dt.date, utc_offset: float = 0.0) -> SolarEvents:
    """Sunrise, solar noon and sunset for the local civil ``date`` at ``p``.

    ``utc_offset`` (hours) only decides which UTC day the local date maps to;
    it matters for stations far from their zone meridian.
    """
    if abs(p.lat) >= MAX_ABS_LATITUDE:
        raise UnsupportedLatitudeError(f"latitude {p.lat} is beyond +/-{MAX_ABS_LATITUDE} deg")
    local_noon = dt.datetime.combine(date, dt.time(12), tzinfo=UTC) - dt.timedelta(hours=utc_offset)
    # pick the UTC day whose solar noon sits closest to local noon
    ref_day = date
    noon = _event_minutes(ref_day, p, 0, 720.0)
    base = dt.datetime.combine(ref_day, dt.time(0), tzinfo=UTC)
    shift = round((local_noon - (base + dt.timedelta(minutes=noon))) / dt.timedelta(days=1))
    if shift:
        ref_day = ref_day + dt.timedelta(days=shift)
        base = dt.datetime.combine(ref_day, dt.time(0), tzinfo=UTC)
        noon = _event_minutes(ref_day, p, 0, 720.0)
    rise = _event_minutes(ref_day, p, -1, noon - 360)
    sset = _event_minutes(ref_day, p, +1, noon + 360)
    return SolarEvents(
        date=date,
        sunrise_utc=base + dt.timedelta(minutes=rise),
        sunset_utc=base + dt.timedelta(minutes=sset),
        solar_noon_utc=base + dt.timedelta(minutes=noon),
    )


def daytime_window(ev: SolarEvents, policy: WindowPolicy) -> DaytimeWindow:
    if policy.mode == SOLAR_OFFSET:
        start = ev.sunrise_utc + policy.offset_after_sunrise
        end = ev.sunset_utc - policy.offset_before_sunset
    else:
        midnight = local_midnight_utc(ev.date, policy.utc_offset)
        start = midnight + _since_midnight(policy.fixed_start)
        end = midnight + _since_midnight(policy.fixed_end)
    return DaytimeWindow(start, end, date=ev.date)


def _since_midnight(t: dt.time) -> dt.timedelta:
    return dt.timedelta(hours=t.hour, minutes=t.minute, seconds=t.second, microseconds=t.microsecond)


def three_day_windows(p: GeoPoint, date: dt.date, policy: WindowPolicy) -> list[DaytimeWindow]:
    """Daytime windows for the day before, the day itself and the day after."""
    windows = []
    for k in (-1, 0, 1):
        day = date + dt.timedelta(days=k)
        ev = solar_events(p, day, policy.utc_offset)
        try:
            windows.append(daytime_window(ev, policy))
        except DegenerateWindowError as exc:
            raise DegenerateWindowError(f"{day}: {exc}") from exc
    for a, b in zip(windows, windows[1:]):
        if not a.end_utc <= b.start_utc:
            raise DegenerateWindowError(f"daytime windows for {a.date} and {b.date} overlap")
    return windows
