"""Phase-log, label, truth, IQ and config file formats.

Phase log (CSV)::

    # station_id=DAESAN
    # channels=CW1,CW2
    # phase_unit=rad
    # utc_offset_hours=9
    # source=skylabel simulate
    epoch_utc,channel,phase,amplitude
    2023-02-11T00:00:00Z,CW1,0.30112,1.0004

The phase unit must be declared (``rad``, ``deg`` or ``cycles``); a log
without it is rejected rather than guessed.  Timestamps are ISO 8601 UTC with
a ``Z`` suffix.  Numbers are written with shortest round-trip precision.  An
empty phase or amplitude field means "not measured".
"""
from __future__ import annotations

import csv
import datetime as dt
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataFormatError, UnitAmbiguityError
from .estimator import EstimatorConfig
from .labeler import LabelRecord
from .series import UTC, PhaseSeries, from_epoch
from .sim import CampaignTruth, IqBuffer, SimConfig

UNITS = {"rad": 1.0, "deg": math.pi / 180.0, "cycles": 2 * math.pi}
PHASE_COLUMNS = ["epoch_utc", "channel", "phase", "amplitude"]
LABEL_COLUMNS = ["epoch_utc", "channel", "phase_rad", "z_score", "is_skywave", "mu_day", "sigma_day"]
IQ_FORMAT = "f32le-iq"


@dataclass
class PhaseLogHeader:
    station_id: str = ""
    channels: list = field(default_factory=list)
    phase_unit: str | None = "rad"
    utc_offset_hours: int = 0
    source: str = ""

    def lines(self):
        return [
            f"# station_id={self.station_id}",
            f"# channels={','.join(self.channels)}",
            f"# phase_unit={self.phase_unit}",
            f"# utc_offset_hours={self.utc_offset_hours}",
            f"# source={self.source}",
        ]


# -- timestamps & numbers ------------------------------------------------------

def format_epoch(t: float) -> str:
    d = from_epoch(t)
    fmt = "%Y-%m-%dT%H:%M:%S.%fZ" if d.microsecond else "%Y-%m-%dT%H:%M:%SZ"
    return d.strftime(fmt)


def parse_epoch(text: str) -> float:
    text = text.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    d = dt.datetime.fromisoformat(text)
    if d.tzinfo is None:
        raise ValueError(f"timestamp {text!r} has no UTC designator")
    d = d.astimezone(UTC)
    return (d - dt.datetime(1970, 1, 1, tzinfo=UTC)) / dt.timedelta(microseconds=1) / 1e6


def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return repr(float(x))


def _parse_optional(text: str) -> float:
    text = text.strip()
    return math.nan if text == "" else float(text)


# -- phase logs ---------------------------------------------------------------

def _as_series_list(series):
    if isinstance(series, PhaseSeries):
        return [series]
    if isinstance(series, dict):
        return list(series.values())
    return list(series)


def write_phase_csv(path, series, header: PhaseLogHeader | None = None) -> None:
    """Write one or more channels, rows ordered by epoch then channel order."""
    series = _as_series_list(series)
    if header is None:
        header = PhaseLogHeader(channels=[s.channel for s in series])
    elif not header.channels:
        header.channels = [s.channel for s in series]
    if header.phase_unit not in UNITS:
        raise UnitAmbiguityError(f"cannot write phases in unit {header.phase_unit!r}")
    scale = UNITS[header.phase_unit]
    rows = []
    for ci, s in enumerate(series):
        for t, p, a in zip(s.epochs, s.phases, s.amplitudes):
            rows.append((t, ci, s.channel, p, a))
    rows.sort(key=lambda r: (r[0], r[1]))
    with open(path, "w", newline="") as fh:
        for line in header.lines():
            fh.write(line + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PHASE_COLUMNS)
        for t, _, ch, p, a in rows:
            w.writerow([format_epoch(t), ch, _fmt(p / scale), _fmt(a)])


def read_phase_log(path, declared_unit_override: str | None = None):
    """Parse a phase log; returns ``(header, {channel: PhaseSeries})`` with phases in radians."""
    header = PhaseLogHeader(phase_unit=None)
    rows: dict[tuple[str, float], tuple[float, float]] = {}
    order: list[str] = []
    seen_columns = False
    with open(path, newline="") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, sep, value = line[1:].strip().partition("=")
                if not sep:
                    continue
                key, value = key.strip(), value.strip()
                if key == "station_id":
                    header.station_id = value
                elif key == "channels":
                    header.channels = [c for c in value.split(",") if c]
                elif key == "phase_unit":
                    header.phase_unit = value or None
                elif key == "utc_offset_hours":
                    try:
                        header.utc_offset_hours = int(value)
                    except ValueError:
                        raise DataFormatError(f"bad utc_offset_hours {value!r}", path, lineno) from None
                elif key == "source":
                    header.source = value
                continue
            fields_ = next(csv.reader([line]))
            if not seen_columns:
                if [f.strip() for f in fields_] != PHASE_COLUMNS:
                    raise DataFormatError(f"expected column header {','.join(PHASE_COLUMNS)}", path, lineno)
                seen_columns = True
                continue
            if len(fields_) != 4:
                raise DataFormatError(f"expected 4 fields, got {len(fields_)}", path, lineno)
            try:
                t = parse_epoch(fields_[0])
                ch = fields_[1].strip()
                if not ch:
                    raise ValueError("empty channel")
                phase = _parse_optional(fields_[2])
                amp = _parse_optional(fields_[3])
                if math.isinf(phase) or math.isinf(amp):
                    raise ValueError("infinite value")
            except ValueError as exc:
                raise DataFormatError(f"malformed row: {exc}", path, lineno) from None
            if ch not in order:
                order.append(ch)
            rows[(ch, t)] = (phase, amp)  # last wins

    unit = declared_unit_override or header.phase_unit
    if unit is None:
        raise UnitAmbiguityError(f"{path}: no phase_unit declared and no override given")
    if unit not in UNITS:
        raise UnitAmbiguityError(f"{path}: unknown phase unit {unit!r}")
    header.phase_unit = unit
    scale = UNITS[unit]

    channels = list(header.channels) + [c for c in order if c not in header.channels]
    out = {}
    for ch in channels:
        keys = sorted(t for (c, t) in rows if c == ch)
        vals = [rows[(ch, t)] for t in keys]
        out[ch] = PhaseSeries(
            ch, keys,
            [v[0] * scale for v in vals],
            [v[1] for v in vals],
        )
    if not header.channels:
        header.channels = channels
    return header, out


def read_phase_csv(path, declared_unit_override: str | None = None) -> dict[str, PhaseSeries]:
    return read_phase_log(path, declared_unit_override)[1]


# -- labels -------------------------------------------------------------------

@dataclass(frozen=True)
class LabelFileRow:
    epoch_utc: str
    channel: str
    phase_rad: float
    z_score: float
    is_skywave: bool
    mu_day: float
    sigma_day: float

    @classmethod
    def from_record(cls, r: LabelRecord) -> "LabelFileRow":
        return cls(format_epoch(r.epoch_utc.timestamp()), r.channel, r.phase_rad, r.z_score,
                   bool(r.is_skywave), r.stats.mu_day, r.stats.sigma_day)

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in LABEL_COLUMNS}


def _rows(records):
    return [r if isinstance(r, LabelFileRow) else LabelFileRow.from_record(r) for r in records]


def label_format_for(path) -> str:
    return "jsonl" if Path(path).suffix.lower() in (".jsonl", ".json", ".ndjson") else "csv"


def write_labels(path, records, format: str | None = None) -> None:
    fmt = format or label_format_for(path)
    rows = _rows(records)
    with open(path, "w", newline="") as fh:
        if fmt == "jsonl":
            for r in rows:
                fh.write(json.dumps(r.as_dict()) + "\n")
        elif fmt == "csv":
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(LABEL_COLUMNS)
            for r in rows:
                w.writerow([r.epoch_utc, r.channel, repr(float(r.phase_rad)), repr(float(r.z_score)),
                            "true" if r.is_skywave else "false",
                            repr(float(r.mu_day)), repr(float(r.sigma_day))])
        else:
            raise ConfigError(f"unknown label format {fmt!r}")


def _parse_bool(v) -> bool:
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s == "true":
        return True
    if s == "false":
        return False
    raise ValueError(f"not a boolean: {v!r}")


def read_labels(path, format: str | None = None) -> list[LabelFileRow]:
    fmt = format or label_format_for(path)
    out = []
    with open(path, newline="") as fh:
        if fmt == "jsonl":
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    d = json.loads(line)
                    out.append(_row_from_mapping(d))
                except (ValueError, KeyError, TypeError) as exc:
                    raise DataFormatError(f"malformed label record: {exc}", path, lineno) from None
        else:
            reader = csv.reader(fh)
            head = next(reader, None)
            if head is None:
                return out
            if [h.strip() for h in head] != LABEL_COLUMNS:
                raise DataFormatError(f"expected column header {','.join(LABEL_COLUMNS)}", path, 1)
            for lineno, fields_ in enumerate(reader, start=2):
                if not fields_:
                    continue
                try:
                    out.append(_row_from_mapping(dict(zip(LABEL_COLUMNS, fields_, strict=True))))
                except (ValueError, KeyError) as exc:
                    raise DataFormatError(f"malformed label row: {exc}", path, lineno) from None
    return out


def _row_from_mapping(d) -> LabelFileRow:
    parse_epoch(d["epoch_utc"])
    return LabelFileRow(
        epoch_utc=str(d["epoch_utc"]),
        channel=str(d["channel"]),
        phase_rad=float(d["phase_rad"]),
        z_score=float(d["z_score"]),
        is_skywave=_parse_bool(d["is_skywave"]),
        mu_day=float(d["mu_day"]),
        sigma_day=float(d["sigma_day"]),
    )


# -- simulation truth -----------------------------------------------------------

def write_truth(path, truth: CampaignTruth) -> None:
    names = list(truth.eta)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch_utc", "alpha", "delay_s"]
                   + [c for n in names for c in (f"eta_{n}", f"beta_{n}")])
        for i, t in enumerate(truth.epochs):
            w.writerow([format_epoch(t), repr(float(truth.alpha[i])), repr(float(truth.delay_s[i]))]
                       + [repr(float(v)) for n in names for v in (truth.eta[n][i], truth.beta[n][i])])


# -- IQ -------------------------------------------------------------------------

def write_iq(path, buf: IqBuffer, meta_path=None, center_freq_hz: float = 0.0) -> Path:
    """Interleaved little-endian float32 I/Q plus a JSON sidecar; returns the sidecar path."""
    meta_path = Path(meta_path) if meta_path is not None else Path(str(path) + ".json")
    raw = np.empty(2 * len(buf), dtype="<f4")
    raw[0::2] = buf.samples.real
    raw[1::2] = buf.samples.imag
    raw.tofile(path)
    meta = {
        "sample_rate_hz": float(buf.sample_rate_hz),
        "center_freq_hz": float(center_freq_hz),
        "start_epoch_utc": format_epoch(buf.start_epoch_utc),
        "format": IQ_FORMAT,
    }
    meta_path.write_text(json.dumps(meta, indent=2) + "\n")
    return meta_path


def read_iq_meta(meta_path) -> dict:
    try:
        meta = json.loads(Path(meta_path).read_text())
    except ValueError as exc:
        raise DataFormatError(f"invalid JSON: {exc}", meta_path) from None
    for key in ("sample_rate_hz", "center_freq_hz", "start_epoch_utc", "format"):
        if key not in meta:
            raise DataFormatError(f"missing key {key!r}", meta_path)
    if meta["format"] != IQ_FORMAT:
        raise DataFormatError(f"unsupported IQ format {meta['format']!r}", meta_path)
    return meta


def read_iq(path, meta_path) -> IqBuffer:
    meta = read_iq_meta(meta_path)
    raw = np.fromfile(path, dtype="<f4")
    if raw.size == 0 or raw.size % 2:
        raise DataFormatError(f"IQ payload has {raw.size} floats; expected a positive even count", path)
    try:
        start = parse_epoch(meta["start_epoch_utc"])
    except ValueError as exc:
        raise DataFormatError(str(exc), meta_path) from None
    samples = raw[0::2].astype(float) + 1j * raw[1::2].astype(float)
    return IqBuffer(samples, float(meta["sample_rate_hz"]), start)


# -- configs --------------------------------------------------------------------

def _load_json(path) -> dict:
    try:
        d = json.loads(Path(path).read_text())
    except ValueError as exc:
        raise DataFormatError(f"invalid JSON: {exc}", path) from None
    if not isinstance(d, dict):
        raise DataFormatError("config must be a JSON object", path)
    return d


def load_sim_config(path) -> SimConfig:
    return SimConfig.from_dict(_load_json(path))


def load_estimator_config(path) -> EstimatorConfig:
    return EstimatorConfig.from_dict(_load_json(path))
