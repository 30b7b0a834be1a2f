"""``skylabel`` command line.

Exit codes: 0 success, 1 usage error, 2 data error.
"""
from __future__ import annotations

import argparse
import csv
import datetime as dt
import logging
import sys

import numpy as np

from . import dataio
from .errors import SkylabelError
from .estimator import phase_series_from_iq
from .labeler import DEFAULT_THRESHOLD, PreprocessOptions, combined_verdict, label_channels
from .propagation import GeoPoint
from .sim import synthesize_campaign, synthesize_iq
from .solar import FIXED_LOCAL, SOLAR_OFFSET, WindowPolicy, local_midnight_utc, solar_events

log = logging.getLogger("skylabel")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _date(text):
    try:
        return dt.date.fromisoformat(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected YYYY-MM-DD, got {text!r}") from None


def _hhmm(text):
    try:
        return dt.datetime.strptime(text, "%H:%M").time()
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected HH:MM, got {text!r}") from None


def _onoff(text):
    if text not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected on or off")
    return text == "on"


def _tz(hours):
    return dt.timezone(dt.timedelta(hours=hours))


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="skylabel", description="MF R-Mode skywave simulation and ground-truth labelling")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("sun", help="sunrise/sunset for a station and date")
    s.add_argument("--lat", type=float, required=True)
    s.add_argument("--lon", type=float, required=True)
    s.add_argument("--date", type=_date, required=True)
    s.add_argument("--utc-offset", type=float, default=0.0)

    s = sub.add_parser("simulate", help="synthesise a phase-measurement campaign")
    s.add_argument("--config", required=True)
    s.add_argument("--start", type=_date, required=True)
    s.add_argument("--days", type=int, default=3)
    s.add_argument("--out-phases", required=True)
    s.add_argument("--out-iq")
    s.add_argument("--out-meta", help="IQ sidecar path (default: <out-iq>.json)")
    s.add_argument("--iq-start", help="ISO 8601 UTC start of the IQ excerpt (default: campaign start)")
    s.add_argument("--iq-seconds", type=float, default=180.0)
    s.add_argument("--out-truth")
    s.add_argument("--seed", type=int)
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--station-id", default="SIM")

    s = sub.add_parser("phases", help="extract CW tone phases from an IQ recording")
    s.add_argument("--iq", required=True)
    s.add_argument("--meta", required=True)
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--station-id", default="")
    s.add_argument("--utc-offset", type=int, default=0)

    s = sub.add_parser("label", help="skywave ground truth for one day")
    s.add_argument("--phases", required=True)
    s.add_argument("--date", type=_date, required=True)
    s.add_argument("--lat", type=float, required=True)
    s.add_argument("--lon", type=float, required=True)
    s.add_argument("--utc-offset", type=float, required=True)
    s.add_argument("--window", choices=("solar", "fixed"), default="solar")
    s.add_argument("--fixed-start", type=_hhmm, default=dt.time(8, 30))
    s.add_argument("--fixed-end", type=_hhmm, default=dt.time(20, 0))
    s.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    s.add_argument("--unwrap", type=_onoff, default=True)
    s.add_argument("--detrend", choices=("none", "linear"), default="none")
    s.add_argument("--unit", choices=sorted(dataio.UNITS), help="override the log's declared phase unit")
    s.add_argument("--channel", action="append", help="restrict to channel(s)")
    s.add_argument("--out", required=True)

    s = sub.add_parser("plotdata", help="merge phases and labels into a plot table")
    s.add_argument("--phases", required=True)
    s.add_argument("--labels", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--figure", help="also render the table to an image (png, pdf, svg)")
    s.add_argument("--utc-offset", type=float, default=0.0, help="local time axis for --figure")
    s.add_argument("--unit", choices=sorted(dataio.UNITS))
    return p


def cmd_sun(a):
    ev = solar_events(GeoPoint(a.lat, a.lon), a.date, a.utc_offset)
    tz = _tz(a.utc_offset)
    print(f"date      {a.date.isoformat()}")
    for name, t in (("sunrise", ev.sunrise_utc), ("noon", ev.solar_noon_utc), ("sunset", ev.sunset_utc)):
        print(f"{name:<9} {t.astimezone(tz):%H:%M:%S} local (UTC{a.utc_offset:+g})  "
              f"{dataio.format_epoch(t.timestamp())}")
    return EXIT_OK


def cmd_simulate(a):
    cfg = dataio.load_sim_config(a.config)
    if a.seed is not None:
        cfg.seed = a.seed
        cfg.__post_init__()
    camp = synthesize_campaign(cfg, a.start, a.days, workers=max(1, a.threads))
    header = dataio.PhaseLogHeader(
        station_id=a.station_id, channels=list(cfg.channel_names), phase_unit="rad",
        utc_offset_hours=int(round(cfg.utc_offset_hours)), source=f"skylabel simulate seed={cfg.seed}",
    )
    dataio.write_phase_csv(a.out_phases, camp.phases, header)
    if a.out_truth:
        dataio.write_truth(a.out_truth, camp.truth)
    if a.out_iq:
        if a.iq_start:
            try:
                start = dataio.parse_epoch(a.iq_start)
            except ValueError as exc:
                raise UsageError(f"--iq-start: {exc}") from None
        else:
            start = local_midnight_utc(a.start, cfg.utc_offset_hours).timestamp()
        buf = synthesize_iq(cfg, start, a.iq_seconds)
        meta = dataio.write_iq(a.out_iq, buf, a.out_meta, center_freq_hz=cfg.carrier_hz)
        log.info("wrote %d IQ samples to %s (%s)", len(buf), a.out_iq, meta)
    n = len(camp.truth.epochs)
    print(f"simulated {n} epochs x {len(cfg.channel_names)} channels -> {a.out_phases}")
    return EXIT_OK


def cmd_phases(a):
    cfg = dataio.load_estimator_config(a.config)
    buf = dataio.read_iq(a.iq, a.meta)
    series = phase_series_from_iq([buf], cfg)
    header = dataio.PhaseLogHeader(
        station_id=a.station_id, channels=list(cfg.channel_names), phase_unit="rad",
        utc_offset_hours=a.utc_offset,
        source=f"skylabel phases integration_seconds={cfg.integration_seconds} "
               f"epoch_spacing_seconds={cfg.epoch_spacing_seconds}",
    )
    dataio.write_phase_csv(a.out, series, header)
    n = len(next(iter(series.values())))
    print(f"estimated {n} epochs x {len(series)} tones -> {a.out}")
    return EXIT_OK


def cmd_label(a):
    if not a.threshold > 0:
        raise UsageError("--threshold must be positive")
    series = dataio.read_phase_csv(a.phases, a.unit)
    if a.channel:
        missing = [c for c in a.channel if c not in series]
        if missing:
            raise SkylabelError(f"{a.phases}: channel(s) not in log: {', '.join(missing)}")
        series = {c: series[c] for c in a.channel}
    policy = WindowPolicy(
        mode=SOLAR_OFFSET if a.window == "solar" else FIXED_LOCAL,
        fixed_start=a.fixed_start, fixed_end=a.fixed_end, utc_offset=a.utc_offset,
    )
    opts = PreprocessOptions(unwrap=a.unwrap, detrend=a.detrend)
    by_channel = label_channels(series, GeoPoint(a.lat, a.lon), a.date, policy, a.threshold, opts)
    records = [r for recs in by_channel.values() for r in recs]
    records.sort(key=lambda r: r.epoch_utc)
    dataio.write_labels(a.out, records)
    for ch, recs in by_channel.items():
        n_sky = sum(r.is_skywave for r in recs)
        st = recs[0].stats if recs else None
        extra = f" mu_day={st.mu_day:.6g} sigma_day={st.sigma_day:.6g} n={st.n}" if st else ""
        print(f"{ch}: {n_sky}/{len(recs)} epochs skywave{extra}")
    any_sky = sum(combined_verdict(by_channel).values())
    print(f"any channel: {any_sky} epochs skywave -> {a.out}")
    return EXIT_OK


def cmd_plotdata(a):
    series = dataio.read_phase_csv(a.phases, a.unit)
    labels = {(r.channel, dataio.parse_epoch(r.epoch_utc)): r for r in dataio.read_labels(a.labels)}
    table = []
    for ch, s in series.items():
        for t, p in zip(s.epochs, s.phases):
            r = labels.get((ch, float(t)))
            table.append({
                "epoch": float(t), "channel": ch, "phase_rad": float(p),
                "labeled_phase_rad": r.phase_rad if r else np.nan,
                "z_score": r.z_score if r else np.nan,
                "is_skywave": r.is_skywave if r else None,
            })
    table.sort(key=lambda r: r["epoch"])
    with open(a.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch_utc", "channel", "phase_rad", "labeled_phase_rad", "z_score", "is_skywave"])
        for r in table:
            sky = "" if r["is_skywave"] is None else ("true" if r["is_skywave"] else "false")
            w.writerow([dataio.format_epoch(r["epoch"]), r["channel"], dataio._fmt(r["phase_rad"]),
                        dataio._fmt(r["labeled_phase_rad"]), dataio._fmt(r["z_score"]), sky])
    print(f"wrote {len(table)} rows -> {a.out}")
    if a.figure:
        from .plotting import render_phase_labels

        render_phase_labels(table, a.figure, utc_offset=a.utc_offset)
        print(f"figure -> {a.figure}")
    return EXIT_OK


COMMANDS = {
    "sun": cmd_sun,
    "simulate": cmd_simulate,
    "phases": cmd_phases,
    "label": cmd_label,
    "plotdata": cmd_plotdata,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[a.command](a)
    except UsageError as exc:
        print(f"skylabel {a.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SkylabelError as exc:
        print(f"skylabel {a.command}: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"skylabel {a.command}: error: {exc.filename or ''}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_DATA


def main() -> int:
    return run(sys.argv[1:])
