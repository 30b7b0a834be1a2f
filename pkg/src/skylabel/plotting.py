"""Figure rendering for the plot-data tables.

Phase dots per channel, with skywave-labelled epochs overdrawn, one panel
per channel.  Uses the non-interactive Agg backend so it runs headless.
"""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.dates as mdates  # noqa: E402
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .series import from_epoch  # noqa: E402

PHASE_COLOR = "tab:blue"
SKYWAVE_COLOR = "tab:orange"

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.grid": True,
    "grid.alpha": 0.3,
}


def figure_size(width=7.0, rows=1):
    golden = (np.sqrt(5.0) - 1.0) / 2.0
    return width, max(2.2, width * golden * 0.6) * rows


def render_phase_labels(table, path, title=None, utc_offset=0.0, dpi=150):
    """Save a per-channel phase/skywave scatter figure.

    ``table`` is a sequence of mappings with ``epoch`` (POSIX s), ``channel``,
    ``phase_rad`` and ``is_skywave`` (True/False/None).
    """
    channels = list(dict.fromkeys(r["channel"] for r in table))
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(max(len(channels), 1), 1, sharex=True, squeeze=False,
                                 figsize=figure_size(rows=max(len(channels), 1)))
        shift = utc_offset * 3600.0
        for ax, ch in zip(axes[:, 0], channels):
            rows = [r for r in table if r["channel"] == ch]
            t = [from_epoch(r["epoch"] + shift).replace(tzinfo=None) for r in rows]
            ph = np.array([r["phase_rad"] for r in rows], dtype=float)
            sky = np.array([bool(r["is_skywave"]) for r in rows])
            ax.plot(t, ph, ".", ms=2, color=PHASE_COLOR, label="measured phase")
            if sky.any():
                ax.plot(np.array(t, dtype=object)[sky], ph[sky], ".", ms=3,
                        color=SKYWAVE_COLOR, label="skywave")
            ax.set_ylabel(f"{ch} phase [rad]")
            ax.legend(loc="upper right", markerscale=3)
        ax = axes[-1, 0]
        ax.xaxis.set_major_formatter(mdates.DateFormatter("%m-%d %H:%M"))
        ax.set_xlabel("local time" if utc_offset else "UTC")
        if title:
            axes[0, 0].set_title(title)
        fig.autofmt_xdate()
        fig.tight_layout()
        fig.savefig(path, dpi=dpi)
        plt.close(fig)
    return path
