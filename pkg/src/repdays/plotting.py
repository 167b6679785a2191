"""PNG figures for evaluation reports and representative-day profiles."""

from __future__ import annotations

import math
import os
from typing import Dict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .timeseries import HOURS  # noqa: E402

_STYLE = {"tkm": ("TKM", "tab:blue", "o"), "mkm": ("MKM", "tab:red", "s")}
_META = {"Software": None}  # keep files byte-stable across runs


def _save(fig, path: str) -> str:
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata=_META)
    plt.close(fig)
    return path


def plot_report(summary, exact, out_dir: str, show_time: bool = True) -> Dict[str, str]:
    """Cost, error and (optionally) step-1 time against K, one line per method."""
    methods = sorted({m for m, _ in summary})
    ks = sorted({k for _, k in summary})
    panels = [("cost_vs_k", "ct_median", "total cost CT [$]"),
              ("error_vs_k", "eps_median", "cost error [%]")]
    if show_time:
        panels.append(("time_vs_k", "time_median", "planning time [s]"))
    out = {}
    for stem, attr, ylabel in panels:
        fig, ax = plt.subplots(figsize=(5.0, 3.6))
        for m in methods:
            label, color, marker = _STYLE.get(m, (m.upper(), None, "^"))
            ys = [getattr(summary[(m, k)], attr) if (m, k) in summary else math.nan for k in ks]
            ax.plot(ks, ys, marker=marker, color=color, label=label)
            if stem == "error_vs_k":
                lo = [summary[(m, k)].eps_min if (m, k) in summary else math.nan for k in ks]
                hi = [summary[(m, k)].eps_max if (m, k) in summary else math.nan for k in ks]
                ax.fill_between(ks, lo, hi, color=color, alpha=0.15, linewidth=0)
        if stem == "cost_vs_k" and exact is not None:
            ax.axhline(exact.ct, color="k", linestyle="--", linewidth=1, label="exact")
        ax.set_xlabel("K (representative days)")
        ax.set_ylabel(ylabel)
        ax.grid(alpha=0.3)
        ax.legend()
        out[f"{stem}_png"] = _save(fig, os.path.join(out_dir, f"{stem}.png"))
    return out


def plot_repdays(repdays, path: str, history=None) -> str:
    """One panel per zone with every representative day (line width ~ weight)."""
    zones = [("load", z) for z in repdays.load_zones] + [("wind", z) for z in repdays.wind_zones]
    ncol = 2
    nrow = math.ceil(len(zones) / ncol)
    fig, axes = plt.subplots(nrow, ncol, figsize=(9.0, 3.0 * nrow), squeeze=False, sharex=True)
    hours = np.arange(1, HOURS + 1)
    wmax = max(d.weight for d in repdays.days)
    for ax, (feature, zone) in zip(axes.ravel(), zones):
        if history is not None:
            lp, wp = history.peaks()
            if feature == "load":
                k = history.load_zones.index(zone)
                raw = history.load[:, :, k] / lp[zone]
            else:
                k = history.wind_zones.index(zone)
                raw = history.wind[:, :, k] / wp[zone]
            ax.plot(hours, raw.T, color="0.8", linewidth=0.5)
        for day in repdays.days:
            prof = day.beta[zone] if feature == "load" else day.alpha[zone]
            ax.plot(hours, prof, linewidth=0.6 + 2.4 * day.weight / wmax)
        ax.set_title(f"{feature} {zone}")
        ax.set_ylim(0, 1.05)
        ax.set_xlim(1, HOURS)
        ax.set_ylabel("per unit")
        ax.grid(alpha=0.3)
    for ax in axes.ravel()[len(zones):]:
        ax.axis("off")
    for ax in axes[-1]:
        ax.set_xlabel("hour")
    return _save(fig, path)
