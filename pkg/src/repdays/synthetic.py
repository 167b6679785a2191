"""Deterministic synthetic hourly load and wind for two load and two wind zones.

The profiles mimic a northern-European system: a winter-peaking load with a
morning and an evening peak, lower weekend demand, and wind driven by a
slowly varying weather state that is stronger in winter; calm spells
nudge load up slightly.  The west zone has the higher load peak and the
north zone the higher wind output.
"""

from __future__ import annotations

from datetime import date, timedelta
from typing import Optional, Sequence

import numpy as np

from .system import bundled_path
from .timeseries import HOURS, HourlyRecordSet, load_hourly_csv

LOAD_ZONES = ("west", "east")
WIND_ZONES = ("north", "south")
YEAR = 2016
DESK_DAYS = 14
BUNDLED_CSV = "synthetic_year.csv"


def _daily_shape(hours: np.ndarray) -> np.ndarray:
    morning = np.exp(-0.5 * ((hours - 8.5) / 2.0) ** 2)
    evening = np.exp(-0.5 * ((hours - 18.5) / 2.5) ** 2)
    night = np.exp(-0.5 * ((hours - 3.5) / 3.0) ** 2)
    return 0.62 + 0.22 * morning + 0.30 * evening - 0.10 * night


def synthetic_year(year: int = YEAR, seed: int = 2016) -> HourlyRecordSet:
    """One calendar year of hourly data (366 days in a leap year)."""
    rng = np.random.default_rng(seed)
    start = date(year, 1, 1)
    n_days = (date(year + 1, 1, 1) - start).days
    dates = [start + timedelta(days=d) for d in range(n_days)]
    doy = np.arange(n_days)
    season = np.cos(2 * np.pi * (doy - 15) / n_days)          # +1 mid-January
    weekend = np.array([d.weekday() >= 5 for d in dates], dtype=float)
    hours = np.arange(HOURS, dtype=float)
    shape = _daily_shape(hours)

    # slowly varying weather shared by load (temperature) and wind
    weather = np.zeros(n_days)
    for d in range(1, n_days):
        weather[d] = 0.8 * weather[d - 1] + rng.normal(0.0, 0.6)

    load = np.zeros((n_days, HOURS, 2))
    for k, (base, swing, noise) in enumerate(((3300.0, 0.18, 0.025), (2200.0, 0.14, 0.03))):
        level = base * (1.0 + swing * season - 0.08 * weekend + 0.03 * np.tanh(-weather))
        eps = rng.normal(0.0, noise, size=(n_days, HOURS))
        load[:, :, k] = level[:, None] * shape[None, :] * (1.0 + eps)

    wind = np.zeros((n_days, HOURS, 2))
    for k, (cap, gain, offset) in enumerate(((3600.0, 1.0, 0.0), (2400.0, 0.85, 0.4))):
        state = np.zeros(n_days * HOURS)
        drive = np.repeat(weather, HOURS) * gain + offset * np.sin(np.arange(n_days * HOURS) / 40.0)
        for t in range(1, state.size):
            state[t] = 0.93 * state[t - 1] + 0.07 * drive[t] + rng.normal(0.0, 0.12)
        seasonal = 0.25 * np.repeat(season, HOURS)
        cf = 1.0 / (1.0 + np.exp(-(1.6 * state + seasonal - 0.5)))
        wind[:, :, k] = (cap * cf).reshape(n_days, HOURS)
    return HourlyRecordSet(list(LOAD_ZONES), list(WIND_ZONES), load, wind, dates)


def desk_day_indices(n_days: int = 366, count: int = DESK_DAYS) -> Sequence[int]:
    """``count`` days spread evenly over the year."""
    return [int(round(v)) for v in np.linspace(0, n_days - 1, count)]


def bundled_year() -> HourlyRecordSet:
    """The shipped CSV copy of :func:`synthetic_year` (values to 6 decimals)."""
    return load_hourly_csv(bundled_path(BUNDLED_CSV))


def desk_history(records: Optional[HourlyRecordSet] = None, count: int = DESK_DAYS) -> HourlyRecordSet:
    """The desk-scale history: ``count`` days spread over the bundled year."""
    records = records if records is not None else bundled_year()
    return records.subset(desk_day_indices(records.n_days, count))
