"""Synthetic rail-like dataset used by the demo run and the golden tests.

Weekly carloads for several freight components (week-ending Saturdays,
2012-2020) built from a log-linear trend, an annual seasonal profile and
AR(1) noise, with a multiplicative 2020 disruption profile per component.
Two monthly indicators accompany them: a seasonally adjusted consumption
index (``pce``) and a non-seasonally-adjusted production index (``ip``).
Coal carloads load on the production index.
"""
from __future__ import annotations

import csv
import datetime as dt
from pathlib import Path

import numpy as np

from .series import Frequency, Month, TimeSeries

DEFAULT_SEED = 20200401
FIRST_WEEK = dt.date(2012, 1, 7)
LAST_WEEK = dt.date(2020, 12, 26)
FIRST_MONTH = Month(2012, 1)
LAST_MONTH = Month(2020, 12)

# month-of-2020 multipliers, January first
SHOCKS = {
    "intermodal": [1, 1, 1, .80, .80, .80, 1, 1, 1, 1, 1, 1],
    "coal": [1, 1, 1, .92, .90, .93, .95, .95, .95, .94, .93, .93],
    "grain": [1, 1, 1, .96, .95, 1, 1.02, 1.04, 1.06, 1.08, 1.09, 1.08],
    "chemical": [1, 1, .98, .86, .84, .90, .93, .95, .96, .97, .97, .98],
    "auto": [1, 1, .90, .20, .45, .80, .92, .95, .96, .97, .97, .98],
    "lumber": [1, 1, .97, .82, .80, .90, .97, 1.0, 1.02, 1.03, 1.02, 1.01],
    "petroleum": [1, 1, .98, .90, .88, .87, .86, .86, .85, .85, .84, .84],
}
INDICATOR_SHOCKS = {
    "pce": [1, 1, .95, .80, .90, 1.0, 1.05, 1.06, 1.07, 1.08, 1.08, 1.09],
    "ip": [1, 1, .97, .83, .85, .90, .93, .94, .95, .95, .96, .96],
}

# base weekly level, trend per year (log), seasonal amplitudes, noise sd (log)
_COMPONENTS = {
    "intermodal": (270000, 0.010, (0.040, 0.015), 0.010),
    "coal": (85000, -0.060, (0.050, 0.020), 0.012),
    "grain": (21000, 0.005, (0.080, 0.030), 0.014),
    "chemical": (31000, 0.015, (0.020, 0.010), 0.008),
    "auto": (16500, 0.012, (0.060, 0.040), 0.012),
    "lumber": (3400, 0.008, (0.050, 0.020), 0.012),
    "petroleum": (11500, 0.020, (0.040, 0.015), 0.011),
}
COAL_IP_LOADING = 0.010


def week_ends() -> list:
    n = (LAST_WEEK - FIRST_WEEK).days // 7 + 1
    return [FIRST_WEEK + dt.timedelta(weeks=i) for i in range(n)]


def _ar1(rng, n, phi, sd):
    e = rng.standard_normal(n) * sd * np.sqrt(1 - phi * phi)
    out = np.empty(n)
    out[0] = e[0] / np.sqrt(1 - phi * phi)
    for t in range(1, n):
        out[t] = phi * out[t - 1] + e[t]
    return out


def _seasonal(doy, amps, phase):
    a1, a2 = amps
    ang = 2 * np.pi * doy / 365.25
    year_end = -1.5 * a1 * np.exp(-0.5 * ((doy - 360) / 5.0) ** 2)
    return a1 * np.sin(ang + phase) + a2 * np.sin(2 * ang + 1.3 * phase) + year_end


def _shock(months, profile):
    out = np.ones(len(months))
    for i, m in enumerate(months):
        if m.year == 2020:
            out[i] = profile[m.month - 1]
    return out


def generate_indicators(seed: int = DEFAULT_SEED) -> dict:
    rng = np.random.default_rng([seed, 1])
    n = LAST_MONTH - FIRST_MONTH + 1
    months = [FIRST_MONTH + i for i in range(n)]
    years = np.arange(n) / 12.0
    phase = 2 * np.pi * (np.arange(n) % 12) / 12
    pce = 100 * np.exp(0.035 * years + _ar1(rng, n, 0.6, 0.006))
    ip = 100 * np.exp(0.004 * years + 0.03 * np.sin(phase + 0.8) + 0.012 * np.cos(2 * phase)
                      + _ar1(rng, n, 0.5, 0.007))
    pce *= _shock(months, INDICATOR_SHOCKS["pce"])
    ip *= _shock(months, INDICATOR_SHOCKS["ip"])
    return {"pce": TimeSeries(FIRST_MONTH, np.round(pce, 3), Frequency.MONTHLY, "pce"),
            "ip": TimeSeries(FIRST_MONTH, np.round(ip, 3), Frequency.MONTHLY, "ip")}


def generate_weekly(seed: int = DEFAULT_SEED, indicators=None) -> dict:
    indicators = indicators or generate_indicators(seed)
    weeks = week_ends()
    n = len(weeks)
    months = [Month.of(w) for w in weeks]
    years = np.array([(w - FIRST_WEEK).days / 365.25 for w in weeks])
    doy = np.array([w.timetuple().tm_yday for w in weeks], dtype=float)
    ip = indicators["ip"]
    ip_weekly = np.array([ip.values[ip.index_of(m)] for m in months])
    out = {}
    for j, (name, (base, slope, amps, sd)) in enumerate(_COMPONENTS.items()):
        rng = np.random.default_rng([seed, 100 + j])
        logv = (np.log(base) + slope * years + _seasonal(doy, amps, 0.7 * j)
                + _ar1(rng, n, 0.6, sd))
        if name == "coal":
            logv += COAL_IP_LOADING * (ip_weekly - 100.0)
        values = np.exp(logv) * _shock(months, SHOCKS[name])
        out[name] = TimeSeries(FIRST_WEEK, np.round(values), Frequency.WEEKLY, name)
    return out


def write_dataset(directory, seed: int = DEFAULT_SEED) -> dict:
    """Write the weekly freight and monthly indicator CSVs; returns their paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    indicators = generate_indicators(seed)
    weekly = generate_weekly(seed, indicators)
    paths = {"freight": directory / "synthetic_rail_weekly.csv",
             "indicators": directory / "synthetic_indicators_monthly.csv"}
    _write_wide(paths["freight"], weekly)
    _write_wide(paths["indicators"], indicators)
    return paths


def _write_wide(path, table: dict):
    names = list(table)
    first = table[names[0]]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", *names])
        for i, p in enumerate(first.periods()):
            label = p.isoformat() if isinstance(p, dt.date) else str(p)
            w.writerow([label, *(format(float(table[k].values[i]), ".12g") for k in names)])
