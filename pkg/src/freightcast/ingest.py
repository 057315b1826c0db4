"""CSV ingestion of freight and indicator series."""
from __future__ import annotations

import csv
import datetime as dt
import hashlib
import io
import logging
import os
import tempfile
import urllib.request
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import GapError, NegativeValueError, NetworkError, ParseError
from .series import (Frequency, Month, TimeSeries, Transform,
                     resample_weekly_to_monthly)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DatasetConfig:
    path: Optional[str] = None
    url: Optional[str] = None
    value_column: str = "value"
    date_column: str = "date"
    frequency: Frequency = Frequency.MONTHLY
    resample: bool = False
    transform: Optional[Transform] = None
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "frequency", Frequency(self.frequency))
        if self.transform is not None:
            object.__setattr__(self, "transform", Transform.coerce(self.transform))
        if (self.path is None) == (self.url is None):
            raise ValueError("a dataset needs exactly one of 'path' or 'url'")


def _parse_date(text: str, row: int, column: str) -> dt.date:
    text = text.strip()
    try:
        if len(text) == 7:
            m = Month.parse(text)
            return dt.date(m.year, m.month, 1)
        return dt.date.fromisoformat(text)
    except ValueError:
        raise ParseError(f"cannot parse date {text!r}; expected YYYY-MM-DD or YYYY-MM",
                         row=row, column=column) from None


def parse_series_csv(text: str, config: DatasetConfig, source: str = "<csv>") -> TimeSeries:
    """Parse CSV text into a validated :class:`TimeSeries`."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError(f"{source}: empty file") from None
    header = [h.strip().lstrip("﻿") for h in header]
    for col in (config.date_column, config.value_column):
        if col not in header:
            raise ParseError(f"{source}: missing column {col!r}; found {header}", row=1)
    di, vi = header.index(config.date_column), header.index(config.value_column)
    dates, values = [], []
    for rownum, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise ParseError(f"{source}: expected {len(header)} fields, got {len(row)}",
                             row=rownum)
        dates.append(_parse_date(row[di], rownum, config.date_column))
        raw = row[vi].strip()
        try:
            v = float(raw)
        except ValueError:
            raise ParseError(f"{source}: not a number: {raw!r}", row=rownum,
                             column=config.value_column) from None
        if not np.isfinite(v):
            raise ParseError(f"{source}: non-finite value {raw!r}", row=rownum,
                             column=config.value_column)
        values.append(v)
    if not values:
        raise ParseError(f"{source}: no data rows")

    if config.frequency is Frequency.MONTHLY:
        periods = [Month.of(d) for d in dates]
        step = 1
    else:
        periods = dates
        step = dt.timedelta(weeks=1)
    for i in range(1, len(periods)):
        expected = periods[i - 1] + step
        if periods[i] != expected:
            if periods[i] <= periods[i - 1]:
                raise ParseError(f"{source}: dates not strictly increasing at {periods[i]}",
                                 row=i + 2, column=config.date_column)
            raise GapError(f"{source}: missing period {expected} (next row is {periods[i]})",
                           missing=expected)
    series = TimeSeries(periods[0], np.array(values), config.frequency,
                        config.name or config.value_column)
    if config.transform is Transform.LOG and np.any(series.values <= 0):
        raise NegativeValueError(f"{source}: log transform configured but the series has "
                                 f"non-positive values")
    if config.transform is Transform.SQRT and np.any(series.values < 0):
        raise NegativeValueError(f"{source}: sqrt transform configured but the series has "
                                 f"negative values")
    if config.resample:
        series = resample_weekly_to_monthly(series)
    return series


def load_series_csv(config: DatasetConfig, base_dir: Optional[Path] = None) -> TimeSeries:
    path = Path(config.path)
    if base_dir is not None and not path.is_absolute():
        path = Path(base_dir) / path
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    return parse_series_csv(text, config, source=str(path))


def cache_path(cache_dir: Path, url: str, as_of: dt.date) -> Path:
    key = hashlib.sha256(f"{url}\n{as_of.isoformat()}".encode()).hexdigest()[:24]
    return Path(cache_dir) / f"{key}.csv"


def _download(url: str, timeout: float) -> bytes:
    with urllib.request.urlopen(url, timeout=timeout) as resp:
        return resp.read()


def fetch_indicator_csv(url: str, config: DatasetConfig, cache_dir, *,
                        allow_network: bool = False, as_of: Optional[dt.date] = None,
                        timeout: float = 30.0) -> TimeSeries:
    """Load an indicator CSV from ``url`` through an on-disk cache.

    The cache key is the URL plus the ``as_of`` date (today by default). A
    cache hit never touches the network. A body that fails to parse is not
    cached.
    """
    as_of = as_of or dt.date.today()
    target = cache_path(Path(cache_dir), url, as_of)
    if target.exists():
        log.info("cache hit for %s", url)
        return parse_series_csv(target.read_text(encoding="utf-8"), config, str(target))
    if not allow_network:
        raise NetworkError(f"{url} is not cached and network access is disabled "
                           f"(use --allow-network)")
    try:
        body = _download(url, timeout)
    except OSError as exc:
        raise NetworkError(f"download of {url} failed: {exc}") from exc
    try:
        text = body.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"{url}: response is not UTF-8") from exc
    series = parse_series_csv(text, config, source=url)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=target.parent, suffix=".part")
    with os.fdopen(fd, "wb") as fh:
        fh.write(body)
    os.replace(tmp, target)
    return series


def write_series_csv(series: TimeSeries, path, value_column: str = "value",
                     date_column: str = "date"):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([date_column, value_column])
        for p, v in zip(series.periods(), series.values):
            w.writerow([str(p), format(float(v), ".12g")])
