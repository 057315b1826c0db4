"""Calendar-indexed series, transformations and differencing operators."""
from __future__ import annotations

import datetime as dt
import enum
import re
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import DomainError, EmptyMonthError, LengthError, RangeError


class Frequency(str, enum.Enum):
    MONTHLY = "monthly"
    WEEKLY = "weekly"


@dataclass(frozen=True, order=True)
class Month:
    """A calendar month. Supports integer offsets and differences."""

    year: int
    month: int

    def __post_init__(self):
        if not 1 <= self.month <= 12:
            raise ValueError(f"month out of range: {self.month}")

    @classmethod
    def parse(cls, text: str) -> "Month":
        m = re.fullmatch(r"\s*(\d{4})-(\d{1,2})(?:-(\d{1,2}))?\s*", str(text))
        if m is None:
            raise ValueError(f"not a YYYY-MM or YYYY-MM-DD date: {text!r}")
        if m.group(3) is not None:
            # validates the day
            dt.date(int(m.group(1)), int(m.group(2)), int(m.group(3)))
        return cls(int(m.group(1)), int(m.group(2)))

    @classmethod
    def of(cls, date: dt.date) -> "Month":
        return cls(date.year, date.month)

    @property
    def ordinal(self) -> int:
        return self.year * 12 + self.month - 1

    @classmethod
    def from_ordinal(cls, k: int) -> "Month":
        return cls(k // 12, k % 12 + 1)

    def __add__(self, steps: int) -> "Month":
        if not isinstance(steps, (int, np.integer)):
            return NotImplemented
        return Month.from_ordinal(self.ordinal + int(steps))

    def __sub__(self, other):
        if isinstance(other, Month):
            return self.ordinal - other.ordinal
        if isinstance(other, (int, np.integer)):
            return Month.from_ordinal(self.ordinal - int(other))
        return NotImplemented

    def __str__(self) -> str:
        return f"{self.year:04d}-{self.month:02d}"


Period = Union[Month, dt.date]


def parse_period(text, frequency: Frequency) -> Period:
    if isinstance(text, (Month, dt.date)):
        return text
    if Frequency(frequency) is Frequency.MONTHLY:
        return Month.parse(text)
    return dt.date.fromisoformat(str(text).strip())


def _offset(period: Period, steps: int, frequency: Frequency) -> Period:
    if frequency is Frequency.MONTHLY:
        return period + steps
    return period + dt.timedelta(weeks=steps)


def _steps_between(a: Period, b: Period, frequency: Frequency) -> int:
    """Number of steps from ``a`` to ``b`` (raises if ``b`` is not on ``a``'s grid)."""
    if frequency is Frequency.MONTHLY:
        return b - a
    days = (b - a).days
    if days % 7:
        raise RangeError(f"{b} is not on the weekly grid anchored at {a}")
    return days // 7


@dataclass(frozen=True)
class TimeSeries:
    """Regularly indexed, finite, immutable observations.

    ``start`` is a :class:`Month` for monthly data and the week-ending
    :class:`datetime.date` of the first observation for weekly data.
    """

    start: Period
    values: np.ndarray
    frequency: Frequency = Frequency.MONTHLY
    name: str = field(default="", compare=False)

    def __post_init__(self):
        freq = Frequency(self.frequency)
        object.__setattr__(self, "frequency", freq)
        values = np.array(self.values, dtype=float)
        if values.ndim != 1:
            raise LengthError("values must be one-dimensional")
        if len(values) < 1:
            raise LengthError("a series needs at least one observation")
        if not np.all(np.isfinite(values)):
            bad = int(np.flatnonzero(~np.isfinite(values))[0])
            raise DomainError(f"non-finite value at position {bad}")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        if freq is Frequency.MONTHLY and not isinstance(self.start, Month):
            object.__setattr__(self, "start", parse_period(self.start, freq))
        if freq is Frequency.WEEKLY and not isinstance(self.start, dt.date):
            object.__setattr__(self, "start", parse_period(self.start, freq))

    def __len__(self) -> int:
        return len(self.values)

    def __eq__(self, other):
        if not isinstance(other, TimeSeries):
            return NotImplemented
        return (self.start == other.start and self.frequency == other.frequency
                and np.array_equal(self.values, other.values))

    __hash__ = None

    @property
    def end(self) -> Period:
        return self.period_at(len(self) - 1)

    def period_at(self, i: int) -> Period:
        return _offset(self.start, i, self.frequency)

    def periods(self) -> list:
        return [self.period_at(i) for i in range(len(self))]

    def index_of(self, period) -> int:
        period = parse_period(period, self.frequency)
        i = _steps_between(self.start, period, self.frequency)
        if not 0 <= i < len(self):
            raise RangeError(f"{period} outside series range {self.start}..{self.end}")
        return i

    def with_values(self, values, start=None) -> "TimeSeries":
        return TimeSeries(self.start if start is None else start, values,
                          self.frequency, self.name)

    def rename(self, name: str) -> "TimeSeries":
        return TimeSeries(self.start, self.values, self.frequency, name)


class Transform(str, enum.Enum):
    NONE = "none"
    LOG = "log"
    SQRT = "sqrt"

    @classmethod
    def coerce(cls, value) -> "Transform":
        if value is None:
            return cls.NONE
        if isinstance(value, cls):
            return value
        return cls(str(value).lower())


def _check_domain(values: np.ndarray, t: Transform):
    if t is Transform.LOG and np.any(values <= 0):
        bad = int(np.flatnonzero(values <= 0)[0])
        raise DomainError(f"log transform needs strictly positive values; "
                          f"got {values[bad]!r} at position {bad}")
    if t is Transform.SQRT and np.any(values < 0):
        bad = int(np.flatnonzero(values < 0)[0])
        raise DomainError(f"sqrt transform needs non-negative values; "
                          f"got {values[bad]!r} at position {bad}")


def forward_transform(values, t) -> np.ndarray:
    t = Transform.coerce(t)
    values = np.asarray(values, dtype=float)
    _check_domain(values, t)
    if t is Transform.LOG:
        return np.log(values)
    if t is Transform.SQRT:
        return np.sqrt(values)
    return values.copy()


def inverse_transform(values, t) -> np.ndarray:
    """Map transformed-scale values back to the original scale.

    The inverse of ``sqrt`` is applied to ``max(w, 0)`` so that it stays
    monotone over the whole real line.
    """
    t = Transform.coerce(t)
    values = np.asarray(values, dtype=float)
    if t is Transform.LOG:
        return np.exp(values)
    if t is Transform.SQRT:
        return np.square(np.maximum(values, 0.0))
    return values.copy()


def log_jacobian(values, t) -> float:
    """Sum of ``log |g'(x)|`` for the transform ``g`` over ``values``."""
    t = Transform.coerce(t)
    values = np.asarray(values, dtype=float)
    if t is Transform.LOG:
        return float(-np.sum(np.log(values)))
    if t is Transform.SQRT:
        return float(-np.sum(np.log(2.0 * np.sqrt(values))))
    return 0.0


def apply_transform(series: TimeSeries, t) -> TimeSeries:
    return series.with_values(forward_transform(series.values, t))


@dataclass(frozen=True)
class DifferenceSpec:
    d: int = 0
    D: int = 0
    S: int = 1

    def __post_init__(self):
        if self.d < 0 or self.D < 0:
            raise ValueError("differencing orders must be non-negative")
        if self.S < 1:
            raise ValueError("seasonal period must be positive")

    @property
    def order(self) -> int:
        """Number of leading observations consumed by differencing."""
        return self.d + self.D * self.S

    def polynomial(self) -> np.ndarray:
        """Coefficients of ``(1 - L)^d (1 - L^S)^D`` in increasing powers of L."""
        poly = np.array([1.0])
        for _ in range(self.d):
            poly = np.convolve(poly, [1.0, -1.0])
        seasonal = np.zeros(self.S + 1)
        seasonal[0], seasonal[-1] = 1.0, -1.0
        for _ in range(self.D):
            poly = np.convolve(poly, seasonal)
        return poly


def difference_values(values, spec: DifferenceSpec) -> np.ndarray:
    out = np.asarray(values, dtype=float)
    for _ in range(spec.d):
        out = out[1:] - out[:-1]
    for _ in range(spec.D):
        out = out[spec.S:] - out[:-spec.S]
    return out


def integrate_values(diffed, spec: DifferenceSpec, initials) -> np.ndarray:
    """Invert :func:`difference_values` given the ``spec.order`` leading values.

    Integration runs step by step through the recursion
    ``x_t = y_t - sum_{j>=1} delta_j x_{t-j}`` so that integer inputs
    round-trip exactly.
    """
    initials = np.asarray(initials, dtype=float)
    diffed = np.asarray(diffed, dtype=float)
    k = spec.order
    if len(initials) != k:
        raise LengthError(f"expected {k} initial values, got {len(initials)}")
    delta = spec.polynomial()
    out = np.empty(k + len(diffed))
    out[:k] = initials
    for t in range(len(diffed)):
        i = k + t
        acc = diffed[t]
        for j in range(1, k + 1):
            acc -= delta[j] * out[i - j]
        out[i] = acc
    return out


def difference(series: TimeSeries, spec: DifferenceSpec) -> TimeSeries:
    """Apply ``d`` first differences, then ``D`` seasonal differences."""
    k = spec.order
    if k >= len(series):
        raise LengthError(f"differencing consumes {k} observations but the series "
                          f"has only {len(series)}")
    if k == 0:
        return series
    return series.with_values(difference_values(series.values, spec),
                              start=series.period_at(k))


def inverse_difference(diffed, spec: DifferenceSpec, initials: Sequence[float]):
    """Rebuild the undifferenced series from its differences and leading values.

    ``diffed`` may be a :class:`TimeSeries` (its start is shifted back by
    ``spec.order`` periods) or a plain sequence, in which case an array is
    returned.
    """
    if isinstance(diffed, TimeSeries):
        out = integrate_values(diffed.values, spec, initials)
        return diffed.with_values(out, start=_offset(diffed.start, -spec.order,
                                                     diffed.frequency))
    return integrate_values(diffed, spec, initials)


def week_month(week_ending: dt.date) -> Month:
    """Month a week is assigned to: the one containing its week-ending date."""
    return Month.of(week_ending)


def resample_weekly_to_monthly(series: TimeSeries) -> TimeSeries:
    """Arithmetic mean of the weekly values assigned to each calendar month."""
    if series.frequency is not Frequency.WEEKLY:
        raise ValueError("resampling expects a weekly series")
    months = [week_month(p) for p in series.periods()]
    first, last = months[0], months[-1]
    sums = np.zeros(last - first + 1)
    counts = np.zeros(last - first + 1, dtype=int)
    for m, v in zip(months, series.values):
        sums[m - first] += v
        counts[m - first] += 1
    if np.any(counts == 0):
        empty = first + int(np.flatnonzero(counts == 0)[0])
        raise EmptyMonthError(f"no weeks end in {empty}")
    return TimeSeries(first, sums / counts, Frequency.MONTHLY, series.name)


def slice_window(series: TimeSeries, start, end) -> TimeSeries:
    """Inclusive sub-series between two periods."""
    start = parse_period(start, series.frequency)
    end = parse_period(end, series.frequency)
    if end < start:
        raise RangeError(f"window start {start} is after its end {end}")
    try:
        i, j = series.index_of(start), series.index_of(end)
    except RangeError as exc:
        raise RangeError(f"window {start}..{end} not inside "
                         f"{series.start}..{series.end}") from exc
    return series.with_values(series.values[i:j + 1], start=start)
