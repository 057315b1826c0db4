"""Counterfactual scenarios, disruption impact and recovery-pace summaries."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import AlignmentError, DegenerateError, RangeError, WindowError
from .sarimax import FittedModel, Forecast, ModelOrder, fit, forecast
from .series import Month, TimeSeries, parse_period, slice_window


class ScenarioKind(str, enum.Enum):
    TREND_CONTINUATION = "trend_continuation"
    COVARIATE_ADAPTED_TREND = "covariate_adapted_trend"
    ACTUAL_COVARIATE_FORECAST = "actual_covariate_forecast"

    @property
    def number(self) -> int:
        return list(ScenarioKind).index(self) + 1

    @property
    def needs_covariate(self) -> bool:
        return self is not ScenarioKind.TREND_CONTINUATION


# ARIMA(1,1,0), the form used for a seasonally adjusted indicator
DEFAULT_COVARIATE_ORDER = ModelOrder(1, 1, 0)

# (disruption window, recovery window)
WINDOW_PRESETS = {
    "covid_2020": (("2020-04", "2020-05"), ("2020-10", "2020-12")),
    # Q2 and Q4 of 2009
    "great_recession_2009": (("2009-04", "2009-06"), ("2009-10", "2009-12")),
}


def _window(pair, frequency="monthly"):
    start, end = (parse_period(p, frequency) for p in pair)
    if end < start:
        raise WindowError(f"window start {start} is after its end {end}")
    return start, end


@dataclass(frozen=True)
class ScenarioSpec:
    kind: ScenarioKind
    train_window: tuple
    eval_window: tuple
    covariate_name: Optional[str] = None
    covariate_model_order: Optional[ModelOrder] = None
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "kind", ScenarioKind(self.kind))
        train = _window(self.train_window)
        ev = _window(self.eval_window)
        object.__setattr__(self, "train_window", train)
        object.__setattr__(self, "eval_window", ev)
        if self.kind.needs_covariate and not self.covariate_name:
            raise ValueError(f"scenario {self.kind.value} needs a covariate")
        if not train[1] < ev[0]:
            raise WindowError(f"training window {train[0]}..{train[1]} must end "
                              f"before the evaluation window {ev[0]}..{ev[1]}")


@dataclass(frozen=True)
class ImpactSeries:
    """Actual versus counterfactual baseline over an evaluation window."""

    start: object
    actual: np.ndarray
    baseline: np.ndarray
    ratio: np.ndarray
    deviation: np.ndarray

    def __len__(self):
        return len(self.actual)

    def periods(self) -> list:
        return TimeSeries(self.start, self.actual).periods()

    def mean_deviation(self, start, end) -> float:
        s = TimeSeries(self.start, self.actual)
        try:
            i, j = s.index_of(start), s.index_of(end)
        except RangeError as exc:
            raise WindowError(str(exc)) from exc
        if j < i:
            raise WindowError(f"window start {start} is after its end {end}")
        return float(np.mean(self.deviation[i:j + 1]))


def impact_series(actual: TimeSeries, baseline) -> ImpactSeries:
    """Ratios ``actual / baseline`` aligned on the baseline's periods.

    Periods where the baseline is not positive get NaN ratios.
    """
    if isinstance(baseline, Forecast):
        baseline = baseline.as_series("median")
    i = actual.index_of(baseline.start)
    if i + len(baseline) > len(actual):
        raise AlignmentError("actual series does not cover the baseline periods")
    a = np.asarray(actual.values[i:i + len(baseline)], dtype=float)
    b = np.asarray(baseline.values, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(b > 0, a / b, np.nan)
    return ImpactSeries(baseline.start, a, b, ratio, ratio - 1.0)


@dataclass(frozen=True)
class ScenarioResult:
    spec: ScenarioSpec
    baseline: Forecast
    impact: ImpactSeries
    model: FittedModel
    covariate_forecast: Optional[Forecast] = None
    covariate_path: Optional[np.ndarray] = None


def _check_alignment(freight: TimeSeries, covariate: TimeSeries, start, end):
    if covariate.frequency != freight.frequency:
        raise AlignmentError("freight and covariate frequencies differ")
    try:
        covariate.index_of(start)
        covariate.index_of(end)
    except RangeError as exc:
        raise AlignmentError(f"covariate {covariate.name!r} does not cover "
                             f"{start}..{end}") from exc


def fit_covariate_model(covariate: TimeSeries, order: ModelOrder, train_window) -> FittedModel:
    start, end = _window(train_window)
    return fit(order, slice_window(covariate, start, end))


def project_covariate(covariate: TimeSeries, order: ModelOrder, train_window,
                      horizon: int, level: float = 0.95) -> Forecast:
    """Plain ARIMA projection of a covariate beyond its training window."""
    return forecast(fit_covariate_model(covariate, order, train_window), horizon, level=level)


def fit_scenario_model(spec: ScenarioSpec, freight: TimeSeries, order: ModelOrder,
                       covariate: Optional[TimeSeries] = None) -> FittedModel:
    """Fit the main freight model on the training window.

    Scenarios 2 and 3 share this model; only the covariate path fed to the
    forecast differs.
    """
    t0, t1 = spec.train_window
    train = slice_window(freight, t0, t1)
    exog = None
    if spec.kind.needs_covariate:
        if covariate is None:
            raise AlignmentError(f"scenario {spec.kind.value} needs covariate data")
        _check_alignment(freight, covariate, t0, t1)
        exog = [slice_window(covariate, t0, t1)]
    return fit(order, train, exog)


def run_scenario(spec: ScenarioSpec, freight: TimeSeries,
                 covariate: Optional[TimeSeries] = None,
                 freight_order: Optional[ModelOrder] = None,
                 covariate_order: Optional[ModelOrder] = None,
                 model: Optional[FittedModel] = None,
                 covariate_projection: Optional[Forecast] = None,
                 level: float = 0.95) -> ScenarioResult:
    """Build one counterfactual baseline and its impact series.

    ``model`` and ``covariate_projection`` may be passed in to reuse fits
    across scenarios.
    """
    t0, t1 = spec.train_window
    e0, e1 = spec.eval_window
    try:
        freight.index_of(t0)
        freight.index_of(e1)
    except RangeError as exc:
        raise AlignmentError(f"freight series does not cover {t0}..{e1}") from exc
    if model is None:
        if freight_order is None:
            raise ValueError("either model or freight_order is required")
        model = fit_scenario_model(spec, freight, freight_order, covariate)
    lead = e0 - t1 - 1
    horizon = e1 - t1
    cov_fc = None
    path = None
    if spec.kind is ScenarioKind.COVARIATE_ADAPTED_TREND:
        if covariate_projection is None:
            cov_order = covariate_order or spec.covariate_model_order or DEFAULT_COVARIATE_ORDER
            _check_alignment(freight, covariate, t0, t1)
            covariate_projection = project_covariate(covariate, cov_order, (t0, t1),
                                                     horizon, level)
        cov_fc = covariate_projection
        if cov_fc.horizon < horizon:
            raise AlignmentError("covariate projection is shorter than the forecast horizon")
        path = np.asarray(cov_fc.median[:horizon])
    elif spec.kind is ScenarioKind.ACTUAL_COVARIATE_FORECAST:
        _check_alignment(freight, covariate, t1 + 1, e1)
        path = np.asarray(slice_window(covariate, t1 + 1, e1).values)
    fc = forecast(model, horizon, None if path is None else [path], level=level)
    baseline = Forecast(start=e0, median=fc.median[lead:], lower=fc.lower[lead:],
                        upper=fc.upper[lead:], level=fc.level,
                        mean_transformed=fc.mean_transformed[lead:],
                        sd_transformed=fc.sd_transformed[lead:], frequency=fc.frequency)
    impact = impact_series(freight, baseline)
    return ScenarioResult(spec, baseline, impact, model, cov_fc, path)


def run_covariate_scenarios(train_window, eval_window, freight: TimeSeries,
                            covariate: TimeSeries, freight_order: ModelOrder,
                            covariate_order: ModelOrder = DEFAULT_COVARIATE_ORDER,
                            covariate_name: str = "covariate",
                            level: float = 0.95) -> dict:
    """Scenarios 2 and 3 from a single fitted SARIMAX model."""
    specs = {kind: ScenarioSpec(kind, train_window, eval_window, covariate_name,
                                covariate_order)
             for kind in (ScenarioKind.COVARIATE_ADAPTED_TREND,
                          ScenarioKind.ACTUAL_COVARIATE_FORECAST)}
    shared = fit_scenario_model(specs[ScenarioKind.COVARIATE_ADAPTED_TREND], freight,
                                freight_order, covariate)
    return {kind: run_scenario(spec, freight, covariate, covariate_order=covariate_order,
                               model=shared, level=level)
            for kind, spec in specs.items()}


# ---------------------------------------------------------------------------
# recovery pace
# ---------------------------------------------------------------------------

class Region(str, enum.Enum):
    A = "A"
    B = "B"
    C = "C"
    D = "D"


def classify_region(x: float, y: float) -> Region:
    """Quadrant/diagonal region of a (disruption, recovery) deviation pair.

    Boundaries: ``x == 0`` belongs to A, ``y == 0`` (with ``x < 0``) to B
    and the diagonal ``y == x < 0`` to C.
    """
    if x >= 0:
        return Region.A
    if y >= 0:
        return Region.B
    if y >= x:
        return Region.C
    return Region.D


@dataclass(frozen=True)
class RecoveryPacePoint:
    name: str
    x: float
    y: float
    region: Region


def recovery_pace_points(impacts: Mapping[str, ImpactSeries], disruption_window,
                         recovery_window) -> list:
    d0, d1 = _window(disruption_window)
    r0, r1 = _window(recovery_window)
    points = []
    for name, imp in impacts.items():
        x = imp.mean_deviation(d0, d1)
        y = imp.mean_deviation(r0, r1)
        points.append(RecoveryPacePoint(name, x, y, classify_region(x, y)))
    return points


@dataclass(frozen=True)
class BestFitLine:
    slope: float
    intercept: float
    r2: float
    excluded: tuple = field(default_factory=tuple)
    n: int = 0


def best_fit_line(points: Sequence[RecoveryPacePoint], excluded: Sequence[str] = ()) -> BestFitLine:
    """Ordinary least squares of recovery on disruption over non-excluded points."""
    excluded = tuple(excluded)
    kept = [p for p in points if p.name not in excluded]
    if len(kept) < 2:
        raise DegenerateError("best-fit line needs at least two points")
    x = np.array([p.x for p in kept])
    y = np.array([p.y for p in kept])
    if np.all(x == x[0]):
        raise DegenerateError("all x values are equal")
    xc = x - x.mean()
    sxx = float(xc @ xc)
    slope = float(xc @ (y - y.mean()) / sxx)
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (intercept + slope * x)
    sst = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if sst == 0 else 1.0 - float(resid @ resid) / sst
    return BestFitLine(slope, intercept, float(np.clip(r2, 0.0, 1.0)), excluded, len(kept))


def percent_change(series: TimeSeries, base_period) -> TimeSeries:
    """Percentage change of every value relative to ``base_period``."""
    base = series.values[series.index_of(base_period)]
    if base == 0:
        raise DegenerateError("base value is zero")
    return series.with_values((series.values / base - 1.0) * 100.0)
